"""S_x and R_alpha, their top eigenvalue by two routes, and the Perron vector beta.

The full route diagonalizes the ``d**(N+1)`` operator. The reduced route only
needs the N×N matrix ``S_plus = D((d-1)I + J)`` with ``D = diag(|x|)``, whose
spectrum is read off the symmetric similarity ``D^½((d-1)I + J)D^½``.
"""
from __future__ import annotations

import warnings
from typing import Optional

import numpy as np

from .tensor_core import check_dims, identity, omega_projector, omega_vector

__all__ = [
    "DegenerateDirectionWarning",
    "build_S",
    "build_R_alpha",
    "lambda_max_full",
    "reduced_matrix",
    "lambda_max_reduced",
    "gram_matrix",
    "normalization_residual",
    "normalize_beta",
    "perron_beta",
    "explicit_eigenvector",
]

HERMITIAN_TOL = 1e-12


class DegenerateDirectionWarning(UserWarning):
    """A weight vector has zero entries, so beta is taken as a limit."""


def _as_vector(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size == 0:
        raise ValueError("expected a nonempty 1-D real vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector entries must be finite")
    return x


def build_S(x, d: int) -> np.ndarray:
    """``S_x = sum_i |x_i| omega_{(0,i)} ⊗ I`` on ``N + 1`` sites."""
    x = _as_vector(x)
    N = x.size
    dim = check_dims(d, N + 1)
    S = np.zeros((dim, dim), dtype=complex)
    for i, xi in enumerate(np.abs(x), start=1):
        if xi:
            S += xi * omega_projector(d, N + 1, 0, i)
    return S


def build_R_alpha(alpha, d: int) -> np.ndarray:
    """``R_alpha = ||alpha||_1 I + S_alpha``."""
    alpha = _as_vector(alpha)
    N = alpha.size
    return np.abs(alpha).sum() * identity(d, N + 1) + build_S(alpha, d)


def lambda_max_full(M: np.ndarray) -> float:
    """Largest eigenvalue of a Hermitian matrix by dense diagonalization."""
    M = np.asarray(M)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {M.shape}")
    scale = max(1.0, float(np.abs(M).max(initial=0.0)))
    if np.abs(M - M.conj().T).max(initial=0.0) > HERMITIAN_TOL * scale:
        raise ValueError("matrix is not Hermitian")
    return float(np.linalg.eigvalsh(M)[-1])


def reduced_matrix(x, d: int) -> np.ndarray:
    """``S_plus``: row ``i`` equals ``|x_i|`` off the diagonal and ``d |x_i|`` on it."""
    x = np.abs(_as_vector(x))
    N = x.size
    G = (d - 1) * np.eye(N) + np.ones((N, N))
    return x[:, None] * G


def gram_matrix(N: int, d: int) -> np.ndarray:
    """``(d-1)I + J``, the Gram matrix of the vectors ``|Omega>_{(0,i)} ⊗ v``."""
    return (d - 1) * np.eye(N) + np.ones((N, N))


def _similarity(x: np.ndarray, d: int) -> np.ndarray:
    # works on a batch (..., N)
    r = np.sqrt(x)
    N = x.shape[-1]
    return r[..., :, None] * gram_matrix(N, d) * r[..., None, :]


def lambda_max_reduced(x, d: int):
    """Spectral radius of ``S_plus``. Accepts a vector or a batch of shape (K, N)."""
    x = np.abs(np.asarray(x, dtype=float))
    if x.ndim == 0:
        x = x[None]
    if x.ndim not in (1, 2) or x.shape[-1] == 0:
        raise ValueError("expected a vector or a (K, N) batch")
    vals = np.linalg.eigvalsh(_similarity(x, d))[..., -1]
    return float(vals) if x.ndim == 1 else vals


def normalization_residual(beta, d: int) -> float:
    """``(d-1) sum beta_i^2 + (sum beta_i)^2 - 1``."""
    beta = _as_vector(beta)
    return float((d - 1) * np.dot(beta, beta) + beta.sum() ** 2 - 1.0)


def normalize_beta(beta, d: int) -> np.ndarray:
    """Rescale ``beta`` by the positive root ``c`` of ``c^2 (beta^T G beta) = 1``."""
    beta = _as_vector(beta)
    q = (d - 1) * np.dot(beta, beta) + beta.sum() ** 2
    if q <= 0:
        raise ValueError("beta = 0 cannot be normalized")
    return beta / np.sqrt(q)


def perron_beta(alpha, d: int) -> np.ndarray:
    """Normalized positive eigenvector of ``S_plus(alpha)`` for its top eigenvalue.

    Entries with ``alpha_i = 0`` get ``beta_i = 0``: the eigenproblem is solved on
    the support, which is the exact limit of ``perron_beta(alpha + eps)`` as
    ``eps -> 0``. A ``DegenerateDirectionWarning`` is emitted in that case.
    """
    alpha = np.abs(_as_vector(alpha))
    support = alpha > 0
    if not support.any():
        raise ValueError("alpha = 0 has no Perron direction")
    if not support.all():
        warnings.warn(
            "alpha has zero entries; beta is the limit along the support",
            DegenerateDirectionWarning,
            stacklevel=2,
        )
    xs = alpha[support]
    _, vecs = np.linalg.eigh(_similarity(xs, d))
    u = np.abs(vecs[:, -1])
    beta = np.zeros_like(alpha)
    beta[support] = np.sqrt(xs) * u
    return normalize_beta(beta, d)


def explicit_eigenvector(beta, d: int, v: Optional[np.ndarray] = None) -> np.ndarray:
    """``chi = sum_i beta_i |Omega>_{(0,i)} ⊗ v`` with ``v`` symmetric on ``N - 1`` sites.

    The default ``v`` is the normalized all-ones vector, which is permutation
    invariant. Returns a vector on ``N + 1`` sites (unnormalized).
    """
    beta = _as_vector(beta)
    N = beta.size
    check_dims(d, N + 1)
    if N == 1:
        return beta[0] * omega_vector(d, 2, 0, 1)
    if v is None:
        v = np.full(d ** (N - 1), d ** (-(N - 1) / 2), dtype=complex)
    chi = np.zeros(d ** (N + 1), dtype=complex)
    for i, b in enumerate(beta, start=1):
        chi += b * omega_vector(d, N + 1, 0, i, v)
    return chi
