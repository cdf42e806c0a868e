"""The optimal cloners T_beta: Choi matrix, direct action, marginals and fidelities.

Choi convention: ``C_T = sum_ij |i><j| ⊗ T(|i><j|)`` with the input on site 0,
so ``T(rho) = Tr_0[C_T (rho^T ⊗ I)]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Union

import numpy as np
from scipy.stats import unitary_group

from .spectral import build_R_alpha, normalization_residual, perron_beta
from .symmetric_group import (
    all_permutations,
    enumerate_sigma_ab,
    permutation_operator,
    sym_dim,
    transposed_permutation_operator,
)
from .tensor_core import check_dims, omega_projector, partial_trace

__all__ = [
    "ChoiMatrix",
    "CloningChannel",
    "MarginalFit",
    "choi_prefactor",
    "channel_prefactor",
    "build_choi_unscaled",
    "build_choi",
    "build_p_beta",
    "apply_channel",
    "apply_choi",
    "choi_from_map",
    "marginal",
    "haar_pure_states",
    "haar_unitaries",
    "fit_marginals",
    "average_fidelity",
    "monte_carlo_fidelity",
    "covariance_check",
    "replacement_choi",
    "werner_choi",
    "moment_deviation",
]

NORM_TOL = 1e-10
State = np.ndarray


@dataclass(frozen=True)
class ChoiMatrix:
    operator: np.ndarray
    d: int
    N: int

    def __post_init__(self):
        side = self.d ** (self.N + 1)
        if self.operator.shape != (side, side):
            raise ValueError(f"Choi operator must be {side}×{side}, got {self.operator.shape}")

    def min_eigenvalue(self) -> float:
        H = 0.5 * (self.operator + self.operator.conj().T)
        return float(np.linalg.eigvalsh(H)[0])

    def hermiticity_residual(self) -> float:
        return float(np.abs(self.operator - self.operator.conj().T).max())

    def tp_residual(self) -> float:
        """``||Tr_{1..N} C - I||`` (max entry)."""
        red = partial_trace(self.operator, self.d, [0])
        return float(np.abs(red - np.eye(self.d)).max())

    def certificate(self) -> dict:
        return {
            "min_eigenvalue": self.min_eigenvalue(),
            "hermiticity_residual": self.hermiticity_residual(),
            "tp_residual": self.tp_residual(),
        }


def choi_prefactor(d: int, N: int) -> Fraction:
    """``(d / Tr P+_N) (N + d - 1) / N`` in exact arithmetic."""
    return Fraction(d * (N + d - 1), sym_dim(N, d) * N)


def channel_prefactor(d: int, N: int) -> Fraction:
    """``d N (N + d - 1) / Tr P+_N`` in exact arithmetic."""
    return Fraction(d * N * (N + d - 1), sym_dim(N, d))


def _beta(beta, N: Optional[int]) -> np.ndarray:
    beta = np.atleast_1d(np.asarray(beta, dtype=float))
    if beta.ndim != 1 or beta.size == 0:
        raise ValueError("beta must be a nonempty vector")
    if N is not None and beta.size != N:
        raise ValueError(f"beta has length {beta.size}, expected N={N}")
    return beta


def _require_normalized(beta, d):
    r = normalization_residual(beta, d)
    if abs(r) > NORM_TOL:
        raise ValueError(f"beta is not normalized (residual {r:.3e})")


def build_choi_unscaled(beta, d: int, N: Optional[int] = None) -> np.ndarray:
    """``sum_{a,b} sum_{sigma in Sigma_ab} beta_a beta_b / (N-1)! Pi_sigma^Γ``."""
    beta = _beta(beta, N)
    N = beta.size
    dim = check_dims(d, N + 1)
    out = np.zeros((dim, dim), dtype=complex)
    inv_fact = 1.0 / math.factorial(N - 1)
    for a in range(1, N + 1):
        for b in range(1, N + 1):
            c = beta[a - 1] * beta[b - 1] * inv_fact
            if c == 0:
                continue
            for sigma in enumerate_sigma_ab(N, a, b):
                out += c * transposed_permutation_operator(sigma, d)
    return out


def build_choi(beta, d: int, N: Optional[int] = None) -> ChoiMatrix:
    beta = _beta(beta, N)
    _require_normalized(beta, d)
    N = beta.size
    C = float(choi_prefactor(d, N)) * build_choi_unscaled(beta, d, N)
    return ChoiMatrix(C, d, N)


def build_p_beta(beta, d: int, N: Optional[int] = None) -> np.ndarray:
    """``(1/N!) sum_{sigma in S_N} beta_{sigma(0)+1} Pi_sigma`` on ``N`` sites."""
    beta = _beta(beta, N)
    N = beta.size
    dim = check_dims(d, N)
    out = np.zeros((dim, dim), dtype=complex)
    for sigma in all_permutations(N):
        out += beta[sigma(0)] * permutation_operator(sigma, d)
    return out / math.factorial(N)


@dataclass
class CloningChannel:
    """``T_beta(rho) = k P_beta (rho ⊗ I) P_beta^T`` with ``k = dN(N+d-1)/Tr P+_N``."""

    beta: np.ndarray
    d: int
    N: int = field(init=False)
    _choi: Optional[ChoiMatrix] = field(default=None, init=False, repr=False)
    _p_beta: Optional[np.ndarray] = field(default=None, init=False, repr=False)

    def __post_init__(self):
        self.beta = _beta(self.beta, None)
        self.N = self.beta.size
        _require_normalized(self.beta, self.d)
        check_dims(self.d, self.N + 1)

    @classmethod
    def from_alpha(cls, alpha, d: int) -> "CloningChannel":
        return cls(perron_beta(alpha, d), d)

    @property
    def p_beta(self) -> np.ndarray:
        if self._p_beta is None:
            self._p_beta = build_p_beta(self.beta, self.d)
        return self._p_beta

    @property
    def choi(self) -> ChoiMatrix:
        if self._choi is None:
            self._choi = build_choi(self.beta, self.d)
        return self._choi

    def apply_linear(self, X: np.ndarray) -> np.ndarray:
        """Action on an arbitrary ``d×d`` matrix, no state checks."""
        P = self.p_beta
        k = float(channel_prefactor(self.d, self.N))
        return k * P @ np.kron(X, np.eye(self.d ** (self.N - 1))) @ P.T


def _check_state(rho: np.ndarray, d: int, tol: float = 1e-10) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValueError(f"state must be {d}×{d}, got {rho.shape}")
    if np.abs(rho - rho.conj().T).max() > tol:
        raise ValueError("state is not Hermitian")
    if abs(np.trace(rho) - 1) > tol:
        raise ValueError("state does not have unit trace")
    if np.linalg.eigvalsh(rho)[0] < -tol:
        raise ValueError("state is not positive semidefinite")
    return rho


def apply_channel(ch: CloningChannel, rho: State) -> np.ndarray:
    """``T_beta(rho)``, an operator on the ``N`` output sites."""
    return ch.apply_linear(_check_state(rho, ch.d))


def apply_choi(C: Union[ChoiMatrix, np.ndarray], X: np.ndarray, d: Optional[int] = None) -> np.ndarray:
    """``Tr_0[C (X^T ⊗ I)]``."""
    if isinstance(C, ChoiMatrix):
        d, op = C.d, C.operator
    else:
        if d is None:
            raise ValueError("d is required for a bare Choi array")
        op = C
    n_out = op.shape[0] // d
    t = op.reshape(d, n_out, d, n_out)
    # sum_{k,l} C[k,:,l,:] X^T[l,k] = sum_{k,l} C[k,:,l,:] X[k,l]
    return np.einsum("kalb,kl->ab", t, X)


def choi_from_map(T: Callable[[np.ndarray], np.ndarray], d: int) -> np.ndarray:
    """``sum_ij |i><j| ⊗ T(|i><j|)``."""
    blocks = []
    for i in range(d):
        row = []
        for j in range(d):
            E = np.zeros((d, d), dtype=complex)
            E[i, j] = 1.0
            row.append(T(E))
        blocks.append(row)
    return np.block(blocks)


def marginal(out: np.ndarray, d: int, clone: int) -> np.ndarray:
    """Reduced state of clone ``clone`` (1-based) from an ``N``-site output."""
    return partial_trace(out, d, [clone - 1])


def haar_pure_states(d: int, count: int, rng: Union[int, np.random.Generator, None] = None) -> np.ndarray:
    """``count`` Haar-random unit vectors in C^d, rows of the returned array."""
    rng = np.random.default_rng(rng)
    z = rng.standard_normal((count, d)) + 1j * rng.standard_normal((count, d))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_unitaries(d: int, count: int, seed: Optional[int] = None) -> np.ndarray:
    U = unitary_group.rvs(d, size=count, random_state=np.random.default_rng(seed))
    return np.asarray(U).reshape(count, d, d)


@dataclass(frozen=True)
class MarginalFit:
    p: np.ndarray
    offsets: np.ndarray
    residual: float


def fit_marginals(ch: CloningChannel, samples: int = 20, seed: Optional[int] = 0) -> MarginalFit:
    """Least-squares fit ``T_i(rho) ≈ p_i rho + c_i I/d`` over Haar pure inputs."""
    if samples < 1:
        raise ValueError("samples must be at least 1")
    d, N = ch.d, ch.N
    psis = haar_pure_states(d, samples, seed)
    coef = np.zeros((samples, N, 2))
    worst = 0.0
    for s, psi in enumerate(psis):
        rho = np.outer(psi, psi.conj())
        out = apply_channel(ch, rho)
        basis = np.stack([rho.reshape(-1), np.eye(d).reshape(-1) / d], axis=1)
        for i in range(N):
            target = marginal(out, d, i + 1).reshape(-1)
            x, *_ = np.linalg.lstsq(basis, target, rcond=None)
            worst = max(worst, float(np.linalg.norm(basis @ x - target)))
            coef[s, i] = x.real
    mean = coef.mean(axis=0)
    return MarginalFit(mean[:, 0], mean[:, 1], worst)


def _choi_array(C) -> tuple:
    if isinstance(C, ChoiMatrix):
        return C.operator, C.d, C.N
    raise TypeError("expected a ChoiMatrix")


def average_fidelity(C: ChoiMatrix, alpha) -> float:
    """``sum_i alpha_i Fbar_i = <C, R_alpha> / (d(d+1))``."""
    op, d, N = _choi_array(C)
    alpha = np.asarray(alpha, dtype=float)
    if alpha.shape != (N,):
        raise ValueError(f"alpha must have length N={N}")
    R = build_R_alpha(alpha, d)
    return float(np.real(np.trace(op.conj().T @ R))) / (d * (d + 1))


def monte_carlo_fidelity(C: ChoiMatrix, alpha, samples: int = 10000, seed: Optional[int] = 0):
    """Sampled ``sum_i alpha_i Tr(rho T_i(rho))`` over Haar pure states. Returns (mean, stderr)."""
    op, d, N = _choi_array(C)
    alpha = np.asarray(alpha, dtype=float)
    psis = haar_pure_states(d, samples, seed)
    # |psi-bar ⊗ psi> on sites (0, i)
    pair = np.einsum("sa,sb->sab", psis.conj(), psis).reshape(samples, d * d)
    vals = np.zeros(samples)
    for i in range(1, N + 1):
        if alpha[i - 1] == 0:
            continue
        red = partial_trace(op, d, [0, i])
        vals += alpha[i - 1] * np.real(np.einsum("sa,ab,sb->s", pair.conj(), red, pair))
    return float(vals.mean()), float(vals.std(ddof=1) / math.sqrt(samples)) if samples > 1 else 0.0


def covariance_check(C: Union[ChoiMatrix, np.ndarray], trials: int = 20, seed: Optional[int] = 0,
                     d: Optional[int] = None) -> float:
    """Max spectral norm of ``[C, conj(U) ⊗ U^{⊗N}]`` over Haar unitaries."""
    if isinstance(C, ChoiMatrix):
        op, d = C.operator, C.d
    else:
        if d is None:
            raise ValueError("d is required for a bare Choi array")
        op = np.asarray(C)
    n = round(math.log(op.shape[0], d))
    worst = 0.0
    for U in haar_unitaries(d, trials, seed):
        W = U.conj()
        for _ in range(n - 1):
            W = np.kron(W, U)
        worst = max(worst, float(np.linalg.norm(op @ W - W @ op, 2)))
    return worst


def replacement_choi(d: int, N: int) -> np.ndarray:
    """Choi of ``rho ↦ |0..0><0..0|``: trace preserving but not covariant."""
    dim = check_dims(d, N)
    zero = np.zeros((dim, dim), dtype=complex)
    zero[0, 0] = 1.0
    return np.kron(np.eye(d), zero)


def werner_choi(d: int, N: int) -> np.ndarray:
    """Choi of the symmetric cloner ``(d / Tr P+) P+ (rho ⊗ I) P+``."""
    from .symmetric_group import symmetric_projector

    P = symmetric_projector(N, d)
    k = d / sym_dim(N, d)
    pad = np.eye(d ** (N - 1))
    return choi_from_map(lambda X: k * P @ np.kron(X, pad) @ P, d)


def moment_deviation(d: int, samples: int, seed: Optional[int] = 0) -> float:
    """Max entry of ``mean(rho^T ⊗ rho) - (I + omega)/(d(d+1))`` over Haar pure rho."""
    psis = haar_pure_states(d, samples, seed)
    v = np.einsum("sa,sb->sab", psis.conj(), psis).reshape(samples, d * d)
    mean = np.einsum("sa,sb->ab", v, v.conj()) / samples
    exact = (np.eye(d * d) + omega_projector(d, 2, 0, 1)) / (d * (d + 1))
    return float(np.abs(mean - exact).max())
