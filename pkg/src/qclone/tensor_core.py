"""Dense operators and vectors on (C^d)^{\otimes n}.

Operators are plain complex ``numpy`` arrays of side ``d**n``. The row/column
multi-index is row-major with site 0 as the most significant digit, so site 0
is the channel input whenever an operator lives on ``N + 1`` sites.
"""
from __future__ import annotations

from typing import Iterable, Optional, Sequence

import numpy as np

__all__ = [
    "MAX_DIM",
    "DimensionError",
    "check_dims",
    "num_sites",
    "identity",
    "omega_vector",
    "omega_projector",
    "embed",
    "partial_transpose",
    "partial_trace",
]

#: Largest admissible ``d**n`` for full-space operators.
MAX_DIM = 4096


class DimensionError(ValueError):
    """Raised when a configuration exceeds the dense dimension guard."""


def check_dims(d: int, n: int, max_dim: Optional[int] = None) -> int:
    """Validate ``d`` and ``n`` and return the total dimension ``d**n``."""
    if int(d) != d or d < 2:
        raise DimensionError(f"local dimension must be an integer >= 2, got {d}")
    if int(n) != n or n < 1:
        raise DimensionError(f"number of sites must be an integer >= 1, got {n}")
    limit = MAX_DIM if max_dim is None else max_dim
    dim = int(d) ** int(n)
    if dim > limit:
        raise DimensionError(
            f"d**n = {d}**{n} = {dim} exceeds the dense guard {limit}"
        )
    return dim


def num_sites(M: np.ndarray, d: int) -> int:
    """Number of sites of a square operator (or vector) with local dimension ``d``."""
    side = M.shape[0]
    if M.ndim == 2 and M.shape[0] != M.shape[1]:
        raise DimensionError(f"operator is not square: shape {M.shape}")
    n = 0
    rem = side
    while rem > 1 and rem % d == 0:
        rem //= d
        n += 1
    if rem != 1 or n == 0:
        raise DimensionError(f"side {side} is not a positive power of d={d}")
    return n


def identity(d: int, n: int) -> np.ndarray:
    dim = check_dims(d, n)
    return np.eye(dim, dtype=complex)


def omega_vector(
    d: int, n: int, j: int, k: int, rest: Optional[np.ndarray] = None
) -> np.ndarray:
    """Unnormalized maximally entangled vector between sites ``j`` and ``k``.

    Returns ``sum_i |i>_{(j)} |i>_{(k)}`` tensored with ``rest``, a vector on
    the remaining ``n - 2`` sites taken in increasing site order. ``rest`` is
    required when ``n > 2`` and ignored (must be ``None``) when ``n == 2``.
    """
    dim = check_dims(d, n)
    if n < 2:
        raise IndexError("omega_vector needs at least two sites")
    if j == k:
        raise IndexError("omega_vector needs two distinct sites")
    if not (0 <= j < n and 0 <= k < n):
        raise IndexError(f"sites ({j}, {k}) out of range for n={n}")
    if n == 2:
        if rest is not None and np.size(rest) != 1:
            raise ValueError("no remaining sites to place `rest` on")
        rest = np.ones(1, dtype=complex) if rest is None else np.asarray(rest, complex)
    elif rest is None:
        raise ValueError(f"`rest` must be a vector on the other {n - 2} sites")
    rest = np.asarray(rest, dtype=complex).reshape(-1)
    if rest.size != d ** (n - 2):
        raise ValueError(f"`rest` has length {rest.size}, expected {d ** (n - 2)}")

    # axes (j, k, others...) → move j, k into place
    pair = np.eye(d, dtype=complex).reshape((d, d) + (1,) * (n - 2))
    tensor = pair * rest.reshape((1, 1) + (d,) * (n - 2))
    lo, hi = sorted((j, k))
    tensor = np.moveaxis(tensor, [0, 1], [lo, hi])
    return tensor.reshape(dim)


def embed(op: np.ndarray, d: int, n: int, sites: Sequence[int]) -> np.ndarray:
    """Place ``op`` (acting on ``sites`` in the given order) inside ``n`` sites."""
    check_dims(d, n)
    sites = list(sites)
    m = len(sites)
    if len(set(sites)) != m or any(not 0 <= s < n for s in sites):
        raise IndexError(f"invalid sites {sites} for n={n}")
    if op.shape != (d**m, d**m):
        raise DimensionError(f"operator shape {op.shape} does not match {m} sites")
    others = [s for s in range(n) if s not in sites]
    full = np.kron(op, np.eye(d ** (n - m), dtype=complex))
    # current axis order: sites..., others...
    order = sites + others
    t = full.reshape((d,) * (2 * n))
    perm = [order.index(s) for s in range(n)]
    t = t.transpose(perm + [n + p for p in perm])
    return t.reshape(d**n, d**n)


def omega_projector(d: int, n: int, j: int, k: int) -> np.ndarray:
    """``omega_{(j,k)}`` tensored with the identity on all other sites."""
    check_dims(d, n)
    if j == k:
        raise IndexError("omega_projector needs two distinct sites")
    if not (0 <= j < n and 0 <= k < n):
        raise IndexError(f"sites ({j}, {k}) out of range for n={n}")
    omega = np.zeros((d * d, d * d), dtype=complex)
    diag = [i * d + i for i in range(d)]
    omega[np.ix_(diag, diag)] = 1.0
    return embed(omega, d, n, [j, k])


def partial_transpose(M: np.ndarray, d: int, site: int) -> np.ndarray:
    """Transpose the indices of a single site."""
    n = num_sites(M, d)
    if not 0 <= site < n:
        raise IndexError(f"site {site} out of range for n={n}")
    t = M.reshape((d,) * (2 * n))
    t = np.swapaxes(t, site, n + site)
    return t.reshape(M.shape)


def partial_trace(M: np.ndarray, d: int, keep: Iterable[int]) -> np.ndarray:
    """Trace out every site not in ``keep``; kept sites stay in increasing order."""
    n = num_sites(M, d)
    keep = sorted(set(keep))
    if not keep:
        raise ValueError("keep set must be nonempty")
    if any(not 0 <= s < n for s in keep):
        raise IndexError(f"keep {keep} out of range for n={n}")
    t = M.reshape((d,) * (2 * n))
    letters = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ"
    if 2 * n > len(letters):
        raise DimensionError("too many sites for partial_trace")
    rows = list(letters[:n])
    cols = list(letters[n : 2 * n])
    for s in range(n):
        if s not in keep:
            cols[s] = rows[s]
    out = "".join(rows[s] for s in keep) + "".join(cols[s] for s in keep)
    res = np.einsum("".join(rows) + "".join(cols) + "->" + out, t)
    m = d ** len(keep)
    return res.reshape(m, m)
