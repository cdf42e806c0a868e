"""Permutations, their tensor representation and the Sigma_{a,b} classes.

Composition follows the usual right-to-left convention, ``(s * t)(i) = s(t(i))``,
and the representation moves the factor on site ``i`` to site ``s(i)``::

    Pi_s (v_0 ⊗ ... ⊗ v_{n-1}) = v_{s^-1(0)} ⊗ ... ⊗ v_{s^-1(n-1)}

so that ``Pi_s Pi_t = Pi_{s*t}``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Iterator, List, Sequence, Tuple

import numpy as np

from .tensor_core import check_dims, omega_projector, partial_transpose

__all__ = [
    "Permutation",
    "all_permutations",
    "permutation_operator",
    "permutation_indices",
    "enumerate_sigma_ab",
    "cycle_between",
    "composite_permutation",
    "decompose_partial_transpose",
    "transposed_permutation_operator",
    "symmetric_projector",
    "sym_dim",
    "cycle_count",
]


@dataclass(frozen=True)
class Permutation:
    """A bijection of ``{0, ..., n-1}`` stored as its image array."""

    images: Tuple[int, ...]

    def __post_init__(self):
        images = tuple(int(i) for i in self.images)
        if sorted(images) != list(range(len(images))):
            raise ValueError(f"{self.images} is not a permutation of 0..{len(images) - 1}")
        object.__setattr__(self, "images", images)

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(n)))

    @classmethod
    def from_cycles(cls, n: int, *cycles: Sequence[int]) -> "Permutation":
        """Build from cycle notation, e.g. ``from_cycles(4, (0, 3, 2))`` is 0→3→2→0."""
        images = list(range(n))
        seen = set()
        for cyc in cycles:
            for a in cyc:
                if a in seen or not 0 <= a < n:
                    raise ValueError(f"invalid cycles {cycles} for n={n}")
                seen.add(a)
            for a, b in zip(cyc, tuple(cyc[1:]) + tuple(cyc[:1])):
                images[a] = b
        return cls(tuple(images))

    @classmethod
    def transposition(cls, n: int, i: int, j: int) -> "Permutation":
        if i == j:
            return cls.identity(n)
        return cls.from_cycles(n, (i, j))

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i]

    def __mul__(self, other: "Permutation") -> "Permutation":
        if other.n != self.n:
            raise ValueError("cannot compose permutations of different sizes")
        return Permutation(tuple(self.images[j] for j in other.images))

    def inverse(self) -> "Permutation":
        inv = [0] * self.n
        for i, j in enumerate(self.images):
            inv[j] = i
        return Permutation(tuple(inv))

    def cycles(self) -> List[Tuple[int, ...]]:
        """Disjoint cycles including fixed points, each starting at its smallest element."""
        seen = [False] * self.n
        out = []
        for start in range(self.n):
            if seen[start]:
                continue
            cyc = []
            i = start
            while not seen[i]:
                seen[i] = True
                cyc.append(i)
                i = self.images[i]
            out.append(tuple(cyc))
        return out

    def is_identity(self) -> bool:
        return all(i == j for i, j in enumerate(self.images))

    def __str__(self) -> str:
        cyc = [c for c in self.cycles() if len(c) > 1]
        if not cyc:
            return "()"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cyc)


def all_permutations(n: int) -> Iterator[Permutation]:
    for images in itertools.permutations(range(n)):
        yield Permutation(images)


def cycle_count(sigma: Permutation) -> int:
    """Number of disjoint cycles, fixed points included."""
    return len(sigma.cycles())


@lru_cache(maxsize=4096)
def _perm_index(images: Tuple[int, ...], d: int) -> np.ndarray:
    n = len(images)
    # digits of every basis index, site 0 most significant
    idx = np.indices((d,) * n).reshape(n, -1)
    out = np.empty_like(idx)
    out[list(images)] = idx
    weights = d ** np.arange(n - 1, -1, -1)
    res = weights @ out
    res.setflags(write=False)
    return res


def permutation_indices(sigma: Permutation, d: int) -> np.ndarray:
    """Row index of the single nonzero entry in each column of ``Pi_sigma``."""
    check_dims(d, sigma.n)
    return _perm_index(sigma.images, d)


def permutation_operator(sigma: Permutation, d: int) -> np.ndarray:
    dim = check_dims(d, sigma.n)
    op = np.zeros((dim, dim), dtype=complex)
    op[permutation_indices(sigma, d), np.arange(dim)] = 1.0
    return op


@lru_cache(maxsize=1024)
def _transposed_cached(images: Tuple[int, ...], d: int) -> np.ndarray:
    op = partial_transpose(permutation_operator(Permutation(images), d), d, 0)
    op.setflags(write=False)
    return op


def transposed_permutation_operator(sigma: Permutation, d: int) -> np.ndarray:
    """``Pi_sigma`` partially transposed on site 0 (read-only, cached)."""
    check_dims(d, sigma.n)
    return _transposed_cached(sigma.images, d)


def enumerate_sigma_ab(N: int, a: int, b: int) -> List[Permutation]:
    """Permutations of ``{0..N}`` with ``s(0) = a`` and ``s(b) = 0``, in lexicographic order."""
    if not (1 <= a <= N and 1 <= b <= N):
        raise ValueError(f"need 1 <= a, b <= N={N}, got ({a}, {b})")
    out = []
    for images in itertools.permutations(range(N + 1)):
        if images[0] == a and images[b] == 0:
            out.append(Permutation(images))
    return out


def cycle_between(i: int, j: int, n: int) -> Permutation:
    """The ``(i : j)`` cycle on ``n`` letters.

    ``((i-1) (i-2) ... j)`` when ``j < i``, ``(i (i+1) ... (j-1))`` when
    ``i < j`` and the identity when ``i == j``.
    """
    if not (0 <= i <= n and 0 <= j <= n):
        raise ValueError(f"({i} : {j}) out of range for n={n}")
    if j < i:
        cyc = tuple(range(i - 1, j - 1, -1))
    elif i < j:
        cyc = tuple(range(i, j))
    else:
        return Permutation.identity(n)
    if len(cyc) < 2:
        return Permutation.identity(n)
    return Permutation.from_cycles(n, cyc)


def composite_permutation(sigma_hat: Permutation, a: int, b: int, c: int) -> Permutation:
    """The permutation ``sigma_hat(a, b, c)`` acting on the ``N - 1`` spectator sites.

    ``(0 : a-1) ∘ sigma_hat ∘ ((b-1) : 0)``, followed on the right by
    ``((c-1) : (b-1))`` when ``b != c``.
    """
    m = sigma_hat.n
    out = cycle_between(0, a - 1, m) * sigma_hat * cycle_between(b - 1, 0, m)
    if b != c:
        out = out * cycle_between(c - 1, b - 1, m)
    return out


def _algebraic_sigma_hat(sigma: Permutation) -> Permutation:
    N = sigma.n - 1
    a, b = sigma(0), sigma.inverse()(0)
    t_a = Permutation.transposition(N + 1, 1, a)
    t_b = Permutation.transposition(N + 1, 1, b)
    core = t_a * sigma * t_b
    # core swaps 0 and 1 and permutes 2..N on its own
    return Permutation(tuple(core(k + 2) - 2 for k in range(N - 1)))


def _decomposition(a: int, b: int, sigma_hat: Permutation, d: int) -> np.ndarray:
    N = sigma_hat.n + 1
    t_a = permutation_operator(Permutation.transposition(N + 1, 1, a), d)
    t_b = permutation_operator(Permutation.transposition(N + 1, 1, b), d)
    omega = omega_projector(d, 2, 0, 1)
    inner = np.kron(omega, permutation_operator(sigma_hat, d))
    return t_a @ inner @ t_b


def decompose_partial_transpose(
    sigma: Permutation, d: int = 2, method: str = "search", atol: float = 1e-12
) -> Tuple[int, int, Permutation]:
    """Return ``(a, b, sigma_hat)`` with
    ``Pi_sigma^Γ = Pi_{(1 a)} (omega_{(0,1)} ⊗ Pi_{sigma_hat}) Pi_{(1 b)}``.

    ``method="search"`` scans S_{N-1} for the operator identity at ``d = 2``
    and insists on a unique match; ``method="algebraic"`` reads ``sigma_hat``
    off ``(1 a) sigma (1 b)``. Either way the result is re-verified at ``d``.
    """
    if sigma(0) == 0:
        raise ValueError("decomposition needs sigma(0) != 0")
    N = sigma.n - 1
    a, b = sigma(0), sigma.inverse()(0)
    if N == 1:
        sigma_hat = Permutation(())
    elif method == "algebraic":
        sigma_hat = _algebraic_sigma_hat(sigma)
    elif method == "search":
        target = transposed_permutation_operator(sigma, 2)
        matches = [
            tau
            for tau in all_permutations(N - 1)
            if np.abs(_decomposition(a, b, tau, 2) - target).max() <= atol
        ]
        if len(matches) != 1:
            raise RuntimeError(f"expected a unique sigma_hat for {sigma}, found {len(matches)}")
        sigma_hat = matches[0]
    else:
        raise ValueError(f"unknown method {method!r}")

    target = transposed_permutation_operator(sigma, d)
    if N == 1:
        recon = omega_projector(d, 2, 0, 1)
    else:
        recon = _decomposition(a, b, sigma_hat, d)
    if np.abs(recon - target).max() > atol:
        raise RuntimeError(f"decomposition of {sigma} failed to verify at d={d}")
    return a, b, sigma_hat


def sym_dim(N: int, d: int) -> int:
    """Dimension of the symmetric subspace of (C^d)^{⊗N}."""
    if N == 0:
        return 1
    return math.comb(d + N - 1, N)


def symmetric_projector(N: int, d: int) -> np.ndarray:
    """Orthogonal projector ``(1/N!) sum_s Pi_s`` onto the symmetric subspace."""
    dim = check_dims(d, N)
    op = np.zeros((dim, dim))
    cols = np.arange(dim)
    for sigma in all_permutations(N):
        np.add.at(op, (permutation_indices(sigma, d), cols), 1.0)
    return (op / math.factorial(N)).astype(complex)
