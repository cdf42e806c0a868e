"""The Q-norm, its dual norm and membership in the cloning region.

Everything here runs on the reduced N×N eigenproblem, so no operator on
``N + 1`` sites is ever built.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from .spectral import gram_matrix, lambda_max_reduced, normalization_residual, normalize_beta
from .tensor_core import DimensionError

__all__ = [
    "RegionVerdict",
    "q_norm",
    "q_norm_closed_n2",
    "simplex_grid",
    "dual_q_norm",
    "in_region",
    "kay_residual",
    "optimal_surface_point",
    "surface_fidelities",
    "fidelities_to_beta",
    "witness_direction",
    "boundary_export",
    "extension_check",
    "ellipse_curve",
    "ellipse_equation",
    "qnorm_unit_sphere",
    "flat_slice",
]

#: Default simplex grid resolution per N for the dual norm.
DEFAULT_RESOLUTION = {1: 1, 2: 200, 3: 60, 4: 30, 5: 16, 6: 10}
MAX_DUAL_N = 6
MAX_GRID_POINTS = 20000


@dataclass(frozen=True)
class RegionVerdict:
    dual_norm: float
    inside: bool
    margin: float
    witness_alpha: np.ndarray

    def as_dict(self) -> dict:
        return {
            "dual_norm": self.dual_norm,
            "inside": self.inside,
            "margin": self.margin,
            "witness_alpha": [float(a) for a in self.witness_alpha],
        }


def _vec(x) -> np.ndarray:
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if x.ndim != 1 or x.size == 0:
        raise ValueError("expected a nonempty 1-D real vector")
    if not np.all(np.isfinite(x)):
        raise ValueError("vector entries must be finite")
    return x


def q_norm(x, d: int):
    """``(d lambda_max(S_x) - ||x||_1) / (d^2 - 1)``. Vectors or (K, N) batches."""
    x = np.abs(np.asarray(x, dtype=float))
    lam = lambda_max_reduced(x, d)
    val = (d * lam - x.sum(axis=-1)) / (d * d - 1)
    # roundoff can push the zero vector a hair below 0
    return max(float(val), 0.0) if np.ndim(val) == 0 else np.maximum(val, 0.0)


def q_norm_closed_n2(x1: float, x2: float, d: int) -> float:
    a, b = abs(x1), abs(x2)
    lam = 0.5 * (d * (a + b) + math.sqrt(d * d * (a - b) ** 2 + 4 * a * b))
    return (d * lam - a - b) / (d * d - 1)


def simplex_grid(N: int, resolution: int) -> np.ndarray:
    """All points ``k / resolution`` of the probability simplex, in lexicographic order."""
    if N == 1:
        return np.ones((1, 1))
    count = math.comb(resolution + N - 1, N - 1)
    if count > MAX_GRID_POINTS * 10:
        raise DimensionError(f"simplex grid with {count} points is too large")
    rows = []
    # stars and bars: bar positions among resolution + N - 1 slots
    for bars in itertools.combinations(range(resolution + N - 1), N - 1):
        prev = -1
        parts = []
        for b in bars:
            parts.append(b - prev - 1)
            prev = b
        parts.append(resolution + N - 2 - prev)
        rows.append(parts)
    return np.asarray(rows, dtype=float) / resolution


def _ratio(p: np.ndarray, A: np.ndarray, d: int) -> np.ndarray:
    return (A @ p) / q_norm(A, d)


def _refine(p, starts, d, step, iters):
    """Pairwise mass-transfer ascent on the simplex, all starts in parallel."""
    A = starts.copy()
    F = _ratio(p, A, d)
    N = A.shape[1]
    pairs = [(i, j) for i in range(N) for j in range(N) if i != j]
    gain_i = np.array([i for i, _ in pairs])
    loss_j = np.array([j for _, j in pairs])
    t = np.full(A.shape[0], step)
    S, P = A.shape[0], len(pairs)
    for _ in range(iters):
        for _ in range(64):
            moved = np.minimum(t[:, None], A[:, loss_j])  # (S, P)
            cand = np.repeat(A[:, None, :], P, axis=1)
            rows = np.arange(P)
            cand[:, rows, gain_i] += moved
            cand[:, rows, loss_j] -= moved
            np.clip(cand, 0.0, None, out=cand)
            Fc = _ratio(p, cand.reshape(S * P, N), d).reshape(S, P)
            best = np.argmax(Fc, axis=1)
            Fb = Fc[np.arange(S), best]
            up = Fb > F * (1 + 1e-15)
            if not up.any():
                break
            A[up] = cand[np.arange(S), best][up]
            F[up] = Fb[up]
        t = t / 2
        if t.max() < 1e-10:
            break
    return A, F


def dual_q_norm(
    p,
    d: int,
    resolution: Optional[int] = None,
    refine_iters: int = 50,
    tol: float = 1e-6,
    warm_start=None,
    top_k: int = 5,
) -> RegionVerdict:
    """``max_alpha <p, alpha> / ||alpha||_Q`` over the probability simplex.

    The ratio is quasiconcave in ``alpha`` (linear over convex), so a grid
    followed by local ascent from the best cells finds the global maximum.
    ``warm_start`` adds extra starting directions.
    """
    p = np.abs(_vec(p))
    N = p.size
    if N > MAX_DUAL_N:
        raise DimensionError(f"dual norm is limited to N <= {MAX_DUAL_N}, got N={N}")
    if N == 1:
        val = float(p[0])
        return RegionVerdict(val, val <= 1 + tol, 1 - val, np.ones(1))
    if not p.any():
        return RegionVerdict(0.0, True, 1.0, np.full(N, 1.0 / N))

    res = DEFAULT_RESOLUTION[N] if resolution is None else int(resolution)
    if res < 1:
        raise ValueError("resolution must be positive")
    grid = simplex_grid(N, res)
    if grid.shape[0] > MAX_GRID_POINTS:
        raise DimensionError(f"dual-norm grid has {grid.shape[0]} points, limit {MAX_GRID_POINTS}")
    F = _ratio(p, grid, d)
    order = np.argsort(-F, kind="stable")[:top_k]
    starts = grid[order]
    if warm_start is not None:
        w = np.abs(np.atleast_2d(np.asarray(warm_start, dtype=float)))
        if w.shape[1] != N:
            raise ValueError("warm_start has the wrong length")
        w = w[w.sum(axis=1) > 0]
        starts = np.vstack([starts, w / w.sum(axis=1, keepdims=True)])
    A, Fr = _refine(p, starts, d, 1.0 / res, refine_iters)
    k = int(np.argmax(Fr))
    val = float(Fr[k])
    return RegionVerdict(val, val <= 1 + tol, 1 - val, A[k])


def in_region(p, d: int, tol: float = 1e-6, **kwargs) -> RegionVerdict:
    """Region membership: ``p`` is achievable iff its dual Q-norm is at most 1."""
    p = _vec(p)
    if np.any(p < 0) or np.any(p > 1):
        raise ValueError("clone qualities must lie in [0, 1]")
    return dual_q_norm(p, d, tol=tol, **kwargs)


def kay_residual(p, d: int) -> float:
    """RHS minus LHS of ``N + (d^2-1) sum p = d(d-1) + (sum sqrt((d^2-1)p_i + 1))^2 / (N+d-1)``."""
    p = _vec(p)
    N = p.size
    inner = (d * d - 1) * p + 1
    if np.any(inner < 0):
        raise ValueError("(d^2-1) p_i + 1 must be nonnegative")
    lhs = N + (d * d - 1) * p.sum()
    rhs = d * (d - 1) + np.sqrt(inner).sum() ** 2 / (N + d - 1)
    return float(rhs - lhs)


def _check_normalized(beta, d, tol):
    r = normalization_residual(beta, d)
    if abs(r) > tol:
        raise ValueError(f"beta is not normalized (residual {r:.3e})")


def optimal_surface_point(beta, d: int, tol: float = 1e-10) -> np.ndarray:
    """Clone qualities ``p_i = (d s_i^2 - 1)/(d^2 - 1)``, ``s = ((d-1)I + J) beta``."""
    beta = _vec(beta)
    _check_normalized(beta, d, tol)
    s = gram_matrix(beta.size, d) @ beta
    return (d * s * s - 1) / (d * d - 1)


def surface_fidelities(beta, d: int, tol: float = 1e-10) -> np.ndarray:
    """Single-clone fidelities ``f_i = (1 + s_i^2)/(d + 1)``."""
    beta = _vec(beta)
    _check_normalized(beta, d, tol)
    s = gram_matrix(beta.size, d) @ beta
    return (1 + s * s) / (d + 1)


def fidelities_to_beta(f, d: int, N: Optional[int] = None, tol: float = 1e-9) -> np.ndarray:
    """Invert ``surface_fidelities``; the fidelities must lie on the optimal surface."""
    f = _vec(f)
    if N is not None and f.size != N:
        raise ValueError(f"expected {N} fidelities, got {f.size}")
    N = f.size
    arg = (d + 1) * f - 1
    if np.any(arg < -1e-15):
        raise ValueError(f"fidelities must be at least 1/(d+1) = {1 / (d + 1):.6g}")
    s = np.sqrt(np.clip(arg, 0.0, None))
    beta = (s - s.sum() / (N + d - 1)) / (d - 1)
    r = normalization_residual(beta, d)
    if abs(r) > tol:
        raise ValueError(f"fidelities are not on the optimal surface (normalization residual {r:.3e})")
    return beta


def witness_direction(beta, d: int) -> np.ndarray:
    """The weight direction for which ``beta`` is the Perron vector, on the simplex.

    From ``diag(alpha) G beta = lambda beta`` we get ``alpha ∝ beta / (G beta)``.
    """
    beta = np.abs(_vec(beta))
    gb = gram_matrix(beta.size, d) @ beta
    if not np.all(gb > 0):
        raise ValueError("beta must be nonnegative and nonzero")
    a = beta / gb
    return a / a.sum()


def boundary_export(
    d: int, N: int, grid: int = 20, tol: float = 1e-9, with_dual: bool = True
) -> List[Dict[str, float]]:
    """Rows ``(beta, p, dual_norm, kay_residual, flag)`` over a grid of beta directions.

    Directions are the points ``k / grid`` of the simplex, each rescaled onto the
    normalization. ``flag`` is ``infeasible`` when the Kay residual exceeds ``+tol``.
    """
    if N < 1 or d < 2:
        raise ValueError("need d >= 2 and N >= 1")
    dirs = simplex_grid(N, grid)
    if dirs.shape[0] > MAX_GRID_POINTS:
        raise DimensionError(f"boundary grid has {dirs.shape[0]} rows, limit {MAX_GRID_POINTS}")
    rows = []
    for direction in dirs:
        beta = normalize_beta(direction, d)
        p = optimal_surface_point(beta, d)
        row: Dict[str, float] = {}
        for i, b in enumerate(beta, start=1):
            row[f"beta_{i}"] = float(b)
        for i, pi in enumerate(p, start=1):
            row[f"p_{i}"] = float(pi)
        if with_dual:
            row["dual_norm"] = dual_q_norm(p, d, warm_start=witness_direction(beta, d)).dual_norm
        res = kay_residual(p, d)
        row["kay_residual"] = res
        row["flag"] = "infeasible" if res > tol else "ok"
        rows.append(row)
    return rows


def extension_check(p, d: int, tol: float = 1e-9) -> dict:
    """Append a zero-quality clone to a point of the (N-1)-clone optimal surface."""
    p = _vec(p)
    r0 = kay_residual(p, d)
    if abs(r0) > tol:
        raise ValueError(f"p is not on the optimal surface (residual {r0:.3e})")
    ext = np.append(p, 0.0)
    res = kay_residual(ext, d)
    is_basis = bool(np.sum(np.abs(p - np.round(p)) <= tol) == p.size and np.isclose(p.sum(), 1.0))
    return {
        "extended": ext,
        "residual": res,
        "on_surface": abs(res) <= tol,
        "is_basis_vector": is_basis,
    }


def ellipse_equation(p1: float, p2: float, d: int) -> float:
    """Implicit form of the two-clone optimal curve, zero on the curve.

    With ``q_i = ((d^2-1)p_i + 1)/d`` the normalization reads
    ``(d(q_1 + q_2) - (d^2 - 1))^2 = 4 q_1 q_2``.
    """
    q1 = ((d * d - 1) * p1 + 1) / d
    q2 = ((d * d - 1) * p2 + 1) / d
    return (d * (q1 + q2) - (d * d - 1)) ** 2 - 4 * q1 * q2


def ellipse_curve(d: int, points: int = 361) -> List[Dict[str, float]]:
    """The two-clone curve traced by every real normalized beta.

    ``optimal`` marks the arc with ``beta >= 0``, the part realized by optimal cloners.
    """
    G = gram_matrix(2, d)
    w, V = np.linalg.eigh(G)
    g_inv_half = V @ np.diag(w ** -0.5) @ V.T
    rows = []
    for k in range(points):
        theta = 2 * math.pi * k / (points - 1) if points > 1 else 0.0
        beta = g_inv_half @ np.array([math.cos(theta), math.sin(theta)])
        s = G @ beta
        p = (d * s * s - 1) / (d * d - 1)
        rows.append(
            {
                "theta": theta,
                "beta_1": float(beta[0]),
                "beta_2": float(beta[1]),
                "p_1": float(p[0]),
                "p_2": float(p[1]),
                "optimal": bool(np.all(beta >= -1e-15)),
            }
        )
    return rows


def qnorm_unit_sphere(d_values: Sequence[int] = (2, 3, 4), points: int = 91) -> List[Dict[str, float]]:
    """Points of ``{x >= 0 : ||x||_Q = 1}`` in the plane along rays from the origin."""
    rows = []
    for d in d_values:
        for k in range(points):
            theta = 0.5 * math.pi * k / (points - 1) if points > 1 else 0.0
            u = np.array([math.cos(theta), math.sin(theta)])
            u[np.abs(u) < 1e-15] = 0.0
            x = u / q_norm(u, d)
            rows.append({"d": d, "theta": theta, "x_1": float(x[0]), "x_2": float(x[1])})
    return rows


def flat_slice(d: int = 2, grid: int = 30, **kwargs) -> List[Dict[str, float]]:
    """Membership and Kay residual on the slice ``(p, p, q)`` of three-clone space."""
    if grid < 1:
        raise ValueError("grid must be positive")
    rows = []
    for i in range(grid + 1):
        for j in range(grid + 1):
            pv = np.array([i / grid, i / grid, j / grid])
            v = in_region(pv, d, **kwargs)
            rows.append(
                {
                    "p": i / grid,
                    "q": j / grid,
                    "dual_norm": v.dual_norm,
                    "inside": v.inside,
                    "kay_residual": kay_residual(pv, d),
                }
            )
    return rows
