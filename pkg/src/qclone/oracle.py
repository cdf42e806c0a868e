"""Brute-force cross-checks for the reduced formulas.

The hull oracle decides membership from sampled optimal cloners alone, without
touching the dual norm. The region is downward closed (extra noise on a clone
only lowers its quality), so membership means: some convex combination of
vertices dominates ``p`` entrywise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.optimize import linprog

from .cloner import build_choi, build_choi_unscaled, choi_from_map, choi_prefactor
from .qnorm import dual_q_norm, kay_residual, optimal_surface_point, q_norm, simplex_grid, surface_fidelities
from .spectral import (
    build_S,
    lambda_max_full,
    lambda_max_reduced,
    normalize_beta,
)
from .symmetric_group import (
    Permutation,
    all_permutations,
    composite_permutation,
    cycle_between,
    decompose_partial_transpose,
    enumerate_sigma_ab,
    permutation_operator,
    sym_dim,
    transposed_permutation_operator,
)
from .tensor_core import omega_projector, omega_vector, partial_trace

__all__ = [
    "HullModel",
    "build_hull_model",
    "hull_membership",
    "AgreementReport",
    "agreement_report",
    "LemmaCheck",
    "lemma_suite",
    "reduced_full_report",
]

LEMMA_TOL = 1e-10


@dataclass(frozen=True)
class HullModel:
    vertices: np.ndarray  # (M, N)
    d: int
    # support values h(u) = max_v <u, v> on fixed directions, for a quick exterior test
    directions: np.ndarray = field(init=False, repr=False)
    support: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        V = np.asarray(self.vertices, dtype=float)
        object.__setattr__(self, "vertices", V)
        N = V.shape[1] if V.ndim == 2 else 0
        U = simplex_grid(N, {1: 1, 2: 400, 3: 30}.get(N, 8)) if N else np.zeros((0, 0))
        object.__setattr__(self, "directions", U)
        object.__setattr__(self, "support", (V @ U.T).max(axis=0) if U.size else np.zeros(0))

    @property
    def N(self) -> int:
        return self.vertices.shape[1]

    def check(self) -> None:
        V = self.vertices
        if V.ndim != 2 or V.shape[0] < V.shape[1] + 1:
            raise ValueError("hull model needs at least N + 1 vertices")
        centered = V - V.mean(axis=0)
        if np.linalg.matrix_rank(centered, tol=1e-12) < V.shape[1]:
            raise ValueError("hull model vertices do not span the space affinely")


def _default_resolution(N: int, samples: int) -> int:
    # multiples of 6 keep the half and third points of every face on the lattice
    r = 6
    while math.comb(r + 6 + N - 1, N - 1) <= samples:
        r += 6
    return r


def build_hull_model(d: int, N: int, samples: int | None = None) -> HullModel:
    """Vertices: ``0``, the ``e_i`` and optimal-surface points on a beta-direction grid.

    The grid is the regular simplex lattice with at most ``samples`` points and a
    resolution divisible by 6, so the model is deterministic and includes the
    symmetric points of every face of the beta simplex. The default budget is
    2000 for two clones and 8000 from three on, where the coarser lattice would
    leave an inner gap near 1.6e-4 in dual-norm terms.
    """
    if samples is None:
        samples = 2000 if N <= 2 else 8000
    r = _default_resolution(N, samples) if N > 1 else 1
    dirs = simplex_grid(N, r)
    pts = [optimal_surface_point(normalize_beta(u, d), d) for u in dirs]
    V = np.vstack([np.zeros(N), np.eye(N), np.asarray(pts)])
    model = HullModel(np.clip(V, 0.0, 1.0), d)
    model.check()
    return model


def hull_membership(p, model: HullModel, tol: float = 1e-9) -> bool:
    """Is ``p`` dominated by a convex combination of the model's vertices?

    Feasibility of ``w >= 0, sum w = 1, V^T w >= p - tol``.
    """
    model.check()
    p = np.asarray(p, dtype=float)
    V = model.vertices
    if p.shape != (V.shape[1],):
        raise ValueError("p has the wrong length for this model")
    target = p - tol
    # exact shortcuts: a single dominating vertex, or a separating direction
    if np.any(np.all(V >= target, axis=1)):
        return True
    if np.any(model.directions @ target > model.support + 1e-12):
        return False
    M = V.shape[0]
    res = linprog(
        c=np.zeros(M),
        A_ub=-V.T,
        b_ub=-target,
        A_eq=np.ones((1, M)),
        b_eq=[1.0],
        bounds=(0, None),
        method="highs",
    )
    if res.status not in (0, 2):
        raise RuntimeError(f"hull LP failed: {res.message}")
    return res.status == 0


@dataclass
class AgreementReport:
    d: int
    N: int
    band: float
    rows: List[dict] = field(default_factory=list)

    @property
    def disagreements(self) -> List[dict]:
        return [r for r in self.rows if r["dual_inside"] != r["hull_inside"]]

    @property
    def disagreements_outside_band(self) -> List[dict]:
        return [r for r in self.disagreements if abs(r["dual_norm"] - 1) > self.band]

    @property
    def outside_with_positive_kay(self) -> List[dict]:
        # a nonnegative Kay residual puts p under a surface point, hence inside
        return [r for r in self.rows if not r["dual_inside"] and r["kay_residual"] > 1e-9]

    @property
    def flat_region_points(self) -> List[dict]:
        return [r for r in self.rows if r["dual_inside"] and r["kay_residual"] < 0]

    def summary(self) -> dict:
        return {
            "d": self.d,
            "N": self.N,
            "trials": len(self.rows),
            "inside": sum(r["dual_inside"] for r in self.rows),
            "disagreements": len(self.disagreements),
            "disagreements_outside_band": len(self.disagreements_outside_band),
            "outside_with_positive_kay": len(self.outside_with_positive_kay),
            "inside_with_negative_kay": len(self.flat_region_points),
        }


def agreement_report(
    d: int,
    N: int,
    trials: int = 500,
    seed: Optional[int] = 0,
    band: float = 1e-4,
    model: Optional[HullModel] = None,
    tol: float = 1e-6,
) -> AgreementReport:
    """Compare dual-norm and hull verdicts on uniform random ``p`` in ``[0,1]^N``."""
    rng = np.random.default_rng(seed)
    if model is None:
        model = build_hull_model(d, N)
    report = AgreementReport(d, N, band)
    for _ in range(trials):
        p = rng.random(N)
        v = dual_q_norm(p, d, tol=tol)
        report.rows.append(
            {
                "p": p,
                "dual_norm": v.dual_norm,
                "dual_inside": v.inside,
                "hull_inside": hull_membership(p, model),
                "kay_residual": kay_residual(p, d),
            }
        )
    return report


@dataclass(frozen=True)
class LemmaCheck:
    name: str
    residual: float
    passed: bool


def _random_vec(rng, n):
    return rng.standard_normal(n) + 1j * rng.standard_normal(n)


def _check(out, name, residual, tol=LEMMA_TOL):
    out.append(LemmaCheck(name, float(residual), bool(residual <= tol)))


def lemma_suite(d: int, N: int, seed: Optional[int] = 0, perturb: float = 0.0) -> List[LemmaCheck]:
    """Matrix-level verification of the structural identities behind the construction.

    ``perturb`` is added to the ``beta_1 beta_1`` coefficient of the unscaled Choi
    matrix in the Choi checks; any nonzero value should make them fail.
    """
    if N < 2:
        raise ValueError("lemma suite needs N >= 2")
    rng = np.random.default_rng(seed)
    out: List[LemmaCheck] = []
    n = N + 1
    m = d ** (N - 1)
    nontrivial = [s for s in all_permutations(n) if s(0) != 0]

    # structure: both routes to sigma_hat agree and reconstruct Pi^Γ
    worst = 0.0
    for s in nontrivial:
        if decompose_partial_transpose(s, 2, "search") != decompose_partial_transpose(s, d, "algebraic"):
            worst = np.inf
    _check(out, "struct: sigma_hat unique and reconstructs Pi^Γ", worst)

    # Sigma_ab partition
    seen = set()
    ok = True
    for a in range(1, N + 1):
        for b in range(1, N + 1):
            cls = enumerate_sigma_ab(N, a, b)
            ok &= len(cls) == math.factorial(N - 1)
            ok &= seen.isdisjoint(s.images for s in cls)
            seen.update(s.images for s in cls)
    ok &= seen == {s.images for s in nontrivial}
    _check(out, "Sigma_ab partition of sigma(0) != 0", 0.0 if ok else np.inf)

    # scalar products
    worst = 0.0
    for k in range(1, N + 1):
        for l in range(1, N + 1):
            phi, psi = _random_vec(rng, m), _random_vec(rng, m)
            lhs = np.vdot(omega_vector(d, n, 0, k, phi), omega_vector(d, n, 0, l, psi))
            if k == l:
                rhs = d * np.vdot(phi, psi)
            else:
                rhs = np.vdot(phi, permutation_operator(cycle_between(l - 1, k - 1, N - 1), d) @ psi)
            worst = max(worst, abs(lhs - rhs) / max(1.0, abs(rhs)))
    _check(out, "scalarProduct: <Omega_0k ⊗ phi | Omega_0l ⊗ psi>", worst)

    # action on Omega_0c ⊗ phi
    worst = 0.0
    for s in nontrivial:
        a, b, sh = decompose_partial_transpose(s, d, "algebraic")
        G = transposed_permutation_operator(s, d)
        for c in range(1, N + 1):
            phi = _random_vec(rng, m)
            lhs = G @ omega_vector(d, n, 0, c, phi)
            comp = permutation_operator(composite_permutation(sh, a, b, c), d)
            rhs = (d if b == c else 1) * omega_vector(d, n, 0, a, comp @ phi)
            worst = max(worst, np.abs(lhs - rhs).max() / max(1.0, np.abs(rhs).max()))
    _check(out, "permutAction: Pi^Γ on Omega_0c ⊗ phi", worst)

    # kernel: complement of span{Omega_0k ⊗ phi}
    W = np.column_stack(
        [omega_vector(d, n, 0, k, e) for k in range(1, N + 1) for e in np.eye(m)]
    )
    U, sv, _ = np.linalg.svd(W, full_matrices=True)
    rank = int((sv > 1e-10).sum())
    comp_basis = U[:, rank:]
    worst = 0.0
    if comp_basis.shape[1]:
        for _ in range(20):
            v = comp_basis @ _random_vec(rng, comp_basis.shape[1])
            v /= np.linalg.norm(v)
            for s in nontrivial:
                worst = max(worst, np.linalg.norm(transposed_permutation_operator(s, d) @ v))
    _check(out, "ImKer: Pi^Γ kills the complement of the Omega span", worst)

    # partial traces
    tr_prev = sym_dim(N - 1, d)
    worst = abs(tr_prev - N / (N + d - 1) * sym_dim(N, d))
    for a in range(1, N + 1):
        for b in range(1, N + 1):
            tot = sum(transposed_permutation_operator(s, d) for s in enumerate_sigma_ab(N, a, b))
            red = partial_trace(tot, d, [0])
            want = math.factorial(N - 1) * tr_prev * (1 if a == b else 1 / d)
            worst = max(worst, np.abs(red - want * np.eye(d)).max() / want)
    _check(out, "permuPartialTrace: Tr_{1..N} sum over Sigma_ab", worst)

    # Choi to channel, one permutation at a time and summed per (a, b)
    worst = 0.0
    pad = np.eye(m)
    for s in nontrivial:
        a, b, sh = decompose_partial_transpose(s, d, "algebraic")
        mu = Permutation.transposition(N, 0, a - 1)
        nu = Permutation((0,) + tuple(k + 1 for k in sh.images)) * Permutation.transposition(N, 0, b - 1)
        Pm, Pn = permutation_operator(mu, d), permutation_operator(nu, d)
        C = choi_from_map(lambda X: Pm @ np.kron(X, pad) @ Pn, d)
        worst = max(worst, np.abs(C - transposed_permutation_operator(s, d)).max())
    for a in range(1, N + 1):
        for b in range(1, N + 1):
            mus = [permutation_operator(x, d) for x in all_permutations(N) if x(0) == a - 1]
            nus = [permutation_operator(x, d) for x in all_permutations(N) if x(b - 1) == 0]
            T = lambda X: sum(Pm @ np.kron(X, pad) @ Pn for Pm in mus for Pn in nus)
            lhs = sum(transposed_permutation_operator(s, d) for s in enumerate_sigma_ab(N, a, b))
            worst = max(worst, np.abs(lhs - choi_from_map(T, d) / math.factorial(N - 1)).max())
    _check(out, "appchoi1: Pi^Γ is the Choi matrix of a conjugation map", worst)

    # Choi projector, positivity, trace preservation, omega action
    beta = normalize_beta(rng.random(N) + 0.1, d)
    Ct = build_choi_unscaled(beta, d)
    if perturb:
        Ct = Ct + perturb * sum(transposed_permutation_operator(s, d) for s in enumerate_sigma_ab(N, 1, 1)) / math.factorial(N - 1)
    C = float(choi_prefactor(d, N)) * Ct
    _check(out, "appchoi0: unscaled Choi is a projector", np.abs(Ct @ Ct - Ct).max())
    _check(out, "appchoi0: Choi is positive", max(0.0, -np.linalg.eigvalsh(C)[0]))
    _check(out, "appchoi0: Tr_{1..N} C = I", np.abs(partial_trace(C, d, [0]) - np.eye(d)).max())

    s_vec = (d - 1) * beta + beta.sum()
    worst_action, worst_trace = 0.0, 0.0
    inv_fact = 1.0 / math.factorial(N - 1)
    for i in range(1, N + 1):
        om = omega_projector(d, n, 0, i)
        rhs = sum(
            beta[a - 1] * s_vec[i - 1] * inv_fact * transposed_permutation_operator(s, d)
            for a in range(1, N + 1)
            for s in enumerate_sigma_ab(N, a, i)
        )
        worst_action = max(worst_action, np.abs(Ct @ om - rhs).max())
        worst_trace = max(worst_trace, abs(np.trace(C @ om).real - d * s_vec[i - 1] ** 2))
    _check(out, "appchoi2: C~ omega_0i expansion", worst_action)
    _check(out, "appchoi2: Tr[C omega_0i] = d s_i^2", worst_trace)
    return out


def reduced_full_report(d: int, N: int, trials: int = 10, seed: Optional[int] = 0) -> dict:
    """Worst gaps between reduced formulas and their full-space counterparts."""
    rng = np.random.default_rng(seed)
    gaps = {"lambda_max": 0.0, "q_norm": 0.0, "p": 0.0, "fidelity": 0.0}
    n = N + 1
    for _ in range(trials):
        x = rng.random(N)
        lam_full = lambda_max_full(build_S(x, d))
        gaps["lambda_max"] = max(gaps["lambda_max"], abs(lam_full - lambda_max_reduced(x, d)))
        q_full = (d * lam_full - x.sum()) / (d * d - 1)
        gaps["q_norm"] = max(gaps["q_norm"], abs(q_full - q_norm(x, d)))
        beta = normalize_beta(x, d)
        C = build_choi(beta, d).operator
        f_full = np.array(
            [np.trace(C @ (np.eye(d**n) + omega_projector(d, n, 0, i))).real / (d * (d + 1)) for i in range(1, N + 1)]
        )
        p_full = (d * f_full - 1) / (d - 1)
        gaps["p"] = max(gaps["p"], np.abs(p_full - optimal_surface_point(beta, d)).max())
        gaps["fidelity"] = max(gaps["fidelity"], np.abs(f_full - surface_fidelities(beta, d)).max())
    return gaps
