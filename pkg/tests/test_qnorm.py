import math
import warnings

import numpy as np
import pytest

from qclone.qnorm import (
    boundary_export,
    dual_q_norm,
    ellipse_curve,
    ellipse_equation,
    extension_check,
    fidelities_to_beta,
    flat_slice,
    in_region,
    kay_residual,
    optimal_surface_point,
    q_norm,
    q_norm_closed_n2,
    qnorm_unit_sphere,
    simplex_grid,
    surface_fidelities,
    witness_direction,
)
from qclone.spectral import normalize_beta, perron_beta
from qclone.tensor_core import DimensionError

KAY_FLAT = 2 + (2 * math.sqrt(3) + 1) ** 2 / 4 - 7


def test_qnorm_examples():
    for d in (2, 3, 7):
        assert np.isclose(q_norm([-0.4], d), 0.4)
    assert np.isclose(q_norm([1, 1], 2), 4 / 3)
    for d in (2, 3):
        for N in (1, 2, 3, 5):
            assert np.isclose(q_norm(np.ones(N), d), (N + d) / (d + 1))
    assert q_norm([0, 0, 0], 2) == 0


def test_closed_form_n2():
    assert np.isclose(q_norm_closed_n2(1, 0, 2), 1)
    assert np.isclose(q_norm_closed_n2(1, 1, 2), 4 / 3)
    rng = np.random.default_rng(0)
    for d in (2, 3, 4):
        for x in rng.standard_normal((200, 2)):
            assert abs(q_norm_closed_n2(*x, d) - q_norm(x, d)) <= 1e-12


def test_norm_axioms():
    rng = np.random.default_rng(1)
    for _ in range(300):
        d = int(rng.integers(2, 4))
        N = int(rng.integers(1, 5))
        x, y = rng.standard_normal(N), rng.standard_normal(N)
        c = rng.standard_normal()
        assert abs(q_norm(c * x, d) - abs(c) * q_norm(x, d)) <= 1e-9
        assert q_norm(x + y, d) <= q_norm(x, d) + q_norm(y, d) + 1e-9
        assert q_norm(x, d) > 0
        t = rng.random(N)
        assert q_norm(t * x, d) <= q_norm(x, d) + 1e-9


def test_simplex_grid():
    g = simplex_grid(3, 4)
    assert g.shape == (15, 3)
    assert np.allclose(g.sum(axis=1), 1)
    assert len({tuple(r) for r in g}) == 15


def test_dual_examples():
    assert np.isclose(dual_q_norm([0.3], 2).dual_norm, 0.3)
    assert abs(dual_q_norm([2 / 3, 2 / 3], 2).dual_norm - 1) <= 1e-6
    v = dual_q_norm([2 / 3, 2 / 3, 0], 2)
    assert abs(v.dual_norm - 1) <= 1e-6
    assert np.allclose(v.witness_alpha, [0.5, 0.5, 0], atol=1e-6)


def test_dual_witness_duality():
    rng = np.random.default_rng(2)
    for d, N in [(2, 2), (2, 3), (3, 3), (2, 4)]:
        for _ in range(5):
            a = rng.random(N) + 0.05
            p = optimal_surface_point(perron_beta(a, d), d)
            v = dual_q_norm(p, d)
            assert abs(v.dual_norm - 1) <= 1e-9
            assert abs(p @ v.witness_alpha - q_norm(v.witness_alpha, d)) <= 1e-9


def test_dual_symmetric_in_sign():
    assert np.isclose(dual_q_norm([-0.5, 0.2], 2).dual_norm, dual_q_norm([0.5, 0.2], 2).dual_norm)


def test_dual_guard():
    with pytest.raises(DimensionError):
        dual_q_norm(np.full(7, 0.1), 2)


def test_in_region_examples():
    v = in_region([0, 0, 0], 2)
    assert v.inside and v.dual_norm == 0
    for N in (2, 3):
        assert not in_region(np.ones(N), 2).inside
    v = in_region([1, 0, 0], 2)
    assert v.inside and abs(v.dual_norm - 1) <= 1e-9
    with pytest.raises(ValueError):
        in_region([1.2, 0], 2)


def test_region_convexity():
    rng = np.random.default_rng(3)
    inside = []
    while len(inside) < 20:
        p = rng.random(3)
        if in_region(p, 2).inside:
            inside.append(p)
    for p, q in zip(inside[::2], inside[1::2]):
        assert in_region((p + q) / 2, 2).inside


def test_kay_examples():
    assert abs(kay_residual([2 / 3, 2 / 3], 2)) <= 1e-12
    assert abs(kay_residual([2 / 3, 2 / 3, 1 / 9], 2)) <= 1e-12
    assert np.isclose(kay_residual([2 / 3, 2 / 3, 0], 2), KAY_FLAT)
    assert KAY_FLAT < 0


def test_surface_points():
    for d, N, popt in [(2, 2, 2 / 3), (2, 3, 5 / 9), (3, 2, 5 / 8)]:
        b = np.full(N, 1 / math.sqrt(N * (N + d - 1)))
        assert np.allclose(optimal_surface_point(b, d), popt)
        assert np.isclose(popt, (d + N) / (N * (d + 1)))
    rng = np.random.default_rng(4)
    for _ in range(200):
        d = int(rng.integers(2, 4))
        N = int(rng.integers(1, 5))
        b = normalize_beta(rng.random(N), d)
        assert abs(kay_residual(optimal_surface_point(b, d), d)) <= 1e-9
    with pytest.raises(ValueError):
        optimal_surface_point([1, 1], 2)


def test_fidelity_inversion():
    assert np.allclose(fidelities_to_beta([5 / 6, 5 / 6], 2), 1 / math.sqrt(6))
    rng = np.random.default_rng(5)
    for _ in range(100):
        d = int(rng.integers(2, 4))
        N = int(rng.integers(1, 5))
        b = normalize_beta(rng.random(N), d)
        f = surface_fidelities(b, d)
        assert np.abs(fidelities_to_beta(f, d, N) - b).max() <= 1e-10
    with pytest.raises(ValueError):
        fidelities_to_beta([1 / 3, 1 / 3], 2)
    with pytest.raises(ValueError):
        fidelities_to_beta([0.2, 0.5], 2)


def test_witness_direction():
    rng = np.random.default_rng(6)
    for _ in range(20):
        a = rng.random(3) + 0.1
        a /= a.sum()
        assert np.allclose(witness_direction(perron_beta(a, 3), 3), a)


def test_upper_bound_reformulation():
    # lambda_max(R)/(d+1) equals ||a||_1/d + (1 - 1/d)||a||_Q
    rng = np.random.default_rng(7)
    from qclone.spectral import lambda_max_reduced

    for _ in range(50):
        d = int(rng.integers(2, 5))
        a = rng.random(3)
        lhs = (a.sum() + lambda_max_reduced(a, d)) / (d + 1)
        rhs = a.sum() / d + (1 - 1 / d) * q_norm(a, d)
        assert abs(lhs - rhs) <= 1e-12


def test_boundary_export():
    rows = boundary_export(2, 2, grid=10)
    assert len(rows) == 11
    assert any(np.isclose(r["p_1"], 2 / 3) and np.isclose(r["p_2"], 2 / 3) for r in rows)
    for r in rows:
        assert r["dual_norm"] <= 1 + 1e-6
        assert abs(r["kay_residual"]) <= 1e-9
        assert r["flag"] == "ok"
    rows3 = boundary_export(2, 3, grid=6)
    assert len(rows3) == 28
    assert all(r["dual_norm"] <= 1 + 1e-6 and abs(r["kay_residual"]) <= 1e-9 for r in rows3)
    assert boundary_export(2, 3, grid=6, with_dual=False) == [
        {k: v for k, v in r.items() if k != "dual_norm"} for r in rows3
    ]


def test_extension():
    r = extension_check([1, 0], 2)
    assert abs(r["residual"]) <= 1e-12 and r["is_basis_vector"] and r["on_surface"]
    r = extension_check([2 / 3, 2 / 3], 2)
    assert np.isclose(r["residual"], KAY_FLAT) and not r["on_surface"]
    r = extension_check([0, 1, 0], 3)
    assert abs(r["residual"]) <= 1e-12
    with pytest.raises(ValueError):
        extension_check([0.5, 0.5], 2)


# semi-axes of the two-clone curve read off the published figure: center (c, c),
# axis A along (1,1)/sqrt2, axis B along (1,-1)/sqrt2
ELLIPSES = {
    2: (1 / 3, math.sqrt(2) / 3, math.sqrt(2 / 3)),
    3: (7 / 16, 3 / (8 * math.sqrt(2)), 3 / 4),
    4: (7 / 15, 2 * math.sqrt(2) / 15, 2 * math.sqrt(2 / 15)),
}


@pytest.mark.parametrize("d", [2, 3, 4])
def test_ellipse(d):
    c, A, B = ELLIPSES[d]
    rows = ellipse_curve(d, 181)
    for r in rows:
        u = (r["p_1"] + r["p_2"] - 2 * c) / math.sqrt(2)
        v = (r["p_1"] - r["p_2"]) / math.sqrt(2)
        assert abs((u / A) ** 2 + (v / B) ** 2 - 1) <= 1e-12
        assert abs(ellipse_equation(r["p_1"], r["p_2"], d)) <= 1e-12
        if r["optimal"]:
            assert abs(kay_residual([r["p_1"], r["p_2"]], d)) <= 1e-9


def test_ellipse_d2_landmarks():
    c, A, B = ELLIPSES[2]
    # passes through (1, 0) and peaks on the diagonal at (2/3, 2/3)
    u, v = (1 - 2 * c) / math.sqrt(2), 1 / math.sqrt(2)
    assert np.isclose((u / A) ** 2 + (v / B) ** 2, 1)
    assert np.isclose(c + A / math.sqrt(2), 2 / 3)


def test_qnorm_sphere():
    rows = qnorm_unit_sphere((2, 3), 11)
    assert len(rows) == 22
    for r in rows:
        assert np.isclose(q_norm([r["x_1"], r["x_2"]], r["d"]), 1)


def test_flat_slice():
    rows = flat_slice(2, grid=3)
    row = next(r for r in rows if np.isclose(r["p"], 2 / 3) and r["q"] == 0)
    assert abs(row["dual_norm"] - 1) <= 1e-6 and row["inside"]
    assert row["kay_residual"] < 0
