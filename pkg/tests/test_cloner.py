import math
import warnings

import numpy as np
import pytest

from qclone.cloner import (
    ChoiMatrix,
    CloningChannel,
    apply_channel,
    apply_choi,
    average_fidelity,
    build_choi,
    build_choi_unscaled,
    build_p_beta,
    choi_from_map,
    choi_prefactor,
    covariance_check,
    fit_marginals,
    haar_pure_states,
    marginal,
    monte_carlo_fidelity,
    moment_deviation,
    replacement_choi,
    werner_choi,
)
from qclone.qnorm import optimal_surface_point
from qclone.spectral import build_R_alpha, lambda_max_full, normalize_beta, perron_beta
from qclone.symmetric_group import symmetric_projector
from qclone.tensor_core import omega_projector


def sym_beta(N, d):
    return np.full(N, 1 / math.sqrt(N * (N + d - 1)))


def test_prefactor_and_trace():
    assert choi_prefactor(2, 2) == 1
    C = build_choi(sym_beta(2, 2), 2)
    assert np.isclose(np.trace(C.operator).real, 2)


def test_rejects_unnormalized():
    with pytest.raises(ValueError):
        build_choi([1, 1], 2)
    with pytest.raises(ValueError):
        CloningChannel(np.array([1.0, 1.0]), 2)


@pytest.mark.parametrize("d,N", [(2, 2), (2, 3), (3, 2), (3, 3)])
def test_choi_invariants(d, N):
    rng = np.random.default_rng(0)
    for _ in range(10):
        b = normalize_beta(rng.random(N), d)
        Ct = build_choi_unscaled(b, d)
        assert np.abs(Ct @ Ct - Ct).max() <= 1e-9
        C = build_choi(b, d)
        assert C.min_eigenvalue() >= -1e-10
        assert C.tp_residual() <= 1e-10
        assert C.hermiticity_residual() <= 1e-12


def test_unnormalized_not_projector():
    b = np.array([0.3, 0.2])
    Ct = build_choi_unscaled(b, 2)
    assert np.abs(Ct @ Ct - Ct).max() > 1e-3


def test_trace_against_omega():
    rng = np.random.default_rng(1)
    d, N = 2, 3
    for _ in range(5):
        b = normalize_beta(rng.random(N), d)
        C = build_choi(b, d).operator
        s = (d - 1) * b + b.sum()
        for i in range(1, N + 1):
            assert np.isclose(np.trace(C @ omega_projector(d, N + 1, 0, i)).real, d * s[i - 1] ** 2)


def test_p_beta():
    d, N = 2, 3
    assert np.allclose(build_p_beta(np.full(N, 0.3), d), 0.3 * symmetric_projector(N, d))
    assert np.allclose(build_p_beta([0.7], 3), 0.7 * np.eye(3))
    P = build_p_beta([0.1, 0.5, 0.2], 2)
    assert np.allclose(P, P.conj())


@pytest.mark.parametrize("d,N", [(2, 1), (2, 2), (2, 3), (3, 2)])
def test_two_construction_paths_agree(d, N):
    rng = np.random.default_rng(2)
    b = normalize_beta(rng.random(N), d)
    ch = CloningChannel(b, d)
    viaP = choi_from_map(ch.apply_linear, d)
    assert np.abs(viaP - ch.choi.operator).max() <= 1e-10


@pytest.mark.parametrize("d,N", [(2, 2), (2, 3), (3, 2)])
def test_werner(d, N):
    C = build_choi(sym_beta(N, d), d).operator
    assert np.abs(C - werner_choi(d, N)).max() <= 1e-10


def test_identity_channel_n1():
    ch = CloningChannel(np.array([1 / math.sqrt(2)]), 2)
    assert np.allclose(ch.choi.operator, omega_projector(2, 2, 0, 1))
    rho = np.array([[0.7, 0.2], [0.2, 0.3]])
    assert np.allclose(apply_channel(ch, rho), rho)


def test_apply_channel_examples():
    d, N = 2, 2
    ch = CloningChannel(sym_beta(N, d), d)
    out = apply_channel(ch, np.eye(d) / d)
    for i in (1, 2):
        assert np.allclose(marginal(out, d, i), np.eye(d) / d)
    for psi in haar_pure_states(d, 100, 3):
        rho = np.outer(psi, psi.conj())
        out = apply_channel(ch, rho)
        assert abs(np.trace(out) - 1) <= 1e-10
        assert np.linalg.eigvalsh(out)[0] >= -1e-10
        want = (2 / 3) * rho + (1 / 3) * np.eye(2) / 2
        for i in (1, 2):
            assert np.allclose(marginal(out, d, i), want, atol=1e-12)
        assert np.allclose(out, apply_choi(ch.choi, rho), atol=1e-12)


def test_apply_channel_rejects_bad_states():
    ch = CloningChannel(sym_beta(2, 2), 2)
    with pytest.raises(ValueError):
        apply_channel(ch, np.eye(2))
    with pytest.raises(ValueError):
        apply_channel(ch, np.array([[1.5, 0], [0, -0.5]]))


def test_fit_marginals():
    fit = fit_marginals(CloningChannel(sym_beta(3, 2), 2), 10, 0)
    assert np.allclose(fit.p, 5 / 9, atol=1e-10)
    assert fit.residual <= 1e-10
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        ch = CloningChannel.from_alpha([1, 1, 0], 2)
    fit = fit_marginals(ch, 10, 1)
    assert np.allclose(fit.p, [2 / 3, 2 / 3, 1 / 9], atol=1e-9)
    rng = np.random.default_rng(4)
    for _ in range(50):
        N = int(rng.integers(1, 4))
        b = normalize_beta(rng.random(N), 2)
        fit = fit_marginals(CloningChannel(b, 2), 3, int(rng.integers(1000)))
        assert fit.residual <= 1e-10
        assert np.abs(fit.p - optimal_surface_point(b, 2)).max() <= 1e-9


def test_average_fidelity():
    C = build_choi(sym_beta(2, 2), 2)
    assert np.isclose(average_fidelity(C, [0.5, 0.5]), 5 / 6)
    rng = np.random.default_rng(5)
    for _ in range(10):
        a = rng.random(3)
        C = build_choi(perron_beta(a, 2), 2)
        bound = lambda_max_full(build_R_alpha(a, 2)) / 3
        assert abs(average_fidelity(C, a) - bound) <= 1e-9
        # any other direction stays below its own bound
        a2 = rng.random(3)
        assert average_fidelity(C, a2) <= lambda_max_full(build_R_alpha(a2, 2)) / 3 + 1e-10


def test_monte_carlo_fidelity():
    rng = np.random.default_rng(6)
    b = normalize_beta(rng.random(3), 2)
    C = build_choi(b, 2)
    a = np.array([0.2, 0.5, 0.3])
    mean, se = monte_carlo_fidelity(C, a, 10000, 7)
    assert abs(mean - average_fidelity(C, a)) <= 3 * se + 1e-12
    # a non-covariant map has state-dependent fidelity, so the sampler is really sampling
    R = ChoiMatrix(replacement_choi(2, 2), 2, 2)
    mean, se = monte_carlo_fidelity(R, [0.5, 0.5], 10000, 8)
    assert se > 1e-3
    assert abs(mean - average_fidelity(R, [0.5, 0.5])) <= 3 * se


def test_moment_identity_converges():
    # error shrinks roughly like 1/sqrt(samples)
    e1 = moment_deviation(2, 1000, 0)
    e2 = moment_deviation(2, 100000, 0)
    assert e2 < e1 / 3
    assert e2 < 5e-3


def test_covariance():
    C = build_choi(sym_beta(2, 2), 2)
    assert covariance_check(C, 20, 0) <= 1e-10
    assert covariance_check(replacement_choi(2, 2), 20, 0, d=2) > 1e-3
    assert covariance_check(omega_projector(2, 2, 0, 1), 20, 0, d=2) <= 1e-10
    assert covariance_check(omega_projector(3, 2, 0, 1), 20, 0, d=3) <= 1e-10
