import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from spectraforge.graph import generate_sbm, scope_mask
from spectraforge.spco import SpcoConfig, iterate_spco, kernel_exponent, m_matrix, marginals
from spectraforge.transport import (
    birkhoff_contraction,
    hilbert_metric,
    log_contraction_gap,
    projective_diameter,
    sinkhorn_scale,
    sinkhorn_scale_log,
    theorem5_bound_report,
)


def consistent_marginals(rng, n):
    a = rng.uniform(0.2, 2.0, n)
    b = rng.uniform(0.2, 2.0, n)
    return a, b * a.sum() / b.sum()


# ----------------------------------------------------------------- Sinkhorn


def test_separable_kernel_one_step():
    rng = np.random.default_rng(0)
    a, b = consistent_marginals(rng, 12)
    res = sinkhorn_scale(np.outer(a, b) / b.sum(), a, b, iters=1)
    assert res.row_residual <= 1e-12 and res.col_residual <= 1e-12
    assert res.iterations == 1


def test_feasible_identity():
    res = sinkhorn_scale(np.eye(2), np.ones(2), np.ones(2), iters=1)
    np.testing.assert_allclose(res.scaled, np.eye(2), atol=1e-15)
    assert res.row_residual == 0 and res.col_residual == 0


def test_random_kernel_thousand_sweeps():
    rng = np.random.default_rng(50)
    K = rng.uniform(0.01, 1.0, (50, 50))
    u = np.full(50, 1 / 50)
    res = sinkhorn_scale(K, u, u, iters=1000)
    assert res.row_residual <= 1e-8 and res.col_residual <= 1e-8
    # direct marginal sums as the oracle
    assert np.max(np.abs(res.scaled.sum(axis=1) - u)) <= 1e-8


def test_converge_mode_stops_early():
    rng = np.random.default_rng(1)
    K = rng.uniform(0.1, 1.0, (20, 20))
    a, b = consistent_marginals(rng, 20)
    res = sinkhorn_scale(K, a, b, mode="converge", tol=1e-10)
    assert res.row_residual <= 1e-10
    assert res.iterations < 1000


def test_literal_first_sweep_by_hand():
    K = np.array([[1.0, 2.0], [3.0, 1.0]])
    a = np.array([1.0, 2.0])
    b = np.array([1.5, 1.5])
    u0 = np.array([0.5, 0.5])
    u1 = 1.0 / ((K / a[:, None]) @ (b / (K.T @ u0)))
    v1 = b / (K.T @ u1)
    res = sinkhorn_scale(K, a, b, iters=1)
    np.testing.assert_allclose(res.u, u1, rtol=1e-14)
    np.testing.assert_allclose(res.v, v1, rtol=1e-14)
    np.testing.assert_allclose(res.scaled, u1[:, None] * K * v1[None, :], rtol=1e-14)


@given(st.integers(2, 15), st.floats(0.01, 100.0), st.integers(1, 6), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_scaling_invariance(n, c, iters, seed):
    rng = np.random.default_rng(seed)
    K = rng.uniform(0.05, 1.0, (n, n))
    a, b = consistent_marginals(rng, n)
    p1 = sinkhorn_scale(K, a, b, iters).scaled
    p2 = sinkhorn_scale(c * K, a, b, iters).scaled
    np.testing.assert_allclose(p1, p2, atol=1e-10, rtol=1e-10)


@given(st.integers(2, 20), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_residuals_nonincreasing(n, seed):
    rng = np.random.default_rng(seed)
    K = rng.uniform(0.001, 1.0, (n, n)) ** 3
    a, b = consistent_marginals(rng, n)
    res = [sinkhorn_scale(K, a, b, iters=k) for k in (1, 2, 4, 8, 16)]
    worst = [max(r.row_residual, r.col_residual) for r in res]
    assert all(x >= y - 1e-12 for x, y in zip(worst, worst[1:]))


@given(st.integers(2, 12), st.integers(1, 5), st.integers(0, 10_000))
@settings(max_examples=60, deadline=None)
def test_log_path_matches_direct_path(n, iters, seed):
    rng = np.random.default_rng(seed)
    logK = rng.uniform(-5, 5, (n, n))
    a, b = consistent_marginals(rng, n)
    direct = sinkhorn_scale(np.exp(logK), a, b, iters)
    logd = sinkhorn_scale_log(logK, a, b, iters)
    np.testing.assert_allclose(logd.scaled, direct.scaled, atol=1e-10, rtol=1e-10)
    np.testing.assert_allclose(logd.log_u, np.log(direct.u), atol=1e-10)


def test_log_path_survives_huge_exponents():
    rng = np.random.default_rng(2)
    noise = rng.uniform(-3, 3, (8, 8))
    a, b = consistent_marginals(rng, 8)
    res = sinkhorn_scale_log(1500.0 + noise, a, b, mode="converge", tol=1e-9)
    assert np.all(np.isfinite(res.scaled))
    assert res.row_residual <= 1e-9
    # the shift is absorbed by the scalings, so the plan matches the unshifted kernel
    ref = sinkhorn_scale(np.exp(noise), a, b, mode="converge", tol=1e-9, max_iters=res.iterations)
    np.testing.assert_allclose(res.scaled, ref.scaled, atol=1e-9)
    with np.errstate(over="ignore"), pytest.raises(ValueError):
        sinkhorn_scale(np.exp(np.minimum(1500.0 + noise, 710.0)), a, b, 3)


def test_masked_zeros_stay_zero():
    rng = np.random.default_rng(3)
    K = rng.uniform(0.1, 1.0, (6, 6))
    K[0, 3] = K[4, 1] = 0.0
    a, b = consistent_marginals(rng, 6)
    res = sinkhorn_scale(K, a, b, iters=5)
    assert res.scaled[0, 3] == 0.0 and res.scaled[4, 1] == 0.0
    logK = np.log(np.where(K > 0, K, 1.0))
    logK[K == 0] = -np.inf
    res_log = sinkhorn_scale_log(logK, a, b, iters=5)
    assert res_log.scaled[0, 3] == 0.0 and res_log.scaled[4, 1] == 0.0


def test_kernel_and_marginal_errors():
    a = np.ones(3)
    with pytest.raises(ValueError):
        sinkhorn_scale(-np.ones((3, 3)), a, a)
    with pytest.raises(ValueError):
        sinkhorn_scale(np.ones((3, 3)), a, 2 * a)
    with pytest.raises(ValueError):
        sinkhorn_scale(np.ones((3, 3)), np.array([1.0, 0.0, 2.0]), a)
    K = np.ones((3, 3))
    K[1] = 0
    with pytest.raises(ValueError, match="row 1"):
        sinkhorn_scale(K, a, a)
    with pytest.raises(ValueError):
        sinkhorn_scale(np.ones((3, 3)), a, a, iters=0)


# ----------------------------------------------------------- Hilbert metric


def test_hilbert_basics():
    x = np.array([0.3, 1.2, 4.0])
    assert hilbert_metric(x, x) == 0.0
    assert hilbert_metric(x, 3 * x) == pytest.approx(0.0, abs=1e-15)
    # exhaustive max over the four index pairs gives log 4
    pairs = [math.log(p[i] * q[k] / (q[i] * p[k])) for p, q in [((1, 2), (2, 1))]
             for i in range(2) for k in range(2)]
    assert max(pairs) == pytest.approx(math.log(4))
    assert hilbert_metric([1, 2], [2, 1]) == pytest.approx(math.log(4), abs=1e-15)
    with pytest.raises(ValueError):
        hilbert_metric([1, 0], [1, 1])


pos_vec = arrays(np.float64, 5, elements=st.floats(1e-3, 1e3))


@given(pos_vec, pos_vec, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
@settings(max_examples=80, deadline=None)
def test_hilbert_projective(x, y, s, t):
    assert hilbert_metric(s * x, t * y) == pytest.approx(hilbert_metric(x, y), abs=1e-9)
    assert hilbert_metric(x, y) >= 0


def test_rank_one_contraction_is_zero():
    assert birkhoff_contraction(np.ones((4, 4))) == 0.0
    rng = np.random.default_rng(0)
    u, v = rng.uniform(0.1, 2, 5), rng.uniform(0.1, 2, 5)
    assert birkhoff_contraction(np.outer(u, v)) == pytest.approx(0.0, abs=1e-7)


def test_diameter_matches_quartic_form():
    rng = np.random.default_rng(4)
    K = rng.uniform(0.1, 1.0, (6, 6))
    brute = max(math.log(K[i, k] * K[j, l] / (K[j, k] * K[i, l]))
                for i in range(6) for j in range(6) for k in range(6) for l in range(6))
    assert projective_diameter(np.log(K)) == pytest.approx(brute, abs=1e-12)


def test_sampled_contraction():
    rng = np.random.default_rng(8)
    K = rng.uniform(0.05, 1.0, (8, 8))
    kappa = birkhoff_contraction(K)
    assert 0 < kappa < 1
    for _ in range(100):
        y, y2 = rng.uniform(0.01, 5, (2, 8))
        assert hilbert_metric(K @ y, K @ y2) <= kappa * hilbert_metric(y, y2) + 1e-10


def test_contraction_gap_stable_when_ratio_rounds_to_one():
    L = np.array([[200.0, 0.0], [0.0, 200.0]])
    assert birkhoff_contraction(L, log_kernel=True) == 1.0
    gap = log_contraction_gap(L, log_kernel=True)
    # diameter 400, x = 100: log(1 - tanh x) = log 2 - log(1 + e^{2x}) ~ log 2 - 200
    assert gap == pytest.approx(math.log(2) - 200, abs=1e-9)


# ------------------------------------------------------ plan-update bound


def _epoch_reports(eps=0.1, seed=0):
    g = generate_sbm([8, 8], 0.5, 0.1, seed=seed)
    cfg = SpcoConfig(eps=eps)
    a, b = marginals(g.adjacency(), "degree")
    support = scope_mask(g, 1)
    out = []
    for st_ in iterate_spco(g, cfg):
        p = st_.plan
        for sign, prev, new in (("plus", p.prev_plus, p.delta_plus), ("minus", p.prev_minus, p.delta_minus)):
            log_k = kernel_exponent(st_.cost, prev, eps, sign)
            out.append(theorem5_bound_report(log_k, a, b, st_.cost.c, eps, m_matrix(st_.cost, prev),
                                             prev, new, support, log_kernel=True))
    return out


def test_bound_holds_over_spco_epochs():
    reps = _epoch_reports()
    assert len(reps) == 20
    assert all(r.holds for r in reps)
    assert sum(r.checked for r in reps) > 0


def test_bound_plug_in_and_alpha_scaling():
    rng = np.random.default_rng(1)
    n = 5
    C = rng.normal(size=(n, n))
    C = C + C.T
    C[0, 1] = C[1, 0] = 0.0
    S = np.ones((n, n)) - np.eye(n)
    K = rng.uniform(0.5, 1.5, (n, n))
    a = np.ones(n)
    prev = rng.uniform(0.1, 1, (n, n))
    new = rng.uniform(0.1, 1, (n, n))
    m = rng.normal(size=(n, n))
    r1 = theorem5_bound_report(K, a, a, C, 0.1, m, prev, new, S)
    r2 = theorem5_bound_report(K, a, a, C, 0.2, m, prev, new, S)
    assert r1.skipped == 2
    assert np.isnan(r1.alpha_grid[0, 1])
    usable = (S > 0) & (C != 0)
    alpha = 0.1 / (2 * C[usable] ** 2)
    np.testing.assert_allclose(r1.lhs_entries, alpha * np.abs(new[usable] - prev[usable] / alpha), rtol=1e-12)
    np.testing.assert_allclose(r2.alpha_grid[usable], 2 * r1.alpha_grid[usable], rtol=1e-14)
