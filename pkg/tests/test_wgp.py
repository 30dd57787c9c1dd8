import numpy as np
import pytest

from wgpbandit.kernels import DomainGrid, KernelSpec, grid_kernel_matrix
from wgpbandit.qff import build_qff
from wgpbandit.wgp import (
    BanditHistory,
    WeightScheme,
    fit_qff_posterior,
    fit_weighted_posterior,
    posterior_scale_invariance_check,
)

from oracles import dense_discounted_posterior


def _random_history(domain, rng, t, rounds=None):
    arms = rng.integers(0, domain.size, size=t)
    rewards = rng.normal(size=t)
    rounds = tuple(range(1, t + 1)) if rounds is None else rounds
    return BanditHistory(
        domain,
        tuple(int(a) for a in arms),
        tuple(float(y) for y in rewards),
        rounds,
    )


def test_empty_history_returns_prior(bench_domain, bench_spec):
    post = fit_weighted_posterior(
        BanditHistory.empty(bench_domain), WeightScheme(), bench_spec
    )
    np.testing.assert_allclose(post.grid_means, 0.0)
    np.testing.assert_allclose(post.grid_vars, 1.0)


def test_single_observation_closed_form(bench_domain, bench_spec):
    """One observation y = 1 at a unit-variance point with lam = 1:
    mean there is k/(k+lam) = 1/2, variance 1 - 1/2 = 1/2."""
    hist = BanditHistory.empty(bench_domain).append(0, 1.0, 1)
    post = fit_weighted_posterior(hist, WeightScheme(eta=0.9, lam=1.0), bench_spec)
    assert post.grid_means[0] == pytest.approx(0.5, rel=1e-12)
    assert post.grid_vars[0] == pytest.approx(0.5, rel=1e-12)
    # across the whole interval the prior survives (k(0, 1) ~ 3.7e-6 at l=0.2)
    assert post.grid_means[99] == pytest.approx(0.0, abs=1e-5)
    assert post.grid_vars[99] == pytest.approx(1.0, abs=1e-5)


@pytest.mark.parametrize("eta", [0.9, 1.0])
def test_matches_dense_nominal_weight_oracle(bench_domain, bench_spec, eta):
    rng = np.random.default_rng(11)
    for _ in range(10):
        t = int(rng.integers(1, 31))
        hist = _random_history(bench_domain, rng, t)
        post = fit_weighted_posterior(hist, WeightScheme(eta=eta, lam=1.0), bench_spec)
        mu, var = dense_discounted_posterior(
            bench_domain.points[list(hist.arms)],
            hist.rewards,
            bench_domain.points,
            eta,
            1.0,
            0.2,
        )
        np.testing.assert_allclose(post.grid_means, mu, atol=1e-8)
        np.testing.assert_allclose(post.grid_vars, var, atol=1e-8)


def test_eta_one_is_plain_ridge_posterior(bench_domain, bench_spec):
    rng = np.random.default_rng(3)
    hist = _random_history(bench_domain, rng, 20)
    post = fit_weighted_posterior(hist, WeightScheme(eta=1.0, lam=2.0), bench_spec)
    K_grid = grid_kernel_matrix(bench_domain, bench_spec)
    idx = list(hist.arms)
    A = K_grid[np.ix_(idx, idx)] + 2.0 * np.eye(20)
    kx = K_grid[:, idx]
    np.testing.assert_allclose(
        post.grid_means, kx @ np.linalg.solve(A, np.array(hist.rewards)), atol=1e-9
    )


@pytest.mark.parametrize("c", [1.0, 37.5, 1e-3])
def test_reward_scale_invariance(bench_domain, bench_spec, c):
    rng = np.random.default_rng(7)
    hist = _random_history(bench_domain, rng, 15)
    assert posterior_scale_invariance_check(
        hist, WeightScheme(eta=0.9), bench_spec, c
    )


def test_scaled_rewards_scale_means_not_variances(bench_domain, bench_spec):
    rng = np.random.default_rng(9)
    hist = _random_history(bench_domain, rng, 12)
    scaled = BanditHistory(
        bench_domain,
        hist.arms,
        tuple(37.5 * y for y in hist.rewards),
        hist.rounds,
    )
    scheme = WeightScheme(eta=0.95)
    a = fit_weighted_posterior(hist, scheme, bench_spec)
    b = fit_weighted_posterior(scaled, scheme, bench_spec)
    np.testing.assert_allclose(b.grid_means, 37.5 * a.grid_means, rtol=1e-10)
    np.testing.assert_allclose(b.grid_vars, a.grid_vars, rtol=1e-12)


def test_vanishing_ridge_interpolates_observations(bench_domain, bench_spec):
    """As lam -> 0 with distinct noiseless observations, the posterior mean
    interpolates them and the variance there collapses."""
    arms = (5, 25, 60, 90)
    rewards = (0.3, -1.1, 0.7, 0.2)
    hist = BanditHistory(bench_domain, arms, rewards, (1, 2, 3, 4))
    post = fit_weighted_posterior(hist, WeightScheme(eta=1.0, lam=1e-6), bench_spec)
    for a, y in zip(arms, rewards):
        assert post.grid_means[a] == pytest.approx(y, abs=1e-4)
        assert post.grid_vars[a] == pytest.approx(0.0, abs=1e-5)


def test_variance_stays_within_prior_cap(bench_domain, bench_spec):
    rng = np.random.default_rng(21)
    for eta in (0.8, 0.95, 1.0):
        hist = _random_history(bench_domain, rng, 40)
        post = fit_weighted_posterior(hist, WeightScheme(eta=eta), bench_spec)
        assert post.grid_vars.min() >= 0.0
        assert post.grid_vars.max() <= 1.0 + 1e-12
        assert post.clamp_warnings == 0


def test_observing_an_arm_reduces_its_variance(bench_domain, bench_spec):
    hist = BanditHistory.empty(bench_domain)
    scheme = WeightScheme(eta=1.0)
    before = fit_weighted_posterior(hist, scheme, bench_spec).grid_vars[30]
    hist = hist.append(30, 0.5, 1)
    after = fit_weighted_posterior(hist, scheme, bench_spec).grid_vars[30]
    assert after < before


def test_ancient_rounds_are_negligible_under_heavy_discounting(
    bench_domain, bench_spec
):
    """With eta = 0.5 a 100-round history is numerically identical to its
    recent tail: relative weights below the truncation threshold cannot
    steer the fit."""
    rng = np.random.default_rng(13)
    hist = _random_history(bench_domain, rng, 100)
    tail = hist.tail(40)
    scheme = WeightScheme(eta=0.5)
    full_post = fit_weighted_posterior(hist, scheme, bench_spec)
    tail_post = fit_weighted_posterior(tail, scheme, bench_spec)
    np.testing.assert_allclose(full_post.grid_means, tail_post.grid_means, atol=1e-6)
    np.testing.assert_allclose(full_post.grid_vars, tail_post.grid_vars, atol=1e-6)


def test_point_queries_match_grid_arrays(bench_domain, bench_spec):
    rng = np.random.default_rng(17)
    hist = _random_history(bench_domain, rng, 8)
    post = fit_weighted_posterior(hist, WeightScheme(eta=0.9), bench_spec)
    for i in (0, 44, 99):
        x = bench_domain.points[i]
        assert post.mean_at(x) == pytest.approx(post.grid_means[i], rel=1e-10)
        assert post.var_at(x) == pytest.approx(post.grid_vars[i], rel=1e-10)


def test_grid_sds_are_sqrt_of_vars(bench_domain, bench_spec):
    rng = np.random.default_rng(19)
    hist = _random_history(bench_domain, rng, 6)
    post = fit_weighted_posterior(hist, WeightScheme(), bench_spec)
    np.testing.assert_allclose(post.grid_sds(), np.sqrt(post.grid_vars))


def test_qff_posterior_tracks_exact_posterior_when_map_is_tight():
    """With l = 1 and mbar = 8 the feature map's uniform error is ~2e-9, so
    the feature-space posterior must sit on top of the exact kernel one."""
    domain = DomainGrid.uniform(60)
    spec = KernelSpec.squared_exponential(1.0)
    qmap = build_qff(8, 1, 1.0)
    rng = np.random.default_rng(23)
    hist = _random_history(domain, rng, 25)
    scheme = WeightScheme(eta=0.9)
    exact = fit_weighted_posterior(hist, scheme, spec)
    approx = fit_qff_posterior(hist, scheme, qmap)
    np.testing.assert_allclose(approx.grid_means, exact.grid_means, atol=1e-6)
    np.testing.assert_allclose(approx.grid_vars, exact.grid_vars, atol=1e-6)


@pytest.mark.parametrize("eta", [0.9, 1.0])
def test_qff_primal_and_dual_forms_agree(bench_domain, eta):
    qmap = build_qff(6, 1, 0.5)
    rng = np.random.default_rng(29)
    hist = _random_history(bench_domain, rng, 30)
    scheme = WeightScheme(eta=eta)
    p = fit_qff_posterior(hist, scheme, qmap, form="primal")
    d = fit_qff_posterior(hist, scheme, qmap, form="dual")
    np.testing.assert_allclose(p.grid_means, d.grid_means, atol=1e-10)
    np.testing.assert_allclose(p.grid_vars, d.grid_vars, atol=1e-10)


def test_history_append_is_functional(bench_domain):
    h0 = BanditHistory.empty(bench_domain)
    h1 = h0.append(4, 1.0, 1)
    assert len(h0) == 0
    assert len(h1) == 1
    assert h1.arms == (4,)
    assert h1.rounds == (1,)


def test_history_tail(bench_domain):
    h = BanditHistory(bench_domain, (1, 2, 3), (0.1, 0.2, 0.3), (1, 2, 3))
    t = h.tail(2)
    assert t.arms == (2, 3)
    assert t.rounds == (2, 3)
    assert h.tail(10).arms == (1, 2, 3)
