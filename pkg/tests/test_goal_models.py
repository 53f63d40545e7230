import math

import mpmath
import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from btdfoot import _kernels
from btdfoot.goal_models import (
    BIVARIATE,
    DIAG_INFLATED,
    DOUBLE,
    MODEL_KINDS,
    DimensionError,
    DomainError,
    GoalModelHyperpriors,
    GoalModelParameters,
    GoalPosterior,
    MatchFeature,
    bivpois_pmf,
    dibp_pmf,
    diag_pmf,
    dynamic_prior_log_density,
    fit_goal_model,
    fixed_effect_log_prior,
    goal_log_likelihood,
    goal_log_posterior,
    match_rates,
    with_scales,
)
from btdfoot.inference import McmcConfig
from btdfoot.synthetic import simulate_goals

mpmath.mp.dps = 40


def bivpois_oracle(x, y, l1, l2, l3):
    l1, l2, l3 = mpmath.mpf(l1), mpmath.mpf(l2), mpmath.mpf(l3)
    s = sum(math.comb(x, k) * math.comb(y, k) * math.factorial(k) * (l3 / (l1 * l2)) ** k for k in range(min(x, y) + 1))
    return mpmath.exp(-(l1 + l2 + l3)) * l1**x / math.factorial(x) * l2**y / math.factorial(y) * s


def zero_params(n_teams=2, n_seasons=1, **kw):
    return GoalModelParameters(0.0, np.zeros((n_teams, n_seasons)), np.zeros((n_teams, n_seasons)), **kw)


def random_params(rng, n_teams, n_seasons, kind=DIAG_INFLATED):
    extra = {}
    if kind in (BIVARIATE, DIAG_INFLATED):
        extra["beta0"] = float(rng.normal(-1.5, 0.3))
    if kind == DIAG_INFLATED:
        extra.update(p=float(rng.uniform(0.05, 0.3)), xi=float(rng.uniform(0.5, 2)))
    return GoalModelParameters.centered(
        float(rng.normal(0.2, 0.1)),
        rng.normal(0, 0.3, (n_teams, n_seasons)),
        rng.normal(0, 0.3, (n_teams, n_seasons)),
        phi=float(rng.normal(0.5, 0.2)),
        **extra,
    )


def random_data(rng, n_teams, n_seasons, n):
    feats = []
    for _ in range(n):
        h = int(rng.integers(n_teams))
        a = int((h + rng.integers(1, n_teams)) % n_teams)
        feats.append(MatchFeature(h, a, int(rng.integers(1, n_seasons + 1)), float(rng.normal())))
    return feats, rng.poisson(1.2, (n, 2))


def test_match_rates_examples():
    assert match_rates(zero_params(), MatchFeature(0, 1, 1, 0.0)) == (1.0, 1.0)
    p = GoalModelParameters(math.log(1.4), np.zeros((2, 1)), np.zeros((2, 1)))
    assert match_rates(p, MatchFeature(0, 1, 1)) == pytest.approx((1.4, 1.4), abs=1e-15)
    p = GoalModelParameters(0.0, np.zeros((2, 1)), np.zeros((2, 1)), phi=0.6)
    assert match_rates(p, MatchFeature(0, 1, 1, 1.0)) == pytest.approx((1.349859, 0.740818), abs=1e-6)
    with pytest.raises(IndexError):
        match_rates(zero_params(), MatchFeature(0, 2, 1))
    with pytest.raises(IndexError):
        match_rates(zero_params(), MatchFeature(0, 1, 2))


@given(st.integers(0, 1000), st.floats(-3, 3))
def test_label_swap_symmetry(seed, w):
    params = random_params(np.random.default_rng(seed), 4, 2)
    l1, l2 = match_rates(params, MatchFeature(1, 3, 2, w))
    assert match_rates(params, MatchFeature(3, 1, 2, -w)) == pytest.approx((l2, l1), rel=1e-14)


def test_bivariate_examples():
    assert bivpois_pmf(0, 0, 1.0, 1.0, 0.5) == pytest.approx(math.exp(-2.5), abs=1e-15)
    assert bivpois_pmf(0, 0, 1.0, 1.0, 0.5) == pytest.approx(0.082085, abs=1e-6)
    for x, y in [(0, 0), (3, 1), (2, 5), (7, 7)]:
        assert bivpois_pmf(x, y, 1.2, 0.8, 0.3) == pytest.approx(float(bivpois_oracle(x, y, 1.2, 0.8, 0.3)), rel=1e-12)
    with pytest.raises(DomainError):
        bivpois_pmf(1, 1, -1.0, 1.0, 0.1)
    with pytest.raises(DomainError):
        bivpois_pmf(-1, 1, 1.0, 1.0, 0.1)


@given(st.integers(0, 25), st.integers(0, 25), st.floats(0.05, 6), st.floats(0.05, 6))
def test_bivariate_reduces_to_product(x, y, l1, l2):
    log_bp = np.log(bivpois_pmf(x, y, l1, l2, 0.0))
    log_prod = float(mpmath.log(mpmath.exp(-l1) * mpmath.mpf(l1) ** x / math.factorial(x) * mpmath.exp(-l2) * mpmath.mpf(l2) ** y / math.factorial(y)))
    assert log_bp == pytest.approx(log_prod, abs=1e-12)


def test_grid_normalization():
    g = np.arange(31)
    x, y = np.meshgrid(g, g, indexing="ij")
    assert abs(math.fsum(bivpois_pmf(x, y, 1.2, 0.8, 0.3).ravel()) - 1.0) < 1e-10
    assert abs(math.fsum(dibp_pmf(x, y, 1.2, 0.8, 0.3, 0.2, 1.0).ravel()) - 1.0) < 1e-10


@given(st.floats(0.1, 3), st.floats(0.1, 3), st.floats(0.0, 1.5), st.floats(0, 1), st.floats(0.1, 4))
def test_inflated_mass_sums_to_one(l1, l2, l3, p, xi):
    g = np.arange(51)
    x, y = np.meshgrid(g, g, indexing="ij")
    assert abs(math.fsum(dibp_pmf(x, y, l1, l2, l3, p, xi).ravel()) - 1.0) < 1e-9


def test_diag_examples():
    assert diag_pmf(0, 1.0) == pytest.approx(math.exp(-1), abs=1e-15)
    assert diag_pmf(3, 2.0) == pytest.approx(8 * math.exp(-2) / 6, abs=1e-15)
    assert diag_pmf(3, 2.0) == pytest.approx(0.180447, abs=1e-6)
    for xi in (0.5, 1.0, 2.0):
        assert abs(math.fsum(diag_pmf(np.arange(51), xi)) - 1.0) < 1e-12
    with pytest.raises(DomainError):
        diag_pmf(1, 0.0)


def test_inflated_edge_weights():
    g = np.arange(12)
    x, y = np.meshgrid(g, g, indexing="ij")
    np.testing.assert_allclose(dibp_pmf(x, y, 1.3, 0.9, 0.2, 0.0, 1.5), bivpois_pmf(x, y, 1.3, 0.9, 0.2), rtol=1e-14)
    for k in range(8):
        assert dibp_pmf(k, k, 1.3, 0.9, 0.2, 1.0, 1.5) == pytest.approx(diag_pmf(k, 1.5), rel=1e-14)
    assert dibp_pmf(2, 1, 1.3, 0.9, 0.2, 1.0, 1.5) == 0.0
    with pytest.raises(DomainError):
        dibp_pmf(1, 1, 1.0, 1.0, 0.1, 1.5, 1.0)


def test_log_likelihood_examples():
    assert goal_log_likelihood(DOUBLE, zero_params(), [], np.empty((0, 2))) == 0.0
    feat = [MatchFeature(0, 1, 1)]
    assert goal_log_likelihood(DOUBLE, zero_params(), feat, [(1, 0)]) == pytest.approx(-2.0, abs=1e-15)
    with pytest.raises(DimensionError):
        goal_log_likelihood(DOUBLE, zero_params(), feat, [(1, 0), (0, 0)])
    rng = np.random.default_rng(0)
    feats, goals = random_data(rng, 5, 2, 60)
    params = random_params(rng, 5, 2, DOUBLE)
    bivariate = GoalModelParameters(params.theta, params.att, params.def_, params.phi, beta0=-800.0)
    assert goal_log_likelihood(BIVARIATE, bivariate, feats, goals) == pytest.approx(goal_log_likelihood(DOUBLE, params, feats, goals), abs=1e-12)


def test_log_likelihood_matches_oracle():
    rng = np.random.default_rng(1)
    feats, goals = random_data(rng, 5, 3, 30)
    params = random_params(rng, 5, 3, DIAG_INFLATED)
    expected = mpmath.mpf(0)
    for f, (x, y) in zip(feats, goals):
        l1, l2 = match_rates(params, f)
        bp = bivpois_oracle(int(x), int(y), l1, l2, params.lambda3)
        mass = (1 - params.p) * bp
        if x == y:
            mass += params.p * mpmath.exp(-params.xi) * mpmath.mpf(params.xi) ** int(x) / math.factorial(int(x))
        expected += mpmath.log(mass)
    assert goal_log_likelihood(DIAG_INFLATED, params, feats, goals) == pytest.approx(float(expected), abs=1e-10)


@pytest.mark.parametrize("eta1,eta2", [(-300.0, 0.2), (-400.0, -400.0), (5.0, -350.0), (0.1, -0.3)])
def test_compiled_bivariate_term_survives_extreme_rates(eta1, eta2):
    x, y, l3 = 3, 2, 0.25
    lgx, lgy = math.lgamma(x + 1), math.lgamma(y + 1)
    got = _kernels.match_loglik(1, x, y, lgx, lgy, eta1, eta2, l3, 0.0, -np.inf, 0.0, 0.0)
    e1, e2 = mpmath.exp(mpmath.mpf(eta1)), mpmath.exp(mpmath.mpf(eta2))
    expected = float(mpmath.log(bivpois_oracle(x, y, e1, e2, l3)))
    assert math.isfinite(got)
    assert got == pytest.approx(expected, rel=1e-12, abs=1e-9)


def walk_oracle(att, def_, hyper):
    def normal(x, mu, s):
        return -0.5 * ((x - mu) / s) ** 2 - math.log(s) - 0.5 * math.log(2 * math.pi)

    total = 0.0
    for eff, mu, s in ((att, hyper.mu_att, hyper.sigma_att), (def_, hyper.mu_def, hyper.sigma_def)):
        for i in range(eff.shape[0]):
            total += normal(eff[i, 0], mu, s)
            for t in range(1, eff.shape[1]):
                total += normal(eff[i, t], eff[i, t - 1], s)
    return total


def test_dynamic_prior_examples():
    hyper = GoalModelHyperpriors(sigma_att=1.0, sigma_def=1.0)
    z = np.zeros((3, 1))
    assert dynamic_prior_log_density(z, z, hyper) == pytest.approx(6 * math.log(1 / math.sqrt(2 * math.pi)), abs=1e-14)
    base = np.array([[0.3, 0.3], [-0.3, -0.3]])
    moved = np.array([[0.3, 0.5], [-0.3, -0.5]])
    assert dynamic_prior_log_density(base, base, hyper) > dynamic_prior_log_density(moved, base, hyper)
    rng = np.random.default_rng(2)
    for _ in range(5):
        att, def_ = rng.normal(size=(6, 4)), rng.normal(size=(6, 4))
        h = GoalModelHyperpriors(0.1, -0.2, 0.4, 0.7)
        assert dynamic_prior_log_density(att, def_, h) == pytest.approx(walk_oracle(att, def_, h), abs=1e-10)
    with pytest.raises(DomainError):
        GoalModelHyperpriors(sigma_att=0.0)


def test_log_posterior_composition_and_validation():
    rng = np.random.default_rng(4)
    feats, goals = random_data(rng, 4, 2, 25)
    hyper = GoalModelHyperpriors()
    for kind in MODEL_KINDS:
        params = random_params(rng, 4, 2, kind)
        parts = goal_log_likelihood(kind, params, feats, goals) + walk_oracle(params.att, params.def_, hyper) + fixed_effect_log_prior(kind, params, hyper)
        assert goal_log_posterior(kind, params, hyper, feats, goals) == pytest.approx(parts, abs=1e-10)
    values = [
        goal_log_posterior(DOUBLE, GoalModelParameters(t, np.zeros((2, 1)), np.zeros((2, 1))), hyper, [], np.empty((0, 2)))
        for t in (0.0, 0.5, 1.0, 2.0)
    ]
    assert all(a > b for a, b in zip(values, values[1:]))
    with pytest.raises(DomainError):
        zero_params(beta0=0.0, p=1.5, xi=1.0)
    with pytest.raises(DomainError):
        zero_params(beta0=0.0, p=0.5, xi=0.0)
    with pytest.raises(DomainError):
        GoalModelParameters(0.0, np.ones((2, 1)), np.zeros((2, 1)))
    with pytest.raises(DomainError):
        goal_log_likelihood(BIVARIATE, zero_params(), [MatchFeature(0, 1, 1)], [(0, 0)])


@pytest.mark.parametrize("kind", MODEL_KINDS)
def test_sampler_target_matches_reference_density(kind):
    rng = np.random.default_rng(5)
    feats, goals = random_data(rng, 7, 3, 120)
    target = GoalPosterior(kind, feats, goals, 7, 3)
    for _ in range(3):
        v = target.initial_point() + rng.normal(0, 0.3, target.dim)
        att, def_ = target.effects(v)
        rep = dict(zip(target.reported_names(), target.report(v)))
        params = GoalModelParameters(rep["theta"], att, def_, rep["phi"], rep.get("beta0"), rep.get("p"), rep.get("xi"))
        hyper = with_scales(target.hyper, rep["sigma_att"], rep["sigma_def"])
        reference = goal_log_posterior(kind, params, hyper, feats, goals)
        assert target(v) - target._jacobian(v) - target.walk_normalizer(v) == pytest.approx(reference, abs=1e-9)
        for b in range(len(target.blocks)):
            w = v.copy()
            w[target.blocks[b]] += rng.normal(0, 0.2, len(target.blocks[b]))
            assert target.conditional(w, b) - target.conditional(v, b) == pytest.approx(target(w) - target(v), abs=1e-9)


def test_fit_returns_natural_scale_draws():
    rng = np.random.default_rng(6)
    feats, goals = random_data(rng, 4, 2, 80)
    s = fit_goal_model(DIAG_INFLATED, feats, goals, 4, 2, McmcConfig(chains=2, iterations=50, warmup=50, seed=3))
    names = s.parameter_names
    assert names[:7] == ["theta", "phi", "beta0", "p", "xi", "sigma_att", "sigma_def"]
    assert "att[3,2]" in names and "def[0,1]" in names
    p = s.pooled("p")
    assert np.all((p >= 0) & (p <= 1)) and np.all(s.pooled("xi") > 0)
    for season in (1, 2):
        cols = [s.index(f"att[{i},{season}]") for i in range(4)]
        assert np.max(np.abs(s.pooled()[:, cols].sum(axis=1))) < 1e-9
    again = fit_goal_model(DIAG_INFLATED, feats, goals, 4, 2, McmcConfig(chains=2, iterations=50, warmup=50, seed=3))
    np.testing.assert_array_equal(s.draws, again.draws)


@pytest.mark.slow
def test_scales_recover_their_prior_without_data():
    hyper = GoalModelHyperpriors(mu_att=0.4, sigma_scale=1.5)
    cfg = McmcConfig(chains=2, iterations=5000, warmup=1000, thin=2, seed=1)
    s = fit_goal_model(DOUBLE, [], np.empty((0, 2), int), 5, 3, cfg, hyper)
    for name in ("sigma_att", "sigma_def"):
        assert stats.kstest(s.pooled(name)[::10], stats.halfnorm(scale=1.5).cdf).pvalue > 0.01


def coverage_replication(seed, n_teams=6, n_seasons=2, n_matches=200):
    rng = np.random.default_rng(seed)
    sigma = 0.3
    att = np.cumsum(rng.normal(0, sigma, (n_teams, n_seasons)), axis=1)
    def_ = np.cumsum(rng.normal(0, sigma, (n_teams, n_seasons)), axis=1)
    att -= att.mean(axis=0)
    def_ -= def_.mean(axis=0)
    theta, phi = 0.2, 0.5
    home = rng.integers(0, n_teams, n_matches)
    away = (home + rng.integers(1, n_teams, n_matches)) % n_teams
    season = rng.integers(0, n_seasons, n_matches)
    omega = rng.normal(0, 1, n_matches)
    goals = simulate_goals(theta, att, def_, phi, home, away, season, omega, rng)
    feats = [MatchFeature(int(h), int(a), int(s) + 1, float(w)) for h, a, s, w in zip(home, away, season, omega)]
    sample = fit_goal_model(DOUBLE, feats, goals, n_teams, n_seasons, McmcConfig(chains=2, iterations=1000, warmup=1000, seed=seed))
    truth = {"theta": theta, "phi": phi}
    for i in range(n_teams):
        for s in range(n_seasons):
            truth[f"att[{i},{s + 1}]"] = att[i, s]
            truth[f"def[{i},{s + 1}]"] = def_[i, s]
    hits = []
    for name, value in truth.items():
        lo, hi = np.quantile(sample.pooled(name), [0.05, 0.95])
        hits.append(lo <= value <= hi)
    return hits


@pytest.mark.slow
def test_credible_interval_coverage():
    hits = [h for seed in range(50) for h in coverage_replication(seed)]
    assert np.mean(hits) >= 0.8
