import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import random_problem
from epslssvr import bayes, lssvr
from epslssvr.bayes import EpsLssvrConfig
from epslssvr.data import Dataset, gen_sinc, grid
from epslssvr.equivalence import gap_closed_form
from epslssvr.errors import InvalidArgumentError
from epslssvr.kernel import KernelConfig, gram

E = math.exp(-1.0)


def pieces(ds, gamma, c):
    """Psi, Phi and (0, y) assembled independently of the package."""
    n = ds.n
    omega = np.array([[math.exp(-c * c * np.sum((a - b) ** 2)) for b in ds.inputs] for a in ds.inputs])
    psi = np.zeros((n + 1, n + 1))
    psi[0, 1:] = psi[1:, 0] = 1.0
    psi[1:, 1:] = omega + np.eye(n) / gamma
    phi = np.hstack((np.ones((n, 1)), omega))
    return psi, phi, np.concatenate(([0.0], ds.targets))


def cfg_of(eps, gamma=1.0, c=1.0, sigma2=1.0):
    return EpsLssvrConfig(eps, gamma, KernelConfig(c), sigma2)


def test_config_validation():
    for bad in [dict(eps=-1.0), dict(eps=0.1, gamma=0.0), dict(eps=0.1, sigma2=0.0), dict(eps=float("nan"))]:
        with pytest.raises(InvalidArgumentError):
            cfg_of(**bad)
    assert cfg_of(0.0).epsilon == 0.0


def test_prior_two_point(two_point):
    ds, _ = two_point
    P = bayes.build_prior(ds, cfg_of(0.1)).precision
    omega = np.array([[1, E], [E, 1]])
    np.testing.assert_allclose(P[1:, 1:], np.ones((2, 2)) + 2 * omega + np.eye(2), rtol=1e-15)
    assert P[0, 0] == 0.1
    np.testing.assert_array_equal(P[0, 1:], 1.0)


def test_prior_eps_zero_and_shift(two_point):
    ds, _ = two_point
    spec = bayes.build_prior(ds, cfg_of(0.0, gamma=2.0))
    assert spec.precision[0, 0] == 0.0
    np.testing.assert_allclose(spec.shift, [0.0, 0.0, 0.5])


def test_prior_structural_identity_fixed(rng):
    ds = random_problem(rng, 7, 2)
    psi, phi, _ = pieces(ds, 0.8, 1.2)
    explicit = bayes.build_prior(ds, cfg_of(0.3, 0.8, 1.2)).precision
    structural = psi.T @ psi + 0.3 * np.outer(np.eye(8)[0], np.eye(8)[0]) - phi.T @ phi
    np.testing.assert_allclose(explicit, structural, rtol=0, atol=1e-10)
    np.testing.assert_array_equal(explicit, explicit.T)


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 30), st.integers(1, 3), st.floats(0.1, 10.0), st.floats(0.0, 10.0), st.integers(0, 10**6))
def test_prior_structural_identity(n, d, gamma, eps, seed):
    ds = random_problem(np.random.default_rng(seed), n, d)
    omega = gram(ds.inputs, KernelConfig(1.0))
    psi = lssvr.bordered_matrix(omega, gamma)
    phi = lssvr.design_matrix(omega)
    explicit = bayes.prior_precision(omega, gamma, eps)
    np.testing.assert_allclose(explicit, bayes.prior_precision_structural(psi, phi, eps), rtol=0, atol=1e-10)


def test_improper_prior_proper_posterior(rng):
    ds = random_problem(rng, 6, 1)
    cfg = cfg_of(0.0, 0.5, 1.0)
    P = bayes.build_prior(ds, cfg).precision
    assert np.linalg.eigvalsh(P).min() < 0
    post = bayes.posterior(ds, cfg)
    assert np.linalg.eigvalsh(post.precision).min() > 0


def test_posterior_eps_zero_equals_lssvr(rng):
    ds = random_problem(rng, 12, 2)
    cfg = cfg_of(0.0, 0.5, 1.0)
    theta = lssvr.fit(ds, cfg.lssvr).theta
    mu = bayes.posterior(ds, cfg).mean
    assert np.linalg.norm(mu - theta) <= 1e-9 * np.linalg.norm(theta)


def test_posterior_two_point(two_point):
    ds, _ = two_point
    a1 = -1.0 / (2.0 * (2.0 - E))
    np.testing.assert_allclose(bayes.posterior(ds, cfg_of(0.0)).mean, [0.5, a1, -a1], rtol=1e-12)


def test_posterior_matches_textbook_form(rng):
    ds = random_problem(rng, 6, 2)
    gamma, c, eps = 0.9, 1.1, 0.3
    psi, phi, r = pieces(ds, gamma, c)
    prior = bayes.build_prior(ds, cfg_of(eps, gamma, c))
    # first posterior expression: Sigma = (P + Phi^T Phi)^-1, mu = Sigma (Phi^T y + (0, y) / gamma)
    sigma = np.linalg.inv(prior.precision + phi.T @ phi)
    mu = sigma @ (phi.T @ ds.targets + r / gamma)
    post = bayes.posterior(ds, cfg_of(eps, gamma, c))
    np.testing.assert_allclose(post.mean, mu, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(prior.shift, r / gamma)


def test_posterior_precision_and_inverse(rng):
    ds = random_problem(rng, 8, 2)
    psi, _, _ = pieces(ds, 1.0, 1.0)
    post = bayes.posterior(ds, cfg_of(0.7))
    expected = psi.T @ psi
    expected[0, 0] += 0.7
    np.testing.assert_allclose(post.precision, expected, rtol=1e-13, atol=1e-13)
    np.testing.assert_allclose(post.covariance @ post.precision, np.eye(9), atol=1e-7)
    np.linalg.cholesky(post.precision)


def test_sm_eps_zero_is_base_inverse(rng):
    ds = random_problem(rng, 5, 1)
    psi, _, _ = pieces(ds, 1.0, 1.0)
    np.testing.assert_allclose(bayes.posterior_covariance_sm(ds, cfg_of(0.0)),
                               np.linalg.inv(psi.T @ psi), rtol=1e-9, atol=1e-12)


def test_sm_matches_direct_inverse(rng):
    ds = random_problem(rng, 5, 2)
    psi, _, _ = pieces(ds, 1.0, 1.0)
    lam = psi.T @ psi
    lam[0, 0] += 1.0
    np.testing.assert_allclose(bayes.posterior_covariance_sm(ds, cfg_of(1.0)), np.linalg.inv(lam), rtol=0, atol=1e-8)


def test_sm_large_eps_pins_bias(rng):
    ds = random_problem(rng, 5, 1)
    cov = bayes.posterior_covariance_sm(ds, cfg_of(1e12))
    assert abs(cov[0, 0]) <= 1e-10


def test_sm_requires_unit_noise(rng):
    with pytest.raises(InvalidArgumentError):
        bayes.posterior_covariance_sm(random_problem(rng, 4, 1), cfg_of(0.1, sigma2=2.0))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 20), st.integers(1, 4), st.floats(0.1, 10.0), st.floats(0.0, 10.0), st.integers(0, 10**6))
def test_posterior_routes_agree(n, d, gamma, eps, seed):
    ds = random_problem(np.random.default_rng(seed), n, d)
    cfg = cfg_of(eps, gamma, 1.0)
    post = bayes.posterior(ds, cfg)
    sm = bayes.posterior_covariance_sm(ds, cfg)
    np.testing.assert_allclose(post.covariance, sm, rtol=0, atol=1e-8)
    psi, _, r = pieces(ds, gamma, 1.0)
    mu_sm = sm @ (psi.T @ r)
    assert np.linalg.norm(post.mean - mu_sm) <= 1e-9 * max(1.0, np.linalg.norm(mu_sm))


def test_map_estimate_is_mean(rng):
    post = bayes.posterior(random_problem(rng, 6, 1), cfg_of(0.2))
    m = bayes.map_estimate(post)
    np.testing.assert_array_equal(m, post.mean)
    assert m is not post.mean


def test_map_on_sinc_within_gap():
    ds = gen_sinc(200, -2 * math.pi, 2 * math.pi, seed=3)
    cfg = cfg_of(1e-4)
    mu = bayes.map_estimate(bayes.posterior(ds, cfg))
    theta = lssvr.fit(ds, cfg.lssvr).theta
    gap = gap_closed_form(ds, cfg.lssvr, 1e-4)
    np.testing.assert_allclose(theta - mu, gap, rtol=0, atol=1e-8)


def test_predictive_far_point(two_point):
    ds, _ = two_point
    post = bayes.posterior(ds, cfg_of(0.5))
    # c^2 d^2 > 41.5 puts every kernel value below 1e-18
    m = bayes.predictive(post, [10.0])
    assert m.mean == pytest.approx(post.mean[0], abs=1e-15)
    assert m.variance_full == pytest.approx(post.covariance[0, 0], abs=1e-15)
    assert m.variance_paper == pytest.approx(0.0, abs=1e-30)


def test_predictive_dimension_mismatch(rng):
    post = bayes.posterior(random_problem(rng, 5, 2), cfg_of(0.1))
    with pytest.raises(InvalidArgumentError):
        bayes.predictive(post, [0.1])


def test_predictive_variance_lower_inside_data():
    ds = gen_sinc(1200, -2 * math.pi, 2 * math.pi, seed=0)
    post = bayes.posterior(ds, cfg_of(1e-4))
    inside = bayes.predictive_table(post, grid(-2 * math.pi, 2 * math.pi, 200)).variance_full
    outside = bayes.predictive_table(post, grid(2 * math.pi, 3 * math.pi, 100)).variance_full
    assert inside.mean() < outside.mean()


def test_predictive_monte_carlo(rng):
    ds = random_problem(rng, 5, 2)
    post = bayes.posterior(ds, cfg_of(0.5))
    x = rng.uniform(size=2)
    m = bayes.predictive(post, x)
    phi = bayes.feature_rows(x[None, :], ds.inputs, KernelConfig(1.0))[0]
    draws = np.random.default_rng(1).multivariate_normal(post.mean, post.covariance, size=10**6)
    f = draws @ phi
    n = f.size
    se = m.variance_full * math.sqrt(2.0 / (n - 1))
    assert abs(f.var(ddof=1) - m.variance_full) <= 3 * se
    assert abs(f.mean() - m.mean) <= 3 * math.sqrt(m.variance_full / n)


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 15), st.floats(0.0, 10.0), st.integers(0, 10**6))
def test_variance_block_identity(n, eps, seed):
    r = np.random.default_rng(seed)
    ds = random_problem(r, n, 2)
    post = bayes.posterior(ds, cfg_of(eps))
    t = bayes.predictive_table(post, r.uniform(-0.5, 1.5, size=(6, 2)))
    assert np.all(t.variance_full >= -1e-12) and np.all(t.variance_paper >= -1e-12)
    np.testing.assert_allclose(t.variance_full, t.variance_paper + 2 * t.cross_term + t.bias_variance,
                               rtol=0, atol=1e-10)


def test_bias_variance_nonincreasing_in_eps(rng):
    ds = random_problem(rng, 10, 2)
    path = bayes.PosteriorPath(ds, cfg_of(0.0))
    v = [path.at(e).covariance[0, 0] for e in [0.0, 1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0]]
    assert all(a >= b for a, b in zip(v, v[1:]))


def test_predictive_mean_eps_zero_matches_lssvr(rng):
    ds = random_problem(rng, 10, 2)
    cfg = cfg_of(0.0, 0.5, 1.0)
    post = bayes.posterior(ds, cfg)
    model = lssvr.fit(ds, cfg.lssvr)
    X = rng.uniform(-1, 2, size=(20, 2))
    np.testing.assert_allclose(bayes.predictive_table(post, X).mean, lssvr.predict_many(model, X), rtol=1e-8)


def test_sigma2_extension(rng):
    ds = random_problem(rng, 6, 1)
    gamma, s2 = 0.7, 0.25
    psi, phi, r = pieces(ds, gamma, 1.0)
    prior = bayes.build_prior(ds, cfg_of(0.2, gamma))
    lam = prior.precision + phi.T @ phi / s2
    mu = np.linalg.solve(lam, r / gamma + phi.T @ ds.targets / s2)
    post = bayes.posterior(ds, cfg_of(0.2, gamma, sigma2=s2))
    np.testing.assert_allclose(post.mean, mu, rtol=1e-9)
    np.testing.assert_allclose(post.covariance, np.linalg.inv(lam), rtol=1e-8, atol=1e-12)


def test_posterior_json_round_trip(rng):
    ds = random_problem(rng, 4, 2)
    post = bayes.posterior(ds, cfg_of(0.1, 0.5, 1.0))
    back = bayes.loads_posterior(bayes.dumps_posterior(post))
    np.testing.assert_array_equal(back.mean, post.mean)
    np.testing.assert_array_equal(back.covariance, post.covariance)
    assert back.config == post.config
    X = rng.uniform(size=(3, 2))
    a, b = bayes.predictive_table(post, X), bayes.predictive_table(back, X)
    np.testing.assert_array_equal(a.variance_full, b.variance_full)


def test_posterior_json_without_covariance(rng):
    post = bayes.posterior(random_problem(rng, 4, 1), cfg_of(0.1))
    back = bayes.loads_posterior(bayes.dumps_posterior(post, include_covariance=False))
    np.testing.assert_array_equal(back.mean, post.mean)
    with pytest.raises(InvalidArgumentError):
        back.covariance
