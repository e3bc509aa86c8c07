import math

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import small_instance
from moreau_slab.envelope import EnvelopeContext, fb_envelope
from moreau_slab.linmodel import Dataset, HyperState, LinearLoss, gamma_from_rule
from moreau_slab.oracle import (
    GridMismatchError,
    StepSizeError,
    axis_rule,
    bound_inputs,
    cor1_bound,
    delta_tv,
    lemma2_sandwich,
    quad_posterior,
    r_gamma,
    thm2_bound,
    tv_distance,
    varrho_gamma_estimate,
    varrho_semi_analytic,
    wasserstein1_1d,
)


def test_axis_rule_is_exact_for_polynomials():
    nodes, weights, outer = axis_rule(-2.0, 3.0, 4, order=8)
    assert np.sum(weights * nodes ** 7) == pytest.approx((3.0 ** 8 - 2.0 ** 8) / 8, rel=1e-13)
    assert outer.sum() == 16
    with pytest.raises(ValueError):
        axis_rule(1.0, 1.0, 3)


def _one_dim():
    X = np.array([[1.0], [0.5], [-0.3], [1.2], [0.8]])
    z = np.array([1.1, 0.2, -0.5, 1.5, 0.4])
    return Dataset(X, z, 0.8), HyperState(q=0.3, lam1=1.2, lam2=0.7, alpha=0.6)


def test_exact_support_weights_against_scipy():
    data, phi = _one_dim()
    prior = phi.prior(data.sigma2)
    loss = LinearLoss(data)
    off = (1 - phi.q) * math.exp(-loss.value(np.zeros(1)))
    on = phi.q * quad(lambda t: math.exp(-loss.value(np.array([t])) - prior.neg_log(t) - prior.log_normalizer()),
                      -np.inf, np.inf, points=None, epsabs=1e-14, epsrel=1e-12)[0]
    post = quad_posterior(data, phi, None, "exact")
    assert post.delta_weights[(True,)] == pytest.approx(on / (on + off), abs=1e-9)


def test_approx_support_weights_against_scipy():
    data, phi = _one_dim()
    gamma = gamma_from_rule(data)
    ctx = EnvelopeContext(gamma, phi.prior(data.sigma2))
    loss = LinearLoss(data)

    def mass(delta):
        f = lambda t: math.exp(-fb_envelope(ctx, loss, [t], [delta]))
        return quad(f, -30, 30, points=[0.0], limit=400, epsabs=1e-14, epsrel=1e-12)[0]

    off = (1 - phi.q) * mass(False)
    on = phi.q * math.sqrt(2 * math.pi * gamma) * mass(True)
    # kinks of the envelope fall inside panels, so tighten the refinement
    post = quad_posterior(data, phi, gamma, "my_approx", tol=1e-9, max_panels=512)
    assert post.delta_weights[(True,)] == pytest.approx(on / (on + off), abs=1e-9)


def test_tilde_and_exact_share_the_normalizer():
    data, phi = small_instance(21, d=2)
    gamma = gamma_from_rule(data)
    exact = quad_posterior(data, phi, None, "exact")
    tilde = quad_posterior(data, phi, gamma, "tilde")
    assert tilde.log_normalizer == pytest.approx(exact.log_normalizer, abs=1e-8)
    assert delta_tv(exact, tilde) < 1e-8


def test_varrho_grid_and_semi_analytic_agree():
    data, phi = small_instance(22, d=2)
    gamma = gamma_from_rule(data)
    est, change = varrho_gamma_estimate(data, phi, gamma)
    exact = quad_posterior(data, phi, None, "exact")
    assert est == pytest.approx(varrho_semi_analytic(data, phi, gamma, exact), abs=1e-6)
    assert change < 1e-6


def test_r_gamma_is_nonnegative_and_closes_the_sandwich():
    data, phi = small_instance(23, d=3)
    prior = phi.prior(data.sigma2)
    rng = np.random.default_rng(0)
    for _ in range(50):
        theta = rng.normal(0, 2, 3)
        delta = rng.random(3) < 0.5
        assert r_gamma(data, prior, 0.1, delta, theta) >= 0
        lower, value, upper = lemma2_sandwich(data, prior, 0.1, delta, theta)
        assert lower <= value + 1e-9 and value <= upper + 1e-9


def test_tv_conventions():
    data, phi = _one_dim()
    gamma = gamma_from_rule(data)
    a = quad_posterior(data, phi, gamma, "my_approx", fixed_delta=(False,))
    assert delta_tv(a, {"1": 1.0}) == pytest.approx(2.0)
    assert delta_tv(a, a) == 0.0
    b = quad_posterior(data, phi, None, "exact", fixed_delta=(False,))
    # a point mass against a continuous law
    assert tv_distance(a, b) == pytest.approx(2.0)
    c = quad_posterior(data, phi, gamma, "my_approx", fixed_delta=(False,), n_panels=8, max_panels=8)
    with pytest.raises(GridMismatchError):
        tv_distance(a, c)


def test_wasserstein_to_point_mass():
    assert wasserstein1_1d([-1.0, 1.0, 3.0], 1.0) == pytest.approx(4.0 / 3.0)
    with pytest.raises(ValueError):
        wasserstein1_1d([])


def test_bounds():
    data, phi = small_instance(24, d=2)
    gamma = gamma_from_rule(data)
    with pytest.raises(StepSizeError):
        cor1_bound(data, phi, 2 * gamma)
    inputs = bound_inputs(data, phi)
    with pytest.raises(StepSizeError):
        thm2_bound(inputs, 2 * gamma, data.d)
    # with a slab normalizer <= 0 the theorem reduces to the corollary
    if phi.prior(data.sigma2).log_normalizer() <= 0:
        assert thm2_bound(inputs, gamma, data.d) == pytest.approx(cor1_bound(data, phi, gamma))
    assert cor1_bound(data, phi, gamma / 2) == pytest.approx(cor1_bound(data, phi, gamma) / 2)


def test_quadrature_rejects_large_dimension():
    data, phi = small_instance(25, d=3)
    big = Dataset(np.hstack([data.X, data.X[:, :1]]), data.z)
    with pytest.raises(ValueError):
        quad_posterior(big, phi, 0.1)
