import math

import numpy as np
import pytest
from scipy.special import betaln

from conftest import philox
from moreau_slab.linmodel import (
    Dataset,
    HyperState,
    PowerIterationError,
    default_lam1_cap,
    gamma_from_rule,
    grad_neg_log_lik,
    lambda_max,
    log_hyperprior,
    log_prior_delta,
    neg_log_lik,
)


def test_lambda_max_matches_eigvalsh():
    rng = philox(0)
    for n, d in [(30, 5), (10, 40), (200, 50)]:
        X = rng.standard_normal((n, d))
        assert lambda_max(X) == pytest.approx(np.linalg.eigvalsh(X.T @ X)[-1], rel=1e-9)


def test_lambda_max_of_zero_matrix():
    assert lambda_max(np.zeros((4, 3))) == 0.0


def test_power_iteration_failure_reports_estimate():
    rng = philox(1)
    X = rng.standard_normal((20, 20))
    with pytest.raises(PowerIterationError) as info:
        lambda_max(X, tol=0.0, max_iter=3)
    assert info.value.eigenvalue > 0


def test_gamma_rule():
    data = Dataset(np.eye(3) * 2.0, np.ones(3), 0.5)
    assert gamma_from_rule(data) == pytest.approx(0.25 * 0.5 / 4.0)
    with pytest.raises(ValueError):
        gamma_from_rule(data, 0.3)
    assert default_lam1_cap(data, 0.01) == pytest.approx(5.0)


def test_likelihood_and_gradient():
    rng = philox(2)
    X = rng.standard_normal((15, 4))
    z = rng.standard_normal(15)
    data = Dataset(X, z, 2.0)
    theta = rng.standard_normal(4)
    assert neg_log_lik(data, theta) == pytest.approx(np.sum((z - X @ theta) ** 2) / 4.0)
    eps = 1e-6
    fd = [(neg_log_lik(data, theta + eps * e) - neg_log_lik(data, theta - eps * e)) / (2 * eps) for e in np.eye(4)]
    assert np.allclose(grad_neg_log_lik(data, theta), fd, rtol=1e-6)


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 2)), np.ones(4))
    with pytest.raises(ValueError):
        Dataset(np.ones((3, 2)), np.ones(3), 0.0)
    with pytest.raises(ValueError):
        Dataset(np.array([[np.nan]]), np.ones(1))
    data = Dataset(np.ones((3, 2)), np.ones(3))
    with pytest.raises(ValueError):
        data.X[0, 0] = 5.0


def test_with_sigma2_keeps_cache():
    data = Dataset(np.eye(2), np.ones(2))
    lm = data.lambda_max
    other = data.with_sigma2(3.0)
    assert other.sigma2 == 3.0 and other._cache["lambda_max"] == lm


def test_prior_terms():
    phi = HyperState(q=0.2, lam1=1.0, lam2=1.0, u=2.0)
    delta = np.array([1, 0, 1, 0, 0], bool)
    assert log_prior_delta(delta, phi) == pytest.approx(2 * math.log(0.2) + 3 * math.log(0.8))
    b = 5.0 ** 2
    assert log_hyperprior(phi, 5) == pytest.approx((b - 1) * math.log(0.8) - betaln(1, b))
    assert log_hyperprior(phi.replace(lam1=1e-9), 5) == -math.inf
    assert log_hyperprior(phi.replace(M1=0.5), 5) == -math.inf


def test_hyperstate_validation():
    for kwargs in ({"q": 0.0}, {"q": 1.0}, {"alpha": 1.2}, {"u": 1.0}):
        base = dict(q=0.5, lam1=1.0, lam2=1.0)
        base.update(kwargs)
        with pytest.raises(ValueError):
            HyperState(**base)
