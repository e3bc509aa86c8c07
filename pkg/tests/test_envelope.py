import math

import numpy as np
import pytest

from conftest import philox, small_instance
from moreau_slab.envelope import (
    EnvelopeContext,
    ZeroLoss,
    cap_vector,
    fb_envelope,
    g_drift,
    g_drift_capped,
    grad_fb_exact,
    j_map,
    moreau_env_oracle,
    moreau_penalty,
    penalty,
)
from moreau_slab.linmodel import LinearLoss, log_Z
from moreau_slab.prox import Laplace


def test_two_forms_agree():
    for seed in range(10):
        data, phi = small_instance(seed)
        ctx = EnvelopeContext(0.3, phi.prior(data.sigma2), log_norm=log_Z(phi, data.sigma2))
        loss = LinearLoss(data)
        rng = philox(seed)
        for _ in range(10):
            theta = rng.normal(0, 2, data.d)
            delta = rng.random(data.d) < 0.5
            a = fb_envelope(ctx, loss, theta, delta, form="prox")
            b = fb_envelope(ctx, loss, theta, delta, form="moreau")
            assert a == pytest.approx(b, rel=1e-12, abs=1e-12)


def test_zero_loss_gives_moreau_envelope_of_laplace():
    # Moreau envelope of lam|x| is the Huber function
    lam, gamma = 0.8, 0.5
    ctx = EnvelopeContext(gamma, Laplace(lam), log_norm=0.0)
    for x in np.linspace(-3, 3, 31):
        huber = x * x / (2 * gamma) if abs(x) <= gamma * lam else lam * abs(x) - gamma * lam ** 2 / 2
        assert fb_envelope(ctx, ZeroLoss(), [x], [True]) == pytest.approx(huber, abs=1e-14)
        assert moreau_env_oracle(lambda u: lam * abs(u[0]), gamma, [x]) == pytest.approx(huber, abs=1e-10)


def test_gradient_matches_finite_differences():
    data, phi = small_instance(3, d=3)
    ctx = EnvelopeContext(0.05, phi.prior(data.sigma2))
    loss = LinearLoss(data)
    delta = np.array([True, True, False])
    theta = np.array([1.3, -0.7, 0.4])
    g = grad_fb_exact(ctx, loss, theta, delta)
    eps = 1e-6
    for j in range(3):
        e = np.zeros(3)
        e[j] = eps
        fd = (fb_envelope(ctx, loss, theta + e, delta) - fb_envelope(ctx, loss, theta - e, delta)) / (2 * eps)
        assert g[j] == pytest.approx(fd, rel=1e-5, abs=1e-6)


def test_drift_is_scaled_residual_of_j():
    data, phi = small_instance(5, d=2)
    ctx = EnvelopeContext(0.2, phi.prior(data.sigma2), drift_cap=0.1)
    loss = LinearLoss(data)
    theta, delta = np.array([2.0, -1.0]), np.array([True, False])
    assert np.allclose(g_drift(ctx, loss, theta, delta), (theta - j_map(ctx, loss, theta, delta)) / 0.2)
    assert np.linalg.norm(g_drift_capped(ctx, loss, theta, delta)) <= 0.1 + 1e-15


def test_cap_vector():
    v = np.array([3.0, 4.0])
    assert np.allclose(cap_vector(v, 1.0), [0.6, 0.8])
    assert cap_vector(v, 10.0) is v


def test_penalty_is_infinite_off_support():
    ctx = EnvelopeContext(1.0, Laplace(1.0), log_norm=0.5)
    assert penalty(ctx, [1.0, 0.0], [True, False]) == pytest.approx(1.5)
    assert math.isinf(penalty(ctx, [1.0, 0.1], [True, False]))
    # restricted Moreau penalty of an inactive coordinate is a pure quadratic
    assert moreau_penalty(ctx, [0.0, 2.0], [False, False]) == pytest.approx(2.0)


def test_context_validation():
    with pytest.raises(ValueError):
        EnvelopeContext(0.0, Laplace(1.0))
    with pytest.raises(ValueError):
        EnvelopeContext(1.0, Laplace(1.0), drift_cap=-1.0)
    with pytest.raises(ValueError):
        fb_envelope(EnvelopeContext(1.0, Laplace(1.0)), ZeroLoss(), [np.nan], [True])
    with pytest.raises(ValueError):
        fb_envelope(EnvelopeContext(1.0, Laplace(1.0)), ZeroLoss(), [1.0], [True], form="other")


def test_oracle_limits_active_coordinates():
    with pytest.raises(ValueError):
        moreau_env_oracle(lambda u: 0.0, 1.0, np.zeros(4))
