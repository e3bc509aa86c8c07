import math

import numpy as np
import pytest

from conftest import philox, small_instance
from moreau_slab.linmodel import Dataset, HyperState
from moreau_slab.sampler import (
    ApproxPosterior,
    ChainState,
    SamplerConfig,
    SamplerError,
    initial_state,
    lambda_moves,
    run_chain,
    update_lambdas,
    update_q,
    update_theta_inactive,
)


def test_q_update_beta_moments():
    rng = philox(0)
    delta = np.array([True, False, True] + [False] * 7)
    state = ChainState(delta, np.zeros(10), HyperState(q=0.5, lam1=1.0, lam2=1.0, u=1.5))
    draws = np.array([update_q(state, rng).phi.q for _ in range(20_000)])
    a, b = 3.0, 10 + 10 ** 1.5 - 2
    mean = a / (a + b)
    var = a * b / ((a + b) ** 2 * (a + b + 1))
    assert abs(draws.mean() - mean) < 4 * math.sqrt(var / draws.size)
    assert draws.var() == pytest.approx(var, rel=0.05)


def test_lambda_moves():
    assert lambda_moves(HyperState(0.5, 1, 1, alpha=1.0)) == (True, False)
    assert lambda_moves(HyperState(0.5, 1, 1, alpha=0.0)) == (False, True)
    assert lambda_moves(HyperState(0.5, 1, 1, alpha=0.5)) == (True, True)


def test_lambda_update_respects_support_and_frozen_penalty():
    data, _ = small_instance(1, d=2)
    target = ApproxPosterior(data)
    phi = HyperState(q=0.5, lam1=1.0, lam2=1.0, alpha=1.0, a_min=0.5, M=2.0)
    state = ChainState(np.array([True, False]), np.array([0.5, 0.0]), phi)
    rng = philox(1)
    for _ in range(300):
        new, accepted, _ = update_lambdas(target, state, rng, (5.0, 5.0))
        assert new.phi.in_support()
        assert new.phi.lam2 == 1.0
        if not accepted:
            assert new is state


def test_inactive_proposal_covariance():
    data, phi = small_instance(2, d=3)
    target = ApproxPosterior(data)
    delta = np.array([True, False, False])
    theta = np.array([0.7, 0.0, 0.0])
    mean, fac = target.inactive_proposal(theta, delta, phi)
    rng = philox(2)
    draws = np.array([mean + fac.L_inv.T @ rng.standard_normal(2) for _ in range(40_000)])
    cov = np.linalg.inv(fac.L @ fac.L.T)
    # Wishart standard errors of the sample covariance entries
    se = np.sqrt((np.outer(np.diag(cov), np.diag(cov)) + cov ** 2) / draws.shape[0])
    assert np.all(np.abs(np.cov(draws.T) - cov) < 4 * se)
    assert np.all(np.abs(draws.mean(axis=0) - mean) < 4 * np.sqrt(np.diag(cov) / draws.shape[0]))


def test_inactive_block_needs_step_rule():
    data, phi = small_instance(3, d=2)
    target = ApproxPosterior(data, gamma=4.0 * data.sigma2 / data.lambda_max)
    state = ChainState(np.zeros(2, bool), np.zeros(2), phi)
    with pytest.raises(SamplerError):
        update_theta_inactive(target, state, philox(3))


def test_chain_state_validation():
    phi = HyperState(0.5, 1.0, 1.0)
    with pytest.raises(ValueError):
        ChainState(np.zeros(2, bool), np.zeros(3), phi)
    with pytest.raises(ValueError):
        ChainState(np.zeros(2, bool), np.array([0.0, np.inf]), phi)


def test_config_validation():
    with pytest.raises(ValueError):
        SamplerConfig(gamma0=0.3)
    with pytest.raises(ValueError):
        SamplerConfig(n_iter=10, burn_in=10)
    with pytest.raises(ValueError):
        SamplerConfig(thin=0)


def _easy_problem():
    rng = philox(4)
    X = rng.standard_normal((60, 8))
    theta = np.zeros(8)
    theta[[1, 5]] = [2.0, -1.5]
    return Dataset(X, X @ theta + 0.5 * rng.standard_normal(60), 0.25), theta


def test_chain_is_reproducible_and_seed_dependent():
    data, _ = _easy_problem()
    cfg = SamplerConfig(n_iter=400, burn_in=100, seed=9)
    a = run_chain(data, cfg, initial_state(data))
    b = run_chain(data, cfg, initial_state(data))
    c = run_chain(data, SamplerConfig(n_iter=400, burn_in=100, seed=10), initial_state(data))
    assert np.array_equal(a.theta_mean, b.theta_mean)
    assert not np.array_equal(a.theta_mean, c.theta_mean)


def test_sink_receives_thinned_records():
    data, _ = _easy_problem()
    seen = []
    run_chain(data, SamplerConfig(n_iter=300, burn_in=50, thin=7, seed=1), initial_state(data), sink=seen.append)
    assert [r.iter for r in seen] == list(range(7, 301, 7))


def test_chain_recovers_easy_support():
    data, theta = _easy_problem()
    from moreau_slab.diagnostics import TruthSpec

    summary = run_chain(data, SamplerConfig(n_iter=3000, burn_in=500, seed=2), initial_state(data),
                        truth=TruthSpec(theta))
    assert set(np.flatnonzero(summary.inclusion_probs > 0.5)) == {1, 5}
    assert summary.metrics["f_prox"] > 0.9
    for kernel in ("mala", "ind"):
        assert 0.05 < summary.acceptance[kernel] <= 1.0
