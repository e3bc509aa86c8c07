import numpy as np
import pytest
from sklearn.linear_model import Lasso

from conftest import philox
from moreau_slab.empirical_bayes import (
    cv_select_lambda,
    default_lambda_grid,
    estimate_sigma2,
    fold_blocks,
    kkt_residual,
    lasso_fista,
    sigma2_hat,
)
from moreau_slab.linmodel import Dataset
from moreau_slab.scenario import ScenarioConfig, gen_scenario


def _problem(seed=0, n=80, d=30):
    rng = philox(seed)
    X = rng.standard_normal((n, d))
    theta = np.zeros(d)
    theta[:4] = [3.0, -2.0, 1.5, 1.0]
    return Dataset(X, X @ theta + rng.standard_normal(n))


@pytest.mark.parametrize("frac", [0.05, 0.2, 0.6])
def test_fista_matches_sklearn(frac):
    data = _problem()
    lam = frac * float(np.max(np.abs(data.Xtz)))
    fit = lasso_fista(data, lam)
    ref = Lasso(alpha=lam / data.n, fit_intercept=False, tol=1e-14, max_iter=1_000_000).fit(data.X, data.z)
    assert np.allclose(fit.beta, ref.coef_, atol=1e-7)
    assert fit.kkt_residual <= 1e-7
    assert kkt_residual(data.X, data.z, fit.beta, lam) == pytest.approx(fit.kkt_residual)


def test_null_fit_above_lambda_max():
    data = _problem()
    fit = lasso_fista(data, 1.01 * float(np.max(np.abs(data.Xtz))))
    assert fit.support_size == 0 and fit.n_iter == 0
    with pytest.raises(ValueError):
        lasso_fista(data, 0.0)


def test_fold_blocks_partition_rows():
    blocks = fold_blocks(23, 5, seed=1)
    assert sorted(np.concatenate(blocks).tolist()) == list(range(23))
    assert {b.size for b in blocks} == {4, 5}
    with pytest.raises(ValueError):
        fold_blocks(3, 5)


def test_cv_choice_is_on_grid_and_deterministic():
    data = _problem(1)
    grid = default_lambda_grid(data, n=12)
    a = cv_select_lambda(data, folds=5, lambdas=grid, seed=2)
    b = cv_select_lambda(data, folds=5, lambdas=grid, seed=2)
    assert a.lam in grid and a.lam == b.lam
    assert a.mse[np.argmin(a.mse)] == a.mse.min()


def test_sigma2_hat_definition():
    data = _problem(2)
    fit = lasso_fista(data, 5.0)
    r = data.z - data.X @ fit.beta
    assert sigma2_hat(data, fit) == pytest.approx(r @ r / (data.n - fit.support_size))


def test_plugin_variance_on_strong_signal():
    data, _ = gen_scenario(ScenarioConfig(n=100, d=50, s_star=5, signal=3.0, seed=3))
    est = estimate_sigma2(data, folds=5, seed=3)
    assert 0.6 < est.sigma2 < 1.6
    assert est.fit.kkt_residual <= 1e-6
