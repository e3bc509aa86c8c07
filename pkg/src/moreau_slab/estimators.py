"""scikit-learn style estimators."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from .empirical_bayes import cv_select_lambda, estimate_sigma2, lasso_fista
from .linmodel import Dataset
from .sampler import SamplerConfig, initial_state, run_chain


def _center(X, y, fit_intercept):
    if not fit_intercept:
        return X, y, np.zeros(X.shape[1]), 0.0
    x_mean = X.mean(axis=0)
    y_mean = float(y.mean())
    return X - x_mean, y - y_mean, x_mean, y_mean


class MoreauSpikeSlabRegressor(RegressorMixin, BaseEstimator):
    """Spike-and-slab linear regression sampled through a Moreau envelope approximation.

    ``coef_`` is the posterior mean of the prox image, which is exactly
    sparse draw by draw. ``sigma2=None`` plugs in a cross-validated lasso
    estimate of the noise variance.
    """

    def __init__(self, sigma2=None, n_iter=5000, burn_in=1000, gamma0=0.25, alpha=1.0, u=1.1,
                 thin=1, folds=10, fit_intercept=True, random_state=0):
        self.sigma2 = sigma2
        self.n_iter = n_iter
        self.burn_in = burn_in
        self.gamma0 = gamma0
        self.alpha = alpha
        self.u = u
        self.thin = thin
        self.folds = folds
        self.fit_intercept = fit_intercept
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        if X.shape[0] < 2:
            raise ValueError(f"n_samples = {X.shape[0]}; at least 2 samples are required")
        Xc, yc, x_mean, y_mean = _center(X, y, self.fit_intercept)
        seed = 0 if self.random_state is None else int(self.random_state)
        data = Dataset(Xc, yc)
        if data.lambda_max <= 0.0:
            raise ValueError("design matrix is zero after centering")
        if self.sigma2 is None:
            eb = estimate_sigma2(data, folds=min(self.folds, X.shape[0]), seed=seed)
            sigma2 = eb.sigma2
        else:
            sigma2 = float(self.sigma2)
        data = data.with_sigma2(sigma2)
        config = SamplerConfig(n_iter=self.n_iter, burn_in=self.burn_in, gamma0=self.gamma0,
                               thin=self.thin, seed=seed)
        init = initial_state(data, alpha=self.alpha, u=self.u, gamma0=self.gamma0)
        summary = run_chain(data, config, init)
        self.sigma2_ = sigma2
        self.coef_ = summary.prox_mean
        self.theta_mean_ = summary.theta_mean
        self.inclusion_probs_ = summary.inclusion_probs
        self.acceptance_ = summary.acceptance
        self.gamma_ = summary.gamma
        self.summary_ = summary
        self.intercept_ = y_mean - float(x_mean @ self.coef_)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return X @ self.coef_ + self.intercept_

    def selected_features(self, threshold=0.5):
        """Indices whose posterior inclusion probability exceeds ``threshold``."""
        check_is_fitted(self, "inclusion_probs_")
        return np.flatnonzero(self.inclusion_probs_ > threshold)


class LassoFISTA(RegressorMixin, BaseEstimator):
    """Lasso, ``0.5 ||y - X b||^2 + lam ||b||_1``, solved by FISTA.

    ``lam=None`` picks the penalty by K-fold cross-validation.
    """

    def __init__(self, lam=None, folds=10, tol=1e-12, kkt_tol=1e-7, max_iter=200_000,
                 fit_intercept=True, random_state=0):
        self.lam = lam
        self.folds = folds
        self.tol = tol
        self.kkt_tol = kkt_tol
        self.max_iter = max_iter
        self.fit_intercept = fit_intercept
        self.random_state = random_state

    def fit(self, X, y):
        X, y = validate_data(self, X, y, y_numeric=True)
        Xc, yc, x_mean, y_mean = _center(X, y, self.fit_intercept)
        data = Dataset(Xc, yc)
        lam = self.lam
        if lam is None:
            seed = 0 if self.random_state is None else int(self.random_state)
            lam = cv_select_lambda(data, min(self.folds, X.shape[0]), seed=seed).lam
        fit = lasso_fista(data, float(lam), tol=self.tol, max_iter=self.max_iter, kkt_tol=self.kkt_tol)
        self.lam_ = fit.lam
        self.coef_ = fit.beta
        self.kkt_residual_ = fit.kkt_residual
        self.n_iter_ = fit.n_iter
        self.intercept_ = y_mean - float(x_mean @ self.coef_)
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return X @ self.coef_ + self.intercept_
