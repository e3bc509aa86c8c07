"""Plug-in noise variance from a cross-validated lasso fit."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .linmodel import Dataset, lambda_max


class LassoConvergenceError(RuntimeError):
    """FISTA hit its iteration cap; ``fit`` holds the last iterate."""

    def __init__(self, message, fit):
        super().__init__(message)
        self.fit = fit


@dataclass
class LassoFit:
    beta: np.ndarray
    lam: float
    support_size: int
    objective: float
    kkt_residual: float
    n_iter: int


def lasso_objective(X, z, beta, lam) -> float:
    r = z - X @ beta
    return 0.5 * float(r @ r) + lam * float(np.sum(np.abs(beta)))


def kkt_residual(X, z, beta, lam) -> float:
    """Largest violation of the lasso optimality conditions.

    Inactive coordinates need ``|X_j'r| <= lam``; active ones
    ``X_j'r = lam sign(beta_j)``.
    """
    c = X.T @ (z - X @ beta)
    active = beta != 0.0
    inactive_viol = np.maximum(np.abs(c[~active]) - lam, 0.0)
    active_viol = np.abs(c[active] - lam * np.sign(beta[active]))
    return float(max(inactive_viol.max(initial=0.0), active_viol.max(initial=0.0)))


def _fista(G, Xtz, zz, lam, L, beta0, tol, kkt_tol, max_iter):
    # works on the Gram matrix: objective = 0.5 zz - b'Xtz + 0.5 b'Gb + lam |b|_1
    def obj(b):
        return 0.5 * zz - float(b @ Xtz) + 0.5 * float(b @ (G @ b)) + lam * float(np.sum(np.abs(b)))

    def kkt(b):
        c = Xtz - G @ b
        active = b != 0.0
        v1 = np.maximum(np.abs(c[~active]) - lam, 0.0).max(initial=0.0)
        v2 = np.abs(c[active] - lam * np.sign(b[active])).max(initial=0.0)
        return float(max(v1, v2))

    step = 1.0 / L
    thr = lam * step
    x = beta0.copy()
    y = x.copy()
    t = 1.0
    f_old = obj(x)
    for it in range(1, max_iter + 1):
        w = y - step * (G @ y - Xtz)
        x_new = np.sign(w) * np.maximum(np.abs(w) - thr, 0.0)
        f_new = obj(x_new)
        if f_new > f_old:
            # restart: plain proximal step from the last iterate
            t = 1.0
            w = x - step * (G @ x - Xtz)
            x_new = np.sign(w) * np.maximum(np.abs(w) - thr, 0.0)
            f_new = obj(x_new)
            y = x_new.copy()
        else:
            t_new = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
            y = x_new + ((t - 1.0) / t_new) * (x_new - x)
            t = t_new
        change = abs(f_old - f_new) / max(abs(f_new), 1e-300)
        x, f_old = x_new, f_new
        if change < tol and (it % 10 == 0 or change == 0.0):
            if kkt(x) <= kkt_tol:
                return x, f_new, it, True
    return x, f_old, max_iter, False


def lasso_fista(data: Dataset, lam: float, tol: float = 1e-12, max_iter: int = 200_000,
                kkt_tol: float = 1e-7, beta0=None, L: Optional[float] = None) -> LassoFit:
    """Minimize ``0.5 ||z - X b||^2 + lam ||b||_1`` by FISTA with adaptive restart.

    Step ``1 / lambda_max(X'X)``. Stops once the relative objective change
    drops below ``tol`` and the KKT residual below ``kkt_tol``.
    """
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam!r}")
    X, z = data.X, data.z
    L = data.lambda_max if L is None else L
    beta0 = np.zeros(data.d) if beta0 is None else np.asarray(beta0, dtype=float)
    if np.max(np.abs(data.Xtz)) <= lam:
        beta = np.zeros(data.d)
        return LassoFit(beta, lam, 0, lasso_objective(X, z, beta, lam), kkt_residual(X, z, beta, lam), 0)
    beta, f, it, ok = _fista(data.gram, data.Xtz, float(z @ z), lam, max(L, 1e-300), beta0, tol, kkt_tol, max_iter)
    fit = LassoFit(beta, lam, int(np.count_nonzero(beta)), lasso_objective(X, z, beta, lam),
                   kkt_residual(X, z, beta, lam), it)
    if not ok:
        raise LassoConvergenceError(f"FISTA did not converge in {max_iter} iterations", fit)
    return fit


def default_lambda_grid(data: Dataset, n: int = 50, low: float = 0.01) -> np.ndarray:
    """``n`` log-spaced values over ``[low, 1] * ||X'z||_inf``, largest first."""
    top = float(np.max(np.abs(data.Xtz)))
    if top == 0.0:
        raise ValueError("X'z is zero; every penalty gives the null fit")
    return top * np.logspace(0.0, math.log10(low), n)


def fold_blocks(n: int, folds: int, seed: int = 0):
    """Contiguous blocks of a seeded permutation of the rows."""
    if folds < 2:
        raise ValueError("need at least two folds")
    if n < folds:
        raise ValueError(f"cannot split {n} rows into {folds} folds")
    perm = np.random.Generator(np.random.Philox(np.random.SeedSequence(seed))).permutation(n)
    return np.array_split(perm, folds)


@dataclass
class CVResult:
    lam: float
    lambdas: np.ndarray
    mse: np.ndarray
    se: np.ndarray


def cv_select_lambda(data: Dataset, folds: int = 10, lambdas: Optional[Sequence[float]] = None,
                     seed: int = 0, tol: float = 1e-9, kkt_tol: float = 1e-4) -> CVResult:
    """Penalty minimizing the mean held-out squared error over ``folds`` folds.

    Each fold runs the path from the largest penalty down with warm starts.
    Path fits only rank penalties, so they stop at a looser KKT tolerance
    than the final refit.
    """
    lambdas = default_lambda_grid(data) if lambdas is None else np.asarray(lambdas, dtype=float)
    if lambdas.ndim != 1 or lambdas.size == 0 or np.any(lambdas <= 0):
        raise ValueError("lambdas must be a non-empty list of positive values")
    order = np.argsort(-lambdas)
    errors = np.empty((folds, lambdas.size))
    for f, held in enumerate(fold_blocks(data.n, folds, seed)):
        train = np.setdiff1d(np.arange(data.n), held)
        sub = Dataset(data.X[train], data.z[train], data.sigma2)
        L = lambda_max(sub)
        beta = np.zeros(data.d)
        for k in order:
            beta = lasso_fista(sub, float(lambdas[k]), tol=tol, kkt_tol=kkt_tol, beta0=beta, L=L).beta
            r = data.z[held] - data.X[held] @ beta
            errors[f, k] = float(r @ r) / held.size
    mse = errors.mean(axis=0)
    se = errors.std(axis=0, ddof=1) / math.sqrt(folds)
    return CVResult(float(lambdas[int(np.argmin(mse))]), lambdas, mse, se)


def sigma2_hat(data: Dataset, fit: LassoFit) -> float:
    """``||z - X beta||^2 / (n - s)`` with ``s`` the lasso support size."""
    if fit.support_size >= data.n:
        raise ValueError("saturated fit: support size is not below n")
    r = data.z - data.X @ fit.beta
    return float(r @ r) / (data.n - fit.support_size)


@dataclass
class EBEstimate:
    sigma2: float
    fit: LassoFit
    cv: CVResult


def estimate_sigma2(data: Dataset, folds: int = 10, seed: int = 0, lambdas=None) -> EBEstimate:
    """Cross-validate the lasso penalty, refit on all rows and return the plug-in variance."""
    cv = cv_select_lambda(data, folds, lambdas, seed)
    fit = lasso_fista(data, cv.lam)
    return EBEstimate(sigma2_hat(data, fit), fit, cv)
