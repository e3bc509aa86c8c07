"""Gaussian linear regression with an elastic-net spike-and-slab prior.

Holds the data container, the quadratic loss and its derivatives, the
spectral quantities that fix the step size, the slab normalizer and the
hyperprior on ``(q, lambda1, lambda2)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import betaln

from .prox import ElasticNet


class PowerIterationError(RuntimeError):
    """Power iteration stopped before reaching its tolerance."""

    def __init__(self, message, eigenvalue, vector):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.vector = vector


@dataclass(frozen=True, eq=False)
class Dataset:
    """Design ``X`` (n x d), response ``z`` (n,) and known noise variance."""

    X: np.ndarray
    z: np.ndarray
    sigma2: float = 1.0
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        X = np.ascontiguousarray(self.X, dtype=float)
        z = np.ascontiguousarray(self.z, dtype=float).reshape(-1)
        if X.ndim != 2:
            raise ValueError(f"X must be two-dimensional, got shape {X.shape}")
        n, d = X.shape
        if n < 1 or d < 1:
            raise ValueError("X must have at least one row and one column")
        if z.shape[0] != n:
            raise ValueError(f"X has {n} rows but z has {z.shape[0]} entries")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(z))):
            raise ValueError("X and z must be finite")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise ValueError(f"sigma2 must be positive, got {self.sigma2!r}")
        X.setflags(write=False)
        z.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "z", z)
        object.__setattr__(self, "sigma2", float(self.sigma2))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def d(self):
        return self.X.shape[1]

    @property
    def gram(self):
        """``X'X``, computed once."""
        if "gram" not in self._cache:
            g = self.X.T @ self.X
            g.setflags(write=False)
            self._cache["gram"] = g
        return self._cache["gram"]

    @property
    def Xtz(self):
        if "Xtz" not in self._cache:
            v = self.X.T @ self.z
            v.setflags(write=False)
            self._cache["Xtz"] = v
        return self._cache["Xtz"]

    @property
    def lambda_max(self):
        """Largest eigenvalue of ``X'X`` by power iteration, cached."""
        if "lambda_max" not in self._cache:
            self._cache["lambda_max"] = lambda_max(self)
        return self._cache["lambda_max"]

    def with_sigma2(self, sigma2):
        out = Dataset(self.X, self.z, sigma2)
        out._cache.update(self._cache)
        return out


def _as_theta(data, theta):
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (data.d,):
        raise ValueError(f"theta must have shape ({data.d},), got {theta.shape}")
    return theta


def neg_log_lik(data: Dataset, theta) -> float:
    """``||z - X theta||^2 / (2 sigma2)``."""
    r = data.z - data.X @ _as_theta(data, theta)
    return float(r @ r) / (2.0 * data.sigma2)


def grad_neg_log_lik(data: Dataset, theta) -> np.ndarray:
    """``-X'(z - X theta) / sigma2``."""
    r = data.z - data.X @ _as_theta(data, theta)
    return -(data.X.T @ r) / data.sigma2


class LinearLoss:
    """Quadratic loss of a :class:`Dataset` in the smooth-loss protocol."""

    def __init__(self, data: Dataset):
        self.data = data

    def value(self, theta):
        return neg_log_lik(self.data, theta)

    def gradient(self, theta):
        return grad_neg_log_lik(self.data, theta)

    def hessian_apply(self, theta, v):
        return self.data.gram @ np.asarray(v, dtype=float) / self.data.sigma2


def lambda_max(data_or_X, tol: float = 1e-10, max_iter: int = 10_000, seed: int = 0) -> float:
    """Largest eigenvalue of ``X'X`` by power iteration.

    Works on products ``X'(X v)`` so ``X'X`` is never formed. The start vector
    is drawn from a fixed seed. Stops when the Rayleigh quotient changes by
    less than ``tol`` relative.
    """
    X = data_or_X.X if isinstance(data_or_X, Dataset) else np.asarray(data_or_X, dtype=float)
    d = X.shape[1]
    v = np.random.default_rng(seed).standard_normal(d)
    v /= np.linalg.norm(v)
    w = X.T @ (X @ v)
    rayleigh = float(v @ w)
    for _ in range(max_iter):
        norm = np.linalg.norm(w)
        if norm == 0.0:
            return 0.0
        v = w / norm
        w = X.T @ (X @ v)
        new = float(v @ w)
        if abs(new - rayleigh) <= tol * abs(new):
            return new
        rayleigh = new
    raise PowerIterationError(
        f"power iteration did not reach tolerance {tol} in {max_iter} iterations", rayleigh, v
    )


def gamma_from_rule(data: Dataset, gamma0: float = 0.25) -> float:
    """Step ``gamma0 * sigma2 / lambda_max(X'X)`` with ``gamma0`` in (0, 1/4]."""
    if not 0.0 < gamma0 <= 0.25:
        raise ValueError(f"gamma0 must lie in (0, 0.25], got {gamma0!r}")
    return gamma0 * data.sigma2 / data.lambda_max


@dataclass(frozen=True)
class HyperState:
    """Sparsity weight ``q`` and slab penalties, plus the fixed prior settings.

    ``alpha`` and ``u`` are fixed; ``a_min`` and ``M`` bound the uniform
    hyperprior on both penalties, and ``M1`` further caps ``lambda1``.
    """

    q: float
    lam1: float
    lam2: float
    alpha: float = 1.0
    u: float = 1.1
    a_min: float = 1e-5
    M: float = math.inf
    M1: float = math.inf

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError(f"q must lie in (0, 1), got {self.q!r}")
        if not 0.0 <= self.alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {self.alpha!r}")
        if self.u <= 1.0:
            raise ValueError(f"u must exceed 1, got {self.u!r}")

    def replace(self, **changes):
        return replace(self, **changes)

    def prior(self, sigma2: float) -> ElasticNet:
        return ElasticNet(self.alpha, self.lam1, self.lam2, sigma2)

    def in_support(self):
        lo, hi = self.a_min, self.M
        return lo <= self.lam1 <= min(hi, self.M1) and lo <= self.lam2 <= hi


def default_upper_bound(data: Dataset, alpha: float) -> float:
    """Hyperprior bound ``M`` with ``(1 - alpha) M <= lambda_max(X'X)``."""
    return data.lambda_max / max(1.0 - alpha, 1e-8)


def default_lam1_cap(data: Dataset, gamma: float) -> float:
    """``sigma2 / sqrt(gamma)``: past this the soft threshold ``gamma lam1 / sigma2``
    exceeds the ``sqrt(gamma)`` noise scale of the envelope and the
    approximate posterior grows like ``lam1 ** |delta|``.
    """
    return data.sigma2 / math.sqrt(gamma)


def log_Z(phi: HyperState, sigma2: float) -> float:
    """Log normalizer of the elastic-net slab density."""
    if phi.alpha < 1.0 and not phi.lam2 > 0:
        raise ValueError("lam2 must be positive when alpha < 1")
    if phi.alpha == 1.0 and not phi.lam1 > 0:
        raise ValueError("lam1 must be positive when alpha == 1")
    return phi.prior(sigma2).log_normalizer()


def log_prior_delta(delta, phi: HyperState) -> float:
    """``log(q^s (1-q)^(d-s))`` for ``s = ||delta||_0``."""
    delta = np.asarray(delta)
    s = int(np.count_nonzero(delta))
    d = delta.size
    return s * math.log(phi.q) + (d - s) * math.log1p(-phi.q)


def log_hyperprior(phi: HyperState, d: int) -> float:
    """``q ~ Beta(1, d^u)``; uniform penalties on ``[a_min, M]``.

    The uniform densities enter only through their support: they are
    constant in ``phi`` and dropped.
    """
    if not phi.in_support():
        return -math.inf
    b = float(d) ** phi.u
    return (b - 1.0) * math.log1p(-phi.q) - betaln(1.0, b)
