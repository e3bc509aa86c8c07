"""Synthetic sparse-regression scenarios with AR-correlated Gaussian designs."""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .diagnostics import TruthSpec
from .linmodel import Dataset


@dataclass(frozen=True)
class ScenarioConfig:
    """Design and signal settings. ``signal=None`` uses ``sqrt(log(d)/n)``."""

    n: int = 200
    d: int = 500
    s_star: int = 10
    signal: Optional[float] = 1.0
    rho: float = 0.9
    sigma: float = 1.0
    seed: int = 0

    def __post_init__(self):
        if self.n < 1 or self.d < 1:
            raise ValueError("n and d must be positive")
        if not 0 <= self.s_star <= self.d:
            raise ValueError(f"s_star={self.s_star} must lie in [0, d={self.d}]")
        if not -1.0 < self.rho < 1.0:
            raise ValueError("rho must lie in (-1, 1)")
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @property
    def amplitude(self):
        return math.sqrt(math.log(self.d) / self.n) if self.signal is None else self.signal

    def to_dict(self):
        return asdict(self)


def ar_design(n: int, d: int, rho: float, rng) -> np.ndarray:
    """Rows with unit variances and correlation ``rho^|i-j|``."""
    eps = rng.standard_normal((n, d))
    X = np.empty((n, d))
    X[:, 0] = eps[:, 0]
    scale = math.sqrt(1.0 - rho * rho)
    for j in range(1, d):
        X[:, j] = rho * X[:, j - 1] + scale * eps[:, j]
    return X


def gen_scenario(cfg: ScenarioConfig):
    """Draw ``(Dataset, TruthSpec)``.

    ``s_star`` coefficients, chosen uniformly without replacement, get
    ``eps * U(v/2, 3v/2)`` with a random sign ``eps``; ``z = X theta + sigma e``.
    The dataset carries ``sigma2 = sigma**2``.
    """
    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(cfg.seed)))
    X = ar_design(cfg.n, cfg.d, cfg.rho, rng)
    theta = np.zeros(cfg.d)
    support = rng.choice(cfg.d, size=cfg.s_star, replace=False)
    v = cfg.amplitude
    signs = np.where(rng.random(cfg.s_star) < 0.5, -1.0, 1.0)
    theta[support] = signs * rng.uniform(0.5 * v, 1.5 * v, size=cfg.s_star)
    z = X @ theta + cfg.sigma * rng.standard_normal(cfg.n)
    return Dataset(X, z, cfg.sigma ** 2), TruthSpec(theta)
