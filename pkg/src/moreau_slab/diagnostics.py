"""Recovery metrics and basic MCMC diagnostics."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np


@dataclass(frozen=True, eq=False)
class TruthSpec:
    """True coefficients; the true support is ``theta != 0``."""

    theta: np.ndarray

    def __post_init__(self):
        theta = np.asarray(self.theta, dtype=float).reshape(-1)
        if not np.all(np.isfinite(theta)):
            raise ValueError("true coefficients must be finite")
        object.__setattr__(self, "theta", theta)

    @property
    def delta(self):
        return self.theta != 0.0


def relative_error(theta, theta_star) -> float:
    """``||theta - theta_star|| / ||theta_star||``."""
    theta = np.asarray(theta, dtype=float)
    theta_star = np.asarray(theta_star, dtype=float)
    ref = float(np.linalg.norm(theta_star))
    if ref == 0.0:
        raise ValueError("relative error is undefined for a zero truth vector")
    return float(np.linalg.norm(theta - theta_star)) / ref


def sen_prec_f(estimate, delta_star):
    """Sensitivity, precision and F-score of a support estimate.

    ``estimate`` may be a coefficient vector (support is ``!= 0``) or a
    boolean mask. An empty estimate has precision 1 and F-score 0.
    """
    est = np.asarray(estimate)
    est = est if est.dtype == bool else est != 0
    truth = np.asarray(delta_star).astype(bool)
    n_true = int(truth.sum())
    if n_true == 0:
        raise ValueError("the true support is empty")
    hits = int(np.count_nonzero(est & truth))
    n_est = int(est.sum())
    sen = hits / n_true
    if n_est == 0:
        return sen, 1.0, 0.0
    prec = hits / n_est
    f = 0.0 if hits == 0 else 2.0 * sen * prec / (sen + prec)
    return sen, prec, f


def autocorr(series, max_lag: int) -> np.ndarray:
    """Sample autocorrelation at lags ``0..max_lag`` (biased normalization)."""
    x = np.asarray(series, dtype=float).reshape(-1)
    if x.size == 0:
        raise ValueError("empty series")
    if not 0 <= max_lag < x.size:
        raise ValueError("max_lag must be smaller than the series length")
    x = x - x.mean()
    var = float(x @ x)
    if var == 0.0:
        raise ValueError("autocorrelation is undefined for a constant series")
    return np.array([float(x[: x.size - k] @ x[k:]) / var for k in range(max_lag + 1)])


_KERNELS = ("acc_mala", "acc_ind", "acc_rwm")


def _get(record, key):
    return record[key] if isinstance(record, Mapping) else getattr(record, key)


def acceptance_rates(trace: Iterable) -> dict:
    """Accepted over attempted, per kernel; ``None`` for a kernel never tried.

    Records are trace dictionaries or :class:`TraceRecord` objects; an
    ``acc_*`` entry of ``None`` means the kernel did not run that sweep.
    """
    trace = list(trace)
    if not trace:
        raise ValueError("empty trace")
    rates = {}
    for key in _KERNELS:
        flags = [_get(r, key) for r in trace if _get(r, key) is not None]
        rates[key[4:]] = (sum(bool(f) for f in flags) / len(flags)) if flags else None
    return rates


def _delta_array(value):
    if isinstance(value, str):
        return np.frombuffer(value.encode(), dtype=np.uint8) == ord("1")
    return np.asarray(value).astype(bool)


def inclusion_probs(trace: Iterable, burn_in: int = 0) -> np.ndarray:
    """Mean of ``delta`` over the records with ``iter > burn_in``."""
    rows = [_delta_array(_get(r, "delta")) for r in trace if _get(r, "iter") > burn_in]
    if not rows:
        raise ValueError("empty trace")
    return np.mean(np.vstack(rows), axis=0)


def batch_means_se(batch_means) -> np.ndarray:
    """Monte Carlo standard error of the grand mean from equal-size batch means."""
    b = np.asarray(batch_means, dtype=float)
    if b.shape[0] < 2:
        raise ValueError("need at least two batches")
    return b.std(axis=0, ddof=1) / np.sqrt(b.shape[0])
