"""Scaled complementary error function.

``erfcx(x) = exp(x**2) * erfc(x)``, evaluated without the overflow and
cancellation that the naive product suffers for large ``x``.
"""
import math

import numpy as np

_SQRT_PI = math.sqrt(math.pi)
_TWO_OVER_SQRT_PI = 2.0 / _SQRT_PI

# below this the power series is used, above it the continued fraction
_SERIES_CUTOFF = 1.5
_ASYMPTOTIC_CUTOFF = 30.0


def _erfcx_series(x):
    # exp(x^2) - 2/sqrt(pi) * sum_n 2^n x^(2n+1) / (2n+1)!!
    # every term is positive, so the only cancellation is the final subtraction
    term = x
    total = x
    x2 = x * x
    n = 0
    while True:
        n += 1
        term *= 2.0 * x2 / (2 * n + 1)
        total += term
        if term <= 1e-17 * total:
            break
    return math.exp(x2) - _TWO_OVER_SQRT_PI * total


def _erfcx_continued_fraction(x):
    # erfc(x) exp(x^2) sqrt(pi) = 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    # evaluated with the modified Lentz algorithm
    tiny = 1e-300
    f = x
    c = x
    d = 0.0
    k = 1
    while k < 5000:
        a = 0.5 * k
        d = x + a * d
        d = tiny if d == 0.0 else d
        c = x + a / c
        c = tiny if c == 0.0 else c
        d = 1.0 / d
        delta = c * d
        f *= delta
        if abs(delta - 1.0) < 1e-16:
            break
        k += 1
    return 1.0 / (f * _SQRT_PI)


def _erfcx_asymptotic(x):
    # 1/(x sqrt(pi)) * sum_k (-1)^k (2k-1)!! / (2 x^2)^k
    inv = 1.0 / (2.0 * x * x)
    term = 1.0
    total = 1.0
    for k in range(1, 12):
        term *= -(2 * k - 1) * inv
        total += term
        if abs(term) < 1e-17:
            break
    return total / (x * _SQRT_PI)


def _erfcx_scalar(x):
    x = float(x)
    if not math.isfinite(x):
        if x == math.inf:
            return 0.0
        if x == -math.inf:
            return math.inf
        return math.nan
    if x < 0.0:
        if x < -26.7:
            return math.inf
        return 2.0 * math.exp(x * x) - _erfcx_scalar(-x)
    if x == 0.0:
        return 1.0
    if x < _SERIES_CUTOFF:
        return _erfcx_series(x)
    if x <= _ASYMPTOTIC_CUTOFF:
        return _erfcx_continued_fraction(x)
    return _erfcx_asymptotic(x)


def erfcx(x):
    """Scaled complementary error function ``exp(x**2) * erfc(x)``.

    Accepts scalars or arrays. Relative accuracy is close to machine
    precision on ``[0, 30]``; beyond 30 the asymptotic series is used.
    """
    if np.ndim(x) == 0:
        return _erfcx_scalar(x)
    arr = np.asarray(x, dtype=float)
    return np.vectorize(_erfcx_scalar, otypes=[float])(arr)


def log_erfcx(x):
    """``log(erfcx(x))``; finite for all finite ``x >= -26``."""
    if np.ndim(x) == 0:
        x = float(x)
        if x < -26.0:
            # erfcx(x) ~ 2 exp(x^2) for very negative x
            return math.log(2.0) + x * x
        return math.log(_erfcx_scalar(x))
    return np.vectorize(log_erfcx, otypes=[float])(np.asarray(x, dtype=float))
