import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from moreau_slab.special import erfcx, log_erfcx

mpmath.mp.dps = 40


def ref_erfcx(x):
    return float(mpmath.exp(mpmath.mpf(x) ** 2) * mpmath.erfc(mpmath.mpf(x)))


@pytest.mark.parametrize("x", [-5.0, -1.0, -1e-3, 0.0, 1e-8, 0.3, 1.49, 1.5, 1.51, 4.0, 12.0, 29.9, 30.1, 100.0, 1e4])
def test_erfcx_matches_mpmath(x):
    assert erfcx(x) == pytest.approx(ref_erfcx(x), rel=1e-13)


def test_erfcx_dense_grid():
    xs = np.linspace(-3, 40, 431)
    ref = np.array([ref_erfcx(x) for x in xs])
    assert np.max(np.abs(erfcx(xs) / ref - 1)) < 1e-13


def test_log_erfcx_far_left_is_finite():
    assert log_erfcx(-30.0) == pytest.approx(math.log(2) + 900.0, rel=1e-15)
    assert log_erfcx(5.0) == pytest.approx(math.log(ref_erfcx(5.0)), rel=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.floats(-5, 1e3), st.floats(1e-6, 10))
def test_erfcx_is_decreasing(x, dx):
    assert erfcx(x + dx) <= erfcx(x)


@settings(max_examples=100, deadline=None)
@given(st.floats(50, 1e6))
def test_erfcx_tail_asymptote(x):
    # erfcx(x) * x * sqrt(pi) -> 1
    assert erfcx(x) * x * math.sqrt(math.pi) == pytest.approx(1.0, abs=1.0 / x ** 2)
