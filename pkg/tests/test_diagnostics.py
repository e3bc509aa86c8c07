import numpy as np
import pytest

from conftest import philox
from moreau_slab.diagnostics import (
    TruthSpec,
    acceptance_rates,
    autocorr,
    batch_means_se,
    inclusion_probs,
    relative_error,
    sen_prec_f,
)


def test_sen_prec_f_examples():
    truth = np.array([1, 1, 0, 0, 1], bool)
    assert sen_prec_f(np.array([2.0, 0.0, 0.0, 0.0, -1.0]), truth) == pytest.approx((2 / 3, 1.0, 0.8))
    assert sen_prec_f(np.array([1, 1, 1, 1, 1], bool), truth) == pytest.approx((1.0, 0.6, 0.75))
    assert sen_prec_f(np.zeros(5), truth) == (0.0, 1.0, 0.0)
    assert sen_prec_f(np.array([0, 0, 1, 0, 0], bool), truth) == (0.0, 0.0, 0.0)
    with pytest.raises(ValueError):
        sen_prec_f(np.ones(5), np.zeros(5, bool))


def test_relative_error():
    assert relative_error([3.0, 4.0], [0.0, 4.0]) == pytest.approx(3.0 / 4.0)
    with pytest.raises(ValueError):
        relative_error([1.0], [0.0])


def test_truth_support():
    assert TruthSpec(np.array([0.0, 2.0, -1.0])).delta.tolist() == [False, True, True]


def test_autocorr_of_ar1():
    rng = philox(0)
    x = np.zeros(200_000)
    e = rng.standard_normal(x.size)
    for t in range(1, x.size):
        x[t] = 0.7 * x[t - 1] + e[t]
    rho = autocorr(x, 3)
    assert rho[0] == 1.0
    assert np.allclose(rho[1:], [0.7, 0.49, 0.343], atol=0.01)
    with pytest.raises(ValueError):
        autocorr(np.ones(10), 2)
    with pytest.raises(ValueError):
        autocorr(x[:5], 5)


def test_acceptance_and_inclusion_from_trace_dicts():
    trace = [
        {"iter": 1, "delta": "10", "acc_mala": True, "acc_ind": None, "acc_rwm": False},
        {"iter": 2, "delta": "11", "acc_mala": False, "acc_ind": None, "acc_rwm": True},
        {"iter": 3, "delta": "01", "acc_mala": True, "acc_ind": True, "acc_rwm": True},
    ]
    rates = acceptance_rates(trace)
    assert rates == {"mala": pytest.approx(2 / 3), "ind": 1.0, "rwm": pytest.approx(2 / 3)}
    assert np.allclose(inclusion_probs(trace), [2 / 3, 2 / 3])
    assert np.allclose(inclusion_probs(trace, burn_in=1), [0.5, 1.0])
    with pytest.raises(ValueError):
        inclusion_probs(trace, burn_in=5)


def test_batch_means_se():
    b = np.array([[1.0, 2.0], [3.0, 2.0], [2.0, 2.0]])
    assert np.allclose(batch_means_se(b), [1.0 / np.sqrt(3), 0.0])
    with pytest.raises(ValueError):
        batch_means_se(b[:1])
