import itertools

import numpy as np
import pytest

from scalekit.config import SolverConfig, Status
from scalekit.diagnostics import cross_ratio_drift, cross_ratios, rate_estimate, verify_scaling
from scalekit.equivalence import ConvergenceTrace, ras_scale
from scalekit.feasibility import MarginSpec

UNIT2 = MarginSpec([1, 1], [1, 1])


def test_cross_ratio_example():
    assert cross_ratios([[1, 2], [3, 4]], (0, 0, 1, 1)) == pytest.approx(2 / 3, abs=1e-15)


def test_cross_ratios_constant_matrix():
    A = np.full((3, 3), 7.0)
    for q in itertools.product(range(3), repeat=4):
        assert cross_ratios(A, q) == 1.0


def test_cross_ratio_zero_denominator():
    with pytest.raises(ZeroDivisionError):
        cross_ratios([[1, 0], [0, 1]], (0, 0, 1, 1))


def test_cross_ratios_survive_ras():
    rng = np.random.default_rng(0)
    A = rng.uniform(0.1, 2.0, (4, 4))
    B = ras_scale(A, MarginSpec.uniform(4)).B
    for q in itertools.product(range(4), repeat=4):
        a = cross_ratios(A, q)
        assert abs(a - cross_ratios(B, q)) / a <= 1e-12
    assert cross_ratio_drift(A, B) <= 1e-12


def test_verify_valid_result():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    rep = verify_scaling(A, UNIT2, ras_scale(A, UNIT2, SolverConfig(tol=1e-12)))
    assert rep.passed
    assert rep.stationarity <= 1e-10
    assert rep.gp_residual <= 1e-10


def test_verify_corrupted_d1():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    res = ras_scale(A, UNIT2)
    res.d1 = res.d1.copy()
    res.d1[0] *= 1.01
    rep = verify_scaling(A, UNIT2, res)
    assert not rep.margins_ok
    assert not rep.passed
    # cross ratios do not see diagonal scaling errors
    assert rep.cross_ratio_drift <= 1e-12


def test_verify_approx_only_vanished_entries():
    A = np.array([[1.0, 1.0], [0.0, 1.0]])
    res = ras_scale(A, UNIT2)
    assert res.status == Status.APPROX_ONLY
    rep = verify_scaling(A, UNIT2, res)
    assert rep.vanished == res.trace.vanished == [(0, 1)]
    assert rep.pattern_ok and not rep.pattern_equal


def test_rate_on_closed_form_limit():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    x = 2 / (2 + np.sqrt(6))
    B = np.array([[x, 1 - x], [1 - x, x]])
    res = ras_scale(A, UNIT2, SolverConfig(tol=1e-14, max_iters=100))
    est = rate_estimate(res.trace, B, window=4)
    # sigma_2 of [[x, 1-x], [1-x, x]] is |2x - 1|
    assert est.sigma2_squared == pytest.approx((2 * x - 1) ** 2, rel=1e-12)
    assert est.measured_rate == pytest.approx(est.sigma2_squared, rel=0.1)


def test_rate_flags_identity_limit():
    trace = ConvergenceTrace()
    for k, r in enumerate(np.geomspace(1, 1e-3, 10)):
        trace.append(k, r, r, 0.0, 1.0)
    est = rate_estimate(trace, np.eye(3), window=5)
    assert est.degenerate
    assert est.sigma2_squared == 1.0


def test_rate_needs_enough_records():
    trace = ConvergenceTrace()
    trace.append(0, 1.0, 1.0, 0.0, 1.0)
    with pytest.raises(ValueError):
        rate_estimate(trace, np.eye(2), window=5)
