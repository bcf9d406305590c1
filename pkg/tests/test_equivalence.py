import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

import oracles
from scalekit.config import NotScalableError, SolverConfig, Status
from scalekit.equivalence import (gradient_scale, i_projection_step, menon_iterates, menon_map,
                                  menon_scale, ras_iterates, ras_scale, rel_entropy)
from scalekit.feasibility import MarginSpec, maximal_subpattern
from scalekit.potentials import single_potential, single_potential_change, single_potential_grad

UNIT2 = MarginSpec([1, 1], [1, 1])
A12 = np.array([[1.0, 2.0], [3.0, 4.0]])
TIGHT = SolverConfig(tol=1e-12, max_iters=20000)

positive = arrays(float, (3, 4), elements=st.floats(0.05, 20))


def test_ras_closed_form():
    res = ras_scale(A12, UNIT2, TIGHT)
    assert res.status == Status.CONVERGED
    assert np.allclose(res.B, oracles.closed_form_2x2(A12), atol=1e-12)
    assert res.B[0, 0] == pytest.approx(0.4494897427831781, abs=1e-12)


def test_ras_result_invariants():
    res = ras_scale(A12, UNIT2)
    assert np.array_equal(res.B, res.d1[:, None] * A12 * res.d2[None, :])
    assert np.exp(np.mean(np.log(res.d1))) == pytest.approx(1.0, abs=1e-14)


def test_ras_doubly_stochastic_fixed_point():
    A = np.array([[0.25, 0.75], [0.75, 0.25]])
    res = ras_scale(A, UNIT2)
    assert res.status == Status.CONVERGED
    assert np.allclose(res.d1, 1) and np.allclose(res.d2, 1)
    assert np.allclose(res.B, A)
    assert res.iterations <= 1


def test_ras_approx_only_limit():
    res = ras_scale([[1, 1], [0, 1]], UNIT2)
    assert res.status == Status.APPROX_ONLY
    assert res.trace.vanished == [(0, 1)]
    assert np.allclose(res.B, np.eye(2), atol=1e-8)


def test_ras_zero_line_infeasible():
    assert ras_scale([[1, 0], [1, 0]], UNIT2).status == Status.INFEASIBLE


def test_ras_rejects_unbalanced_totals():
    with pytest.raises(ValueError):
        ras_scale(np.ones((2, 2)), MarginSpec([1, 1], [1, 3]))


def test_menon_first_step():
    Tx = menon_map(A12, UNIT2, np.ones(2))
    assert np.allclose(Tx, [21 / 16, 21 / 26], rtol=0, atol=1e-15)


def test_menon_identity_converges_immediately():
    res = menon_scale(np.eye(2), UNIT2)
    assert res.status == Status.CONVERGED
    assert res.iterations == 0


def test_menon_cycles_match_ras():
    rng = np.random.default_rng(5)
    A = rng.uniform(0.1, 2.0, (5, 5))
    m = MarginSpec.uniform(5)
    ras = ras_iterates(A, m)
    men = menon_iterates(A, m)
    next(men)
    for _ in range(30):
        _, _, d2 = next(ras)
        x = next(men)
        assert np.abs(x - d2).max() <= 1e-14 * np.abs(d2).max()


def test_menon_agrees_with_ras_limit():
    rng = np.random.default_rng(8)
    A = rng.uniform(0.1, 2.0, (4, 6))
    m = MarginSpec(np.full(4, 1.5), np.full(6, 1.0))
    a = ras_scale(A, m, TIGHT)
    b = menon_scale(A, m, TIGHT)
    assert np.allclose(a.B, b.B, atol=1e-10)
    assert np.allclose(a.d1, b.d1, rtol=1e-8)


def test_gradient_doubly_stochastic_is_stationary():
    A = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert np.allclose(single_potential_grad(A, UNIT2, np.zeros(2)), 0)
    res = gradient_scale(A, UNIT2)
    assert res.iterations == 0
    assert np.allclose(res.d1, 1) and np.allclose(res.d2, 1)


def test_gradient_matches_ras():
    res = gradient_scale(A12, UNIT2, SolverConfig(tol=1e-11))
    assert res.status == Status.CONVERGED
    assert np.allclose(res.B, oracles.closed_form_2x2(A12), atol=1e-6)


def test_gradient_rectangular():
    rng = np.random.default_rng(3)
    A = rng.uniform(0.2, 3.0, (3, 5))
    m = MarginSpec([2.0, 2.0, 1.0], [1.0] * 5)
    g = gradient_scale(A, m, SolverConfig(tol=1e-11))
    r = ras_scale(A, m, TIGHT)
    assert np.allclose(g.B, r.B, atol=1e-8)


def test_gradient_rejects_approx_only():
    with pytest.raises(NotScalableError):
        gradient_scale([[1, 1], [0, 1]], UNIT2)


@settings(max_examples=25)
@given(positive, arrays(float, 4, elements=st.floats(-2, 2)))
def test_potential_gradient_finite_differences(A, xi):
    m = MarginSpec([1.0, 2.0, 1.0], [1.0, 1.0, 1.0, 1.0])
    g = single_potential_grad(A, m, xi)
    fd = oracles.central_gradient(lambda z: single_potential(A, m, z), xi, h=1e-6)
    assert np.allclose(g, fd, rtol=1e-5, atol=1e-6)


@settings(max_examples=25)
@given(positive, arrays(float, 4, elements=st.floats(-2, 2)),
       arrays(float, 4, elements=st.floats(-1, 1)))
def test_potential_change_matches_difference(A, xi, step):
    m = MarginSpec([1.0, 2.0, 1.0], [1.0, 1.0, 1.0, 1.0])
    direct = single_potential(A, m, xi + step) - single_potential(A, m, xi)
    assert single_potential_change(A, m, xi, step) == pytest.approx(direct, abs=1e-10)


def test_rel_entropy_examples():
    A = np.array([[0.5, 0.5], [0.5, 0.5]])
    assert rel_entropy(A, A) == 0.0
    assert rel_entropy(np.eye(2), A) == pytest.approx(2 * math.log(2), abs=1e-15)
    assert rel_entropy(np.eye(2), [[0, 1], [1, 0]]) == math.inf
    with pytest.raises(ValueError):
        rel_entropy(np.eye(2), np.ones((2, 3)))


@settings(max_examples=25)
@given(positive, positive)
def test_rel_entropy_matches_oracle(B, A):
    assert rel_entropy(B, A) == pytest.approx(oracles.kl(B, A), rel=1e-12, abs=1e-12)


def test_i_projection_rows():
    B = i_projection_step(np.ones((2, 2)), UNIT2, "rows")
    assert np.allclose(B, 0.5)
    with pytest.raises(ValueError):
        i_projection_step([[1, 1], [0, 0]], UNIT2, "rows")
    with pytest.raises(ValueError):
        i_projection_step(np.ones((2, 2)), UNIT2, "diag")


@pytest.mark.parametrize("seed", range(5))
def test_pythagorean_identity(seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.1, 2.0, (3, 3))
    m = MarginSpec([1.0, 2.0, 3.0], [2.0, 2.0, 2.0])
    B = i_projection_step(A, m, "rows")
    # any C with row sums r lies in the constraint set
    C = rng.uniform(0.1, 2.0, (3, 3))
    C = C * (m.r / C.sum(axis=1))[:, None]
    assert rel_entropy(C, A) == pytest.approx(rel_entropy(C, B) + rel_entropy(B, A), abs=1e-10)


def test_alternating_projections_reproduce_ras_bitwise():
    rng = np.random.default_rng(2)
    A = rng.uniform(0.1, 2.0, (4, 3))
    m = MarginSpec([1.0, 1.0, 0.5, 0.5], [1.0, 1.0, 1.0])
    it = ras_iterates(A, m)
    B = A
    for _ in range(10):
        B = i_projection_step(i_projection_step(B, m, "rows"), m, "cols")
        R, _, _ = next(it)
        assert np.array_equal(B, R)


def test_distance_to_limit_non_increasing():
    # D(B_k || A) itself can move both ways (seed 1 here); the divergence
    # of the limit from the iterates is the monotone quantity
    for seed in range(5):
        rng = np.random.default_rng(seed)
        A = rng.uniform(0.1, 2.0, (5, 5))
        m = MarginSpec.uniform(5)
        limit = ras_scale(A, m, TIGHT).B
        dists = [rel_entropy(limit, B) for B, _, _ in itertools.islice(ras_iterates(A, m), 20)]
        assert all(b <= a + 1e-15 for a, b in zip(dists, dists[1:]))


@pytest.mark.parametrize("mask", [
    [[1, 1, 0], [0, 1, 0], [0, 1, 1]],
    [[1, 1, 1], [0, 1, 0], [0, 1, 1]],
    [[1, 1, 0, 0], [1, 1, 1, 0], [0, 0, 1, 0], [0, 0, 1, 1]],
])
def test_approx_only_limit_pattern_is_maximal_subpattern(mask):
    A = np.array(mask, dtype=float)
    n = A.shape[0]
    m = MarginSpec.uniform(n)
    res = ras_scale(A, m, SolverConfig(tol=1e-9, max_iters=200000))
    assert res.status == Status.APPROX_ONLY
    expected = oracles.union_of_diagonals(A)
    assert np.array_equal(res.B > 1e-6, expected)
    assert np.array_equal(maximal_subpattern(A, m).mask, expected)


def test_uniqueness_from_prescaled_start():
    rng = np.random.default_rng(6)
    A = rng.uniform(0.1, 2.0, (4, 4))
    m = MarginSpec.uniform(4)
    a = ras_scale(A, m, TIGHT)
    D1 = rng.uniform(0.5, 2.0, 4)
    D2 = rng.uniform(0.5, 2.0, 4)
    b = ras_scale(D1[:, None] * A * D2[None, :], m, TIGHT)
    assert np.allclose(a.B, b.B, atol=1e-10)
    # factors of the prescaled problem absorb D1, D2 up to the gauge
    d1 = b.d1 * D1
    d2 = b.d2 * D2
    t = np.exp(np.mean(np.log(d1)))
    assert np.allclose(d1 / t, a.d1, rtol=1e-8)
    assert np.allclose(d2 * t, a.d2, rtol=1e-8)


@pytest.mark.parametrize("seed", range(5))
def test_continuity(seed):
    rng = np.random.default_rng(seed)
    A = rng.uniform(0.1, 2.0, (4, 4))
    m = MarginSpec.uniform(4)
    base = ras_scale(A, m, TIGHT).B
    delta = 1e-6
    moved = ras_scale(A + delta * rng.uniform(-1, 1, A.shape), m, TIGHT).B
    assert np.abs(moved - base).max() <= 1e3 * delta
