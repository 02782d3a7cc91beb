import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from hypothesis.extra.numpy import arrays

from samplespace import DimensionError, MassError, solve_assignment, solve_capacitated_assignment, solve_transport
from oracles import brute_assignment, lp_transport

costs = st.integers(2, 6).flatmap(
    lambda n: arrays(float, (n, n), elements=st.floats(0, 100, allow_subnormal=False)))


def test_assignment_examples():
    C = 1 - np.eye(4)
    perm, cost = solve_assignment(C)
    np.testing.assert_array_equal(perm, np.arange(4))
    assert cost == 0
    perm, cost = solve_assignment([[1, 0], [0, 1]])
    np.testing.assert_array_equal(perm, [1, 0])
    assert cost == 0


def test_assignment_matches_exhaustive_search_on_6x6(rng):
    for _ in range(20):
        C = rng.random((6, 6))
        perm, cost = solve_assignment(C)
        assert sorted(perm) == list(range(6))
        assert cost == brute_assignment(C)


def test_assignment_rejects_non_square():
    with pytest.raises(DimensionError):
        solve_assignment(np.zeros((2, 3)))


def test_assignment_uses_a_fallback_solver_for_large_inputs(rng):
    from scipy.optimize import linear_sum_assignment
    C = rng.random((60, 60))
    _, cost = solve_assignment(C)
    r, c = linear_sum_assignment(C)
    assert cost == pytest.approx(C[r, c].sum(), rel=1e-12)


@given(costs)
def test_assignment_optimality_is_exact(C):
    perm, cost = solve_assignment(C)
    assert cost == math.fsum(C[np.arange(len(C)), perm])
    assert cost == brute_assignment(C)


def test_assignment_optimality_on_200_matrices(rng):
    for _ in range(200):
        n = int(rng.integers(1, 8))
        C = rng.random((n, n)) ** 2 * rng.choice([1, 10, 1000])
        assert solve_assignment(C)[1] == brute_assignment(C)


def test_transport_examples():
    plan, cost = solve_transport([1], [1], [[3.5]])
    np.testing.assert_array_equal(plan.coupling, [[1]])
    assert cost == 3.5
    plan, cost = solve_transport([1], [0.5, 0.5], [[1, 1]])
    np.testing.assert_allclose(plan.coupling, [[0.5, 0.5]])
    assert cost == pytest.approx(1, abs=1e-15)


def test_transport_weight_errors():
    with pytest.raises(MassError):
        solve_transport([0.5, 0.4], [1.0], [[1], [1]])
    with pytest.raises(MassError):
        solve_transport([1.5, -0.5], [1.0], [[1], [1]])


def _weights(rng, m):
    w = rng.random(m) + 0.05
    return w / w.sum()


def test_transport_matches_lp_and_is_feasible(rng):
    for _ in range(200):
        m, k = rng.integers(1, 8, size=2)
        a, b = _weights(rng, m), _weights(rng, k)
        C = rng.random((m, k))
        plan, cost = solve_transport(a, b, C)
        assert plan.marginal_error() <= 1e-10
        assert np.all(plan.coupling >= 0)
        assert cost == pytest.approx(lp_transport(a, b, C), abs=1e-9)


def test_birkhoff_equivalence(rng):
    for _ in range(200):
        n = int(rng.integers(1, 8))
        C = rng.random((n, n))
        w = np.full(n, 1 / n)
        _, tcost = solve_transport(w, w, C)
        _, acost = solve_assignment(C)
        assert abs(tcost * n - acost) <= 1e-9


def test_transport_degenerate_instances(rng):
    # equal weights and ties stress the anti-cycling rule
    for _ in range(50):
        n = int(rng.integers(2, 7))
        C = rng.integers(0, 3, size=(n, n)).astype(float)
        w = np.full(n, 1 / n)
        plan, cost = solve_transport(w, w, C)
        assert plan.marginal_error() <= 1e-10
        assert cost == pytest.approx(lp_transport(w, w, C), abs=1e-12)


def test_transport_is_reproducible(rng):
    a, b, C = _weights(rng, 5), _weights(rng, 4), rng.integers(0, 2, (5, 4)).astype(float)
    p1, _ = solve_transport(a, b, C)
    p2, _ = solve_transport(a, b, C)
    np.testing.assert_array_equal(p1.coupling, p2.coupling)


def test_capacitated_examples(rng):
    C = rng.random((5, 1))
    assign, cost = solve_capacitated_assignment(C, [5])
    assert np.all(assign == 0) and cost == math.fsum(C[:, 0])
    C = rng.random((5, 5))
    _, cost = solve_capacitated_assignment(C, [1] * 5)
    assert cost == solve_assignment(C)[1]


def test_capacitated_matches_enumeration_of_splits(rng):
    for _ in range(20):
        C = rng.random((6, 2))
        assign, cost = solve_capacitated_assignment(C, [4, 2])
        assert np.bincount(assign, minlength=2).tolist() == [4, 2]
        best = min(math.fsum(C[i, 1] if i in pair else C[i, 0] for i in range(6))
                   for pair in itertools.combinations(range(6), 2))
        assert cost == pytest.approx(best, abs=1e-15)


def test_capacitated_errors():
    with pytest.raises(MassError):
        solve_capacitated_assignment(np.zeros((4, 2)), [2, 1])
    with pytest.raises(DimensionError):
        solve_capacitated_assignment(np.zeros((4, 2)), [4])
