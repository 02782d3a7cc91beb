import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from samplespace import (AtomicMeasure, Euclidean, MassError, Sample, SpaceMismatchError, Sphere, WeightPartition,
                         empirical_measure, measure_geodesic, measure_stratum, optimal_plan, sample_distance,
                         wasserstein_distance)
from oracles import lp_transport
from strategies import SPACES, random_points, random_sample

E1 = Euclidean(1)


def random_measure(space, rng, m):
    w = rng.random(m) + 0.05
    return AtomicMeasure(space, random_points(space, rng, m), w / w.sum())


def test_empirical_measure_examples():
    P = empirical_measure(Sample(E1, [2, 2]))
    assert len(P) == 1 and P.weights[0] == 1
    P = empirical_measure(Sample(E1, [5, 1, 1, 3]))
    np.testing.assert_array_equal(P.atoms[:, 0], [1, 3, 5])
    np.testing.assert_array_equal(P.weights, [0.5, 0.25, 0.25])
    P = empirical_measure(Sample(E1, [1, 2, 3]))
    np.testing.assert_array_equal(P.weights, [1 / 3] * 3)


@given(st.lists(st.integers(0, 4), min_size=1, max_size=40))
def test_empirical_weights_are_exact_multiples_of_one_over_n(values):
    n = len(values)
    P = empirical_measure(Sample(E1, values))
    for w, a in zip(P.weights, P.atoms[:, 0]):
        assert w == values.count(a) / n
        assert Fraction(w).limit_denominator(n) * n == values.count(a)


def test_wasserstein_examples():
    P = AtomicMeasure(E1, [0.0, 2.0], [0.3, 0.7])
    assert wasserstein_distance(P, P) == 0
    Q = AtomicMeasure(E1, [-1, 1], [0.5, 0.5])
    assert wasserstein_distance(AtomicMeasure.dirac(E1, [0]), Q, 2) == pytest.approx(1, abs=1e-15)
    with pytest.raises(TypeError):
        wasserstein_distance(P, AtomicMeasure.dirac(Euclidean(2), [0, 0]))
    with pytest.raises(SpaceMismatchError):
        wasserstein_distance(P, AtomicMeasure.dirac(Euclidean(2), [0, 0]))


def test_measure_invariants():
    with pytest.raises(MassError):
        AtomicMeasure(E1, [0, 1], [0.5, 0.6])
    with pytest.raises(MassError):
        AtomicMeasure(E1, [0, 1], [1.5, -0.5])
    with pytest.raises(ValueError):
        WeightPartition((0.2, 0.8))
    P = AtomicMeasure(E1, [3, 1, 3 + 1e-12, 2], [0.25, 0.25, 0.25, 0.25]).normalize()
    np.testing.assert_array_equal(P.atoms[:, 0], [1, 2, 3])
    np.testing.assert_array_equal(P.weights, [0.25, 0.25, 0.5])
    assert AtomicMeasure.from_json(P.to_json()).to_json() == P.to_json()


@pytest.mark.parametrize("space", SPACES, ids=repr)
def test_isometry_with_sample_space(space, rng):
    for _ in range(60):
        n = int(rng.integers(1, 9))
        p = float(rng.choice([1.0, 2.0]))
        x, y = random_sample(space, rng, n), random_sample(space, rng, n)
        W = wasserstein_distance(empirical_measure(x), empirical_measure(y), p)
        assert abs(W - sample_distance(x, y, p)[0]) <= 1e-9


def test_isometry_with_repeated_points(rng):
    for _ in range(50):
        x = Sample(E1, rng.integers(0, 3, size=6))
        y = Sample(E1, rng.integers(0, 3, size=6))
        W = wasserstein_distance(empirical_measure(x), empirical_measure(y), 1)
        assert abs(W - sample_distance(x, y, 1)[0]) <= 1e-12


def test_wasserstein_matches_lp(rng):
    for space in SPACES:
        for _ in range(20):
            P, Q = random_measure(space, rng, 4), random_measure(space, rng, 5)
            C = space.pairwise(P.atoms, Q.atoms) ** 2
            assert wasserstein_distance(P, Q, 2) ** 2 == pytest.approx(lp_transport(P.weights, Q.weights, C), abs=1e-9)


@pytest.mark.parametrize("space", SPACES, ids=repr)
def test_wasserstein_metric_axioms(space, rng):
    for _ in range(100):
        P, Q, R = (random_measure(space, rng, int(rng.integers(1, 5))) for _ in range(3))
        for p in (1.0, 2.0):
            pq = wasserstein_distance(P, Q, p)
            assert pq == pytest.approx(wasserstein_distance(Q, P, p), abs=1e-12)
            assert pq <= wasserstein_distance(P, R, p) + wasserstein_distance(R, Q, p) + 1e-9
        assert wasserstein_distance(P, P) <= 1e-12


def test_measure_stratum_examples():
    s = measure_stratum(AtomicMeasure.dirac(E1, [4]))
    assert s.q == 1 and s.weights.weights == (1.0,) and s.regular
    s = measure_stratum(AtomicMeasure(E1, [0, 1], [0.5, 0.5]))
    assert s.q == 2 and s.weights.weights == (0.5, 0.5)
    s = measure_stratum(AtomicMeasure(E1, [0, 1, 2], [0.1, 0.7, 0.2]))
    assert s.q == 3 and s.weights.weights == (0.7, 0.2, 0.1)


def test_measure_stratum_flags_degenerate_inputs():
    s = measure_stratum(AtomicMeasure(E1, [0, 1, 2], [0.5, 0.5, 0.0]))
    assert s.q == 2 and not s.regular
    s = measure_stratum(AtomicMeasure(E1, [0, 0, 2], [0.25, 0.25, 0.5]))
    assert s.q == 2 and s.weights.weights == (0.5, 0.5) and not s.regular


def test_skeleta_are_nested(rng):
    for _ in range(20):
        m = int(rng.integers(1, 6))
        P = random_measure(Euclidean(2), rng, m)
        q = measure_stratum(P).q
        assert all(q <= qq for qq in range(m, m + 3))


def test_measure_geodesic_examples():
    P = AtomicMeasure(E1, [0.0, 2.0], [0.3, 0.7])
    Q = AtomicMeasure(E1, [5.0], [1.0])
    G = measure_geodesic(P, Q, 2, 0.0)
    np.testing.assert_array_equal(G.atoms, P.normalize().atoms)
    G = measure_geodesic(AtomicMeasure.dirac(E1, [0]), AtomicMeasure.dirac(E1, [4]), 2, 0.25)
    np.testing.assert_array_equal(G.atoms, [[1.0]])
    G = measure_geodesic(AtomicMeasure.dirac(E1, [0]), AtomicMeasure(E1, [-2, 2], [0.5, 0.5]), 2, 0.5)
    np.testing.assert_allclose(G.atoms[:, 0], [-1, 1])
    np.testing.assert_allclose(G.weights, [0.5, 0.5])


@pytest.mark.parametrize("space", [Euclidean(2), Sphere(2)], ids=repr)
def test_measure_geodesic_additivity(space, rng):
    for _ in range(30):
        P, Q = random_measure(space, rng, 3), random_measure(space, rng, 4)
        p = float(rng.choice([1.0, 2.0]))
        W = wasserstein_distance(P, Q, p)
        s, t = rng.random(2)
        Gs, Gt = measure_geodesic(P, Q, p, s), measure_geodesic(P, Q, p, t)
        assert wasserstein_distance(Gs, Gt, p) == pytest.approx(abs(s - t) * W, abs=1e-8)
        assert wasserstein_distance(P, Gt, p) == pytest.approx(t * W, abs=1e-8)


def test_optimal_plan_marginals(rng):
    P, Q = random_measure(Euclidean(3), rng, 6), random_measure(Euclidean(3), rng, 5)
    plan, cost = optimal_plan(P, Q, 1.5)
    assert plan.marginal_error() <= 1e-10
    assert math.isclose(cost, float(np.sum(plan.coupling * Euclidean(3).pairwise(P.atoms, Q.atoms) ** 1.5)))
