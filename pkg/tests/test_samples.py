import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from samplespace import (Circle, Configuration, DimensionError, Euclidean, NonUniqueGeodesic, Partition, Sample,
                         SampleGeodesic, Sphere, Spider, config_distance, enumerate_partitions,
                         isotropy_interior_check, orbit_type, sample_distance, sample_geodesic, skeleton_index,
                         subpartition_leq)
from oracles import brute_sample_distance, grouping_exists, partition_count
from strategies import SPACES, points, random_points, random_sample

N, S = [0, 0, 1], [0, 0, -1]
E1 = Euclidean(1)


def P(*parts):
    return Partition(parts)


# -- values ---------------------------------------------------------------------


def test_sample_equality_is_orbit_equality():
    a = Sample(E1, [3, 1, 2])
    assert a == Sample(E1, [1, 2, 3])
    assert hash(a) == hash(Sample(E1, [2, 3, 1]))
    assert a != Sample(E1, [1, 2, 4])
    np.testing.assert_array_equal(Sample(E1, a.points).points, a.points)


@pytest.mark.parametrize("space", SPACES, ids=repr)
@given(data=st.data())
def test_canonical_order_is_idempotent_and_permutation_invariant(space, data):
    pts = data.draw(points(space, 5))
    perm = data.draw(st.permutations(range(5)))
    x = Sample(space, pts)
    assert Sample(space, x.points) == x
    assert Sample(space, pts[list(perm)]) == x
    assert Sample.from_json(x.to_json()) == x


def test_sample_is_immutable():
    x = Sample(E1, [1, 2])
    with pytest.raises(ValueError):
        x.points[0, 0] = 5


def test_partition_invariants():
    assert P(3, 1).n == 4
    for bad in [(), (1, 2), (2, 0)]:
        with pytest.raises(ValueError):
            Partition(bad)


# -- distances --------------------------------------------------------------------


def test_config_distance_examples():
    x = Configuration(E1, [0, 2])
    assert config_distance(x, x, 2) == 0
    assert config_distance(x, Configuration(E1, [1, 3]), 2) == pytest.approx(1, abs=1e-15)
    s = Sphere(2)
    assert config_distance(Configuration(s, [N, N]), Configuration(s, [S, S]), 2) == pytest.approx(math.pi)
    with pytest.raises(DimensionError):
        config_distance(x, Configuration(E1, [1, 3, 4]))


def test_sample_distance_examples():
    x = Sample(E1, [0, 1])
    d, perm = sample_distance(x, x)
    assert d == 0
    np.testing.assert_array_equal(perm, [0, 1])
    assert sample_distance(x, Sample(E1, [1, 0]))[0] == 0
    sp = Spider(3)
    assert sample_distance(Sample(sp, [[1, 1], [2, 1]]), Sample(sp, [[3, 1], [3, 1]]), 1)[0] == 2
    with pytest.raises(DimensionError):
        sample_distance(x, Sample(E1, [0, 1, 2]))


@pytest.mark.parametrize("space", SPACES, ids=repr)
def test_sample_distance_equals_permutation_minimum_exactly(space, rng):
    for _ in range(30):
        n = int(rng.integers(1, 7))
        p = float(rng.choice([1.0, 1.5, 2.0, 3.0]))
        x, y = random_sample(space, rng, n), random_sample(space, rng, n)
        d, perm = sample_distance(x, y, p)
        assert d == brute_sample_distance(space, x.points, y.points, p)
        assert d == config_distance(Configuration(space, x.points), Configuration(space, y.points[perm]), p)


@pytest.mark.parametrize("space", SPACES, ids=repr)
@given(data=st.data(), p=st.sampled_from([1.0, 2.0, 2.5]))
def test_quotient_contraction(space, data, p):
    xs, ys = data.draw(points(space, 4)), data.draw(points(space, 4))
    d, _ = sample_distance(Sample(space, xs), Sample(space, ys), p)
    assert d <= config_distance(Configuration(space, xs), Configuration(space, ys), p) + 1e-12


@pytest.mark.parametrize("space", SPACES, ids=repr)
def test_quotient_metric_axioms(space, rng):
    for _ in range(500):
        n = int(rng.integers(1, 6))
        x, y, z = (random_sample(space, rng, n) for _ in range(3))
        dxy = sample_distance(x, y)[0]
        assert dxy == sample_distance(y, x)[0]
        assert dxy <= sample_distance(x, z)[0] + sample_distance(z, y)[0] + 1e-9
        assert sample_distance(x, x)[0] == 0
        assert (dxy == 0) == (x == y)


@pytest.mark.parametrize("space", SPACES, ids=repr)
@given(data=st.data(), p=st.sampled_from([1.0, 2.0, 4.0]))
def test_product_distance_bounds(space, data, p):
    xs, ys = data.draw(points(space, 5)), data.draw(points(space, 5))
    d = space.dist(xs, ys)
    dp = config_distance(Configuration(space, xs), Configuration(space, ys), p)
    assert dp <= d.max() + 1e-12
    assert dp >= len(xs) ** (-1 / p) * d.max() - 1e-12


# -- geodesics ----------------------------------------------------------------------


def test_sample_geodesic_examples():
    x = Sample(E1, [0, 10])
    g = sample_geodesic(x, x)
    assert g.at(0.3) == x and g.length == 0
    g = sample_geodesic(x, Sample(E1, [1, 11]))
    assert g.at(0.5) == Sample(E1, [0.5, 10.5])
    sp = Spider(3)
    g = sample_geodesic(Sample(sp, [[1, 1], [2, 1]]), Sample(sp, [[3, 1], [3, 1]]))
    assert g.at(0.5) == Sample(sp, [[0, 0], [0, 0]])


def test_sample_geodesic_endpoints(rng):
    for space in SPACES:
        x, y = random_sample(space, rng, 4), random_sample(space, rng, 4)
        g = sample_geodesic(x, y)
        assert g.at(0) == x and g.at(1) == y
        assert g.start == x and g.end == y


def test_sample_geodesic_surfaces_non_unique_components():
    s = Sphere(2)
    with pytest.raises(NonUniqueGeodesic):
        sample_geodesic(Sample(s, [N]), Sample(s, [S]))


@pytest.mark.parametrize("space", SPACES, ids=repr)
def test_geodesic_additivity(space, rng):
    for _ in range(40):
        n = int(rng.integers(1, 6))
        p = float(rng.choice([1.0, 2.0, 3.0]))
        x, y = random_sample(space, rng, n), random_sample(space, rng, n)
        g = sample_geodesic(x, y, p)
        t, s = sorted(rng.random(2))
        d = sample_distance(g.at(t), g.at(s), p)[0]
        assert d == pytest.approx((s - t) * g.length, abs=1e-9)
        assert sample_distance(x, g.at(t), p)[0] == pytest.approx(t * g.length, abs=1e-9)


# -- stratification ---------------------------------------------------------------


def test_orbit_type_examples():
    assert orbit_type(Sample(E1, [2, 2, 2, 2])) == P(4)
    assert orbit_type(Sample(E1, [1, 1, 5, 7])) == P(2, 1, 1)
    assert orbit_type(Sample(E1, [1, 5, 7])) == P(1, 1, 1)


def test_orbit_type_tolerance_is_single_linkage():
    x = Sample(E1, [0, 0.4, 0.8, 5])
    assert orbit_type(x, 0.0) == P(1, 1, 1, 1)
    assert orbit_type(x, 0.5) == P(3, 1)
    with pytest.raises(ValueError):
        orbit_type(x, -1)
    c = Circle()
    assert orbit_type(Sample(c, [0.0, 2 * math.pi - 1e-12]), 1e-9) == P(2)


def test_skeleton_index_examples():
    assert skeleton_index(Sample(E1, [3, 3, 3])) == 1
    assert skeleton_index(Sample(E1, [1, 2, 3])) == 3
    assert skeleton_index(Sample(E1, [1, 1, 3])) == 2


def test_subpartition_examples():
    for k in enumerate_partitions(5):
        assert subpartition_leq(P(5), k)
    assert subpartition_leq(P(2, 1, 1), P(1, 1, 1, 1))
    assert not subpartition_leq(P(3, 1), P(2, 2))
    with pytest.raises(DimensionError):
        subpartition_leq(P(3), P(2, 1, 1))


def test_subpartition_matches_exhaustive_grouping():
    for n in range(1, 7):
        parts = enumerate_partitions(n)
        for a in parts:
            for b in parts:
                assert subpartition_leq(a, b) == grouping_exists(a.parts, b.parts)


def test_enumerate_partitions_examples():
    assert enumerate_partitions(1) == [P(1)]
    assert enumerate_partitions(4) == [P(4), P(3, 1), P(2, 2), P(2, 1, 1), P(1, 1, 1, 1)]
    for n in range(1, 13):
        parts = enumerate_partitions(n)
        assert len(parts) == partition_count(n)
        assert len(set(parts)) == len(parts)
        assert [k.parts for k in parts] == sorted((k.parts for k in parts), reverse=True)


@given(st.integers(1, 6).flatmap(lambda n: st.tuples(st.just(n), st.sampled_from(enumerate_partitions(n)))),
       st.data())
def test_collapsing_a_gap_moves_to_a_coarser_stratum(nk, data):
    n, k = nk
    if len(k) < 2:
        return
    centers = np.arange(len(k), dtype=float) * 3
    x = np.repeat(centers, k.parts)
    assert orbit_type(Sample(E1, x)) == k
    i, j = data.draw(st.lists(st.integers(0, len(k) - 1), min_size=2, max_size=2, unique=True))
    collapsed = np.where(x == centers[j], centers[i], x)
    k2 = orbit_type(Sample(E1, collapsed))
    assert subpartition_leq(k2, k)
    assert k2 != k


def test_interior_check_examples():
    g = sample_geodesic(Sample(E1, [0, 5]), Sample(E1, [1, 7]))
    assert isotropy_interior_check(g, [0.25, 0.5, 0.75])
    s = Sphere(2)
    v = [np.pi, 0, 0]
    g = SampleGeodesic.from_velocities(s, [N, N], [v, v])
    np.testing.assert_allclose(g.end_config, [S, S], atol=1e-15)
    assert isotropy_interior_check(g, [0.25, 0.5, 0.75])
    sp = Spider(3)
    g = sample_geodesic(Sample(sp, [[1, 1], [2, 1]]), Sample(sp, [[3, 1], [3, 1]]))
    assert orbit_type(g.at(0.5)) == P(2)
    assert orbit_type(g.start) == P(1, 1)
    assert not isotropy_interior_check(g, [0.5])


@pytest.mark.parametrize("space", [Euclidean(1), Euclidean(2), Sphere(2)], ids=repr)
def test_interior_regularity_on_riemannian_spaces(space, rng):
    for _ in range(100):
        n = int(rng.integers(2, 6))
        x, y = random_sample(space, rng, n), random_sample(space, rng, n)
        g = sample_geodesic(x, y)
        assert isotropy_interior_check(g, rng.uniform(0.01, 0.99, size=5))
