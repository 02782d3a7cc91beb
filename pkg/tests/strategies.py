"""Hypothesis strategies for points and samples of the supported spaces."""
import math

import numpy as np
from hypothesis import strategies as st

from samplespace import Circle, Euclidean, Sample, Sphere, Spider

SPACES = [Euclidean(1), Euclidean(2), Sphere(2), Circle(), Spider(3)]
RIEMANNIAN = [Euclidean(1), Euclidean(2), Sphere(2), Circle()]

_coord = st.floats(-5, 5, allow_nan=False, allow_infinity=False)


def points(space, n):
    """Strategy for an ``(n, point_dim)`` array of points of ``space``."""
    if isinstance(space, Euclidean):
        return st.lists(st.lists(_coord, min_size=space.dim, max_size=space.dim),
                        min_size=n, max_size=n).map(np.array)
    if isinstance(space, Sphere):
        vec = st.lists(st.floats(-1, 1), min_size=space.dim + 1, max_size=space.dim + 1)
        vec = vec.filter(lambda v: np.linalg.norm(v) > 0.1)
        return st.lists(vec, min_size=n, max_size=n).map(
            lambda vs: np.array([np.array(v) / np.linalg.norm(v) for v in vs]))
    if isinstance(space, Circle):
        return st.lists(st.floats(0, 2 * math.pi, exclude_max=True), min_size=n, max_size=n).map(
            lambda a: np.array(a)[:, None])
    leg = st.integers(1, space.num_legs)
    radius = st.floats(0, 5)
    return st.lists(st.tuples(leg, radius), min_size=n, max_size=n).map(
        lambda ps: space.points([[l if r > 0 else 0, r] for l, r in ps]))


def random_points(space, rng, n):
    """Generic random points drawn with numpy (used by the loop-based checks)."""
    if isinstance(space, Euclidean):
        return rng.normal(size=(n, space.dim)) * 2
    if isinstance(space, Sphere):
        v = rng.normal(size=(n, space.dim + 1))
        return v / np.linalg.norm(v, axis=1, keepdims=True)
    if isinstance(space, Circle):
        return rng.uniform(0, 2 * math.pi, size=(n, 1))
    legs = rng.integers(1, space.num_legs + 1, size=n)
    return space.points(np.stack([legs, rng.exponential(1.0, size=n)], axis=1))


def random_sample(space, rng, n):
    return Sample(space, random_points(space, rng, n))
