"""Configurations, unordered samples and their orbit-type stratification.

A :class:`Configuration` is an ordered n-tuple of points. A :class:`Sample` is
the same tuple modulo permutations, stored in a canonical (lexicographic)
order so that equality and hashing are orbit-level notions.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .errors import DimensionError, SpaceMismatchError
from .spaces import GEOMETRIC_TOL, Space, points_from_json, space_from_json
from .transport import solve_assignment

SCHEMA_VERSION = 1


def _readonly(arr):
    arr = np.array(arr, dtype=float)
    arr.setflags(write=False)
    return arr


def canonical_order(space: Space, pts: np.ndarray) -> np.ndarray:
    """Indices sorting points lexicographically by their coordinates."""
    keys = space.sort_key(pts)
    if len(keys) == 0:
        return np.zeros(0, dtype=int)
    return np.lexsort(keys.T[::-1])


class Configuration:
    """An ordered n-tuple of points of ``space`` (an element of M^n)."""

    __slots__ = ("space", "points")

    def __init__(self, space: Space, points):
        pts = space.points(points)
        if len(pts) < 1:
            raise DimensionError("a configuration needs at least one point")
        self.space = space
        self.points = _readonly(pts)

    def __len__(self):
        return len(self.points)

    def __repr__(self):
        return f"Configuration({self.space!r}, n={len(self)})"


class Sample:
    """An unordered n-sample, i.e. an S_n-orbit in M^n."""

    __slots__ = ("space", "points", "_hash")

    def __init__(self, space: Space, points):
        pts = space.points(points)
        if len(pts) < 1:
            raise DimensionError("a sample needs at least one point")
        self.space = space
        self.points = _readonly(pts[canonical_order(space, pts)])
        self._hash = None

    @classmethod
    def from_configuration(cls, config: Configuration) -> "Sample":
        return cls(config.space, config.points)

    def __len__(self):
        return len(self.points)

    def __eq__(self, other):
        if not isinstance(other, Sample):
            return NotImplemented
        return self.space == other.space and np.array_equal(self.points, other.points)

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.space, self.points.tobytes()))
        return self._hash

    def __repr__(self):
        return f"Sample({self.space!r}, n={len(self)})"

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "type": "sample",
            "space": self.space.to_json(),
            "points": [self.space.point_to_json(p) for p in self.points],
        }

    @classmethod
    def from_json(cls, obj) -> "Sample":
        space = space_from_json(obj["space"])
        return cls(space, points_from_json(space, obj["points"]))


@dataclass(frozen=True, order=False)
class Partition:
    """Integer partition ``k_1 >= ... >= k_q >= 1``; the orbit type of a sample."""

    parts: tuple

    def __post_init__(self):
        parts = tuple(int(k) for k in self.parts)
        if not parts:
            raise ValueError("a partition needs at least one part")
        if any(k < 1 for k in parts) or any(a < b for a, b in zip(parts, parts[1:])):
            raise ValueError(f"partition parts must be positive and non-increasing: {parts}")
        object.__setattr__(self, "parts", parts)

    @classmethod
    def from_counts(cls, counts) -> "Partition":
        return cls(tuple(sorted((int(c) for c in counts if c), reverse=True)))

    @property
    def n(self) -> int:
        return sum(self.parts)

    def __len__(self):
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __str__(self):
        return "(" + ",".join(map(str, self.parts)) + ")"


def _check_pair(x, y):
    if x.space != y.space:
        raise SpaceMismatchError(f"points live in different spaces: {x.space!r} vs {y.space!r}")
    if len(x.points) != len(y.points):
        raise DimensionError(f"sizes differ: {len(x.points)} vs {len(y.points)}")


def _check_p(p):
    if not p >= 1:
        raise ValueError("p must be >= 1")


def _lp_mean(dists: np.ndarray, p: float) -> float:
    return (math.fsum(dists**p) / len(dists)) ** (1.0 / p)


def config_distance(x, y, p: float = 2.0) -> float:
    """L^p product distance ``((1/n) sum_i d(x_i, y_i)^p)^(1/p)`` in index order."""
    _check_pair(x, y)
    _check_p(p)
    return _lp_mean(x.space.dist(x.points, y.points), p)


def sample_distance(x: Sample, y: Sample, p: float = 2.0) -> tuple[float, np.ndarray]:
    """Quotient distance and an optimal matching.

    Returns ``(distance, perm)``: ``x.points[i]`` is matched with
    ``y.points[perm[i]]`` and ``distance = config_distance`` of the matched pair.
    """
    _check_pair(x, y)
    _check_p(p)
    cost = x.space.pairwise(x.points, y.points) ** p
    perm, _ = solve_assignment(cost)
    return _lp_mean(x.space.dist(x.points, y.points[perm]), p), perm


@dataclass(frozen=True, eq=False)
class SampleGeodesic:
    """Minimizing geodesic between samples, given by its horizontal lift.

    Component ``i`` runs from ``start_config[i]`` to ``end_config[i]``. When
    ``velocities`` is set (Riemannian spaces only) component ``i`` is
    ``exp(start_config[i], t * velocities[i])`` instead; this selects one of
    several minimizing geodesics between cut-locus pairs.
    """

    space: Space
    start_config: np.ndarray
    end_config: np.ndarray
    matching: np.ndarray
    length: float
    p: float
    velocities: np.ndarray | None = field(default=None)

    @cached_property
    def start(self) -> Sample:
        return Sample(self.space, self.start_config)

    @cached_property
    def end(self) -> Sample:
        return Sample(self.space, self.end_config)

    @classmethod
    def from_velocities(cls, space: Space, start_points, velocities, p: float = 2.0) -> "SampleGeodesic":
        start = space.points(start_points)
        vel = np.asarray(velocities, dtype=float)
        end = space.points(space.exp(start, vel))
        speeds = np.linalg.norm(vel, axis=-1)
        return cls(space, _readonly(start), _readonly(end), np.arange(len(start)),
                   _lp_mean(speeds, p), p, _readonly(vel))

    def config_at(self, t: float) -> np.ndarray:
        """Lift ``c(t)`` as an ordered point array."""
        if t == 0:
            return self.start_config
        if t == 1:
            return self.end_config
        if self.velocities is not None:
            return self.space.points(self.space.exp(self.start_config, t * self.velocities))
        return self.space.points(self.space.geodesic(self.start_config, self.end_config, t))

    def at(self, t: float) -> Sample:
        return Sample(self.space, self.config_at(t))


def sample_geodesic(x: Sample, y: Sample, p: float = 2.0) -> SampleGeodesic:
    """Geodesic from ``x`` to ``y``: interpolate componentwise along an optimal matching.

    Raises :class:`NonUniqueGeodesic` if some matched pair has no unique
    minimizing geodesic in the base space.
    """
    dist, perm = sample_distance(x, y, p)
    end = y.points[perm]
    x.space.geodesic(x.points, end, 0.5)  # surfaces NonUniqueGeodesic early
    return SampleGeodesic(x.space, x.points, _readonly(end), perm, dist, p)


# -- orbit types ---------------------------------------------------------------


def coincidence_labels(space: Space, pts: np.ndarray, tol: float = 0.0) -> np.ndarray:
    """Label points by single-linkage classes of the relation ``d <= tol``.

    Labels are numbered in order of first appearance.
    """
    pts = np.asarray(pts, dtype=float)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=int)
    if tol <= 0:
        _, first, inverse = np.unique(pts, axis=0, return_index=True, return_inverse=True)
        inverse = inverse.ravel()
    else:
        # chordal distance in the embedding never exceeds d, so this is a superset
        pairs = cKDTree(space.embed(pts)).query_pairs(r=tol, output_type="ndarray")
        if len(pairs):
            keep = space.dist(pts[pairs[:, 0]], pts[pairs[:, 1]]) <= tol
            pairs = pairs[keep]
        graph = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(n, n))
        _, inverse = connected_components(graph, directed=False)
        first = np.full(inverse.max() + 1, n)
        np.minimum.at(first, inverse, np.arange(n))
    # renumber by first appearance for determinism
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    return rank[inverse]


def orbit_type(x: Sample, tol: float = 0.0) -> Partition:
    """Multiplicities of coinciding points, sorted non-increasingly."""
    if tol < 0:
        raise ValueError("tol must be non-negative")
    labels = coincidence_labels(x.space, x.points, tol)
    return Partition.from_counts(np.bincount(labels))


def skeleton_index(x: Sample, tol: float = 0.0) -> int:
    """Number of distinct points of the sample (smallest q whose skeleton contains it)."""
    return len(orbit_type(x, tol))


def subpartition_leq(coarse: Partition, fine: Partition) -> bool:
    """True iff ``fine`` sub-partitions ``coarse``.

    That is, the parts of ``fine`` can be grouped into blocks whose sums are
    exactly the parts of ``coarse``. The diagonal ``(n)`` is the minimum and
    ``(1, ..., 1)`` the maximum of this half-order.
    """
    if coarse.n != fine.n:
        raise DimensionError(f"partitions of different integers: {coarse.n} vs {fine.n}")
    if len(fine) < len(coarse):
        return False
    items = sorted(fine.parts, reverse=True)
    bins = list(coarse.parts)

    def place(i):
        if i == len(items):
            return True
        tried = set()
        for b in range(len(bins)):
            room = bins[b]
            if room >= items[i] and room not in tried:
                tried.add(room)
                bins[b] -= items[i]
                if place(i + 1):
                    return True
                bins[b] += items[i]
        return False

    return place(0)


def enumerate_partitions(n: int) -> list[Partition]:
    """All partitions of ``n`` in lexicographically decreasing order."""
    if n < 1:
        raise ValueError("n must be positive")

    def gen(rest, largest):
        if rest == 0:
            yield ()
            return
        for k in range(min(rest, largest), 0, -1):
            for tail in gen(rest - k, k):
                yield (k,) + tail

    return [Partition(parts) for parts in gen(n, n)]


def isotropy_interior_check(g: SampleGeodesic, t_values, tol: float = GEOMETRIC_TOL) -> bool:
    """Check that interior coincidences of the lift also hold at both endpoints.

    For every ``t`` the classes of indices ``i ~ j`` with ``c_i(t) = c_j(t)``
    (up to ``tol``) must each lie inside one class at ``t = 0`` and inside one
    class at ``t = 1``; equivalently the isotropy group of ``c(t)`` is contained
    in those of the endpoints.
    """
    ends = [coincidence_labels(g.space, g.start_config, tol),
            coincidence_labels(g.space, g.end_config, tol)]
    for t in t_values:
        inner = coincidence_labels(g.space, g.config_at(float(t)), tol)
        for labels in ends:
            for cls in np.unique(inner):
                if len(np.unique(labels[inner == cls])) > 1:
                    return False
    return True
