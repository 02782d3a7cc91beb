"""Finitely supported probability measures and the Wasserstein-p metric."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import DimensionError, MassError, SpaceMismatchError
from .samples import SCHEMA_VERSION, Sample, _readonly, canonical_order, coincidence_labels
from .spaces import GEOMETRIC_TOL, STRUCTURAL_TOL, Space, points_from_json, space_from_json
from .transport import solve_transport

MERGE_TOL = GEOMETRIC_TOL


class AtomicMeasure:
    """``sum_i weights[i] * delta(atoms[i])`` on ``space``.

    Atoms may repeat and weights may be zero on construction; :meth:`normalize`
    merges nearby atoms, drops empty ones and sorts canonically.
    """

    __slots__ = ("space", "atoms", "weights")

    def __init__(self, space: Space, atoms, weights):
        atoms = space.points(atoms)
        w = np.asarray(weights, dtype=float).ravel()
        if len(w) != len(atoms) or len(w) == 0:
            raise DimensionError(f"{len(atoms)} atoms but {len(w)} weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise MassError("weights must be finite and non-negative")
        if abs(math.fsum(w) - 1.0) > STRUCTURAL_TOL:
            raise MassError(f"weights must sum to 1 (got {math.fsum(w)!r})")
        self.space = space
        self.atoms = _readonly(atoms)
        self.weights = _readonly(w)

    @classmethod
    def dirac(cls, space: Space, point) -> "AtomicMeasure":
        return cls(space, [space.point(point)], [1.0])

    def __len__(self):
        return len(self.weights)

    def __repr__(self):
        return f"AtomicMeasure({self.space!r}, atoms={len(self)})"

    def normalize(self, tol: float = MERGE_TOL) -> "AtomicMeasure":
        """Merge atoms within ``tol`` (single linkage), drop zero weights, sort."""
        labels = coincidence_labels(self.space, self.atoms, tol)
        k = labels.max() + 1
        weights = np.bincount(labels, weights=self.weights, minlength=k)
        first = np.full(k, len(labels))
        np.minimum.at(first, labels, np.arange(len(labels)))
        atoms = self.atoms[first]
        keep = weights > 0
        atoms, weights = atoms[keep], weights[keep]
        order = canonical_order(self.space, atoms)
        return AtomicMeasure(self.space, atoms[order], weights[order])

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "type": "measure",
            "space": self.space.to_json(),
            "atoms": [self.space.point_to_json(a) for a in self.atoms],
            "weights": [float(w) for w in self.weights],
        }

    @classmethod
    def from_json(cls, obj) -> "AtomicMeasure":
        space = space_from_json(obj["space"])
        return cls(space, points_from_json(space, obj["atoms"]), obj["weights"])


@dataclass(frozen=True)
class WeightPartition:
    """Non-increasing positive weights summing to one: the type of a measure stratum."""

    weights: tuple

    def __post_init__(self):
        w = tuple(float(v) for v in self.weights)
        if not w or any(v <= 0 for v in w) or any(a < b for a, b in zip(w, w[1:])):
            raise ValueError(f"weights must be positive and non-increasing: {w}")
        if abs(math.fsum(w) - 1.0) > STRUCTURAL_TOL:
            raise MassError("weights must sum to 1")
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return len(self.weights)


class MeasureStratum(NamedTuple):
    q: int
    weights: WeightPartition
    regular: bool  # False if the input had coincident atoms or zero weights


def empirical_measure(x: Sample) -> AtomicMeasure:
    """``(1/n) sum_i delta(x_i)`` with coincident points merged.

    Weights are exactly ``count / n``.
    """
    labels = coincidence_labels(x.space, x.points, 0.0)
    counts = np.bincount(labels)
    first = np.full(len(counts), len(labels))
    np.minimum.at(first, labels, np.arange(len(labels)))
    atoms = x.points[first]
    order = canonical_order(x.space, atoms)
    return AtomicMeasure(x.space, atoms[order], counts[order] / len(x))


def _same_space(P, Q):
    if P.space != Q.space:
        raise SpaceMismatchError(f"measures live in different spaces: {P.space!r} vs {Q.space!r}")


def optimal_plan(P: AtomicMeasure, Q: AtomicMeasure, p: float = 2.0):
    """Optimal coupling for the cost ``d^p``; returns ``(plan, cost)``."""
    _same_space(P, Q)
    if not p >= 1:
        raise ValueError("p must be >= 1")
    C = P.space.pairwise(P.atoms, Q.atoms) ** p
    return solve_transport(P.weights, Q.weights, C)


def wasserstein_distance(P: AtomicMeasure, Q: AtomicMeasure, p: float = 2.0) -> float:
    _, cost = optimal_plan(P, Q, p)
    return max(cost, 0.0) ** (1.0 / p)


def measure_stratum(P: AtomicMeasure, tol: float = MERGE_TOL) -> MeasureStratum:
    """Number of support points and the sorted weights after merging."""
    merged = P.normalize(tol)
    w = sorted(merged.weights.tolist(), reverse=True)
    regular = len(merged) == len(P) and bool(np.all(P.weights > 0))
    return MeasureStratum(len(merged), WeightPartition(tuple(w)), regular)


def measure_geodesic(P: AtomicMeasure, Q: AtomicMeasure, p: float, t: float,
                     tol: float = MERGE_TOL) -> AtomicMeasure:
    """Displacement interpolation along an optimal plan, evaluated at ``t``."""
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    plan, _ = optimal_plan(P, Q, p)
    rows, cols = np.nonzero(plan.coupling > 0)
    mass = plan.coupling[rows, cols]
    if t == 0:
        pts = P.atoms[rows]
    elif t == 1:
        pts = Q.atoms[cols]
    else:
        pts = P.space.geodesic(P.atoms[rows], Q.atoms[cols], t)
    return AtomicMeasure(P.space, pts, mass / math.fsum(mass)).normalize(tol)
