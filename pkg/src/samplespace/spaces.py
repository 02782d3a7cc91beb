"""Base path-metric spaces.

Points are plain float arrays whose last axis holds the coordinates:

* ``Euclidean(d)``: ``(d,)`` coordinate vector.
* ``Sphere(d)``: ``(d + 1,)`` unit vector in the ambient space.
* ``Circle()``: ``(1,)`` angle in ``[0, 2*pi)``.
* ``Spider(k)``: ``(2,)`` pair ``(leg, radius)`` with legs numbered ``1..k``;
  the center is stored as ``(0, 0.0)``.

All geometric methods broadcast over leading axes, so ``space.dist(X[:, None],
Y[None])`` is the pairwise distance matrix.

New spaces are added by subclassing :class:`Space` and registering the class
in ``_KINDS``; everything downstream only talks to the methods defined here.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import ClassVar

import numpy as np
from scipy.linalg import null_space

from .errors import (
    ConfigError,
    CutLocusError,
    NonUniqueGeodesic,
    SpaceMismatchError,
    UnsupportedOperation,
)

#: tolerance for structural checks (unit norms, weight sums)
STRUCTURAL_TOL = 1e-12
#: tolerance for geometric checks (antipodality, coincidence of points)
GEOMETRIC_TOL = 1e-9

TWO_PI = 2.0 * math.pi


class Space:
    """Common interface of the supported base spaces."""

    kind: ClassVar[str]
    riemannian: ClassVar[bool] = True

    @property
    def point_dim(self) -> int:
        raise NotImplementedError

    @property
    def tangent_dim(self) -> int:
        raise NotImplementedError

    @property
    def injectivity_radius(self) -> float:
        return math.inf

    # -- validation -------------------------------------------------------
    def points(self, x) -> np.ndarray:
        """Validate and canonicalize an ``(n, point_dim)`` array of points."""
        arr = np.array(x, dtype=float)
        if arr.ndim == 1 and self.point_dim == 1 and arr.shape[0] != 1:
            arr = arr[:, None]
        if arr.ndim == 1:
            arr = arr[None, :]
        if arr.ndim != 2 or arr.shape[1] != self.point_dim:
            raise SpaceMismatchError(
                f"{self!r} expects points of length {self.point_dim}, got shape {np.shape(x)}"
            )
        if not np.all(np.isfinite(arr)):
            raise SpaceMismatchError("points must be finite")
        return self._canonical(arr)

    def point(self, x) -> np.ndarray:
        """Validate a single point."""
        arr = np.array(x, dtype=float)
        if arr.ndim == 0:
            arr = arr[None]
        if arr.ndim != 1:
            raise SpaceMismatchError(f"expected a single point, got shape {arr.shape}")
        return self.points(arr[None, :])[0]

    def _canonical(self, arr: np.ndarray) -> np.ndarray:
        return arr

    # -- geometry ---------------------------------------------------------
    def dist(self, a, b) -> np.ndarray:
        raise NotImplementedError

    def pairwise(self, X, Y) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        Y = np.asarray(Y, dtype=float)
        return self.dist(X[:, None, :], Y[None, :, :])

    def geodesic(self, a, b, t) -> np.ndarray:
        """Point at time ``t`` on the constant-speed minimizing geodesic a -> b."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        t = np.asarray(t, dtype=float)
        v = self.log(a, b, strict=False)
        if self._ambiguous(a, b).any():
            raise NonUniqueGeodesic("endpoints are antipodal; the geodesic is not unique")
        return self.exp(a, v * t[..., None] if t.ndim else v * t)

    def _ambiguous(self, a, b) -> np.ndarray:
        return np.zeros(np.broadcast_shapes(a.shape[:-1], b.shape[:-1]), dtype=bool)

    def log(self, base, target, strict: bool = True) -> np.ndarray:
        raise UnsupportedOperation(f"log map is not defined on {self!r}")

    def exp(self, base, v) -> np.ndarray:
        raise UnsupportedOperation(f"exp map is not defined on {self!r}")

    def tangent_basis(self, base) -> np.ndarray:
        """Orthonormal basis of the tangent space at ``base``, one row per vector."""
        raise UnsupportedOperation(f"{self!r} has no tangent spaces")

    def embed(self, pts) -> np.ndarray:
        """Euclidean embedding whose chordal distance never exceeds ``dist``."""
        return np.asarray(pts, dtype=float)

    def sort_key(self, pts) -> np.ndarray:
        return np.asarray(pts, dtype=float)

    def to_json(self) -> dict:
        raise NotImplementedError

    def point_to_json(self, pt):
        return [float(v) for v in pt]


@dataclass(frozen=True)
class Euclidean(Space):
    """Flat space R^dim."""

    dim: int
    kind: ClassVar[str] = "euclidean"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError("Euclidean dim must be a positive integer")

    @property
    def point_dim(self):
        return self.dim

    @property
    def tangent_dim(self):
        return self.dim

    def dist(self, a, b):
        diff = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
        return np.sqrt(np.sum(diff * diff, axis=-1))

    def geodesic(self, a, b, t):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        t = np.asarray(t, dtype=float)
        if t.ndim:
            t = t[..., None]
        return (1.0 - t) * a + t * b

    def log(self, base, target, strict=True):
        return np.asarray(target, dtype=float) - np.asarray(base, dtype=float)

    def exp(self, base, v):
        return np.asarray(base, dtype=float) + np.asarray(v, dtype=float)

    def tangent_basis(self, base):
        return np.eye(self.dim)

    def to_json(self):
        return {"kind": self.kind, "dim": self.dim}


@dataclass(frozen=True)
class Sphere(Space):
    """Unit sphere S^dim embedded in R^(dim+1) with the great-circle metric."""

    dim: int
    kind: ClassVar[str] = "sphere"

    def __post_init__(self):
        if int(self.dim) != self.dim or self.dim < 1:
            raise ConfigError("Sphere dim must be a positive integer")

    @property
    def point_dim(self):
        return self.dim + 1

    @property
    def tangent_dim(self):
        return self.dim

    @property
    def injectivity_radius(self):
        return math.pi

    def _canonical(self, arr):
        norms = np.linalg.norm(arr, axis=-1)
        if np.any(np.abs(norms - 1.0) > STRUCTURAL_TOL):
            raise SpaceMismatchError("sphere points must have unit norm")
        # no rescaling: validation must leave valid points bit-identical
        return arr

    def dist(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        # stable for both small and near-antipodal angles
        return 2.0 * np.arctan2(np.linalg.norm(a - b, axis=-1), np.linalg.norm(a + b, axis=-1))

    def _ambiguous(self, a, b):
        return np.linalg.norm(np.asarray(a) + np.asarray(b), axis=-1) <= GEOMETRIC_TOL

    def log(self, base, target, strict=True):
        base = np.asarray(base, dtype=float)
        target = np.asarray(target, dtype=float)
        if strict and self._ambiguous(base, target).any():
            raise CutLocusError("target is antipodal to base")
        cos = np.sum(base * target, axis=-1, keepdims=True)
        w = target - cos * base
        wn = np.linalg.norm(w, axis=-1, keepdims=True)
        theta = self.dist(base, target)[..., None]
        with np.errstate(invalid="ignore", divide="ignore"):
            out = np.where(wn > 0, theta * w / np.where(wn > 0, wn, 1.0), 0.0)
        return out

    def exp(self, base, v):
        base = np.asarray(base, dtype=float)
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v, axis=-1, keepdims=True)
        safe = np.where(nv > 0, nv, 1.0)
        out = np.cos(nv) * base + np.where(nv > 0, np.sin(nv) * v / safe, 0.0)
        return out / np.linalg.norm(out, axis=-1, keepdims=True)

    def tangent_basis(self, base):
        return null_space(np.asarray(base, dtype=float)[None, :]).T

    def to_json(self):
        return {"kind": self.kind, "dim": self.dim}


@dataclass(frozen=True)
class Circle(Space):
    """Unit circle parametrized by angle, with arc-length metric."""

    kind: ClassVar[str] = "circle"

    @property
    def point_dim(self):
        return 1

    @property
    def tangent_dim(self):
        return 1

    @property
    def injectivity_radius(self):
        return math.pi

    @staticmethod
    def wrap(theta):
        out = np.mod(theta, TWO_PI)
        return np.where(out >= TWO_PI, 0.0, out)

    def _canonical(self, arr):
        return self.wrap(arr)

    def _signed(self, a, b):
        # signed difference b - a in [-pi, pi)
        d = np.mod(np.asarray(b, dtype=float) - np.asarray(a, dtype=float) + math.pi, TWO_PI) - math.pi
        return d[..., 0]

    def dist(self, a, b):
        # |a - b| is exactly symmetric in floating point, so the result is too
        r = np.mod(np.abs(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)), TWO_PI)[..., 0]
        return np.minimum(r, TWO_PI - r)

    def _ambiguous(self, a, b):
        return np.abs(np.abs(self._signed(a, b)) - math.pi) <= GEOMETRIC_TOL

    def log(self, base, target, strict=True):
        if strict and self._ambiguous(np.asarray(base), np.asarray(target)).any():
            raise CutLocusError("target is antipodal to base")
        return self._signed(base, target)[..., None]

    def exp(self, base, v):
        return self.wrap(np.asarray(base, dtype=float) + np.asarray(v, dtype=float))

    def tangent_basis(self, base):
        return np.eye(1)

    def embed(self, pts):
        th = np.asarray(pts, dtype=float)[..., 0]
        return np.stack([np.cos(th), np.sin(th)], axis=-1)

    def to_json(self):
        return {"kind": self.kind}

    def point_to_json(self, pt):
        return float(pt[0])


@dataclass(frozen=True)
class Spider(Space):
    """The k-spider: k half-lines glued at a common center (an open book)."""

    num_legs: int
    kind: ClassVar[str] = "spider"
    riemannian: ClassVar[bool] = False

    def __post_init__(self):
        if int(self.num_legs) != self.num_legs or self.num_legs < 3:
            raise ConfigError("Spider needs num_legs >= 3")

    @property
    def point_dim(self):
        return 2

    @property
    def tangent_dim(self):
        raise UnsupportedOperation("the spider is not a manifold")

    def _canonical(self, arr):
        legs, r = arr[:, 0], arr[:, 1]
        if np.any(r < 0):
            raise SpaceMismatchError("spider radius must be non-negative")
        if np.any(legs != np.round(legs)) or np.any(legs < 0) or np.any(legs > self.num_legs):
            raise SpaceMismatchError(f"spider legs must be integers in 1..{self.num_legs}")
        if np.any((legs == 0) & (r > 0)):
            raise SpaceMismatchError("leg 0 is reserved for the center")
        out = arr.copy()
        out[r == 0, 0] = 0.0
        return out

    def dist(self, a, b):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        ra, rb = a[..., 1], b[..., 1]
        return np.where(a[..., 0] == b[..., 0], np.abs(ra - rb), ra + rb)

    def geodesic(self, a, b, t):
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        t = np.asarray(t, dtype=float)
        la, ra = a[..., 0], a[..., 1]
        lb, rb = b[..., 0], b[..., 1]
        same = (la == lb) | (ra == 0) | (rb == 0)
        leg_same = np.where(ra == 0, lb, la)
        r_same = (1.0 - t) * ra + t * rb
        s = t * (ra + rb)  # arc length travelled through the center
        r_cross = np.where(s <= ra, ra - s, s - ra)
        leg_cross = np.where(s <= ra, la, lb)
        leg = np.where(same, leg_same, leg_cross)
        r = np.where(same, r_same, r_cross)
        leg = np.where(r == 0, 0.0, leg)
        return np.stack(np.broadcast_arrays(leg, r), axis=-1)

    def embed(self, pts):
        pts = np.asarray(pts, dtype=float)
        out = np.zeros(pts.shape[:-1] + (self.num_legs,))
        legs = pts[..., 0].astype(int)
        mask = legs > 0
        idx = np.nonzero(mask)
        out[idx + (legs[mask] - 1,)] = pts[..., 1][mask]
        return out

    def to_json(self):
        return {"kind": self.kind, "num_legs": self.num_legs}

    def point_to_json(self, pt):
        return [int(pt[0]), float(pt[1])]

    @staticmethod
    def center():
        return np.array([0.0, 0.0])


_KINDS = {cls.kind: cls for cls in (Euclidean, Sphere, Circle, Spider)}


def space_from_json(obj) -> Space:
    """Decode ``{"kind": ..., "dim"/"num_legs": ...}``."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("space must be an object with a 'kind' field")
    kind = obj["kind"]
    if kind not in _KINDS:
        raise ConfigError(f"unknown space kind {kind!r}; expected one of {sorted(_KINDS)}")
    try:
        if kind in ("euclidean", "sphere"):
            return _KINDS[kind](int(obj["dim"]))
        if kind == "spider":
            return Spider(int(obj["num_legs"]))
        return Circle()
    except KeyError as exc:
        raise ConfigError(f"space {kind!r} is missing field {exc.args[0]!r}") from None


def points_from_json(space: Space, items) -> np.ndarray:
    if isinstance(space, Circle):
        items = [[v] if not isinstance(v, (list, tuple)) else v for v in items]
    return space.points(items)


# -- module-level operations --------------------------------------------------


@dataclass(frozen=True)
class TangentVector:
    """A tangent vector at ``base`` in ambient coordinates."""

    base: np.ndarray
    components: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.components))


def _require_space(space):
    if not isinstance(space, Space):
        raise SpaceMismatchError(f"expected a Space, got {type(space).__name__}")


def distance(space: Space, a, b) -> float:
    _require_space(space)
    return float(space.dist(space.point(a), space.point(b)))


def geodesic_point(space: Space, a, b, t: float) -> np.ndarray:
    """Point ``c(t)`` of the constant-speed minimizing geodesic from a to b."""
    _require_space(space)
    if not 0.0 <= t <= 1.0:
        raise ValueError("t must lie in [0, 1]")
    a, b = space.point(a), space.point(b)
    if t == 0.0:
        return a
    return space.points(space.geodesic(a, b, t)[None, :])[0]


def log_map(space: Space, base, target) -> TangentVector:
    _require_space(space)
    base, target = space.point(base), space.point(target)
    return TangentVector(base, space.log(base, target, strict=True))


def exp_map(space: Space, base, v) -> np.ndarray:
    _require_space(space)
    base = space.point(base)
    comp = v.components if isinstance(v, TangentVector) else np.asarray(v, dtype=float)
    if isinstance(space, Sphere) and abs(float(comp @ base)) > 1e-10:
        raise SpaceMismatchError("sphere tangent vectors must be orthogonal to the base point")
    return space.points(space.exp(base, comp)[None, :])[0]
