"""Sampling laws on the base spaces and their JSON encoding.

Every law is a frozen dataclass with ``draw(space, rng, size)`` returning an
``(size, point_dim)`` array. Draws are deterministic given the generator state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .spaces import Circle, Euclidean, Space, Sphere, Spider, points_from_json


def _as_vector(x, name):
    arr = np.atleast_1d(np.asarray(x, dtype=float))
    if arr.ndim != 1:
        raise ConfigError(f"{name} must be a vector")
    return arr


class Law:
    kind = ""

    def check(self, space: Space) -> None:
        raise NotImplementedError

    def draw(self, space: Space, rng: np.random.Generator, size: int) -> np.ndarray:
        raise NotImplementedError

    def to_json(self, space: Space) -> dict:
        raise NotImplementedError


@dataclass(frozen=True)
class Gaussian(Law):
    mean: tuple
    cov: tuple  # full covariance matrix as nested tuples
    kind = "gaussian"

    def check(self, space):
        if not isinstance(space, Euclidean):
            raise ConfigError("gaussian law requires a Euclidean space")
        c = np.asarray(self.cov)
        if len(self.mean) != space.dim or c.shape != (space.dim, space.dim):
            raise ConfigError("gaussian mean/cov do not match the space dimension")
        if not np.allclose(c, c.T) or np.min(np.linalg.eigvalsh(c)) < 0:
            raise ConfigError("gaussian cov must be symmetric positive semidefinite")

    def draw(self, space, rng, size):
        return rng.multivariate_normal(np.asarray(self.mean), np.asarray(self.cov), size=size, method="cholesky")

    def to_json(self, space):
        return {"kind": self.kind, "mean": list(self.mean), "cov": [list(r) for r in self.cov]}


@dataclass(frozen=True)
class UniformBall(Law):
    center: tuple
    radius: float
    kind = "uniform_ball"

    def check(self, space):
        if not isinstance(space, Euclidean) or len(self.center) != space.dim:
            raise ConfigError("uniform_ball law requires a Euclidean space of matching dimension")
        if not self.radius > 0:
            raise ConfigError("uniform_ball radius must be positive")

    def draw(self, space, rng, size):
        d = space.dim
        g = rng.standard_normal((size, d))
        g /= np.linalg.norm(g, axis=1, keepdims=True)
        r = self.radius * rng.random(size) ** (1.0 / d)
        return np.asarray(self.center) + g * r[:, None]

    def to_json(self, space):
        return {"kind": self.kind, "center": list(self.center), "radius": self.radius}


@dataclass(frozen=True)
class WrappedGaussian(Law):
    """Isotropic Gaussian in the tangent space at ``pole`` pushed through exp."""

    pole: tuple
    sigma: float
    kind = "wrapped_gaussian"

    def check(self, space):
        if not isinstance(space, (Sphere, Circle)):
            raise ConfigError("wrapped_gaussian law requires a Sphere or Circle")
        space.point(self.pole)
        if not self.sigma > 0:
            raise ConfigError("wrapped_gaussian sigma must be positive")

    def draw(self, space, rng, size):
        pole = space.point(self.pole)
        basis = space.tangent_basis(pole)
        v = (rng.standard_normal((size, basis.shape[0])) * self.sigma) @ basis
        return space.points(space.exp(pole[None, :], v))

    def to_json(self, space):
        return {"kind": self.kind, "pole": space.point_to_json(space.point(self.pole)), "sigma": self.sigma}


@dataclass(frozen=True)
class Uniform(Law):
    """Uniform (rotation-invariant) law on a sphere or circle."""

    kind = "uniform"

    def check(self, space):
        if not isinstance(space, (Sphere, Circle)):
            raise ConfigError("uniform law requires a Sphere or Circle")

    def draw(self, space, rng, size):
        if isinstance(space, Circle):
            return space.points(rng.random((size, 1)) * 2 * math.pi)
        g = rng.standard_normal((size, space.point_dim))
        return g / np.linalg.norm(g, axis=1, keepdims=True)

    def to_json(self, space):
        return {"kind": self.kind}


@dataclass(frozen=True)
class ArcUniform(Law):
    """Uniform law on the circle arc ``[center - half_width, center + half_width]``."""

    center: float
    half_width: float
    kind = "arc_uniform"

    def check(self, space):
        if not isinstance(space, Circle):
            raise ConfigError("arc_uniform law requires a Circle")
        if not 0 < self.half_width <= math.pi:
            raise ConfigError("arc_uniform half_width must lie in (0, pi]")

    def draw(self, space, rng, size):
        u = rng.uniform(-self.half_width, self.half_width, size=(size, 1))
        return space.points(self.center + u)

    def to_json(self, space):
        return {"kind": self.kind, "center": self.center, "half_width": self.half_width}


@dataclass(frozen=True)
class Radial:
    """Radial law along one spider leg."""

    kind: str = "fixed"
    value: float = 1.0
    low: float = 0.0
    high: float = 1.0
    scale: float = 1.0

    def check(self):
        if self.kind == "fixed" and self.value < 0:
            raise ConfigError("fixed radius must be non-negative")
        elif self.kind == "uniform" and not 0 <= self.low <= self.high:
            raise ConfigError("uniform radial law needs 0 <= low <= high")
        elif self.kind == "exponential" and not self.scale > 0:
            raise ConfigError("exponential radial law needs scale > 0")
        elif self.kind not in ("fixed", "uniform", "exponential"):
            raise ConfigError(f"unknown radial law {self.kind!r}")

    def draw(self, rng, size):
        if self.kind == "fixed":
            return np.full(size, float(self.value))
        if self.kind == "uniform":
            return rng.uniform(self.low, self.high, size)
        return rng.exponential(self.scale, size)

    def to_json(self):
        if self.kind == "fixed":
            return {"kind": "fixed", "value": self.value}
        if self.kind == "uniform":
            return {"kind": "uniform", "low": self.low, "high": self.high}
        return {"kind": "exponential", "scale": self.scale}


@dataclass(frozen=True)
class SpiderMixture(Law):
    """Pick leg ``i`` with probability ``leg_weights[i-1]``, then a radius from its radial law."""

    leg_weights: tuple
    radial: tuple = field(default_factory=lambda: (Radial(),))
    kind = "spider_mixture"

    def check(self, space):
        if not isinstance(space, Spider):
            raise ConfigError("spider_mixture law requires a Spider")
        w = np.asarray(self.leg_weights, dtype=float)
        if len(w) != space.num_legs or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ConfigError("leg_weights must be non-negative, one per leg, summing to 1")
        if len(self.radial) not in (1, space.num_legs):
            raise ConfigError("radial must hold one law or one per leg")
        for r in self.radial:
            r.check()

    def _radial(self, leg):
        return self.radial[0] if len(self.radial) == 1 else self.radial[leg]

    def draw(self, space, rng, size):
        w = np.asarray(self.leg_weights, dtype=float)
        legs = rng.choice(len(w), size=size, p=w / w.sum())
        r = np.empty(size)
        for leg in range(len(w)):
            mask = legs == leg
            r[mask] = self._radial(leg).draw(rng, int(mask.sum()))
        return space.points(np.stack([legs + 1.0, r], axis=1))

    def to_json(self, space):
        return {
            "kind": self.kind,
            "leg_weights": list(self.leg_weights),
            "radial": [r.to_json() for r in self.radial],
        }


@dataclass(frozen=True)
class FiniteSupport(Law):
    """Finitely supported law sum_i weights[i] * delta(atoms[i])."""

    atoms: tuple  # tuple of coordinate tuples
    weights: tuple
    kind = "finite"

    def check(self, space):
        atoms = space.points(self.atoms)
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(atoms) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ConfigError("finite law weights must be non-negative, one per atom, summing to 1")

    def draw(self, space, rng, size):
        atoms = space.points(self.atoms)
        w = np.asarray(self.weights, dtype=float)
        idx = rng.choice(len(w), size=size, p=w / w.sum())
        return atoms[idx]

    def to_json(self, space):
        return {
            "kind": self.kind,
            "atoms": [space.point_to_json(a) for a in space.points(self.atoms)],
            "weights": list(self.weights),
        }


@dataclass(frozen=True)
class Mixture(Law):
    """Finite mixture of laws; i.i.d. draws pick a component per point."""

    components: tuple
    weights: tuple
    kind = "mixture"

    def check(self, space):
        w = np.asarray(self.weights, dtype=float)
        if len(w) != len(self.components) or np.any(w < 0) or abs(w.sum() - 1) > 1e-12:
            raise ConfigError("mixture weights must be non-negative, one per component, summing to 1")
        for c in self.components:
            c.check(space)

    def pick(self, rng, size=None):
        w = np.asarray(self.weights, dtype=float)
        return rng.choice(len(w), size=size, p=w / w.sum())

    def draw(self, space, rng, size):
        comp = self.pick(rng, size)
        out = np.empty((size, space.point_dim))
        for k, law in enumerate(self.components):
            mask = comp == k
            if mask.any():
                out[mask] = law.draw(space, rng, int(mask.sum()))
        return out

    def to_json(self, space):
        return {
            "kind": self.kind,
            "components": [c.to_json(space) for c in self.components],
            "weights": list(self.weights),
        }


def _radial_from_json(obj):
    if isinstance(obj, (int, float)):
        return Radial("fixed", value=float(obj))
    kind = obj.get("kind", "fixed")
    return Radial(
        kind,
        value=float(obj.get("value", 1.0)),
        low=float(obj.get("low", 0.0)),
        high=float(obj.get("high", 1.0)),
        scale=float(obj.get("scale", 1.0)),
    )


def law_from_json(space: Space, obj) -> Law:
    """Decode a law object and check it against ``space``."""
    if not isinstance(obj, dict) or "kind" not in obj:
        raise ConfigError("law must be an object with a 'kind' field")
    kind = obj["kind"]
    try:
        if kind == "gaussian":
            mean = _as_vector(obj["mean"], "mean")
            if "cov" in obj:
                cov = np.asarray(obj["cov"], dtype=float)
            else:
                cov = float(obj.get("std", 1.0)) ** 2 * np.eye(len(mean))
            law = Gaussian(tuple(mean), tuple(map(tuple, np.atleast_2d(cov))))
        elif kind == "uniform_ball":
            law = UniformBall(tuple(_as_vector(obj["center"], "center")), float(obj["radius"]))
        elif kind == "wrapped_gaussian":
            pole = obj["pole"]
            pole = tuple(np.atleast_1d(np.asarray(pole, dtype=float)))
            law = WrappedGaussian(pole, float(obj["sigma"]))
        elif kind == "uniform":
            law = Uniform()
        elif kind == "arc_uniform":
            law = ArcUniform(float(obj["center"]), float(obj["half_width"]))
        elif kind == "spider_mixture":
            radial = obj.get("radial", [{"kind": "fixed", "value": 1.0}])
            if isinstance(radial, dict) or isinstance(radial, (int, float)):
                radial = [radial]
            law = SpiderMixture(tuple(float(w) for w in obj["leg_weights"]), tuple(_radial_from_json(r) for r in radial))
        elif kind == "finite":
            atoms = points_from_json(space, obj["atoms"])
            law = FiniteSupport(tuple(map(tuple, atoms)), tuple(float(w) for w in obj["weights"]))
        elif kind == "mixture":
            comps = tuple(law_from_json(space, c) for c in obj["components"])
            law = Mixture(comps, tuple(float(w) for w in obj["weights"]))
        else:
            raise ConfigError(f"unknown law kind {kind!r}")
    except KeyError as exc:
        raise ConfigError(f"law {kind!r} is missing field {exc.args[0]!r}") from None
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"law {kind!r}: {exc}") from None
    law.check(space)
    return law


def sample_points(space: Space, law: Law, rng: np.random.Generator, size: int) -> np.ndarray:
    """Draw ``size`` i.i.d. points; returns a validated ``(size, point_dim)`` array."""
    law.check(space)
    return space.points(law.draw(space, rng, size)) if size else np.empty((0, space.point_dim))


def sample_point(space: Space, law: Law, rng: np.random.Generator) -> np.ndarray:
    return sample_points(space, law, rng, 1)[0]
