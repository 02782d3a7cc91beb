"""Fréchet p-means and polymeans as metric projections.

* :func:`frechet_mean` minimizes ``F(y) = sum_i w_i d(x_i, y)^p``.
* :func:`q_mean` projects a measure onto the closed q-skeleton (measures with at
  most q atoms); :func:`unweighted_q_mean` keeps only the centers.
* :func:`kbar_mean` projects a sample onto the closure of a k̄-stratum
  (cluster sizes prescribed by a partition).
* :func:`brute_force_q_mean` is an enumeration oracle for small samples.

Reported objectives are always distances, ``F ** (1/p)``: the W_p distance
from the input to the returned measure or sample.

The polymean solvers are local searches (Lloyd alternation) with restarts;
the Fréchet solvers are exact where a closed form exists (Euclidean p=2, the
spider) and tangent-space descent elsewhere.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Any, NamedTuple

import numpy as np
from scipy.optimize import brentq, minimize

from .errors import ConfigError, DimensionError
from .samples import Partition, Sample, coincidence_labels, canonical_order, sample_distance
from .spaces import Circle, Euclidean, Space, Sphere, Spider
from .transport import solve_capacitated_assignment, solve_transport
from .wasserstein import AtomicMeasure, MERGE_TOL, WeightPartition, measure_stratum

SINGULAR_TOL = 1e-12
MAX_HALVINGS = 50


@dataclass(frozen=True)
class SolverOptions:
    restarts: int = 16
    max_iterations: int = 200
    rel_tolerance: float = 1e-9
    merge_tolerance: float = MERGE_TOL
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1 or self.max_iterations < 1:
            raise ConfigError("restarts and max_iterations must be positive")
        if not (self.rel_tolerance > 0 and self.merge_tolerance > 0):
            raise ConfigError("tolerances must be positive")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")

    def rng(self, restart: int) -> np.random.Generator:
        """Independent stream for one restart, derived from ``(seed, restart)``."""
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(self.seed, spawn_key=(restart,))))

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, obj) -> "SolverOptions":
        obj = obj or {}
        unknown = set(obj) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown solver options: {sorted(unknown)}")
        return cls(**obj)


@dataclass
class MeanResult:
    """Outcome of a mean computation.

    ``history`` is the objective trace (functional values ``F``, not roots) of
    the winning run and is non-increasing. ``candidates`` holds the
    ``(objective, minimizer)`` pair of every restart.
    """

    minimizer: Any
    objective: float
    iterations: int
    restarts_used: int
    converged: bool
    history: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    assignment: np.ndarray | None = None
    info: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {
            "minimizer": _value_json(self.minimizer),
            "objective": float(self.objective),
            "iterations": int(self.iterations),
            "restarts_used": int(self.restarts_used),
            "converged": bool(self.converged),
            "history": [float(h) for h in self.history],
            "candidate_objectives": [float(c[0]) for c in self.candidates],
            "assignment": None if self.assignment is None else [int(a) for a in self.assignment],
            **({"info": self.info} if self.info else {}),
        }


def _value_json(v):
    if hasattr(v, "to_json"):
        return v.to_json()
    return np.asarray(v, dtype=float).tolist()


# -- Fréchet functional ----------------------------------------------------------


def frechet_functional(space: Space, atoms, weights, y, p: float) -> float:
    return math.fsum(np.asarray(weights) * space.dist(atoms, y) ** p)


def _spider_frechet(space: Spider, atoms, weights, p):
    """Exact minimizer on the spider: a convex 1D problem per leg plus the center."""
    legs = atoms[:, 0].astype(int)
    r = atoms[:, 1]
    w = np.asarray(weights, dtype=float)
    center = Spider.center()
    best_y, best_f = center, frechet_functional(space, atoms, w, center, p)
    for leg in range(1, space.num_legs + 1):
        on = legs == leg
        if not on.any():
            continue
        # one-sided derivative of F at the center in the direction of this leg
        off_slope = w[~on] * (r[~on] ** (p - 1) if p > 1 else np.ones((~on).sum()))
        slope = p * (math.fsum(off_slope) - math.fsum(w[on] * r[on] ** (p - 1)))
        if slope >= 0:
            continue
        if p == 2:
            s = (math.fsum(w[on] * r[on]) - math.fsum(w[~on] * r[~on])) / math.fsum(w)
        elif p == 1:
            cand = np.unique(r[on])
            vals = [frechet_functional(space, atoms, w, np.array([leg, c]), p) for c in cand]
            s = float(cand[int(np.argmin(vals))])
        else:
            def deriv(s):
                return (math.fsum(w[on] * np.sign(s - r[on]) * np.abs(s - r[on]) ** (p - 1))
                        + math.fsum(w[~on] * (s + r[~on]) ** (p - 1)))
            s = brentq(deriv, 0.0, float(r[on].max()), xtol=1e-15, rtol=4 * np.finfo(float).eps)
        y = np.array([float(leg), s]) if s > 0 else center
        f = frechet_functional(space, atoms, w, y, p)
        if f < best_f:
            best_y, best_f = y, f
    return best_y, best_f


def _direction(space, atoms, w, p, y):
    """Descent step at ``y``; ``None`` when ``y`` satisfies the optimality condition.

    The step is the weighted log average ``sum c_i log_y(x_i) / sum c_i`` with
    ``c_i = w_i d_i^(p-2)``: the Karcher iteration for p=2 and Weiszfeld's
    iteration for p=1. At an atom with p=1 the Vardi-Zhang correction applies.
    """
    d = space.dist(atoms, y)
    L = space.log(y, atoms, strict=False)
    near = d <= SINGULAR_TOL
    far = ~near & (w > 0)
    coef = w[far] * d[far] ** (p - 2)
    if coef.sum() == 0:
        return None
    R = (coef[:, None] * L[far]).sum(axis=0)
    v = R / coef.sum()
    if p == 1 and near.any():
        stuck = math.fsum(w[near])
        norm_r = float(np.linalg.norm(R))
        if norm_r <= stuck:
            return None  # subgradient condition holds at the atom
        v = v * (1.0 - stuck / norm_r)
    return v


def _descent(space: Space, atoms, weights, p, init, opts: SolverOptions):
    """Tangent-space descent with step halving.

    A step is accepted when it lowers F, or when F changes only at rounding
    level and the next step is shorter; F alone cannot resolve positions
    below about sqrt(machine epsilon) near a minimum.
    """
    w = np.asarray(weights, dtype=float)
    y = np.array(init, dtype=float)
    F = frechet_functional(space, atoms, w, y, p)
    history = [F]
    scale = max(1.0, float(np.max(space.dist(atoms, y), initial=0.0)))
    converged = F == 0.0
    it = 0
    v = None if converged else _direction(space, atoms, w, p, y)
    if v is None:
        converged = True
    prev_moved = 0.0
    while not converged and it < opts.max_iterations:
        it += 1
        step = 1.0
        v_next = None
        for _ in range(MAX_HALVINGS):
            y_new = space.exp(y, step * v)
            F_new = frechet_functional(space, atoms, w, y_new, p)
            if F_new < F:
                break
            if F_new <= F * (1 + 8 * np.finfo(float).eps):
                v_next = _direction(space, atoms, w, p, y_new)
                if v_next is None or np.linalg.norm(v_next) < np.linalg.norm(step * v):
                    F_new = min(F_new, F)
                    break
                v_next = None
            step *= 0.5
        else:
            converged = True  # no decrease possible at working precision
            break
        moved = float(space.dist(y, y_new))
        # linear convergence with ratio k leaves about moved * k / (1 - k) to go
        ratio = moved / prev_moved if prev_moved > 0 else 1.0
        remaining = moved * ratio / (1.0 - ratio) if ratio < 1 else math.inf
        prev_moved = moved
        y, F = y_new, F_new
        history.append(F)
        v = v_next if v_next is not None else _direction(space, atoms, w, p, y)
        if v is None or moved == 0 or max(moved, remaining) <= opts.rel_tolerance * scale:
            converged = True
        elif p == 1:
            # Weiszfeld creeps sublinearly towards an optimal atom; test the nearest one
            a = int(np.argmin(space.dist(atoms, y)))
            if _atom_is_optimal(space, atoms, w, a):
                F_a = frechet_functional(space, atoms, w, atoms[a], p)
                if F_a <= F:
                    y, F = atoms[a].copy(), F_a
                    history.append(F)
                    converged = True
    return y, F, it, converged, history


def _atom_is_optimal(space, atoms, w, a):
    """Subgradient condition for the weighted median at atom ``a``."""
    d = space.dist(atoms, atoms[a])
    far = (d > SINGULAR_TOL) & (w > 0)
    if not far.any():
        return True
    L = space.log(atoms[a], atoms[far], strict=False)
    R = ((w[far] / d[far])[:, None] * L).sum(axis=0)
    return float(np.linalg.norm(R)) <= math.fsum(w[~far])


def _exact_solver(space, p):
    return isinstance(space, Spider) or (isinstance(space, Euclidean) and p == 2)


def _frechet_local(space, atoms, weights, p, init, opts):
    """Minimize F from ``init``; never returns a point worse than ``init``."""
    w = np.asarray(weights, dtype=float)
    if isinstance(space, Spider):
        y, F = _spider_frechet(space, atoms, w, p)
        return y, F, 1, True, [F]
    if isinstance(space, Euclidean) and p == 2:
        y = np.average(atoms, axis=0, weights=w)
        F = frechet_functional(space, atoms, w, y, p)
        return y, F, 1, True, [F]
    return _descent(space, atoms, w, p, init, opts)


def _pick_best(runs):
    # runs: list of (F, restart_index, payload); ties go to the lowest restart index
    return min(runs, key=lambda r: (r[0], r[1]))


def _check_p(p):
    if not p >= 1:
        raise ValueError("p must be >= 1")


def frechet_mean(P: AtomicMeasure, p: float = 2.0, opts: SolverOptions | None = None) -> MeanResult:
    """Fréchet p-mean of an atomic measure; minimizer is a point array."""
    _check_p(p)
    opts = opts or SolverOptions()
    space, atoms, w = P.space, P.atoms, P.weights
    if _exact_solver(space, p):
        y, F, it, conv, hist = _frechet_local(space, atoms, w, p, atoms[0], opts)
        return MeanResult(y, F ** (1 / p), it, 1, conv, hist, [(F ** (1 / p), y)])
    runs = []
    for k in range(opts.restarts):
        rng = opts.rng(k)
        init = atoms[rng.choice(len(w), p=w / w.sum())]
        runs.append((*_frechet_local(space, atoms, w, p, init, opts), k))
    runs_sorted = [(r[1], r[5], r) for r in runs]
    _, _, (y, F, it, conv, hist, _) = _pick_best(runs_sorted)
    cands = [(r[1] ** (1 / p), r[0]) for r in runs]
    return MeanResult(space.point(y), F ** (1 / p), it, opts.restarts, conv, hist, cands)


# -- Lloyd alternation -------------------------------------------------------------


def _seed_centers(space, atoms, w, q, p, rng):
    """D^p-weighted seeding over distinct atoms (k-means++ style)."""
    first = rng.choice(len(w), p=w / w.sum())
    chosen = [first]
    dmin = space.dist(atoms, atoms[first]) ** p
    while len(chosen) < q:
        mass = w * dmin
        total = mass.sum()
        if total <= 0:
            break
        nxt = rng.choice(len(w), p=mass / total)
        chosen.append(nxt)
        dmin = np.minimum(dmin, space.dist(atoms, atoms[nxt]) ** p)
    return atoms[chosen].copy()


def _assign(space, atoms, centers, p):
    D = space.pairwise(atoms, centers) ** p
    assign = np.argmin(D, axis=1)  # first minimum: ties to the lowest center index
    return assign, D[np.arange(len(atoms)), assign]


def _lloyd(space, atoms, w, p, centers, opts):
    assign, cost = _assign(space, atoms, centers, p)
    F = math.fsum(w * cost)
    history = [F]
    converged = False
    it = 0
    while it < opts.max_iterations:
        it += 1
        new = []
        for j in range(len(centers)):
            mask = assign == j
            wj = w[mask]
            if wj.sum() <= 0:
                continue  # empty cluster: drop the center
            c, *_ = _frechet_local(space, atoms[mask], wj / wj.sum(), p, centers[j], opts)
            new.append(c)
        centers = np.array(new)
        new_assign, cost = _assign(space, atoms, centers, p)
        F_new = math.fsum(w * cost)
        history.append(F_new)
        same = len(centers) == len(np.unique(assign)) and np.array_equal(new_assign, _relabel(assign))
        done = same and (F - F_new) <= opts.rel_tolerance * max(F, np.finfo(float).tiny)
        assign, F = new_assign, F_new
        if done:
            converged = True
            break
    return centers, assign, F, it, converged, history


def _relabel(assign):
    # cluster labels after dropping empty clusters keep their relative order
    _, inv = np.unique(assign, return_inverse=True)
    return inv.ravel()


def _lloyd_restarts(P: AtomicMeasure, q, p, opts):
    space, atoms, w = P.space, P.atoms, P.weights
    runs = []
    seen = {}  # restarts seeded with the same centers reach the same local optimum
    for k in range(opts.restarts):
        init = _seed_centers(space, atoms, w, q, p, opts.rng(k))
        key = init.tobytes()
        if key not in seen:
            seen[key] = _lloyd(space, atoms, w, p, init, opts)
        out = seen[key]
        runs.append((out[2], k, out))
    best = _pick_best(runs)
    return best[2], runs


def _centers_measure(space, centers, assign, w, tol):
    mass = np.bincount(assign, weights=w, minlength=len(centers))
    return AtomicMeasure(space, centers, mass / mass.sum()).normalize(tol)


def q_mean(P: AtomicMeasure, q: int, p: float = 2.0, opts: SolverOptions | None = None) -> MeanResult:
    """Nearest measure with at most ``q`` atoms (W_p projection onto the q-skeleton).

    Returned weights are the masses assigned to each center.
    """
    _check_p(p)
    if q < 1:
        raise ValueError("q must be >= 1")
    opts = opts or SolverOptions()
    P = P.normalize(opts.merge_tolerance)
    if q >= len(P):
        return MeanResult(P, 0.0, 0, 0, True, [0.0], [(0.0, P)], np.arange(len(P)))
    (centers, assign, F, it, conv, hist), runs = _lloyd_restarts(P, q, p, opts)
    Q = _centers_measure(P.space, centers, assign, P.weights, opts.merge_tolerance)
    cands = [(r[0] ** (1 / p), _centers_measure(P.space, r[2][0], r[2][1], P.weights, opts.merge_tolerance))
             for r in runs]
    return MeanResult(Q, F ** (1 / p), it, opts.restarts, conv, hist, cands, assign)


def unweighted_q_mean(P: AtomicMeasure, q: int, p: float = 2.0, opts: SolverOptions | None = None) -> MeanResult:
    """At most ``q`` distinct centers minimizing ``sum_i w_i min_j d(x_i, z_j)^p``.

    The minimizer is an ``(q', point_dim)`` array in canonical order; centers
    closer than ``merge_tolerance`` are merged, so ``q'`` may be below ``q``.
    """
    res = q_mean(P, q, p, opts)
    Q = res.minimizer
    res.minimizer = np.array(Q.atoms)
    res.candidates = [(f, np.array(c.atoms)) for f, c in res.candidates]
    return res


def wbar_mean(P: AtomicMeasure, wbar: WeightPartition, p: float = 2.0,
              opts: SolverOptions | None = None) -> MeanResult:
    """Nearest measure ``sum_j wbar_j delta(z_j)`` with prescribed weights.

    This is the projection onto the closure of the w̄-stratum: centers may
    coincide, in which case the attained stratum (reported in ``info``) is
    coarser than ``wbar``. Alternates an optimal transport plan with fixed
    target weights and per-center Fréchet means of the transported mass.
    """
    _check_p(p)
    opts = opts or SolverOptions()
    P = P.normalize(opts.merge_tolerance)
    space, atoms, w = P.space, P.atoms, P.weights
    tw = np.asarray(wbar.weights)
    q = len(tw)
    runs = []
    for k in range(opts.restarts):
        rng = opts.rng(k)
        centers = _seed_centers(space, atoms, w, q, p, rng)
        if len(centers) < q:
            centers = np.concatenate([centers, centers[rng.integers(len(centers), size=q - len(centers))]])
        plan, F = solve_transport(w, tw, space.pairwise(atoms, centers) ** p)
        history = [F]
        converged = False
        it = 0
        while it < opts.max_iterations:
            it += 1
            for j in range(q):
                cw = plan.coupling[:, j]
                mask = cw > 0
                centers[j], *_ = _frechet_local(space, atoms[mask], cw[mask] / cw[mask].sum(), p, centers[j], opts)
            plan, F_new = solve_transport(w, tw, space.pairwise(atoms, centers) ** p)
            history.append(F_new)
            done = (F - F_new) <= opts.rel_tolerance * max(F, np.finfo(float).tiny)
            F = F_new
            if done:
                converged = True
                break
        runs.append((F, k, (centers.copy(), it, converged, history)))
    F, _, (centers, it, conv, hist) = _pick_best(runs)
    Q = AtomicMeasure(space, centers, tw)
    stratum = measure_stratum(Q, opts.merge_tolerance)
    cands = [(r[0] ** (1 / p), AtomicMeasure(space, r[2][0], tw)) for r in runs]
    info = {"attained_q": stratum.q, "attained_weights": list(stratum.weights.weights)}
    return MeanResult(Q, max(F, 0.0) ** (1 / p), it, opts.restarts, conv, hist, cands, info=info)


def kbar_mean(x: Sample, kbar: Partition, p: float = 2.0, opts: SolverOptions | None = None) -> MeanResult:
    """Nearest sample in the closure of the k̄-stratum.

    Alternates a capacitated assignment (cluster j receives exactly
    ``kbar.parts[j]`` points) with per-cluster Fréchet means. The minimizer is
    a :class:`Sample` with ``k_j`` copies of center ``j``.
    """
    _check_p(p)
    opts = opts or SolverOptions()
    if kbar.n != len(x):
        raise DimensionError(f"partition of {kbar.n} does not match sample size {len(x)}")
    space, pts, n = x.space, x.points, len(x)
    caps = list(kbar.parts)
    uniform = np.full(n, 1.0 / n)
    runs = []
    for k in range(opts.restarts):
        rng = opts.rng(k)
        centers = pts[rng.choice(n, size=len(caps), replace=False)].copy()
        assign, total = solve_capacitated_assignment(space.pairwise(pts, centers) ** p, caps)
        F = total / n
        history = [F]
        converged = False
        it = 0
        while it < opts.max_iterations:
            it += 1
            for j in range(len(caps)):
                mask = assign == j
                centers[j], *_ = _frechet_local(space, pts[mask], uniform[mask] * n / mask.sum(), p, centers[j], opts)
            new_assign, total = solve_capacitated_assignment(space.pairwise(pts, centers) ** p, caps)
            F_new = total / n
            history.append(F_new)
            done = np.array_equal(new_assign, assign) and (F - F_new) <= opts.rel_tolerance * max(F, np.finfo(float).tiny)
            assign, F = new_assign, F_new
            if done:
                converged = True
                break
        runs.append((F, k, (centers.copy(), assign, it, converged, history)))
    F, _, (centers, assign, it, conv, hist) = _pick_best(runs)
    y = Sample(space, np.repeat(centers, caps, axis=0))
    cands = [(r[0] ** (1 / p), Sample(space, np.repeat(r[2][0], caps, axis=0))) for r in runs]
    return MeanResult(y, F ** (1 / p), it, opts.restarts, conv, hist, cands, assign)


def cluster_decomposition(x: Sample, y: Sample, p: float = 2.0) -> list[tuple[Sample, np.ndarray]]:
    """Split ``x`` into the clusters matched to each distinct point of ``y``.

    ``y`` is a polymean of ``x``; the optimal matching sends cluster ``i`` to
    the ``i``-th distinct point of ``y`` (in canonical order).
    """
    _, perm = sample_distance(x, y, p)
    matched = y.points[perm]
    labels = coincidence_labels(y.space, matched, 0.0)
    out = []
    for lab in range(labels.max() + 1):
        mask = labels == lab
        out.append((Sample(x.space, x.points[mask]), matched[mask][0]))
    order = canonical_order(y.space, np.array([c for _, c in out]))
    return [out[i] for i in order]


# -- brute-force oracle ---------------------------------------------------------------


class BruteForceResult(NamedTuple):
    objective: float
    clusters: tuple  # tuple of index tuples into the sample's canonical order
    centers: np.ndarray


def _golden(f, lo, hi, tol=1e-13):
    """Golden-section search for the minimum of a unimodal function on [lo, hi]."""
    g = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol * max(1.0, abs(a) + abs(b)):
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    x = (a + b) / 2
    return x, f(x)


def _oracle_block(space, pts, w, p):
    """Global minimizer of ``sum w_i d(x_i, y)^p`` by closed form or fine search."""
    def F(y):
        return math.fsum(w * space.dist(pts, y) ** p)

    if len(pts) == 1:
        return pts[0].copy(), 0.0
    if isinstance(space, Euclidean):
        if p == 2:
            y = (w[:, None] * pts).sum(axis=0) / w.sum()
            return y, F(y)
        starts = list(pts) + [(w[:, None] * pts).sum(axis=0) / w.sum()]
        best = min(starts, key=F)
        if space.dim == 1 and p == 1:
            return best, F(best)
        res = minimize(F, best, method="Nelder-Mead", options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 20000})
        y = res.x if res.fun < F(best) else best
        return y, F(y)
    if isinstance(space, Spider):
        rmax = float(pts[:, 1].max())
        best_y, best_f = Spider.center(), F(Spider.center())
        for leg in range(1, space.num_legs + 1):
            s, f = _golden(lambda s: F(np.array([leg, s]) if s > 0 else Spider.center()), 0.0, rmax)
            if f < best_f:
                best_y, best_f = np.array([float(leg), s]), f
        return best_y, best_f
    if isinstance(space, Circle):
        grid = np.linspace(0, 2 * math.pi, 7200, endpoint=False)[:, None]
        vals = (w * space.pairwise(grid, pts) ** p).sum(axis=1)
        g0 = float(grid[int(np.argmin(vals)), 0])
        h = 2 * math.pi / 7200
        s, f = _golden(lambda t: F(space.wrap(np.array([t]))), g0 - h, g0 + h)
        return space.wrap(np.array([s])), f
    if isinstance(space, Sphere):
        def Fz(z):
            return F(z / np.linalg.norm(z))
        starts = list(pts)
        mean = (w[:, None] * pts).sum(axis=0)
        if np.linalg.norm(mean) > 1e-8:
            starts.append(mean / np.linalg.norm(mean))
        best_y, best_f = None, math.inf
        for s0 in starts:
            res = minimize(Fz, s0, method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-15, "maxiter": 20000})
            z = res.x / np.linalg.norm(res.x)
            if F(z) < best_f:
                best_y, best_f = z, F(z)
        return best_y, best_f
    raise ConfigError(f"no oracle for {space!r}")


def _set_partitions(n, q):
    """Restricted growth strings of length n with at most q blocks."""
    a = [0] * n

    def rec(i, blocks):
        if i == n:
            yield tuple(a)
            return
        for b in range(min(blocks + 1, q)):
            a[i] = b
            yield from rec(i + 1, max(blocks, b + 1))

    if n:
        yield from rec(1, 1)


def brute_force_weighted(space: Space, atoms, weights, q: int, p: float, rtol: float = 1e-12):
    """Enumerate all clusterings of weighted atoms into at most ``q`` blocks.

    Returns ``(F_best, optima)`` where ``optima`` lists ``(clusters, centers)``
    for every clustering within ``rtol`` of the optimum.
    """
    atoms = np.asarray(atoms, dtype=float)
    w = np.asarray(weights, dtype=float)
    n = len(atoms)
    memo = {}

    def block(mask):
        if mask not in memo:
            idx = [i for i in range(n) if mask >> i & 1]
            memo[mask] = _oracle_block(space, atoms[idx], w[idx], p)
        return memo[mask]

    results = []
    for rgs in _set_partitions(n, q):
        masks = {}
        for i, b in enumerate(rgs):
            masks[b] = masks.get(b, 0) | (1 << i)
        total = math.fsum(block(m)[1] for m in masks.values())
        results.append((total, rgs, masks))
    F_best = min(r[0] for r in results)
    optima = []
    for total, rgs, masks in results:
        if total <= F_best + rtol * max(F_best, 1e-300):
            clusters = tuple(tuple(i for i in range(n) if masks[b] >> i & 1) for b in sorted(masks))
            centers = np.array([block(masks[b])[0] for b in sorted(masks)])
            optima.append((clusters, centers))
    return F_best, optima


def brute_force_q_mean(x: Sample, q: int, p: float = 2.0) -> BruteForceResult:
    """Exact q-mean of a small sample by enumerating all set partitions."""
    n = len(x)
    if n > 10 or q > 4 or q < 1:
        raise ConfigError("brute force is limited to n <= 10 and 1 <= q <= 4")
    F, optima = brute_force_weighted(x.space, x.points, np.full(n, 1.0 / n), q, p)
    clusters, centers = optima[0]
    return BruteForceResult(max(F, 0.0) ** (1 / p), clusters, centers)
