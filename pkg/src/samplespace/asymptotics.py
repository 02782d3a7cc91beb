"""Seeded Monte-Carlo experiments on the large-sample behavior of polymeans.

Each experiment draws ``replicates`` i.i.d. samples per sample size, projects
the empirical measure onto a skeleton (or computes a Fréchet mean) and
compares with the population target. Every replicate owns a counter-based
random stream keyed by ``(seed, n, replicate)``, so results are bit-identical
regardless of thread count or completion order.

Experiments: :func:`consistency_experiment`, :func:`error_bound_check`,
:func:`rate_experiment`, :func:`clt_experiment`,
:func:`exchangeable_clt_experiment` and :func:`stickiness_experiment`.
:func:`run_experiment` dispatches on ``cfg.experiment``.
"""
from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import stats

from .errors import ConfigError, ExperimentAbort
from .laws import (ArcUniform, FiniteSupport, Gaussian, Law, Mixture, SpiderMixture, UniformBall,
                   WrappedGaussian, law_from_json, sample_points)
from .means import SolverOptions, _centers_measure, _lloyd, _spider_frechet, brute_force_weighted, frechet_mean, q_mean, unweighted_q_mean
from .samples import SCHEMA_VERSION, Sample
from .spaces import Circle, Euclidean, Space, Sphere, Spider, points_from_json, space_from_json
from .transport import solve_assignment
from .wasserstein import AtomicMeasure, empirical_measure, wasserstein_distance

EXPERIMENTS = ("consistency", "error_bound", "rate", "clt", "exchangeable_clt", "stickiness")
CENTER_TOL = 1e-9
REJECTION_LIMIT = 1e-3
UNIQUENESS_RTOL = 1e-6
UNIQUENESS_POS_TOL = 1e-4
CONDITION_PVALUE = 1e-6
PROBE_SIZE = 200_000
PILOT_SIZE = 20_000

# stream purposes; the first spawn-key entry keeps them disjoint
_REPLICATE, _REFERENCE, _PROBE, _GRADIENT, _CALIBRATE = range(5)


def stream(seed: int, *key: int) -> np.random.Generator:
    """Counter-based generator for one ``(seed, key)`` cell."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    space: Space
    law: Law
    p: float = 2.0
    q: int = 1
    sizes: tuple = (16, 64, 256, 1024)
    replicates: int = 100
    seed: int = 0
    solver: SolverOptions = SolverOptions()
    epsilons: tuple = (0.0,)
    reference_size: int = 1_000_000
    hessian_sample: int = 20_000
    probe_rays: int = 16
    component_tolerance: float = 0.25
    target: AtomicMeasure | None = None

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ConfigError(f"unknown experiment {self.experiment!r}")
        sizes = tuple(int(n) for n in self.sizes)
        if not sizes or sizes[0] < 1 or any(a >= b for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("sizes must be positive and strictly increasing")
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "epsilons", tuple(float(e) for e in self.epsilons))
        if self.replicates < 1:
            raise ConfigError("replicates must be >= 1")
        if not self.p >= 1 or self.q < 1:
            raise ConfigError("need p >= 1 and q >= 1")
        if min(self.reference_size, self.hessian_sample, self.probe_rays) < 1:
            raise ConfigError("reference_size, hessian_sample and probe_rays must be positive")
        self.law.check(self.space)

    def to_json(self) -> dict:
        out = {
            "schema_version": SCHEMA_VERSION,
            "experiment": self.experiment,
            "space": self.space.to_json(),
            "law": self.law.to_json(self.space),
            "p": self.p,
            "q": self.q,
            "sizes": list(self.sizes),
            "replicates": self.replicates,
            "seed": self.seed,
            "solver": self.solver.to_json(),
            "epsilons": list(self.epsilons),
            "reference_size": self.reference_size,
            "hessian_sample": self.hessian_sample,
            "probe_rays": self.probe_rays,
            "component_tolerance": self.component_tolerance,
        }
        if self.target is not None:
            out["target"] = {"atoms": [self.space.point_to_json(a) for a in self.target.atoms],
                             "weights": self.target.weights.tolist()}
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        """Build from an already schema-checked JSON object."""
        space = space_from_json(obj["space"])
        kwargs = {k: obj[k] for k in ("p", "q", "sizes", "replicates", "seed", "epsilons", "reference_size",
                                      "hessian_sample", "probe_rays", "component_tolerance") if k in obj}
        if "target" in obj:
            t = obj["target"]
            kwargs["target"] = AtomicMeasure(space, points_from_json(space, t["atoms"]), t["weights"])
        return cls(obj["experiment"], space, law_from_json(space, obj["law"]),
                   solver=SolverOptions.from_json(obj.get("solver")), **kwargs)


@dataclass
class TrialRecord:
    n: int
    replicate: int
    estimate: np.ndarray
    objective: float
    distance: float
    wall_time: float = 0.0
    extra: dict = field(default_factory=dict)
    estimate_weights: np.ndarray | None = None


def _fmt(v) -> str:
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return format(float(v), ".17g")


def _fmt_points(arr) -> str:
    arr = np.atleast_2d(np.asarray(arr, dtype=float))
    return ";".join(" ".join(_fmt(c) for c in row) for row in arr)


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    records: list
    summary: dict
    wall_time: float = 0.0

    def csv_text(self) -> str:
        """One row per trial; wall time is kept out so the text is reproducible."""
        extra_keys = list(self.records[0].extra) if self.records else []
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["n", "replicate", *extra_keys, "objective", "distance", "estimate", "estimate_weights"])
        for r in self.records:
            weights = "" if r.estimate_weights is None else " ".join(_fmt(w) for w in r.estimate_weights)
            writer.writerow([r.n, r.replicate, *(_fmt(r.extra[k]) for k in extra_keys),
                             _fmt(r.objective), _fmt(r.distance), _fmt_points(r.estimate), weights])
        return buf.getvalue()

    def summary_json(self, threads: int | None = None) -> dict:
        meta = {"wall_time_seconds": self.wall_time,
                "trial_wall_time_seconds": math.fsum(r.wall_time for r in self.records)}
        if threads is not None:
            meta["threads"] = threads
        return {
            "schema_version": SCHEMA_VERSION,
            "type": "experiment_summary",
            "experiment": self.config.experiment,
            "config": self.config.to_json(),
            "summary": _jsonable(self.summary),
            "metadata": meta,
        }

    def write(self, out_dir, stem: str, threads: int | None = None) -> tuple:
        from pathlib import Path

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        csv_path = out / f"{stem}.csv"
        json_path = out / f"{stem}.summary.json"
        csv_path.write_text(self.csv_text(), encoding="utf-8")
        json_path.write_text(json.dumps(self.summary_json(threads), indent=2, allow_nan=False) + "\n", encoding="utf-8")
        return csv_path, json_path


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _run(keys, fn, threads: int):
    """Evaluate ``fn`` on every key; output order follows ``keys``."""
    if threads <= 1:
        return [fn(k) for k in keys]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, keys))


def _timed(fn):
    def wrapped(key):
        t0 = time.perf_counter()
        rec = fn(key)
        rec.wall_time = time.perf_counter() - t0
        return rec
    return wrapped


def loglog_slope(ns, values) -> float | None:
    """Least-squares slope of ``log value`` on ``log n`` over positive values."""
    ns = np.asarray(ns, dtype=float)
    values = np.asarray(values, dtype=float)
    ok = values > 0
    if ok.sum() < 2:
        return None
    return float(np.polyfit(np.log(ns[ok]), np.log(values[ok]), 1)[0])


def _by_n(records, attr="distance"):
    out = {}
    for r in records:
        out.setdefault(r.n, []).append(getattr(r, attr) if isinstance(attr, str) else attr(r))
    return {n: np.asarray(v) for n, v in sorted(out.items())}


# -- population targets -------------------------------------------------------------


def atomic_population(space: Space, law: Law) -> AtomicMeasure | None:
    """The law as an atomic measure, when it is finitely supported."""
    if isinstance(law, FiniteSupport):
        return AtomicMeasure(space, np.asarray(law.atoms), law.weights).normalize()
    if isinstance(law, SpiderMixture) and all(r.kind == "fixed" for r in law.radial):
        atoms = [[leg + 1.0, law._radial(leg).value] for leg in range(space.num_legs)]
        return AtomicMeasure(space, atoms, law.leg_weights).normalize()
    return None


def _analytic_frechet(space: Space, law: Law):
    """Population Fréchet mean of laws symmetric about a unique point, else None."""
    if isinstance(law, Gaussian):
        return np.asarray(law.mean, dtype=float)
    if isinstance(law, UniformBall):
        return np.asarray(law.center, dtype=float)
    if isinstance(law, WrappedGaussian):
        return space.point(law.pole)
    if isinstance(law, ArcUniform) and law.half_width <= math.pi / 2:
        return space.point([law.center])
    if isinstance(law, Mixture):
        # a common minimizer of every component's functional minimizes their weighted sum
        ys = [_analytic_frechet(space, c) for c in law.components]
        if all(y is not None for y in ys) and all(np.array_equal(y, ys[0]) for y in ys):
            return ys[0]
    return None


def project(cfg: ExperimentConfig, P: AtomicMeasure):
    """Projection onto the q-skeleton (Fréchet mean for q=1); returns ``(Q, result)``."""
    if cfg.q == 1:
        res = frechet_mean(P, cfg.p, cfg.solver)
        return AtomicMeasure.dirac(P.space, res.minimizer), res
    res = q_mean(P, cfg.q, cfg.p, cfg.solver)
    return res.minimizer, res


def _distinct_optima(space, p, candidates):
    """Near-optimal restart results that are mutually distinct minimizers."""
    best = min(c[0] for c in candidates)
    scale = max(best, 1e-300)
    distinct = []
    for obj, Q in sorted(candidates, key=lambda c: c[0]):
        if obj > best + UNIQUENESS_RTOL * scale:
            continue
        if all(wasserstein_distance(Q, D, p) > UNIQUENESS_POS_TOL * max(1.0, best) for D in distinct):
            distinct.append(Q)
    return distinct


def population_targets(cfg: ExperimentConfig) -> tuple[list, dict]:
    """All population q-means found, and how they were obtained.

    More than one entry means the target is not unique.
    """
    space, p, q = cfg.space, cfg.p, cfg.q
    if cfg.target is not None:
        return [cfg.target], {"method": "given"}
    P = atomic_population(space, cfg.law)
    if P is not None:
        if q >= len(P):
            return [P], {"method": "exact"}
        if isinstance(space, Spider) and q == 1:
            y, _ = _spider_frechet(space, P.atoms, P.weights, p)
            return [AtomicMeasure.dirac(space, y)], {"method": "exact"}
        Q, res = project(cfg, P)
        cands = [(c[0], c[1] if isinstance(c[1], AtomicMeasure) else AtomicMeasure.dirac(space, c[1]))
                 for c in res.candidates]
        if len(P) <= 10 and q <= 4:
            F_best, optima = brute_force_weighted(space, P.atoms, P.weights, q, p)
            found = []
            for clusters, centers in optima:
                mass = [math.fsum(P.weights[list(c)]) for c in clusters]
                Q = AtomicMeasure(space, centers, np.asarray(mass) / math.fsum(mass)).normalize()
                if all(wasserstein_distance(Q, D, p) > UNIQUENESS_POS_TOL for D in found):
                    found.append(Q)
            # enumeration yields one center per block; restarts expose ties inside a block
            root = max(F_best, 0.0) ** (1 / p)
            for obj, Q in cands:
                if (obj <= root + UNIQUENESS_RTOL * max(root, 1e-300)
                        and all(wasserstein_distance(Q, D, p) > UNIQUENESS_POS_TOL * max(1.0, root) for D in found)):
                    found.append(Q)
            return found, {"method": "enumeration"}
        return _distinct_optima(space, p, cands), {"method": "multistart"}
    if q == 1:
        y = _analytic_frechet(space, cfg.law)
        if y is not None:
            return [AtomicMeasure.dirac(space, y)], {"method": "symmetry"}
    rng = stream(cfg.seed, _REFERENCE)
    pts = sample_points(space, cfg.law, rng, cfg.reference_size)
    P_ref = empirical_measure(Sample(space, pts))
    if q == 1 or cfg.reference_size <= PILOT_SIZE:
        Q, res = project(cfg, P_ref)
        cands = [(c[0], c[1] if isinstance(c[1], AtomicMeasure) else AtomicMeasure.dirac(space, c[1]))
                 for c in res.candidates]
    else:
        cands = _refined_restarts(cfg, P_ref, empirical_measure(Sample(space, pts[:PILOT_SIZE])))
    return _distinct_optima(space, p, cands), {"method": "reference", "reference_size": cfg.reference_size}


def _refined_restarts(cfg, P_ref, P_pilot):
    """Restarts on a pilot subsample, each distinct local optimum refined on ``P_ref``."""
    space, p, opts = cfg.space, cfg.p, cfg.solver
    _, res = project(cfg, P_pilot)
    starts = []
    for _, Q in sorted(res.candidates, key=lambda c: c[0]):
        if all(wasserstein_distance(Q, D, p) > UNIQUENESS_POS_TOL for D in starts):
            starts.append(Q)
    P_ref = P_ref.normalize(opts.merge_tolerance)
    cands = []
    for Q in starts:
        centers, assign, F, *_ = _lloyd(space, P_ref.atoms, P_ref.weights, p, np.array(Q.atoms), opts)
        cands.append((F ** (1 / p), _centers_measure(space, centers, assign, P_ref.weights, opts.merge_tolerance)))
    return cands


def _unique_target(cfg):
    targets, info = population_targets(cfg)
    if len(targets) != 1:
        raise ExperimentAbort(
            "population target is not unique",
            diagnostics={"count": len(targets), "method": info["method"],
                         "targets": [t.to_json() for t in targets]},
        )
    return targets[0], info


def _draw_measure(cfg, law, rng, n):
    return empirical_measure(Sample(cfg.space, sample_points(cfg.space, law, rng, n)))


def _keys(cfg):
    return [(n, rep) for n in cfg.sizes for rep in range(cfg.replicates)]


# -- consistency, error bound, rate -------------------------------------------------


def consistency_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Distance from each empirical q-mean to the nearest population q-mean."""
    t0 = time.perf_counter()
    targets, info = population_targets(cfg)

    @_timed
    def trial(key):
        n, rep = key
        P_n = _draw_measure(cfg, cfg.law, stream(cfg.seed, _REPLICATE, n, rep), n)
        Q_n, res = project(cfg, P_n)
        dist = min(wasserstein_distance(Q_n, T, cfg.p) for T in targets)
        return TrialRecord(n, rep, Q_n.atoms, res.objective, dist, estimate_weights=Q_n.weights)

    records = _run(_keys(cfg), trial, threads)
    by_n = _by_n(records)
    ns = list(by_n)
    maxima = [float(v.max()) for v in by_n.values()]
    medians = [float(np.median(v)) for v in by_n.values()]
    summary = {
        "targets": [t.to_json() for t in targets],
        "target_method": info["method"],
        "table": [{"n": n, "max": mx, "median": md} for n, mx, md in zip(ns, maxima, medians)],
        "median_slope": loglog_slope(ns, medians),
        "max_slope": loglog_slope(ns, maxima),
        "max_nonincreasing": bool(all(b <= a for a, b in zip(maxima, maxima[1:]))),
        "max_trend_spearman": float(stats.spearmanr(ns, maxima)[0]) if len(ns) > 2 else None,
    }
    return ExperimentResult(cfg, records, summary, time.perf_counter() - t0)


def error_bound_check(cfg: ExperimentConfig, threads: int = 1, coverage_level: float = 0.95) -> ExperimentResult:
    """Compare ``lhs = W(P, Q_n) - W(P, Q_0)`` with ``rhs = W(P_n, P)``.

    The bound is ``lhs - rhs <= C n^(-1/(2p))``. ``C`` is fitted on an
    independent calibration run as the largest per-size ``coverage_level``
    quantile of ``residual * n^(1/(2p))`` (a uniform envelope); coverage is
    then measured on the main replicates.
    """
    t0 = time.perf_counter()
    P = atomic_population(cfg.space, cfg.law)
    if P is None:
        raise ConfigError("error_bound needs a finitely supported law")
    targets, info = population_targets(cfg)
    D0 = wasserstein_distance(P, targets[0], cfg.p)

    def make_trial(purpose):
        @_timed
        def trial(key):
            n, rep = key
            P_n = _draw_measure(cfg, cfg.law, stream(cfg.seed, purpose, n, rep), n)
            Q_n, res = project(cfg, P_n)
            lhs = wasserstein_distance(P, Q_n, cfg.p) - D0
            rhs = wasserstein_distance(P_n, P, cfg.p)
            dist = min(wasserstein_distance(Q_n, T, cfg.p) for T in targets)
            return TrialRecord(n, rep, Q_n.atoms, res.objective, dist,
                               extra={"lhs": lhs, "rhs": rhs, "residual": lhs - rhs},
                               estimate_weights=Q_n.weights)
        return trial

    def residuals(records):
        return _by_n(records, lambda r: r.extra["residual"])

    expo = -1.0 / (2 * cfg.p)
    calib = residuals(_run(_keys(cfg), make_trial(_CALIBRATE), threads))
    C = max(0.0, max(float(np.quantile(v * n ** -expo, coverage_level)) for n, v in calib.items()))
    records = _run(_keys(cfg), make_trial(_REPLICATE), threads)
    resid = residuals(records)
    per_n = [{"n": n, "coverage": float(np.mean(v <= C * n**expo)),
              "upper_quantile": float(np.quantile(v, coverage_level)),
              "median_abs_residual": float(np.median(np.abs(v))),
              "lhs_le_rhs": float(np.mean(v <= 0))} for n, v in resid.items()]
    envelope = [max(d["upper_quantile"], 0.0) for d in per_n]
    summary = {
        "target": targets[0].to_json(),
        "target_method": info["method"],
        "target_unique": len(targets) == 1,
        "population_distance": D0,
        "exponent": expo,
        "C": C,
        "coverage": float(np.mean(np.concatenate([v <= C * n**expo for n, v in resid.items()]))),
        # exponent of the upper envelope of the residual; None when the envelope is 0
        "bound_trivial": all(e == 0 for e in envelope),
        "envelope_slope": loglog_slope(list(resid), envelope),
        "abs_residual_slope": loglog_slope(list(resid), [d["median_abs_residual"] for d in per_n]),
        "table": per_n,
    }
    return ExperimentResult(cfg, records, summary, time.perf_counter() - t0)


def _ray_directions(space: Space, centers, rng):
    dirs = []
    for c in centers:
        if isinstance(space, Spider):
            legs = rng.permutation(space.num_legs)[:2] + 1
            dirs.append(legs)
        else:
            B = space.tangent_basis(c)
            g = rng.standard_normal(len(B))
            dirs.append(B.T @ (g / np.linalg.norm(g)))
    return dirs


def _move(space: Space, c, h, direction, sign):
    if not isinstance(space, Spider):
        return space.point(space.exp(c, sign * h * direction))
    leg, r = int(c[0]), float(c[1])
    if leg == 0:
        return np.array([float(direction[0 if sign > 0 else 1]), h])
    if sign > 0:
        return np.array([float(leg), r + h])
    if r - h >= 0:
        return space.point([leg, r - h])
    other = direction[0] if direction[0] != leg else direction[1]
    return np.array([float(other), h - r])


def _voronoi(P: AtomicMeasure, centers, p):
    D = P.space.pairwise(P.atoms, centers) ** p
    j = np.argmin(D, axis=1)
    F = math.fsum(P.weights * D[np.arange(len(j)), j])
    mass = np.bincount(j, weights=P.weights, minlength=len(centers))
    return F, mass / mass.sum()


def coercivity_probe(cfg: ExperimentConfig, P_ref: AtomicMeasure, Q0: AtomicMeasure, rng) -> dict:
    """Estimate the growth exponent of ``W(P, Q) - W(P, Q_0)`` in ``W(Q, Q_0)``.

    ``Q`` moves each center of ``Q_0`` a distance ``h`` along a random ray and
    takes the Voronoi masses of ``P``. Each ray is paired with its reverse so
    the first-order term of the reference-sample error cancels.
    """
    space, p = cfg.space, cfg.p
    F0, _ = _voronoi(P_ref, Q0.atoms, p)
    D0 = F0 ** (1 / p)
    scale = D0 if D0 > 0 else 1.0
    hs = scale * np.geomspace(0.05, 0.5, 8)
    excess = np.zeros((cfg.probe_rays, len(hs)))
    dq = np.zeros_like(excess)
    for ray in range(cfg.probe_rays):
        dirs = _ray_directions(space, Q0.atoms, rng)
        for i, h in enumerate(hs):
            ex, dd = [], []
            for sign in (1, -1):
                centers = np.array([_move(space, c, h, d, sign) for c, d in zip(Q0.atoms, dirs)])
                F, mass = _voronoi(P_ref, centers, p)
                ex.append(F ** (1 / p) - D0)
                dd.append(wasserstein_distance(AtomicMeasure(space, centers, mass), Q0, p))
            excess[ray, i] = np.mean(ex)
            dq[ray, i] = np.mean(dd)
    med_d = np.median(dq, axis=0)
    med_e = np.median(excess, axis=0)
    ok = (med_e > 0) & (med_d > 0)
    alpha = float(np.polyfit(np.log(med_d[ok]), np.log(med_e[ok]), 1)[0]) if ok.sum() >= 2 else None
    coef = float(np.median(med_e[ok] / med_d[ok] ** alpha)) if alpha is not None else None
    return {"alpha": alpha, "c": coef, "steps": hs.tolist(), "median_distance": med_d.tolist(),
            "median_excess": med_e.tolist()}


def rate_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Log-log slope of the median ``W(Q_n, Q_0)`` plus a coercivity probe."""
    t0 = time.perf_counter()
    Q0, info = _unique_target(cfg)

    @_timed
    def trial(key):
        n, rep = key
        P_n = _draw_measure(cfg, cfg.law, stream(cfg.seed, _REPLICATE, n, rep), n)
        Q_n, res = project(cfg, P_n)
        return TrialRecord(n, rep, Q_n.atoms, res.objective, wasserstein_distance(Q_n, Q0, cfg.p),
                           estimate_weights=Q_n.weights)

    records = _run(_keys(cfg), trial, threads)
    by_n = _by_n(records)
    medians = [float(np.median(v)) for v in by_n.values()]
    P_ref = atomic_population(cfg.space, cfg.law)
    if P_ref is None:
        size = min(cfg.reference_size, PROBE_SIZE)
        P_ref = _draw_measure(cfg, cfg.law, stream(cfg.seed, _PROBE, 0), size)
    probe = coercivity_probe(cfg, P_ref, Q0, stream(cfg.seed, _PROBE, 1))
    summary = {
        "target": Q0.to_json(),
        "target_method": info["method"],
        "table": [{"n": n, "median": m, "zero_fraction": float(np.mean(v <= CENTER_TOL))}
                  for (n, v), m in zip(by_n.items(), medians)],
        "slope": loglog_slope(list(by_n), medians),
        "coercivity": probe,
    }
    return ExperimentResult(cfg, records, summary, time.perf_counter() - t0)


# -- central limit theorem ------------------------------------------------------------


def _chart(space: Space, z0):
    return [space.tangent_basis(z) for z in z0]


def _at_cut_locus(space: Space, d):
    inj = space.injectivity_radius
    return d >= inj - 1e-12 if math.isfinite(inj) else np.zeros_like(d, dtype=bool)


def rho_gradients(space: Space, X, z0, bases, p):
    """Chart gradients of ``rho(x, z) = min_j d(x, z_j)^p`` at ``z0``.

    Returns ``(grads, ok)``; draws on a Voronoi boundary, at a cut locus or
    (for p<2) on a center have no gradient and are flagged in ``ok``.
    """
    D = space.pairwise(X, z0)
    order = np.argsort(D, axis=1, kind="stable")
    j = order[:, 0]
    d = D[np.arange(len(X)), j]
    ok = ~_at_cut_locus(space, d)
    if len(z0) > 1:
        second = D[np.arange(len(X)), order[:, 1]]
        ok &= second - d > 1e-12
    if p < 2:
        ok &= d > 1e-12
    k = len(bases[0])
    grads = np.zeros((len(X), len(z0) * k))
    for c in range(len(z0)):
        rows = np.flatnonzero((j == c) & ok)
        if not len(rows):
            continue
        L = space.log(z0[c], X[rows], strict=False)
        coef = -p * d[rows] ** (p - 2)
        grads[rows, c * k:(c + 1) * k] = (coef[:, None] * L) @ bases[c].T
    return grads, ok


def fd_hessian(space: Space, X, z0, bases, p, h) -> np.ndarray:
    """Central finite-difference Hessian of ``mean_x rho(x, .)`` in the product chart."""
    k = len(bases[0])
    dim = len(z0) * k

    def f(u):
        centers = np.array([space.exp(z, u[c * k:(c + 1) * k] @ bases[c]) for c, z in enumerate(z0)])
        return math.fsum(np.min(space.pairwise(X, centers) ** p, axis=1)) / len(X)

    E = np.eye(dim) * h
    f0 = f(np.zeros(dim))
    H = np.zeros((dim, dim))
    for a in range(dim):
        H[a, a] = (f(E[a]) - 2 * f0 + f(-E[a])) / h**2
        for b in range(a):
            H[a, b] = H[b, a] = (f(E[a] + E[b]) - f(E[a] - E[b]) - f(-E[a] + E[b]) + f(-E[a] - E[b])) / (4 * h**2)
    return H


def fd_step(space: Space, X, z0) -> float:
    """1e-5 of the injectivity radius, or 1e-3 of the data spread where that is infinite."""
    inj = space.injectivity_radius
    if math.isfinite(inj):
        return 1e-5 * inj
    spread = float(np.sqrt(np.mean(np.min(space.pairwise(X, z0), axis=1) ** 2)))
    return 1e-3 * (spread if spread > 0 else 1.0)


def mardia_test(Y) -> dict:
    """Mardia's multivariate skewness and kurtosis statistics with p-values."""
    Y = np.asarray(Y, dtype=float)
    N, k = Y.shape
    D = Y - Y.mean(axis=0)
    S = D.T @ D / N
    M = D @ np.linalg.solve(S, D.T)
    b1 = float((M**3).sum() / N**2)
    b2 = float(np.mean(np.diag(M) ** 2))
    skew_stat = N * b1 / 6
    df = k * (k + 1) * (k + 2) / 6
    z = (b2 - k * (k + 2)) / math.sqrt(8 * k * (k + 2) / N)
    return {"skewness": b1, "skewness_pvalue": float(stats.chi2.sf(skew_stat, df)),
            "kurtosis": b2, "kurtosis_pvalue": float(2 * stats.norm.sf(abs(z)))}


def _rel_frobenius(A, B) -> float:
    return float(np.linalg.norm(A - B) / np.linalg.norm(B))


def predicted_covariance(cfg: ExperimentConfig, law: Law, z0, rng) -> dict:
    """``H^-1 Cov(grad rho) H^-1`` from a large sample of ``law``."""
    space = cfg.space
    bases = _chart(space, z0)
    X = sample_points(space, law, rng, cfg.hessian_sample)
    grads, ok = rho_gradients(space, X, z0, bases, cfg.p)
    rejected = int((~ok).sum())
    if rejected >= REJECTION_LIMIT * len(X):
        raise ExperimentAbort("too many draws without a gradient",
                              diagnostics={"rejected": rejected, "drawn": len(X)})
    G = grads[ok]
    cov = np.atleast_2d(np.cov(G, rowvar=False))
    H = fd_hessian(space, X[ok], z0, bases, cfg.p, fd_step(space, X[ok], z0))
    Hinv = np.linalg.inv(H)
    return {"hessian": H, "gradient_covariance": cov, "gradient_mean": G.mean(axis=0),
            "predicted": Hinv @ cov @ Hinv, "rejected": rejected, "drawn": len(X)}


def _estimate_centers(cfg, P):
    if cfg.q == 1:
        res = frechet_mean(P, cfg.p, cfg.solver)
        return np.atleast_2d(res.minimizer), res
    res = unweighted_q_mean(P, cfg.q, cfg.p, cfg.solver)
    return res.minimizer, res


def _chart_coordinates(space, z0, bases, centers, n):
    """``sqrt(n) B log_{z0}(z_n)`` per center after matching centers to ``z0``."""
    if len(centers) != len(z0):
        return None
    perm, _ = solve_assignment(space.pairwise(z0, centers) ** 2)
    parts = [bases[c] @ space.log(z0[c], centers[perm[c]], strict=False) for c in range(len(z0))]
    return math.sqrt(n) * np.concatenate(parts)


def _clt_core(cfg, z0, draw, threads):
    n = cfg.sizes[-1]
    bases = _chart(cfg.space, z0)
    dim = len(z0) * len(bases[0])

    @_timed
    def trial(rep):
        rng = stream(cfg.seed, _REPLICATE, n, rep)
        P_n, comp = draw(rng, n)
        centers, res = _estimate_centers(cfg, P_n)
        u = _chart_coordinates(cfg.space, z0, bases, centers, n)
        ok = u is not None
        u = u if ok else np.full(dim, np.nan)
        dist = float(np.linalg.norm(u) / math.sqrt(n * len(z0))) if ok else math.nan
        extra = {"component": comp} if comp is not None else {}
        extra.update({f"u{i}": u[i] for i in range(dim)})
        return TrialRecord(n, rep, centers, res.objective, dist, extra=extra)

    return _run(list(range(cfg.replicates)), trial, threads)


def _clt_summary(records, pred, dim):
    U = np.array([[r.extra[f"u{i}"] for i in range(dim)] for r in records])
    good = np.all(np.isfinite(U), axis=1)
    U = U[good]
    emp = np.atleast_2d(np.cov(U, rowvar=False))
    return U, emp, {
        "empirical": emp,
        "predicted": pred["predicted"],
        "hessian": pred["hessian"],
        "gradient_covariance": pred["gradient_covariance"],
        "discrepancy": _rel_frobenius(emp, pred["predicted"]),
        "normality": mardia_test(U) if len(U) > dim + 1 else None,
        "gradient_rejected": pred["rejected"],
        "gradient_drawn": pred["drawn"],
        "estimate_rejected": int((~good).sum()),
    }


def clt_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Empirical vs predicted covariance of ``sqrt(n) log_{z0}(z_n)`` at the largest n."""
    t0 = time.perf_counter()
    if not cfg.space.riemannian:
        raise ConfigError("clt needs a Riemannian space")
    Q0, info = _unique_target(cfg)
    z0 = Q0.atoms
    pred = predicted_covariance(cfg, cfg.law, z0, stream(cfg.seed, _GRADIENT))
    records = _clt_core(cfg, z0, lambda rng, n: (_draw_measure(cfg, cfg.law, rng, n), None), threads)
    dim = pred["predicted"].shape[0]
    _, _, summary = _clt_summary(records, pred, dim)
    summary.update({"target": Q0.to_json(), "target_method": info["method"], "n": cfg.sizes[-1]})
    return ExperimentResult(cfg, records, summary, time.perf_counter() - t0)


def exchangeable_clt_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """CLT for conditionally i.i.d. data: one latent mixture component per replicate.

    Aborts if some component has a non-zero mean gradient at ``z0`` or if
    the per-component covariances of the estimate disagree.
    """
    t0 = time.perf_counter()
    law = cfg.law
    if not isinstance(law, Mixture):
        raise ConfigError("exchangeable_clt needs a mixture law")
    if not cfg.space.riemannian:
        raise ConfigError("exchangeable_clt needs a Riemannian space")
    Q0, info = _unique_target(cfg)
    z0 = Q0.atoms
    bases = _chart(cfg.space, z0)
    per_comp = max(cfg.hessian_sample // len(law.components), 2)
    checks = []
    for k, comp in enumerate(law.components):
        X = sample_points(cfg.space, comp, stream(cfg.seed, _GRADIENT, k + 1), per_comp)
        G, ok = rho_gradients(cfg.space, X, z0, bases, cfg.p)
        G = G[ok]
        m = G.mean(axis=0)
        S = np.atleast_2d(np.cov(G, rowvar=False))
        N, d = G.shape
        t2 = float(N * m @ np.linalg.solve(S, m))
        pval = float(stats.f.sf(t2 * (N - d) / (d * (N - 1)), d, N - d))
        checks.append({"component": k, "gradient_mean": m, "hotelling_t2": t2, "pvalue": pval})
    if any(c["pvalue"] < CONDITION_PVALUE for c in checks):
        raise ExperimentAbort("component gradient means are not zero at the population mean",
                              diagnostics={"components": _jsonable(checks)})
    # a single component is drawn exactly as the plain CLT run draws it
    single = len(law.components) == 1
    pred = predicted_covariance(cfg, law.components[0] if single else law, z0, stream(cfg.seed, _GRADIENT))

    def draw(rng, n):
        comp = 0 if single else int(law.pick(rng))
        return _draw_measure(cfg, law.components[comp], rng, n), comp

    records = _clt_core(cfg, z0, draw, threads)
    dim = pred["predicted"].shape[0]
    _, emp, summary = _clt_summary(records, pred, dim)
    comp_rows = []
    for k in range(len(law.components)):
        Uk = np.array([[r.extra[f"u{i}"] for i in range(dim)] for r in records if r.extra["component"] == k])
        Uk = Uk[np.all(np.isfinite(Uk), axis=1)] if len(Uk) else Uk
        if len(Uk) > dim + 1:
            Ck = np.atleast_2d(np.cov(Uk, rowvar=False))
            comp_rows.append({"component": k, "count": len(Uk), "covariance": Ck,
                              "discrepancy_to_pooled": _rel_frobenius(Ck, emp)})
    spread = max((c["discrepancy_to_pooled"] for c in comp_rows), default=0.0)
    summary.update({"target": Q0.to_json(), "target_method": info["method"], "n": cfg.sizes[-1],
                    "condition_checks": checks, "components": comp_rows, "component_spread": spread,
                    "deterministic_limit": spread <= cfg.component_tolerance})
    result = ExperimentResult(cfg, records, summary, time.perf_counter() - t0)
    if spread > cfg.component_tolerance:
        raise ExperimentAbort("per-component covariances disagree",
                              diagnostics={"component_spread": spread, "components": _jsonable(comp_rows)})
    return result


# -- stickiness ------------------------------------------------------------------------


def shifted_weights(weights, eps: float) -> tuple:
    """Move mass ``eps`` to leg 1, taken from the other legs in proportion."""
    w = np.asarray(weights, dtype=float)
    rest = 1.0 - w[0]
    out = np.concatenate([[w[0] + eps], w[1:] * (1.0 - eps / rest if rest > 0 else 0.0)])
    if np.any(out < -1e-15) or out[0] > 1 + 1e-15:
        raise ConfigError(f"epsilon {eps} moves more mass than available")
    out = np.clip(out, 0.0, 1.0)
    return tuple(out / out.sum())


def _radial_moment(radial, p):
    """``E[R^(p-1)]`` for the radial law."""
    if p == 1:
        return 1.0
    if radial.kind == "fixed":
        return radial.value ** (p - 1)
    if radial.kind == "uniform":
        lo, hi = radial.low, radial.high
        return (hi**p - lo**p) / (p * (hi - lo))
    return math.gamma(p) * radial.scale ** (p - 1)


def sticky_threshold(law: SpiderMixture, p: float) -> dict:
    """Shift ``eps`` at which the one-sided derivative along leg 1 at the center vanishes.

    The derivative is linear in ``eps``; for smaller shifts the population
    mean stays at the center.
    """
    w = np.asarray(law.leg_weights, dtype=float)
    m = np.array([_radial_moment(law._radial(i), p) for i in range(len(w))])
    slope0 = p * (math.fsum(w[1:] * m[1:]) - w[0] * m[0])
    rest = 1.0 - w[0]
    rate = p * (m[0] + (math.fsum(w[1:] * m[1:]) / rest if rest > 0 else 0.0))
    return {"slope_at_zero": slope0, "threshold": slope0 / rate}


def stickiness_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    """Fraction of empirical Fréchet means exactly at the spider center per ``(eps, n)``."""
    t0 = time.perf_counter()
    if not isinstance(cfg.space, Spider) or not isinstance(cfg.law, SpiderMixture):
        raise ConfigError("stickiness needs a Spider space and a spider_mixture law")
    laws = [replace(cfg.law, leg_weights=shifted_weights(cfg.law.leg_weights, e)) for e in cfg.epsilons]
    pops = []
    for i, law in enumerate(laws):
        P = atomic_population(cfg.space, law)
        if P is None:
            P = _draw_measure(cfg, law, stream(cfg.seed, _REFERENCE, i), cfg.reference_size)
        y, _ = _spider_frechet(cfg.space, P.atoms, P.weights, cfg.p)
        pops.append(y)

    @_timed
    def trial(key):
        i, n, rep = key
        P_n = _draw_measure(cfg, laws[i], stream(cfg.seed, _REPLICATE, n, rep, i), n)
        res = frechet_mean(P_n, cfg.p, cfg.solver)
        y = res.minimizer
        at_center = y[1] <= CENTER_TOL
        return TrialRecord(n, rep, y, res.objective, float(cfg.space.dist(y, pops[i])),
                           extra={"epsilon": cfg.epsilons[i], "leg": int(y[0]), "radius": float(y[1]),
                                  "at_center": bool(at_center)})

    keys = [(i, n, rep) for i in range(len(laws)) for n in cfg.sizes for rep in range(cfg.replicates)]
    records = _run(keys, trial, threads)
    table = []
    for i, eps in enumerate(cfg.epsilons):
        for n in cfg.sizes:
            rs = [r for r in records if r.extra["epsilon"] == eps and r.n == n]
            off = [r.extra["radius"] for r in rs if not r.extra["at_center"] and r.extra["leg"] == 1]
            table.append({
                "epsilon": eps, "n": n,
                "center_fraction": float(np.mean([r.extra["at_center"] for r in rs])),
                "leg1_fraction": float(np.mean([r.extra["leg"] == 1 for r in rs])),
                "median_leg1_radius": float(np.median(off)) if off else None,
                "population_leg": int(pops[i][0]), "population_radius": float(pops[i][1]),
            })
    summary = {"threshold": sticky_threshold(cfg.law, cfg.p), "table": table}
    return ExperimentResult(cfg, records, summary, time.perf_counter() - t0)


_RUNNERS = {
    "consistency": consistency_experiment,
    "error_bound": error_bound_check,
    "rate": rate_experiment,
    "clt": clt_experiment,
    "exchangeable_clt": exchangeable_clt_experiment,
    "stickiness": stickiness_experiment,
}


def run_experiment(cfg: ExperimentConfig, threads: int = 1) -> ExperimentResult:
    return _RUNNERS[cfg.experiment](cfg, threads=threads)
