"""Independent reference computations used by the tests.

Nothing here calls the solvers under test: permutations are enumerated,
transport goes through scipy's LP solver, partitions are counted by dynamic
programming and 1D minimizations use a local golden-section search.
"""
import itertools
import math

import numpy as np
from scipy.optimize import linprog


def brute_assignment(C):
    """Exhaustive minimum of sum_i C[i, s(i)] with math.fsum over all permutations."""
    C = np.asarray(C, dtype=float)
    n = len(C)
    return min(math.fsum(C[i, s[i]] for i in range(n)) for s in itertools.permutations(range(n)))


def brute_sample_distance(space, xs, ys, p):
    """min over permutations of ((1/n) sum d^p)^(1/p), evaluated like the library does."""
    n = len(xs)
    best = math.inf
    for s in itertools.permutations(range(n)):
        d = space.dist(xs, ys[list(s)])
        best = min(best, (math.fsum(d**p) / n) ** (1 / p))
    return best


def lp_transport(a, b, C):
    """Optimal transport cost by the HiGHS LP solver."""
    a, b, C = np.asarray(a, float), np.asarray(b, float), np.asarray(C, float)
    m, k = C.shape
    A = []
    for i in range(m):
        row = np.zeros((m, k))
        row[i] = 1
        A.append(row.ravel())
    for j in range(k):
        col = np.zeros((m, k))
        col[:, j] = 1
        A.append(col.ravel())
    res = linprog(C.ravel(), A_eq=np.array(A), b_eq=np.concatenate([a, b]), bounds=(0, None), method="highs")
    assert res.success
    return res.fun


def partition_count(n):
    """Number of integer partitions of n by the coin-change recurrence."""
    ways = [1] + [0] * n
    for part in range(1, n + 1):
        for total in range(part, n + 1):
            ways[total] += ways[total - part]
    return ways[n]


def set_partitions(items):
    """All set partitions of a list (as lists of blocks)."""
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in set_partitions(rest):
        for i in range(len(sub)):
            yield sub[:i] + [[first] + sub[i]] + sub[i + 1:]
        yield [[first]] + sub


def grouping_exists(coarse, fine):
    """True iff the parts of ``fine`` can be grouped with block sums equal to ``coarse``."""
    target = sorted(coarse)
    for blocks in set_partitions(list(range(len(fine)))):
        if sorted(sum(fine[i] for i in b) for b in blocks) == target:
            return True
    return False


def golden_min(f, lo, hi, tol=1e-12):
    """Golden-section minimum of a unimodal function; returns (x, f(x))."""
    invphi = (math.sqrt(5) - 1) / 2
    a, b = lo, hi
    while b - a > tol:
        c = b - invphi * (b - a)
        d = a + invphi * (b - a)
        if f(c) <= f(d):
            b = d
        else:
            a = c
    x = 0.5 * (a + b)
    return x, f(x)


def spider_frechet_oracle(legs, radii, weights, p, num_legs=3):
    """Population Fréchet mean on a spider by golden section on each leg.

    Returns ``(leg, radius, value)`` with leg 0 for the center.
    """
    legs, radii, weights = map(np.asarray, (legs, radii, weights))

    def F(leg, s):
        d = np.where(legs == leg, np.abs(radii - s), radii + s)
        return math.fsum(weights * d**p)

    best = (0, 0.0, math.fsum(weights * radii**p))
    rmax = float(radii.max()) if len(radii) else 1.0
    for leg in range(1, num_legs + 1):
        s, v = golden_min(lambda s: F(leg, s), 0.0, rmax)
        if v < best[2] - 1e-12:
            best = (leg, s, v)
    return best
