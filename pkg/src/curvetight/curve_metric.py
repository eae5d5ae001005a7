"""Uniform (Fréchet) distance between unparametrized polylines.

``curve_distance`` brackets the distance between the endpoint lower bound and
the discrete Fréchet upper bound, then bisects with the free-space decision
procedure until the bracket is no wider than ``2 * tol``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numba
import numpy as np

from .geometry import Polyline

EXACT_SEARCH = "exact-decision-search"
DISCRETE_UPPER = "discrete-upper-bound"


@dataclass(frozen=True)
class MetricResult:
    value: float
    tolerance: float
    method: str = EXACT_SEARCH

    def __float__(self) -> float:
        return self.value


def _check(a: Polyline, b: Polyline) -> None:
    if a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim}-d vs {b.dim}-d")


@numba.njit(cache=True)
def _dfd(P, Q):
    n, m = P.shape[0], Q.shape[0]
    prev = np.empty(m)
    cur = np.empty(m)
    for i in range(n):
        for j in range(m):
            d = 0.0
            for k in range(P.shape[1]):
                x = P[i, k] - Q[j, k]
                d += x * x
            d = np.sqrt(d)
            if i == 0 and j == 0:
                best = d
            elif i == 0:
                best = max(cur[j - 1], d)
            elif j == 0:
                best = max(prev[j], d)
            else:
                best = max(min(prev[j], cur[j - 1], prev[j - 1]), d)
            cur[j] = best
        prev, cur = cur, prev
    return prev[m - 1]


def discrete_frechet(a: Polyline, b: Polyline) -> float:
    """Bottleneck cost of the best monotone coupling of the two vertex lists."""
    _check(a, b)
    return float(_dfd(a.vertices, b.vertices))


@numba.njit(cache=True)
def _free_interval(p, a, d, eps2):
    # {s in [0,1] : |a + s d - p|^2 <= eps2}; empty is returned as (2, -1).
    # Centre and half-width come from the foot of the perpendicular; the
    # squared offset is summed from the residual vector, which avoids the
    # cancellation of the expanded discriminant when eps is tiny.
    w0 = 0.0
    dd = 0.0
    for k in range(p.shape[0]):
        w0 += (a[k] - p[k]) * d[k]
        dd += d[k] * d[k]
    s0 = -w0 / dd
    h2 = 0.0
    for k in range(p.shape[0]):
        e = a[k] + s0 * d[k] - p[k]
        h2 += e * e
    if h2 > eps2:
        return 2.0, -1.0
    half = np.sqrt((eps2 - h2) / dd)
    lo = s0 - half
    hi = s0 + half
    if lo < 0.0:
        lo = 0.0
    if hi > 1.0:
        hi = 1.0
    if lo > hi:
        return 2.0, -1.0
    return lo, hi


@numba.njit(cache=True)
def _decide(P, Q, eps):
    # Free-space reachability on the (n-1) x (m-1) cell grid of two polylines
    # with at least two vertices each.
    n = P.shape[0] - 1
    m = Q.shape[0] - 1
    eps2 = eps * eps
    slack = 1e-12

    def dist2(x, y):
        s = 0.0
        for k in range(x.shape[0]):
            t = x[k] - y[k]
            s += t * t
        return s

    if dist2(P[0], Q[0]) > eps2 or dist2(P[n], Q[m]) > eps2:
        return False
    DP = np.empty((n, P.shape[1]))
    DQ = np.empty((m, Q.shape[1]))
    for i in range(n):
        DP[i] = P[i + 1] - P[i]
    for j in range(m):
        DQ[j] = Q[j + 1] - Q[j]

    # reachable intervals on vertical edges (x = i, y in [j, j+1]) and
    # horizontal edges (y = j, x in [i, i+1]); empty encoded as lo > hi
    LRlo = np.full((n + 1, m), 2.0)
    LRhi = np.full((n + 1, m), -1.0)
    BRlo = np.full((n, m + 1), 2.0)
    BRhi = np.full((n, m + 1), -1.0)

    # left column
    for j in range(m):
        lo, hi = _free_interval(P[0], Q[j], DQ[j], eps2)
        if j == 0:
            ok = lo <= slack
        else:
            ok = LRhi[0, j - 1] >= 1.0 - slack and lo <= slack
        if ok and lo <= hi:
            LRlo[0, j] = lo
            LRhi[0, j] = hi
        else:
            break
    # bottom row
    for i in range(n):
        lo, hi = _free_interval(Q[0], P[i], DP[i], eps2)
        if i == 0:
            ok = lo <= slack
        else:
            ok = BRhi[i - 1, 0] >= 1.0 - slack and lo <= slack
        if ok and lo <= hi:
            BRlo[i, 0] = lo
            BRhi[i, 0] = hi
        else:
            break

    for i in range(n):
        for j in range(m):
            left_ok = LRlo[i, j] <= LRhi[i, j]
            bottom_ok = BRlo[i, j] <= BRhi[i, j]
            if not (left_ok or bottom_ok):
                continue
            # right edge of cell (i, j)
            lo, hi = _free_interval(P[i + 1], Q[j], DQ[j], eps2)
            if lo <= hi:
                if bottom_ok:
                    LRlo[i + 1, j] = lo
                    LRhi[i + 1, j] = hi
                else:
                    lo2 = max(lo, LRlo[i, j])
                    if lo2 <= hi + slack:
                        LRlo[i + 1, j] = min(lo2, hi)
                        LRhi[i + 1, j] = hi
            # top edge of cell (i, j)
            lo, hi = _free_interval(Q[j + 1], P[i], DP[i], eps2)
            if lo <= hi:
                if left_ok:
                    BRlo[i, j + 1] = lo
                    BRhi[i, j + 1] = hi
                else:
                    lo2 = max(lo, BRlo[i, j])
                    if lo2 <= hi + slack:
                        BRlo[i, j + 1] = min(lo2, hi)
                        BRhi[i, j + 1] = hi
    return LRhi[n, m - 1] >= 1.0 - slack or BRhi[n - 1, m] >= 1.0 - slack


def _point_to_curve(p: np.ndarray, c: Polyline) -> float:
    return float(np.linalg.norm(c.vertices - p, axis=1).max())


def frechet_decision(a: Polyline, b: Polyline, t: float) -> bool:
    """Whether some monotone matching of the two curves keeps every pair
    within distance ``t`` (closed feasibility)."""
    _check(a, b)
    if t < 0:
        return False
    # absorb rounding in the free-interval quadratics
    eps = t * (1.0 + 1e-12) + 1e-300
    if a.is_trivial:
        return _point_to_curve(a.start, b) <= eps
    if b.is_trivial:
        return _point_to_curve(b.start, a) <= eps
    return bool(_decide(a.vertices, b.vertices, eps))


def endpoint_bound(a: Polyline, b: Polyline) -> float:
    return float(max(np.linalg.norm(a.start - b.start), np.linalg.norm(a.end - b.end)))


def curve_distance(a: Polyline, b: Polyline, tol: float = 1e-9) -> MetricResult:
    """Uniform distance between unparametrized curves, to additive ``tol``."""
    _check(a, b)
    if not tol > 0:
        raise ValueError("tol must be positive")
    if a.is_trivial or b.is_trivial:
        p, c = (a.start, b) if a.is_trivial else (b.start, a)
        return MetricResult(_point_to_curve(p, c), tol)
    lo = endpoint_bound(a, b)
    hi = discrete_frechet(a, b)
    if hi - lo <= 2 * tol:
        return MetricResult(0.5 * (lo + hi), tol)
    if frechet_decision(a, b, lo):
        return MetricResult(lo, tol)
    while hi - lo > 2 * tol:
        mid = 0.5 * (lo + hi)
        if frechet_decision(a, b, mid):
            hi = mid
        else:
            lo = mid
    return MetricResult(0.5 * (lo + hi), tol)


def discrete_upper_bound(a: Polyline, b: Polyline) -> MetricResult:
    """Cheap upper bound; the true distance is at most ``value``."""
    return MetricResult(discrete_frechet(a, b), 0.0, DISCRETE_UPPER)
