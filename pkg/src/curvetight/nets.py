"""Finite dense nets and the piecewise-geodesic skeleton of a curve.

The skeleton walks along the curve: from time ``t_j`` it anchors at the
order-least nearest net point ``x_{j+1}``, then jumps to the first time the
curve leaves the closed ``2/k``-ball around that anchor. Joining the anchors
by straight segments gives a curve within ``11/k`` of the original.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product
from typing import Mapping, Sequence

import numpy as np

from .collection import CurveCollection, filter_macroscopic
from .geometry import TAU_GEOM, Polyline, sphere_roots

SKELETON_BOUND = 11.0  # d(curve, skeleton) <= SKELETON_BOUND / k


class DensityViolation(ValueError):
    """The net is not ``1/k``-dense at some point the skeleton needs."""

    def __init__(self, time: float, gap: float, density: float):
        super().__init__(
            f"density violation at t={time:.12g}: nearest net point is {gap:.6g} away (> {density:.6g})"
        )
        self.time = time
        self.gap = gap


@dataclass(frozen=True, eq=False)
class Net:
    points: np.ndarray
    density: float

    def __post_init__(self):
        p = np.atleast_2d(np.asarray(self.points, dtype=float))
        if p.shape[0] == 0:
            raise ValueError("a net needs at least one point")
        p.setflags(write=False)
        object.__setattr__(self, "points", p)

    def __len__(self) -> int:
        return self.points.shape[0]

    def nearest(self, x) -> tuple[int, float]:
        """Order-least index among the closest net points, and its distance."""
        d = np.linalg.norm(self.points - np.asarray(x, dtype=float), axis=1)
        i = int(np.argmin(d))
        return i, float(d[i])

    def as_set(self) -> set[tuple[float, ...]]:
        return {tuple(p) for p in self.points}


def greedy_net(samples, delta: float) -> Net:
    """Farthest-point selection from ``samples`` until every sample lies within
    ``delta`` of a chosen point. Starts at the first sample; ties go to the
    lowest index, so the output is deterministic in the input order."""
    pts = np.atleast_2d(np.asarray(samples, dtype=float))
    if pts.shape[0] == 0 or pts.size == 0:
        raise ValueError("greedy_net needs at least one sample")
    if delta <= 0:
        raise ValueError("delta must be positive")
    chosen = [0]
    gap = np.linalg.norm(pts - pts[0], axis=1)
    while True:
        i = int(np.argmax(gap))
        if gap[i] <= delta:
            break
        chosen.append(i)
        np.minimum(gap, np.linalg.norm(pts - pts[i], axis=1), out=gap)
    return Net(pts[chosen], delta)


def grid_net(lo, hi, density: float) -> Net:
    """Regular grid covering the box ``[lo, hi]`` whose covering radius is at
    most ``density`` (every point of the box is within ``density``)."""
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    d = lo.size
    step = 2.0 * density / np.sqrt(d) * (1 - 1e-9)
    axes = []
    for a, b in zip(lo, hi):
        n = max(int(np.ceil((b - a) / step)), 0)
        axes.append(a + step * np.arange(n + 1))
    pts = np.array(list(product(*axes)), dtype=float).reshape(-1, d)
    return Net(pts, density)


def net_for_curves(curves: Sequence[Polyline], k: int, margin: float | None = None) -> Net:
    """A ``1/k``-dense grid net over the bounding box of ``curves``."""
    v = np.concatenate([c.vertices for c in curves])
    pad = 1.0 / k if margin is None else margin
    return grid_net(v.min(axis=0) - pad, v.max(axis=0) + pad, 1.0 / k)


def nested_family(base: Mapping[tuple[int, int], Net]) -> dict[tuple[int, int], Net]:
    """Monotone family from base nets indexed by ``(j, k)`` (accuracy ``1/j``,
    density ``1/k``): entry ``(j, k)`` is the union of all base nets with
    indices ``j' <= j`` and ``k' <= k``, deduplicated in first-seen order."""
    out = {}
    for j, k in sorted(base):
        seen: dict[tuple[float, ...], None] = {}
        for jj, kk in sorted(base):
            if jj <= j and kk <= k:
                for p in base[(jj, kk)].points:
                    seen.setdefault(tuple(p), None)
        out[(j, k)] = Net(np.array(list(seen)), 1.0 / k)
    return out


@dataclass(frozen=True, eq=False)
class Skeleton:
    anchors: np.ndarray  # x_1 .. x_m
    times: np.ndarray  # t_0 = 0 .. t_{m-1}, then t_m = 1
    k: int

    @property
    def m(self) -> int:
        return self.anchors.shape[0]

    def gaps(self) -> np.ndarray:
        return np.linalg.norm(np.diff(self.anchors, axis=0), axis=1)

    def __eq__(self, other):
        if not isinstance(other, Skeleton):
            return NotImplemented
        return (
            self.k == other.k
            and np.array_equal(self.anchors, other.anchors)
            and np.array_equal(self.times, other.times)
        )


def _first_exit(curve: Polyline, t0: float, center: np.ndarray, radius: float) -> float | None:
    """Smallest ``t > t0`` with ``|curve(t) - center| >= radius``, given that
    ``curve(t0)`` is strictly inside the ball."""
    i0, s0 = curve.locate(t0)
    starts, dirs = curve.segments()
    seg, s, _ = sphere_roots(starts[i0:], dirs[i0:], center, radius)
    seg = seg + i0
    later = (seg > i0) | (s > s0)
    if not np.any(later):
        return None
    i, si = int(seg[later][0]), float(s[later][0])
    t = curve.times[i] + si * (curve.times[i + 1] - curve.times[i])
    return max(t, np.nextafter(t0, 2.0))


def skeletonize(curve: Polyline, net: Net, k: int) -> tuple[Skeleton, Polyline]:
    """Anchor/exit-time skeleton of ``curve`` on ``net`` at scale ``1/k``.

    Returns the skeleton and the polyline through its anchors. Raises
    :class:`DensityViolation` when some ``curve(t_j)`` is farther than
    ``1/k`` from the net.
    """
    if k < 1:
        raise ValueError("k must be a positive integer")
    if curve.dim != net.points.shape[1]:
        raise ValueError("dimension mismatch between curve and net")
    reach = 1.0 / k
    slack = TAU_GEOM * max(1.0, float(np.abs(net.points).max()))
    anchors, times = [], [0.0]
    t = 0.0
    if curve.is_trivial:
        i, gap = net.nearest(curve.start)
        if gap > reach + slack:
            raise DensityViolation(0.0, gap, reach)
        anchors.append(net.points[i])
    else:
        while True:
            i, gap = net.nearest(curve.point(t))
            if gap > reach + slack:
                raise DensityViolation(t, gap, reach)
            anchors.append(net.points[i])
            nxt = _first_exit(curve, t, net.points[i], 2.0 * reach)
            if nxt is None:
                break
            t = nxt
            times.append(t)
    times.append(1.0)
    A = np.array(anchors)
    A.setflags(write=False)
    T = np.array(times)
    T.setflags(write=False)
    return Skeleton(A, T, k), Polyline(A)


def coarsen_collection(coll: CurveCollection, net: Net, k: int) -> CurveCollection:
    """Drop curves of diameter at most ``4/k`` and skeletonize the rest."""
    kept = filter_macroscopic(coll, 4.0 / k)
    coarse = tuple(skeletonize(c, net, k)[1] for c in kept.curves)
    return CurveCollection(coarse, kept.multiplicities, kept.ids)
