"""Annulus crossings of polylines and curve collections.

A crossing of the open annulus ``A = {inner < |y - x| < outer}`` is a time
interval ``(a, b)`` on which the curve stays inside ``A`` and whose endpoint
radii are ``{inner, outer}`` in some order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

import numpy as np

from .geometry import TAU_GEOM, AlignedFace, Annulus, Polyline, segments_hit_boxes, sphere_roots

if TYPE_CHECKING:
    from .collection import CurveCollection

OUTWARD = "outward"
INWARD = "inward"

# node labels used by the scan
_IN, _ANN, _OUT, _ON_R, _ON_BIG_R = 0, 1, 2, 3, 4


@dataclass(frozen=True)
class CrossingInterval:
    a: float
    b: float
    direction: str

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"crossing interval needs a < b, got ({self.a}, {self.b})")


@dataclass(frozen=True)
class CrossingReport:
    intervals: tuple[CrossingInterval, ...]
    nongeneric: bool = False  # a vertex sat on a boundary sphere

    @property
    def count(self) -> int:
        return len(self.intervals)


def _check_dim(curve: Polyline, ann: Annulus) -> None:
    if curve.dim != ann.dim:
        raise ValueError(f"dimension mismatch: curve is {curve.dim}-d, annulus is {ann.dim}-d")


def _classify(rho: np.ndarray, r: float, R: float) -> np.ndarray:
    return np.where(rho <= r, _IN, np.where(rho < R, _ANN, _OUT))


def find_crossings(curve: Polyline, ann: Annulus) -> CrossingReport:
    """Enumerate all crossings of ``ann`` by ``curve``, sorted by start time.

    Breakpoints are the vertices plus every transversal hit of the two
    boundary spheres. Between consecutive breakpoints the curve lies on one
    side of each sphere, so the midpoint radius classifies the whole piece.
    Tangential touches are not breakpoints; a vertex lying on a sphere (within
    ``TAU_GEOM``) is a boundary node and sets ``nongeneric``.
    """
    _check_dim(curve, ann)
    r, R = ann.inner, ann.outer
    if curve.is_trivial:
        return CrossingReport(())

    times = curve.times
    starts, dirs = curve.segments()
    spans = np.diff(times)

    rho_v = ann.radius_of(curve.vertices)
    v_label = _classify(rho_v, r, R)
    on_r = np.abs(rho_v - r) <= TAU_GEOM * r
    on_R = np.abs(rho_v - R) <= TAU_GEOM * R
    v_label = np.where(on_r, _ON_R, np.where(on_R, _ON_BIG_R, v_label))
    nongeneric = bool(on_r.any() or on_R.any())

    node_t = [times]
    node_lab = [v_label]
    for radius, lab, on in ((r, _ON_R, on_r), (R, _ON_BIG_R, on_R)):
        seg, s, tan = sphere_roots(starts, dirs, ann.center, radius)
        keep = ~tan
        # hits at a vertex already labelled on-sphere are duplicates
        keep &= ~((s <= 1e-9) & on[seg]) & ~((s >= 1 - 1e-9) & on[seg + 1])
        seg, s = seg[keep], s[keep]
        node_t.append(times[seg] + s * spans[seg])
        node_lab.append(np.full(seg.size, lab))
    t = np.concatenate(node_t)
    lab = np.concatenate(node_lab)
    # vertices first on ties so a hit at a vertex time follows the vertex
    prio = np.concatenate([np.zeros(times.size), np.ones(t.size - times.size)])
    order = np.lexsort((prio, t))
    t, lab = t[order], lab[order]

    gaps = np.diff(t)
    mids = 0.5 * (t[:-1] + t[1:])
    mid_lab = _classify(ann.radius_of(curve.point(mids)), r, R)

    # interleave nodes and piece midpoints (zero-length pieces have none)
    n = t.size
    seq_t = np.empty(2 * n - 1)
    seq_lab = np.empty(2 * n - 1, dtype=np.int64)
    seq_t[0::2], seq_lab[0::2] = t, lab
    seq_t[1::2], seq_lab[1::2] = mids, mid_lab
    real = np.ones(2 * n - 1, dtype=bool)
    real[1::2] = gaps > 0
    seq_t, seq_lab = seq_t[real], seq_lab[real]
    # within a run of equal labels only the last node matters below
    last = np.append(seq_lab[1:] != seq_lab[:-1], True)
    seq_t, seq_lab = seq_t[last].tolist(), seq_lab[last].tolist()

    intervals = []
    boundary = None  # (time, label) of the sphere node opening the current annulus run
    seen_ann = False
    for tt, ll in zip(seq_t, seq_lab):
        if ll == _ANN:
            seen_ann = True
        elif ll in (_ON_R, _ON_BIG_R):
            if boundary is not None and seen_ann and boundary[1] != ll and tt > boundary[0]:
                direction = OUTWARD if boundary[1] == _ON_R else INWARD
                intervals.append(CrossingInterval(boundary[0], tt, direction))
            boundary = (tt, ll)
            seen_ann = False
        else:
            boundary = None
            seen_ann = False
    return CrossingReport(tuple(intervals), nongeneric)


def count_crossings(curve: Polyline, ann: Annulus) -> int:
    return find_crossings(curve, ann).count


def count_crossings_collection(coll: "CurveCollection", ann: Annulus) -> int:
    """Total crossings of a curve multiset, counting multiplicities."""
    return sum(m * find_crossings(c, ann).count for c, m in zip(coll.curves, coll.multiplicities))


def crossing_hits(curve: Polyline, report: CrossingReport, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Mask ``(n_crossings, n_faces)``: does crossing ``i`` touch face ``j``.

    Faces are given as flat boxes (see :meth:`AlignedFace.box`)."""
    out = np.zeros((report.count, lo.shape[0]), dtype=bool)
    for i, iv in enumerate(report.intervals):
        piece = curve.restrict(iv.a, iv.b)
        starts, dirs = piece.segments()
        out[i] = segments_hit_boxes(starts, dirs, lo, hi).any(axis=0)
    return out


def crossings_hitting(curve: Polyline, ann: Annulus, faces: Sequence[AlignedFace]) -> int:
    """Number of crossings whose closed trace meets the union of ``faces``."""
    _check_dim(curve, ann)
    report = find_crossings(curve, ann)
    if not faces or report.count == 0:
        return 0
    boxes = [f.box() for f in faces]
    lo = np.array([b[0] for b in boxes])
    hi = np.array([b[1] for b in boxes])
    return int(crossing_hits(curve, report, lo, hi).any(axis=1).sum())


def _mid_time(curve: Polyline, ann: Annulus, iv: CrossingInterval) -> float:
    """First time inside ``iv`` where the radius equals the mid radius."""
    piece_start, piece_dirs = curve.segments()
    seg, s, _ = sphere_roots(piece_start, piece_dirs, ann.center, ann.mid)
    t = curve.times[seg] + s * np.diff(curve.times)[seg]
    inside = t[(t > iv.a) & (t < iv.b)]
    if inside.size:
        return float(inside.min())
    return 0.5 * (iv.a + iv.b)


def separating_times(curve: Polyline, ann: Annulus) -> list[float]:
    """Times ``0 = s_0 < ... < s_{n+1} = 1`` with ``n`` the crossing count such
    that no piece ``[s_j, s_{j+1}]`` crosses the annulus.

    One time is placed inside each crossing, where the radius equals the
    mid radius ``(inner + outer) / 2``.
    """
    report = find_crossings(curve, ann)
    return [0.0] + [_mid_time(curve, ann, iv) for iv in report.intervals] + [1.0]


def crosses(curve: Polyline, ann: Annulus, a: float, b: float) -> bool:
    """Whether the restriction of ``curve`` to ``[a, b]`` crosses ``ann``."""
    return find_crossings(curve.restrict(a, b), ann).count > 0


def verify_separating(curve: Polyline, ann: Annulus, times: Sequence[float]) -> bool:
    """Re-check that no consecutive piece of ``times`` crosses."""
    ts = list(times)
    if ts[0] != 0.0 or ts[-1] != 1.0 or any(x >= y for x, y in zip(ts, ts[1:])):
        return False
    return not any(crosses(curve, ann, a, b) for a, b in zip(ts, ts[1:]))


def radius_range(piece: Polyline, center: np.ndarray) -> tuple[float, float]:
    """Min and max distance from ``center`` over the trace of ``piece``."""
    v = piece.vertices
    hi = float(np.linalg.norm(v - center, axis=1).max())
    if piece.is_trivial:
        return hi, hi
    starts, dirs = piece.segments()
    w = center - starts
    s = np.clip(np.einsum("ij,ij->i", w, dirs) / np.einsum("ij,ij->i", dirs, dirs), 0.0, 1.0)
    lo = float(np.linalg.norm(starts + s[:, None] * dirs - center, axis=1).min())
    return lo, hi


def stability_radius(curve: Polyline, ann: Annulus) -> float:
    """A radius ``delta`` such that curves within ``delta`` of ``curve`` (in the
    reparametrization-invariant uniform metric) never cross ``ann`` more often.

    Each piece between separating times avoids at least one boundary sphere;
    ``delta`` is the smallest clearance of a piece to a sphere it avoids. When
    a piece avoids both spheres the nearer one is used.
    """
    ts = separating_times(curve, ann)
    best = np.inf
    for a, b in zip(ts, ts[1:]):
        lo, hi = radius_range(curve.restrict(a, b), ann.center)
        clear = [
            min(abs(lo - rho), abs(hi - rho)) for rho in (ann.inner, ann.outer) if not lo <= rho <= hi
        ]
        best = min(best, min(clear) if clear else 0.0)
    return float(best)
