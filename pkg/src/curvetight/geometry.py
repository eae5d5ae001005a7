"""Euclidean primitives: polylines, annuli, axis-aligned faces and the
low-level predicates every other module is built on."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy.spatial import ConvexHull, QhullError

TAU_GEOM = 1e-12  # relative tolerance for tangency and on-sphere tests
_PARAM_SLOP = 1e-12  # roots this far outside [0, 1] are clipped back in


def as_point(x, dim: int | None = None) -> np.ndarray:
    p = np.atleast_1d(np.asarray(x, dtype=float))
    if p.ndim != 1 or p.size == 0:
        raise ValueError(f"a point must be a non-empty coordinate vector, got shape {p.shape}")
    if not np.all(np.isfinite(p)):
        raise ValueError("point coordinates must be finite")
    if dim is not None and p.size != dim:
        raise ValueError(f"dimension mismatch: expected {dim}, got {p.size}")
    return p


class Polyline:
    """A compact curve given by its vertices, traversed at constant speed.

    Vertex ``i`` sits at global time ``times[i]``, the cumulative arclength
    fraction, so ``t in [0, 1]`` maps to a unique point. Consecutive
    duplicate vertices are collapsed at construction; a polyline may end up
    with a single vertex (a trivial, point-like curve).
    """

    __slots__ = ("_v", "_t", "_len")

    def __init__(self, vertices):
        v = np.asarray(vertices, dtype=float)
        if v.ndim == 1:
            v = v[None, :]
        if v.ndim != 2 or v.shape[0] == 0 or v.shape[1] == 0:
            raise ValueError(f"vertices must be a non-empty (n, d) array, got shape {v.shape}")
        if not np.all(np.isfinite(v)):
            raise ValueError("vertex coordinates must be finite")
        seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
        floor = 1e-15 * (1.0 + np.abs(v).max())
        keep = np.concatenate(([True], seg > floor))
        v = np.ascontiguousarray(v[keep])
        seg = np.linalg.norm(np.diff(v, axis=0), axis=1)
        total = float(seg.sum())
        if v.shape[0] == 1:
            t = np.zeros(1)
        else:
            t = np.concatenate(([0.0], np.cumsum(seg) / total))
            t[-1] = 1.0
        v.setflags(write=False)
        t.setflags(write=False)
        self._v = v
        self._t = t
        self._len = total

    @property
    def vertices(self) -> np.ndarray:
        return self._v

    @property
    def times(self) -> np.ndarray:
        return self._t

    @property
    def dim(self) -> int:
        return self._v.shape[1]

    @property
    def n_segments(self) -> int:
        return self._v.shape[0] - 1

    @property
    def length(self) -> float:
        return self._len

    @property
    def is_trivial(self) -> bool:
        return self._v.shape[0] == 1

    @property
    def start(self) -> np.ndarray:
        return self._v[0]

    @property
    def end(self) -> np.ndarray:
        return self._v[-1]

    def __len__(self) -> int:
        return self._v.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polyline):
            return NotImplemented
        return self._v.shape == other._v.shape and bool(np.array_equal(self._v, other._v))

    def __hash__(self) -> int:
        return hash((self._v.shape, self._v.tobytes()))

    def __repr__(self) -> str:
        return f"Polyline(n={len(self)}, dim={self.dim}, length={self._len:.6g})"

    def locate(self, t: float) -> tuple[int, float]:
        """Segment index and local parameter for global time ``t``."""
        if self.is_trivial:
            return 0, 0.0
        t = min(max(float(t), 0.0), 1.0)
        i = int(np.searchsorted(self._t, t, side="right")) - 1
        i = min(max(i, 0), self.n_segments - 1)
        span = self._t[i + 1] - self._t[i]
        return i, min(max((t - self._t[i]) / span, 0.0), 1.0)

    def point(self, t) -> np.ndarray:
        """Evaluate the curve at global time(s) ``t``."""
        if self.is_trivial:
            ts = np.asarray(t, dtype=float)
            return np.broadcast_to(self._v[0], ts.shape + (self.dim,)).copy()
        ts = np.clip(np.asarray(t, dtype=float), 0.0, 1.0)
        out = np.stack([np.interp(ts, self._t, self._v[:, k]) for k in range(self.dim)], axis=-1)
        return out

    def restrict(self, a: float, b: float) -> "Polyline":
        """The sub-curve on ``[a, b]`` as a new polyline."""
        if not 0.0 <= a <= b <= 1.0:
            raise ValueError(f"need 0 <= a <= b <= 1, got a={a}, b={b}")
        inner = (self._t > a) & (self._t < b)
        pts = [self.point(a)[None, :], self._v[inner], self.point(b)[None, :]]
        return Polyline(np.concatenate(pts, axis=0))

    def segments(self) -> tuple[np.ndarray, np.ndarray]:
        """Start points and direction vectors of all segments."""
        return self._v[:-1], np.diff(self._v, axis=0)


@dataclass(frozen=True, eq=False)
class Annulus:
    """The open annulus ``{y : inner < |y - center| < outer}``."""

    center: np.ndarray
    inner: float
    outer: float

    def __post_init__(self):
        c = as_point(self.center)
        c.setflags(write=False)
        object.__setattr__(self, "center", c)
        r, R = float(self.inner), float(self.outer)
        if not (np.isfinite(r) and np.isfinite(R) and 0.0 < r < R):
            raise ValueError(f"annulus radii must satisfy 0 < inner < outer, got {r}, {R}")
        object.__setattr__(self, "inner", r)
        object.__setattr__(self, "outer", R)

    @property
    def dim(self) -> int:
        return self.center.size

    @property
    def mid(self) -> float:
        return 0.5 * (self.inner + self.outer)

    def __eq__(self, other):
        if not isinstance(other, Annulus):
            return NotImplemented
        return (
            np.array_equal(self.center, other.center)
            and self.inner == other.inner
            and self.outer == other.outer
        )

    def __hash__(self):
        return hash((self.center.tobytes(), self.inner, self.outer))

    def radius_of(self, points) -> np.ndarray:
        return np.linalg.norm(np.asarray(points, dtype=float) - self.center, axis=-1)


@dataclass(frozen=True)
class AlignedFace:
    """A closed (d-1)-dimensional axis-aligned box inside the hyperplane
    ``x[fixed_axis] == fixed_value``. ``bounds`` lists ``(lo, hi)`` for the
    remaining axes in increasing axis order."""

    fixed_axis: int
    fixed_value: float
    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        b = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        for lo, hi in b:
            if not lo <= hi:
                raise ValueError(f"empty face interval [{lo}, {hi}]")
        if not 0 <= self.fixed_axis <= len(b):
            raise ValueError("fixed_axis out of range")
        object.__setattr__(self, "bounds", b)
        object.__setattr__(self, "fixed_value", float(self.fixed_value))

    @property
    def dim(self) -> int:
        return len(self.bounds) + 1

    def box(self) -> tuple[np.ndarray, np.ndarray]:
        """Full d-dimensional lower/upper corners (degenerate on the fixed axis)."""
        lo = [b[0] for b in self.bounds]
        hi = [b[1] for b in self.bounds]
        lo.insert(self.fixed_axis, self.fixed_value)
        hi.insert(self.fixed_axis, self.fixed_value)
        return np.array(lo), np.array(hi)

    def center(self) -> np.ndarray:
        lo, hi = self.box()
        return 0.5 * (lo + hi)

    def diameter(self) -> float:
        return float(np.sqrt(sum((hi - lo) ** 2 for lo, hi in self.bounds)))

    def split(self) -> list["AlignedFace"]:
        """The 2^(d-1) closed half-faces obtained by bisecting every free axis."""
        halves = [((lo, 0.5 * (lo + hi)), (0.5 * (lo + hi), hi)) for lo, hi in self.bounds]
        return [AlignedFace(self.fixed_axis, self.fixed_value, combo) for combo in product(*halves)]

    def contains(self, other: "AlignedFace") -> bool:
        return (
            other.fixed_axis == self.fixed_axis
            and other.fixed_value == self.fixed_value
            and all(a[0] <= b[0] and b[1] <= a[1] for a, b in zip(self.bounds, other.bounds))
        )


def diameter(curve: Polyline) -> float:
    """Diameter of the curve's trace, i.e. the largest vertex-to-vertex distance."""
    v = curve.vertices
    n, d = v.shape
    if n == 1:
        return 0.0
    if n > 64 and d in (2, 3):
        try:
            v = v[ConvexHull(v).vertices]
        except QhullError:
            pass  # flat or collinear input: fall through to the blocked scan
    best = 0.0
    block = 1024
    for i in range(0, v.shape[0], block):
        diff = v[i : i + block, None, :] - v[None, :, :]
        best = max(best, float(np.sqrt(np.einsum("ijk,ijk->ij", diff, diff).max())))
    return best


def sphere_roots(starts: np.ndarray, dirs: np.ndarray, center: np.ndarray, radius: float):
    """Vectorized intersections of segments ``starts + s * dirs`` with a sphere.

    Returns ``(seg_index, s, tangent)`` arrays, sorted by segment then ``s``.
    A double root within ``TAU_GEOM`` is reported once with ``tangent=True``.
    """
    w = starts - center
    a = np.einsum("ij,ij->i", dirs, dirs)
    b = np.einsum("ij,ij->i", w, dirs)
    c = np.einsum("ij,ij->i", w, w) - radius * radius
    disc = b * b - a * c
    scale = a * radius * radius
    tangent = np.abs(disc) <= TAU_GEOM * scale
    real = (disc > 0) & ~tangent

    idx, roots, tan = [], [], []
    if np.any(tangent):
        k = np.nonzero(tangent)[0]
        idx.append(k)
        roots.append(-b[k] / a[k])
        tan.append(np.ones(k.size, dtype=bool))
    if np.any(real):
        k = np.nonzero(real)[0]
        sq = np.sqrt(disc[k])
        # numerically stable pair of roots
        q = -(b[k] + np.where(b[k] >= 0, sq, -sq))
        r1 = q / a[k]
        with np.errstate(divide="ignore", invalid="ignore"):
            r2 = np.where(q != 0, c[k] / q, -r1)
        lo, hi = np.minimum(r1, r2), np.maximum(r1, r2)
        idx += [k, k]
        roots += [lo, hi]
        tan += [np.zeros(k.size, dtype=bool)] * 2
    if not idx:
        empty = np.zeros(0)
        return empty.astype(int), empty, empty.astype(bool)
    idx = np.concatenate(idx)
    roots = np.concatenate(roots)
    tan = np.concatenate(tan)
    ok = (roots >= -_PARAM_SLOP) & (roots <= 1.0 + _PARAM_SLOP)
    idx, roots, tan = idx[ok], np.clip(roots[ok], 0.0, 1.0), tan[ok]
    order = np.lexsort((roots, idx))
    return idx[order], roots[order], tan[order]


def segment_sphere_hits(p, q, center, radius: float) -> list[float]:
    """Parameters ``t in [0, 1]`` where ``|p + t (q - p) - center| == radius``."""
    p = as_point(p)
    q = as_point(q, p.size)
    center = as_point(center, p.size)
    if radius <= 0:
        raise ValueError("radius must be positive")
    d = q - p
    if not np.any(d):
        raise ValueError("zero-length segment")
    _, s, _ = sphere_roots(p[None, :], d[None, :], center, float(radius))
    return [float(x) for x in s]


def _face_arrays(faces: list[AlignedFace]) -> tuple[np.ndarray, np.ndarray]:
    boxes = [f.box() for f in faces]
    return np.array([b[0] for b in boxes]), np.array([b[1] for b in boxes])


def segments_hit_boxes(starts: np.ndarray, dirs: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> np.ndarray:
    """Closed segment vs closed box test for every (segment, box) pair.

    Slab clipping of the parameter range; boxes may be flat along an axis,
    which is how faces are represented. Returns a ``(n_seg, n_box)`` mask.
    """
    P = starts[:, None, :]
    D = dirs[:, None, :]
    L = lo[None, :, :]
    H = hi[None, :, :]
    scale = 1.0 + np.abs(starts).max() + np.abs(dirs).max()
    eps = 1e-12 * scale
    flat = np.abs(D) <= 1e-300
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (L - eps - P) / D
        t2 = (H + eps - P) / D
    tlo = np.where(flat, -np.inf, np.minimum(t1, t2))
    thi = np.where(flat, np.inf, np.maximum(t1, t2))
    inside_flat = (P >= L - eps) & (P <= H + eps)
    ok_flat = np.all(~flat | inside_flat, axis=-1)
    enter = np.maximum(tlo.max(axis=-1), 0.0)
    leave = np.minimum(thi.min(axis=-1), 1.0)
    return ok_flat & (enter <= leave)


def segment_face_intersects(p, q, face: AlignedFace) -> bool:
    """Whether the closed segment ``[p, q]`` meets the closed face."""
    p = as_point(p)
    q = as_point(q, p.size)
    if face.dim != p.size:
        raise ValueError(f"dimension mismatch: face is {face.dim}-d, segment is {p.size}-d")
    lo, hi = _face_arrays([face])
    return bool(segments_hit_boxes(p[None, :], (q - p)[None, :], lo, hi)[0, 0])
