"""Monte-Carlo diagnostics for annulus-crossing regularity of random curve
ensembles: crossing-count tails with Wilson intervals, sup-over-family
regularity tables, power-law fits of tails in ``r/R``, the ``o(r^{d-1})``
rate check, and the cube-face hotspot locator.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from statsmodels.stats.proportion import proportion_confint

from .crossings import find_crossings
from .ensembles import EnsembleSpec, draw
from .geometry import AlignedFace, Annulus, segments_hit_boxes
from .nets import greedy_net


class DegenerateFit(ValueError):
    """Every tail value is zero, so there is nothing to fit."""


class NoCrossingsObserved(RuntimeError):
    """No sample crossed the annulus, so there is no hotspot to locate."""


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def sample_counts(spec: EnsembleSpec, ann: Annulus, samples: int, seed: int | None = None, threads: int = 1) -> np.ndarray:
    """Crossing counts of ``samples`` independent draws, in draw order."""
    if samples < 1:
        raise ValueError("samples must be at least 1")

    def one(i: int) -> int:
        coll = draw(spec, i, seed)
        return sum(m * find_crossings(c, ann).count for c, m in zip(coll.curves, coll.multiplicities))

    return np.array(_map(one, range(samples), threads), dtype=np.int64)


def wilson_interval(successes: int, n: int, alpha: float = 0.05) -> tuple[float, float]:
    lo, hi = proportion_confint(successes, n, alpha=alpha, method="wilson")
    p = successes / n
    return float(min(max(lo, 0.0), p)), float(max(min(hi, 1.0), p))


@dataclass(frozen=True)
class TailEstimate:
    x: tuple[float, ...]
    r: float
    R: float
    N: int
    p_hat: float
    samples: int
    ci_lo: float
    ci_hi: float


def tails_from_counts(counts: np.ndarray, ann: Annulus, Ns: Sequence[int]) -> list[TailEstimate]:
    n = counts.size
    out = []
    for N in Ns:
        hits = int((counts >= N).sum())
        lo, hi = wilson_interval(hits, n)
        out.append(TailEstimate(tuple(ann.center.tolist()), ann.inner, ann.outer, int(N), hits / n, n, lo, hi))
    return out


def estimate_tail(
    sampler: EnsembleSpec, ann: Annulus, N: int, samples: int, seed: int | None = None, threads: int = 1
) -> TailEstimate:
    """Frequency of ``count >= N`` over ``samples`` draws, with a 95% Wilson interval."""
    return tails_from_counts(sample_counts(sampler, ann, samples, seed, threads), ann, [N])[0]


@dataclass(frozen=True)
class RegularityCell:
    annulus: Annulus
    tails: tuple[TailEstimate, ...]  # sup over samplers, one per N
    argmax: tuple[int, ...]  # which sampler attains each sup
    monotone: bool

    @property
    def terminal(self) -> float:
        return self.tails[-1].p_hat


def regularity_report(
    samplers: Sequence[EnsembleSpec],
    grid: Sequence[Annulus],
    N_ladder: Sequence[int],
    samples: int,
    seed: int | None = None,
    threads: int = 1,
) -> list[RegularityCell]:
    """Per annulus, the largest tail over the sampler family at each ``N``."""
    if not samplers:
        raise ValueError("need at least one sampler")
    Ns = sorted(int(n) for n in N_ladder)
    out = []
    for ann in grid:
        per = [tails_from_counts(sample_counts(s, ann, samples, seed, threads), ann, Ns) for s in samplers]
        best, which = [], []
        for i in range(len(Ns)):
            j = max(range(len(per)), key=lambda s: (per[s][i].p_hat, -s))
            best.append(per[j][i])
            which.append(j)
        mono = all(a.p_hat >= b.p_hat for a, b in zip(best, best[1:]))
        out.append(RegularityCell(ann, tuple(best), tuple(which), mono))
    return out


@dataclass(frozen=True)
class PowerFit:
    N: int
    lambda_N: float
    K_N: float
    residual: float
    points: int


def fit_power(tails: Sequence[TailEstimate]) -> PowerFit:
    """Least squares of ``log p`` on ``log(r/R)``: ``p ~ K (r/R)^lambda``.

    Zero tails carry no log information and are skipped; at least three
    positive points are required.
    """
    if not tails:
        raise ValueError("no tails to fit")
    Ns = {t.N for t in tails}
    if len(Ns) != 1:
        raise ValueError(f"tails must share one threshold N, got {sorted(Ns)}")
    pos = [t for t in tails if t.p_hat > 0]
    if not pos:
        raise DegenerateFit("degenerate fit: every tail estimate is zero")
    if len(pos) < 3:
        raise ValueError(f"need at least 3 positive tail values, got {len(pos)}")
    x = np.log([t.r / t.R for t in pos])
    y = np.log([t.p_hat for t in pos])
    A = np.stack([x, np.ones_like(x)], axis=1)
    (lam, logK), *_ = np.linalg.lstsq(A, y, rcond=None)
    res = float(np.sqrt(np.mean((A @ np.array([lam, logK]) - y) ** 2)))
    return PowerFit(Ns.pop(), float(lam), float(math.exp(logK)), res, len(pos))


def synthetic_tails(rs, R: float, p: Callable[[float], float], N: int = 1, dim: int = 2) -> list[TailEstimate]:
    """Tail records with prescribed values, for calibration of the fitters."""
    x = tuple([0.0] * dim)
    return [TailEstimate(x, float(r), R, N, float(p(r)), 0, float(p(r)), float(p(r))) for r in rs]


@dataclass(frozen=True)
class RateVerdict:
    passed: bool
    r: tuple[float, ...]
    ratios: tuple[float, ...]  # q(r) / r^(d-1), ladder order
    gauge_ratios: tuple[float, ...] | None = None  # q(r) / (g(r) r^(d-1))
    gauge_passed: bool | None = None


def _decreasing_to_zero(ratios: np.ndarray, slack: np.ndarray) -> bool:
    mono = bool(np.all(ratios[1:] <= ratios[:-1] + slack[1:]))
    shrink = ratios[-1] == 0.0 or ratios[-1] < 0.5 * ratios[0]
    return mono and shrink


def rate_check(
    r_values: Sequence[float],
    q_values: Sequence[float],
    dim: int,
    ci_hi: Sequence[float] | None = None,
    gauge: Callable[[float], float] | None = None,
) -> RateVerdict:
    """Finite-ladder evidence that ``q(r) = o(r^{d-1})`` as ``r -> 0``.

    Passes when ``q(r) / r^{d-1}`` is non-increasing along the decreasing
    ``r`` ladder (up to the upper confidence slack, if given) and its last
    value is below half the first. With ``gauge`` the same test is applied to
    ``q(r) / (g(r) r^{d-1})``.
    """
    r = np.asarray(r_values, dtype=float)
    q = np.asarray(q_values, dtype=float)
    if r.size < 4 or q.size != r.size:
        raise ValueError("need a ladder of at least 4 radii with one tail value each")
    if np.any(np.diff(r) >= 0):
        raise ValueError("the r-ladder must be strictly decreasing")
    scale = r ** (dim - 1)
    ratios = q / scale
    slack = np.zeros_like(q) if ci_hi is None else (np.asarray(ci_hi, dtype=float) - q) / scale
    passed = _decreasing_to_zero(ratios, slack)
    g_ratios = g_passed = None
    if gauge is not None:
        g = np.array([gauge(x) for x in r])
        g_ratios = q / (g * scale)
        g_passed = _decreasing_to_zero(g_ratios, slack / g)
        g_ratios = tuple(float(v) for v in g_ratios)
    return RateVerdict(passed, tuple(r.tolist()), tuple(float(v) for v in ratios), g_ratios, g_passed)


# --- hotspot locator ---------------------------------------------------------


def _sphere_samples(center: np.ndarray, radius: float, h: float) -> np.ndarray:
    """Grid on the surface of the cube ``[-1, 1]^d`` projected to the sphere."""
    d = center.size
    if d == 1:
        return np.array([center - radius, center + radius])
    ticks = np.linspace(-1.0, 1.0, int(math.ceil(2.0 / h)) + 1)
    mesh = np.stack(np.meshgrid(*([ticks] * (d - 1)), indexing="ij"), axis=-1).reshape(-1, d - 1)
    pts = []
    for axis in range(d):
        for sign in (-1.0, 1.0):
            pts.append(np.insert(mesh, axis, sign, axis=1))
    p = np.unique(np.concatenate(pts), axis=0)
    return center + radius * p / np.linalg.norm(p, axis=1, keepdims=True)


def cube_faces(z: np.ndarray, side: float) -> list[AlignedFace]:
    """The 2d closed faces of the cube of the given side centred at ``z``."""
    d = z.size
    half = 0.5 * side
    out = []
    for axis in range(d):
        bounds = tuple((z[j] - half, z[j] + half) for j in range(d) if j != axis)
        for sign in (-1.0, 1.0):
            out.append(AlignedFace(axis, z[axis] + sign * half, bounds))
    return out


def initial_face_cover(ann: Annulus) -> tuple[np.ndarray, float, list[AlignedFace]]:
    """Cubes whose closures sit inside the annulus and whose union covers the
    mid sphere; returns the cube centres, the side, and all their faces.

    Centres lie on the mid sphere and the side is ``(R - r)/sqrt(d)`` shrunk
    by ``1e-6``, so each closed cube stays inside the open annulus. The centres
    form a net of the sphere fine enough that every sphere point lies in the
    inscribed ball of some cube. The union of the faces then separates the two
    boundary spheres.
    """
    d = ann.dim
    side = (ann.outer - ann.inner) / math.sqrt(d) * (1 - 1e-6)
    if d == 1:
        centers = np.array([ann.center - ann.mid, ann.center + ann.mid])
    else:
        eta = side / 8.0
        h = eta * 2.0 / (ann.mid * math.sqrt(d - 1))
        samples = _sphere_samples(ann.center, ann.mid, h)
        centers = greedy_net(samples, side / 2.0 - 2.0 * eta).points
    faces = [f for z in centers for f in cube_faces(np.asarray(z), side)]
    return np.asarray(centers), side, faces


@dataclass(frozen=True)
class HotspotLevel:
    k: int
    face: AlignedFace
    eps: float  # face diameter
    p_hat: float  # fraction of samples with a crossing hitting the face
    children: int  # size of the cover this face was chosen from


@dataclass(frozen=True)
class HotspotReport:
    y: tuple[float, ...]
    levels: tuple[HotspotLevel, ...]
    p0: float  # hit rate of the level-0 face
    p_total: float  # fraction of samples with any crossing
    samples: int


def _crossing_segments(spec, ann, samples, seed, threads):
    def one(i: int):
        coll = draw(spec, i, seed)
        parts = []
        for c, m in zip(coll.curves, coll.multiplicities):
            for iv in find_crossings(c, ann).intervals:
                parts.append(c.restrict(iv.a, iv.b).segments())
        return parts

    per = _map(one, range(samples), threads)
    starts, dirs, owner = [], [], []
    for i, parts in enumerate(per):
        for s, d in parts:
            starts.append(s)
            dirs.append(d)
            owner.append(np.full(s.shape[0], i))
    if not starts:
        dim = ann.dim
        return np.zeros((0, dim)), np.zeros((0, dim)), np.zeros(0, dtype=np.int64)
    return np.concatenate(starts), np.concatenate(dirs), np.concatenate(owner)


def _hit_rates(starts, dirs, owner, samples: int, faces: Sequence[AlignedFace]) -> np.ndarray:
    boxes = [f.box() for f in faces]
    lo = np.array([b[0] for b in boxes])
    hi = np.array([b[1] for b in boxes])
    hit = np.zeros((samples, len(faces)), dtype=bool)
    chunk = max(1, 2_000_000 // max(len(faces), 1))
    for i in range(0, starts.shape[0], chunk):
        mask = segments_hit_boxes(starts[i : i + chunk], dirs[i : i + chunk], lo, hi)
        np.logical_or.at(hit, owner[i : i + chunk], mask)
    return hit.mean(axis=0)


def locate_hotspot(
    sampler: EnsembleSpec,
    ann: Annulus,
    depth: int,
    samples: int,
    seed: int | None = None,
    threads: int = 1,
) -> HotspotReport:
    """Recursive face subdivision towards the point where crossings concentrate.

    Level 0 picks the face of the initial cube cover hit by the most samples;
    each further level bisects the current face into ``2^(d-1)`` closed
    children and keeps the most-hit child (lowest index on ties). Because the
    children cover the parent, the kept rate is at least the parent's rate
    divided by ``2^(d-1)``.
    """
    if depth < 1:
        raise ValueError("depth must be at least 1")
    starts, dirs, owner = _crossing_segments(sampler, ann, samples, seed, threads)
    p_total = float(np.unique(owner).size / samples)
    if starts.shape[0] == 0:
        raise NoCrossingsObserved("no crossings observed: every sample missed the annulus")
    _, _, faces = initial_face_cover(ann)
    rates = _hit_rates(starts, dirs, owner, samples, faces)
    i = int(np.argmax(rates))
    face = faces[i]
    levels = [HotspotLevel(0, face, face.diameter(), float(rates[i]), len(faces))]
    for k in range(1, depth + 1):
        kids = face.split()
        rates = _hit_rates(starts, dirs, owner, samples, kids)
        i = int(np.argmax(rates))
        face = kids[i]
        levels.append(HotspotLevel(k, face, face.diameter(), float(rates[i]), len(kids)))
    return HotspotReport(tuple(face.center().tolist()), tuple(levels), levels[0].p_hat, p_total, samples)
