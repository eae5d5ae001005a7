"""Seeded curve and collection generators.

All randomness goes through Philox, a counter-based generator; sample ``i``
of a spec with seed ``s`` uses the stream ``SeedSequence(s, spawn_key=(i,))``,
so any sample can be regenerated alone and parallel draws reproduce the
serial ones bit for bit.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .collection import CurveCollection
from .geometry import Polyline, diameter

KINDS = ("random-walk", "brownian-bridge", "pathological", "loop-collection", "radial", "pencil", "fixed")


def stream(seed: int, index: int = 0) -> np.random.Generator:
    """The Philox stream for sample ``index`` under ``seed``."""
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=(int(index),))))


def _rng(seed) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(0 if seed is None else seed)


@dataclass(frozen=True)
class EnsembleSpec:
    kind: str
    params: dict[str, Any] = field(default_factory=dict)
    seed: int = 0

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown ensemble kind {self.kind!r}; expected one of {', '.join(KINDS)}")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {"kind": self.kind, "params": self.params, "seed": int(self.seed)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "EnsembleSpec":
        unknown = set(d) - {"kind", "params", "seed"}
        if unknown:
            raise ValueError(f"unknown ensemble spec fields: {sorted(unknown)}")
        return cls(d["kind"], dict(d.get("params", {})), int(d.get("seed", 0)))

    @classmethod
    def from_json(cls, text: str) -> "EnsembleSpec":
        return cls.from_dict(json.loads(text))


def pathological_curve(n_t: int = 400) -> Polyline:
    """Polyline samples of ``t -> |t sin(1/t)| e^{it}`` with ``0 -> 0``.

    The grid is uniform in ``1/t`` with step ``pi/4`` (four vertices per arch
    of ``|sin(1/t)|``, including its zeros and peaks), i.e.
    ``t = 4 / (pi i)`` for ``i = 2 .. n_t + 1``, plus ``t = 1`` and ``t = 0``.
    The curve is traversed from ``t = 1`` down to the origin.
    """
    if n_t < 8:
        raise ValueError("n_t must be at least 8")
    t = np.concatenate(([1.0], 4.0 / (np.pi * np.arange(2, n_t + 2))))
    rho = np.abs(t * np.sin(1.0 / t))
    v = np.stack([rho * np.cos(t), rho * np.sin(t)], axis=1)
    v = np.concatenate([v, [[0.0, 0.0]]])
    return Polyline(v)


def perturb_curve(curve: Polyline, bound: float, seed=None) -> Polyline:
    """Move every vertex by a uniform random vector of norm ``< bound``."""
    if bound <= 0:
        raise ValueError("bound must be positive")
    rng = _rng(seed)
    v = curve.vertices
    g = rng.standard_normal(v.shape)
    g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
    rad = bound * (1 - 1e-12) * rng.random(v.shape[0]) ** (1.0 / curve.dim)
    return Polyline(v + rad[:, None] * g)


def random_walk_polyline(steps: int, dim: int = 2, seed=None, start=None) -> Polyline:
    """Simple random walk on ``Z^dim`` (one unit step along a random axis per
    move), scaled by ``steps ** -0.5``."""
    if steps < 1 or dim < 1:
        raise ValueError("steps and dim must be positive")
    rng = _rng(seed)
    axis = rng.integers(0, dim, size=steps)
    sign = rng.choice(np.array([-1.0, 1.0]), size=steps)
    inc = np.zeros((steps, dim))
    inc[np.arange(steps), axis] = sign
    v = np.concatenate([np.zeros((1, dim)), np.cumsum(inc, axis=0)]) / math.sqrt(steps)
    if start is not None:
        v = v + np.asarray(start, dtype=float)
    return Polyline(v)


def brownian_bridge_polyline(steps: int, dim: int = 2, seed=None, scale: float = 1.0, start=None) -> Polyline:
    """Closed Gaussian bridge loop with ``steps`` increments and unit variance
    at time one (before ``scale``)."""
    rng = _rng(seed)
    inc = rng.standard_normal((steps, dim)) / math.sqrt(steps)
    walk = np.concatenate([np.zeros((1, dim)), np.cumsum(inc, axis=0)])
    frac = np.linspace(0.0, 1.0, steps + 1)[:, None]
    v = scale * (walk - frac * walk[-1])
    v[-1] = v[0]
    if start is not None:
        v = v + np.asarray(start, dtype=float)
    return Polyline(v)


def loop_collection(
    num_curves: int,
    alpha: float = 2.0,
    dmin: float = 0.05,
    dmax: float = 1.0,
    seed=None,
    dim: int = 2,
    steps: int = 32,
    box: float = 1.0,
) -> CurveCollection:
    """Bridge loops with truncated power-law diameters in ``[dmin, dmax]``
    and centres uniform in ``[-box, box]^dim``."""
    if num_curves < 0 or not 0 < dmin <= dmax or alpha <= 0:
        raise ValueError("invalid loop-collection parameters")
    rng = _rng(seed)
    curves = []
    for _ in range(num_curves):
        u = rng.random()
        diam = dmin * (1.0 - u * (1.0 - (dmin / dmax) ** alpha)) ** (-1.0 / alpha)
        loop = brownian_bridge_polyline(steps, dim, rng)
        v = loop.vertices - loop.vertices.mean(axis=0)
        v = v * (diam / diameter(loop))
        v = v + rng.uniform(-box, box, size=dim)
        curves.append(Polyline(v))
    return CurveCollection(tuple(curves))


def _unit(rng: np.random.Generator, dim: int) -> np.ndarray:
    g = rng.standard_normal(dim)
    return g / np.linalg.norm(g)


def _line_exits(y: np.ndarray, u: np.ndarray, center: np.ndarray, radius: float) -> tuple[float, float]:
    """Parameters where ``y + s u`` meets the sphere (``u`` a unit vector)."""
    w = y - center
    b = float(w @ u)
    c = float(w @ w) - radius * radius
    disc = b * b - c
    if disc < 0:
        raise ValueError("line misses the sphere")
    sq = math.sqrt(disc)
    return -b - sq, -b + sq


def radial_segment(center, inner: float, outer: float, direction, margin: float = 0.1) -> Polyline:
    """Segment along ``direction`` from radius ``inner * (1 - margin)`` to
    ``outer * (1 + margin)``."""
    c = np.asarray(center, dtype=float)
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    return Polyline(np.stack([c + inner * (1 - margin) * u, c + outer * (1 + margin) * u]))


def pencil_segment(center, inner: float, outer: float, through, direction, margin: float = 0.1) -> Polyline:
    """Segment through ``through`` (outside the inner ball) along ``direction``,
    starting just inside the inner sphere behind it and ending just past the
    outer sphere ahead of it."""
    c = np.asarray(center, dtype=float)
    y = np.asarray(through, dtype=float)
    u = np.asarray(direction, dtype=float)
    u = u / np.linalg.norm(u)
    far, near = _line_exits(y, u, c, inner)
    if near >= 0:
        raise ValueError("the inner ball must lie behind the pencil point")
    _, fwd = _line_exits(y, u, c, outer)
    extra = margin * (outer - inner)
    s0 = max(near - extra, 0.5 * (far + near))
    return Polyline(np.stack([y + s0 * u, y + (fwd + extra) * u]))


def _cone_direction(rng: np.random.Generator, axis: np.ndarray, half_angle: float) -> np.ndarray:
    """Uniform direction on the spherical cap of ``half_angle`` around ``axis``."""
    d = axis.size
    axis = axis / np.linalg.norm(axis)
    if d == 1:
        return axis.copy()
    cos_min = math.cos(half_angle)
    if d == 2:
        ang = rng.uniform(-half_angle, half_angle)
        perp = np.array([-axis[1], axis[0]])
        return math.cos(ang) * axis + math.sin(ang) * perp
    while True:
        v = _unit(rng, d)
        if v @ axis >= cos_min:
            return v


def _draw(spec: EnsembleSpec, rng: np.random.Generator) -> CurveCollection:
    p = spec.params
    kind = spec.kind
    if kind == "random-walk":
        n = int(p.get("num_curves", 1))
        return CurveCollection(
            tuple(
                random_walk_polyline(int(p.get("steps", 64)), int(p.get("dim", 2)), rng, p.get("start"))
                for _ in range(n)
            )
        )
    if kind == "brownian-bridge":
        n = int(p.get("num_curves", 1))
        return CurveCollection(
            tuple(
                brownian_bridge_polyline(
                    int(p.get("steps", 64)), int(p.get("dim", 2)), rng, float(p.get("scale", 1.0)), p.get("start")
                )
                for _ in range(n)
            )
        )
    if kind == "pathological":
        base = pathological_curve(int(p.get("n_t", 400)))
        bound = float(p.get("bound", 0.0))
        return CurveCollection((perturb_curve(base, bound, rng) if bound > 0 else base,))
    if kind == "loop-collection":
        return loop_collection(
            int(p.get("num_curves", 10)),
            float(p.get("alpha", 2.0)),
            float(p.get("dmin", 0.05)),
            float(p.get("dmax", 1.0)),
            rng,
            int(p.get("dim", 2)),
            int(p.get("steps", 32)),
            float(p.get("box", 1.0)),
        )
    if kind == "radial":
        c = np.asarray(p.get("center", [0.0, 0.0]), dtype=float)
        direction = p.get("direction")
        segs = []
        for _ in range(int(p.get("num_curves", 1))):
            u = _unit(rng, c.size) if direction is None else np.asarray(direction, dtype=float)
            segs.append(radial_segment(c, float(p["inner"]), float(p["outer"]), u, float(p.get("margin", 0.1))))
        return CurveCollection(tuple(segs))
    if kind == "pencil":
        c = np.asarray(p.get("center", [0.0, 0.0]), dtype=float)
        y = np.asarray(p["through"], dtype=float)
        u = _cone_direction(rng, y - c, float(p.get("half_angle", math.pi / 6)))
        return CurveCollection(
            (pencil_segment(c, float(p["inner"]), float(p["outer"]), y, u, float(p.get("margin", 0.1))),)
        )
    if kind == "fixed":
        curves = tuple(Polyline(v) for v in p["curves"])
        mult = tuple(int(m) for m in p.get("multiplicities", [1] * len(curves)))
        return CurveCollection(curves, mult)
    raise ValueError(f"unknown ensemble kind {kind!r}")


def draw(spec: EnsembleSpec, index: int = 0, seed: int | None = None) -> CurveCollection:
    """Sample ``index`` of the ensemble (``seed`` overrides ``spec.seed``)."""
    return _draw(spec, stream(spec.seed if seed is None else seed, index))
