"""Run the face-subdivision hotspot locator on the uniform radial ensemble
and on a pencil of segments through a chosen mid-sphere point."""

import argparse
import math
from dataclasses import dataclass

import numpy as np

from curvetight.diagnostics import initial_face_cover, locate_hotspot
from curvetight.ensembles import EnsembleSpec
from curvetight.geometry import Annulus, segment_sphere_hits


@dataclass
class Config:
    depth: int = 6
    samples: int = 10_000
    seed: int = 0
    threads: int = 4


def point_on_cover(ann: Annulus) -> np.ndarray:
    for f in initial_face_cover(ann)[2]:
        lo, hi = f.box()
        c = 0.5 * (lo + hi)
        for axis in set(range(ann.dim)) - {f.fixed_axis}:
            p, q = c.copy(), c.copy()
            p[axis], q[axis] = lo[axis], hi[axis]
            hits = segment_sphere_hits(p, q, ann.center, ann.mid)
            if hits:
                return p + hits[0] * (q - p)
    raise RuntimeError("no face meets the mid sphere")


def show(title, rep) -> None:
    print(title)
    for lv in rep.levels:
        print(f"  k={lv.k}  eps={lv.eps:.4g}  p_hat={lv.p_hat:.4g}  bound={2.0 ** -lv.k * rep.p0:.4g}")


def main(cfg: Config) -> None:
    ann = Annulus(np.zeros(2), 1.0, 2.0)
    spec = EnsembleSpec("radial", {"inner": 1.0, "outer": 2.0}, cfg.seed)
    show("uniform radial, d=2", locate_hotspot(spec, ann, cfg.depth, cfg.samples, threads=cfg.threads))
    y = point_on_cover(ann)
    spec = EnsembleSpec("pencil", {"inner": 1.0, "outer": 2.0, "through": y.tolist(), "half_angle": math.pi / 6}, cfg.seed)
    rep = locate_hotspot(spec, ann, cfg.depth, cfg.samples, threads=cfg.threads)
    show(f"pencil through y* = {y}", rep)
    print(f"  located y = {np.array(rep.y)}, error {np.linalg.norm(np.array(rep.y) - y):.4g}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--depth", type=int, default=Config.depth)
    ap.add_argument("--samples", type=int, default=Config.samples)
    ap.add_argument("--seed", type=int, default=Config.seed)
    ap.add_argument("--threads", type=int, default=Config.threads)
    a = ap.parse_args()
    main(Config(a.depth, a.samples, a.seed, a.threads))
