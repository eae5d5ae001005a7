"""Measured skeleton error against the 11/k bound for random-walk curves."""

import argparse
from dataclasses import dataclass

import numpy as np

from curvetight.curve_metric import curve_distance
from curvetight.ensembles import random_walk_polyline, stream
from curvetight.nets import SKELETON_BOUND, net_for_curves, skeletonize


@dataclass
class Config:
    curves: int = 50
    steps: int = 64
    ks: tuple[int, ...] = (2, 4, 8, 16, 32)
    seed: int = 0


def main(cfg: Config) -> None:
    curves = [random_walk_polyline(cfg.steps, 2, stream(cfg.seed, i)) for i in range(cfg.curves)]
    print("k    bound     worst     mean      max anchors")
    for k in cfg.ks:
        dist, anchors = [], []
        for c in curves:
            sk, tilde = skeletonize(c, net_for_curves([c], k), k)
            dist.append(curve_distance(c, tilde, 1e-9).value)
            anchors.append(sk.m)
        print(f"{k:<4d} {SKELETON_BOUND / k:<9.4g} {max(dist):<9.4g} {np.mean(dist):<9.4g} {max(anchors)}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--curves", type=int, default=Config.curves)
    ap.add_argument("--seed", type=int, default=Config.seed)
    a = ap.parse_args()
    main(Config(curves=a.curves, seed=a.seed))
