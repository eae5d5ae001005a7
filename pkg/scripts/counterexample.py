"""Perturbed copies of the |t sin(1/t)| spiral: close in d_P, yet with many
annulus crossings near the origin, so the power-law rate test fails."""

import argparse
from dataclasses import dataclass

import numpy as np

from curvetight.crossings import count_crossings
from curvetight.curve_metric import curve_distance
from curvetight.diagnostics import DegenerateFit, fit_power, rate_check, sample_counts, tails_from_counts
from curvetight.ensembles import EnsembleSpec, pathological_curve, perturb_curve, stream
from curvetight.geometry import Annulus


@dataclass
class Config:
    n: int = 1000  # perturbation bound is 1/n
    n_t: int = 400
    outer: float = 0.02
    radii: tuple[float, ...] = (0.01, 0.005, 0.0025, 0.00125)
    thresholds: tuple[int, ...] = (1, 4, 16, 32)
    samples: int = 200
    seed: int = 0


def main(cfg: Config) -> None:
    bound = 1.0 / cfg.n
    g = pathological_curve(cfg.n_t)
    h = perturb_curve(g, bound, stream(cfg.seed))
    print(f"d_P(perturbed, base) = {curve_distance(h, g, 1e-7).value:.6g}  (bound {bound:g})")
    for r in cfg.radii:
        ann = Annulus(np.zeros(2), r, cfg.outer)
        print(f"  r={r:<8g} R={cfg.outer:g}: base {count_crossings(g, ann):3d}  perturbed {count_crossings(h, ann):3d}")

    spec = EnsembleSpec("pathological", {"bound": bound, "n_t": cfg.n_t}, cfg.seed)
    per_r = []
    for r in cfg.radii:
        ann = Annulus(np.zeros(2), r, cfg.outer)
        per_r.append(tails_from_counts(sample_counts(spec, ann, cfg.samples, cfg.seed), ann, cfg.thresholds))
    for i, N in enumerate(cfg.thresholds):
        q = [t[i].p_hat for t in per_r]
        verdict = rate_check(cfg.radii, q, 2, ci_hi=[t[i].ci_hi for t in per_r])
        try:
            lam = f"{fit_power([t[i] for t in per_r]).lambda_N:.3g}"
        except DegenerateFit:
            lam = "degenerate"
        print(f"N={N:<3d} tails {q}  rate {'pass' if verdict.passed else 'fail'}  lambda_N {lam}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=Config.n)
    ap.add_argument("--samples", type=int, default=Config.samples)
    ap.add_argument("--seed", type=int, default=Config.seed)
    a = ap.parse_args()
    main(Config(n=a.n, samples=a.samples, seed=a.seed))
