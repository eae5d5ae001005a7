"""Stabilization of the nearest net point under the consistent coupling, for
a converging and an oscillating sequence of two-point laws."""

import argparse
from dataclasses import dataclass

from curvetight.coupling import build_coding, convergence_diagnostic, converging_sequence, oscillating_sequence
from curvetight.nets import grid_net


@dataclass
class Config:
    horizons: tuple[int, ...] = (16, 64, 256)
    depth: int = 2
    draws: int = 20_000
    seed: int = 0


def main(cfg: Config) -> None:
    nets = [grid_net([-0.5, -0.5], [1.5, 0.5], 2.0**-k) for k in range(1, cfg.depth + 1)]
    for name, seq in (("converging", converging_sequence), ("oscillating", oscillating_sequence)):
        for J in cfg.horizons:
            ms = seq(J)
            _, coding = build_coding(ms, nets)
            rep = convergence_diagnostic(coding, ms, nets, cfg.draws, J, cfg.seed)
            print(f"{name:<12s} J={J:<4d} fractions {rep.fractions}  flagged levels {rep.flagged}")


if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--draws", type=int, default=Config.draws)
    ap.add_argument("--seed", type=int, default=Config.seed)
    a = ap.parse_args()
    main(Config(draws=a.draws, seed=a.seed))
