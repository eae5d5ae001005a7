"""Consistent coupling of a sequence of finite-support measures.

Each net ``F^k`` splits space into nearest-point cells; intersecting the cells
of ``F^1 .. F^k`` gives the level-``k`` partition, labelled by the tuple of
nearest-point indices. Cells are ordered lexicographically by label, so the
children of a cell are contiguous and their coding intervals tile the
parent's interval. One uniform ``xi`` then drives every measure at once:
measure ``j`` picks the cell whose interval contains ``xi`` and samples from
its conditional law inside that cell.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .nets import Net


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    atoms: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        a = np.atleast_2d(np.asarray(self.atoms, dtype=float))
        p = np.asarray(self.probs, dtype=float)
        if a.shape[0] != p.size or p.size == 0:
            raise ValueError("need one probability per atom and at least one atom")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities must be non-negative and sum to 1 (sum={p.sum()!r})")
        if np.unique(a, axis=0).shape[0] != a.shape[0]:
            raise ValueError("atoms must be distinct")
        a.setflags(write=False)
        p.setflags(write=False)
        object.__setattr__(self, "atoms", a)
        object.__setattr__(self, "probs", p)

    @classmethod
    def point_mass(cls, x) -> "DiscreteMeasure":
        return cls(np.atleast_2d(x), np.ones(1))


def argmin_cell(x, net: Net) -> int:
    """Least net index among the points nearest to ``x``."""
    return net.nearest(x)[0]


@dataclass(frozen=True, eq=False)
class CellPartition:
    level: int
    labels: tuple[tuple[int, ...], ...]  # lexicographic order
    members: tuple[tuple[tuple[int, int], ...], ...]  # (measure index, atom index) per cell


@dataclass(frozen=True, eq=False)
class IntervalCoding:
    """Interval ``[lo, hi)`` of every cell, for every measure and level.

    ``bounds[j]`` holds the cumulative masses of measure ``j`` over the
    finest cells; coarser intervals are read off at the first and last
    child, which makes parent/child tiling exact in floating point.
    """

    levels: tuple[CellPartition, ...]
    finest_labels: tuple[tuple[int, ...], ...]
    bounds: np.ndarray  # (n_measures, n_finest + 1)
    atom_labels: tuple[np.ndarray, ...]  # per measure: (n_atoms, K) net indices
    atom_cell: tuple[np.ndarray, ...]  # per measure: finest cell index of each atom
    spans: tuple[dict[tuple[int, ...], tuple[int, int]], ...]  # per level: label -> finest [first, last+1)

    @property
    def depth(self) -> int:
        return len(self.levels)

    def level_for(self, j: int) -> int:
        """Coding level used by measure ``j`` (0-based): ``min(j + 1, K)``."""
        return min(j + 1, self.depth)

    def interval(self, j: int, label: tuple[int, ...]) -> tuple[float, float]:
        lo, hi = self.spans[len(label) - 1][tuple(label)]
        return float(self.bounds[j, lo]), float(self.bounds[j, hi])

    def cell_edges(self, j: int, level: int) -> np.ndarray:
        """Right endpoints of the level cells for measure ``j``, in cell order."""
        part = self.levels[level - 1]
        sp = self.spans[level - 1]
        return np.array([self.bounds[j, sp[lab][1]] for lab in part.labels])


def build_coding(measures: Sequence[DiscreteMeasure], nets: Sequence[Net]) -> tuple[list[CellPartition], IntervalCoding]:
    """Cell partitions for levels ``1..K`` and the interval coding of every measure."""
    if not nets:
        raise ValueError("need at least one net")
    K = len(nets)
    atom_labels = []
    for mu in measures:
        lab = np.empty((mu.atoms.shape[0], K), dtype=np.int64)
        for a, x in enumerate(mu.atoms):
            for k, net in enumerate(nets):
                lab[a, k] = argmin_cell(x, net)
        atom_labels.append(lab)

    finest = sorted({tuple(row) for lab in atom_labels for row in lab.tolist()})
    index = {lab: i for i, lab in enumerate(finest)}
    atom_cell = tuple(np.array([index[tuple(row)] for row in lab.tolist()], dtype=np.int64) for lab in atom_labels)

    mass = np.zeros((len(measures), len(finest)))
    for j, mu in enumerate(measures):
        np.add.at(mass[j], atom_cell[j], mu.probs)
    bounds = np.concatenate([np.zeros((len(measures), 1)), np.cumsum(mass, axis=1)], axis=1)
    # pin the running total to 1 so every xi in [0, 1) lands in a massive cell
    bounds[bounds == bounds[:, -1:]] = 1.0

    levels, spans = [], []
    for k in range(1, K + 1):
        span: dict[tuple[int, ...], list[int]] = {}
        for i, lab in enumerate(finest):
            s = span.setdefault(lab[:k], [i, i + 1])
            s[1] = i + 1
        labels = tuple(span)
        members = []
        for lab in labels:
            first, last = span[lab]
            members.append(
                tuple(
                    (j, a)
                    for j in range(len(measures))
                    for a in np.nonzero((atom_cell[j] >= first) & (atom_cell[j] < last))[0].tolist()
                )
            )
        levels.append(CellPartition(k, labels, tuple(members)))
        spans.append({lab: (s[0], s[1]) for lab, s in span.items()})

    coding = IntervalCoding(
        tuple(levels), tuple(finest), bounds, tuple(atom_labels), atom_cell, tuple(spans)
    )
    return levels, coding


def _locate(coding: IntervalCoding, j: int, xi: np.ndarray) -> tuple[int, np.ndarray]:
    """Level-cell index of measure ``j`` for each ``xi`` (half-open intervals,
    so zero-mass cells are skipped to the right)."""
    level = coding.level_for(j)
    edges = coding.cell_edges(j, level)
    idx = np.searchsorted(edges, xi, side="right")
    return level, np.minimum(idx, edges.size - 1)


def sample_coupled_many(
    coding: IntervalCoding, measures: Sequence[DiscreteMeasure], j: int, xi, u
) -> np.ndarray:
    """Atom indices of measure ``j`` for arrays of ``xi`` and auxiliary
    uniforms ``u`` (the latter drive sampling inside the chosen cell)."""
    xi = np.asarray(xi, dtype=float)
    u = np.asarray(u, dtype=float)
    level, cell = _locate(coding, j, xi)
    part = coding.levels[level - 1]
    sp = coding.spans[level - 1]
    probs = measures[j].probs
    out = np.empty(xi.shape, dtype=np.int64)
    for c in np.unique(cell):
        first, last = sp[part.labels[c]]
        atoms = np.nonzero((coding.atom_cell[j] >= first) & (coding.atom_cell[j] < last))[0]
        w = probs[atoms]
        cdf = np.cumsum(w) / w.sum()
        sel = cell == c
        pick = np.searchsorted(cdf, u[sel], side="right")
        out[sel] = atoms[np.minimum(pick, atoms.size - 1)]
    return out


def sample_coupled(
    coding: IntervalCoding,
    measures: Sequence[DiscreteMeasure],
    xi: float,
    j: int,
    rng: np.random.Generator | int | None = None,
) -> np.ndarray:
    """One draw of the coupled variable for measure ``j`` given ``xi``."""
    if not 0.0 <= xi < 1.0:
        raise ValueError("xi must lie in [0, 1)")
    rng = np.random.default_rng(rng)
    a = sample_coupled_many(coding, measures, j, np.array([xi]), rng.random(1))[0]
    return measures[j].atoms[a]


def coupled_marginal(coding: IntervalCoding, measures: Sequence[DiscreteMeasure], j: int) -> np.ndarray:
    """Law of the coupled draw for measure ``j`` when ``xi`` is uniform,
    integrated exactly over the coding intervals."""
    level = coding.level_for(j)
    part = coding.levels[level - 1]
    sp = coding.spans[level - 1]
    probs = measures[j].probs
    law = np.zeros(probs.size)
    for lab in part.labels:
        first, last = sp[lab]
        width = coding.bounds[j, last] - coding.bounds[j, first]
        atoms = np.nonzero((coding.atom_cell[j] >= first) & (coding.atom_cell[j] < last))[0]
        w = probs[atoms]
        if w.sum() > 0:
            law[atoms] += width * w / w.sum()
    return law


@dataclass(frozen=True)
class StabilizationReport:
    horizon: int
    draws: int
    fractions: tuple[float, ...]  # per level k = 1..K
    threshold: float

    @property
    def flagged(self) -> tuple[int, ...]:
        """Levels whose stabilization fraction is below the threshold."""
        return tuple(k + 1 for k, f in enumerate(self.fractions) if f < self.threshold)


def convergence_diagnostic(
    coding: IntervalCoding,
    measures: Sequence[DiscreteMeasure],
    nets: Sequence[Net],
    draws: int,
    horizon: int | None = None,
    seed: int = 0,
    threshold: float = 0.99,
) -> StabilizationReport:
    """Fraction of ``xi``-draws for which the nearest net point of the
    coupled variable stops changing on the tail ``j >= J/2``, per level."""
    J = len(measures) if horizon is None else int(horizon)
    if J > len(measures):
        raise ValueError(f"horizon {J} exceeds the {len(measures)} supplied measures")
    rng = np.random.Generator(np.random.Philox(seed))
    xi = rng.random(draws)
    u = rng.random((J, draws))
    tail_start = J // 2
    K = len(nets)
    first = np.full((K, draws), -1, dtype=np.int64)
    stable = np.ones((K, draws), dtype=bool)
    for j in range(tail_start, J):
        atoms = sample_coupled_many(coding, measures, j, xi, u[j])
        for k in range(K):
            y = np.array([argmin_cell(x, nets[k]) for x in measures[j].atoms])[atoms]
            if j == tail_start:
                first[k] = y
            else:
                stable[k] &= y == first[k]
    fractions = tuple(float(s.mean()) for s in stable)
    return StabilizationReport(J, draws, fractions, threshold)


def two_point_sequence(horizon: int, prob, a=(0.0, 0.0), b=(1.0, 0.0)) -> list[DiscreteMeasure]:
    """Measures on two atoms with mass ``prob(j)`` on ``a`` for ``j = 1..horizon``."""
    out = []
    for j in range(1, horizon + 1):
        p = float(prob(j))
        out.append(DiscreteMeasure(np.array([a, b]), np.array([p, 1.0 - p])))
    return out


def converging_sequence(horizon: int) -> list[DiscreteMeasure]:
    return two_point_sequence(horizon, lambda j: 0.5 - 0.5 / (j + 1))


def oscillating_sequence(horizon: int) -> list[DiscreteMeasure]:
    return two_point_sequence(horizon, lambda j: 0.5 + 0.25 * (-1) ** j)
