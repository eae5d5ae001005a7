"""Finite curve multisets and the bottleneck partial-matching distance
between them. An unmatched curve costs its diameter."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from .curve_metric import EXACT_SEARCH, MetricResult, curve_distance
from .geometry import Polyline, diameter

BRUTE_FORCE_LIMIT = 10


class TrivialCurveError(ValueError):
    """A point-like curve was offered to a collection."""


@dataclass(frozen=True)
class CurveCollection:
    """A finite multiset of non-trivial polylines."""

    curves: tuple[Polyline, ...] = ()
    multiplicities: tuple[int, ...] = ()
    ids: tuple[str, ...] = ()

    def __post_init__(self):
        curves = tuple(self.curves)
        mult = tuple(int(m) for m in self.multiplicities) or (1,) * len(curves)
        ids = tuple(str(i) for i in self.ids) or tuple(f"c{i}" for i in range(len(curves)))
        if not (len(curves) == len(mult) == len(ids)):
            raise ValueError("curves, multiplicities and ids must have equal length")
        if any(m < 1 for m in mult):
            raise ValueError("multiplicities must be positive")
        dims = {c.dim for c in curves}
        if len(dims) > 1:
            raise ValueError(f"curves of mixed dimension {sorted(dims)}")
        for cid, c in zip(ids, curves):
            # duplicate vertices are collapsed, so zero diameter means one vertex
            if c.is_trivial:
                raise TrivialCurveError(f"trivial path: curve {cid!r} has zero diameter")
        object.__setattr__(self, "curves", curves)
        object.__setattr__(self, "multiplicities", mult)
        object.__setattr__(self, "ids", ids)

    @classmethod
    def of(cls, curves: Iterable[Polyline | np.ndarray]) -> "CurveCollection":
        return cls(tuple(c if isinstance(c, Polyline) else Polyline(c) for c in curves))

    @property
    def dim(self) -> int | None:
        return self.curves[0].dim if self.curves else None

    @cached_property
    def diameters(self) -> tuple[float, ...]:
        return tuple(diameter(c) for c in self.curves)

    def __len__(self) -> int:
        return sum(self.multiplicities)

    def expanded(self) -> tuple[list[Polyline], list[float]]:
        """Curves and diameters with multiplicities unrolled."""
        cs, ds = [], []
        for c, m, d in zip(self.curves, self.multiplicities, self.diameters):
            cs += [c] * m
            ds += [d] * m
        return cs, ds

    def __eq__(self, other):
        if not isinstance(other, CurveCollection):
            return NotImplemented
        return self.curves == other.curves and self.multiplicities == other.multiplicities


def filter_macroscopic(coll: CurveCollection, delta: float) -> CurveCollection:
    """Sub-multiset of curves whose diameter strictly exceeds ``delta``."""
    if delta < 0:
        raise ValueError("delta must be non-negative")
    keep = [i for i, d in enumerate(coll.diameters) if d > delta]
    return CurveCollection(
        tuple(coll.curves[i] for i in keep),
        tuple(coll.multiplicities[i] for i in keep),
        tuple(coll.ids[i] for i in keep),
    )


def _pair_matrix(ca: list[Polyline], cb: list[Polyline], tol: float) -> np.ndarray:
    D = np.zeros((len(ca), len(cb)))
    cache: dict[tuple[int, int], float] = {}
    for i, a in enumerate(ca):
        for j, b in enumerate(cb):
            key = (id(a), id(b))
            if key not in cache:
                cache[key] = curve_distance(a, b, tol).value
            D[i, j] = cache[key]
    return D


def _covers(adj: np.ndarray, rows: np.ndarray) -> bool:
    """Whether a matching of ``adj`` saturates every row in ``rows``."""
    sub = adj[rows]
    if sub.shape[0] == 0:
        return True
    if sub.shape[1] == 0:
        return False
    match = maximum_bipartite_matching(csr_matrix(sub.astype(np.int8)), perm_type="column")
    return bool(np.all(match >= 0))


def _feasible(D: np.ndarray, da: np.ndarray, db: np.ndarray, t: float) -> bool:
    # A matching covering both mandatory sets exists iff each mandatory set
    # can be covered on its own (Mendelsohn-Dulmage).
    adj = D <= t
    return _covers(adj, np.nonzero(da > t)[0]) and _covers(adj.T, np.nonzero(db > t)[0])


def collection_distance(a: CurveCollection, b: CurveCollection, tol: float = 1e-9) -> MetricResult:
    """Bottleneck partial-matching distance between two curve multisets."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    if a.dim is not None and b.dim is not None and a.dim != b.dim:
        raise ValueError(f"dimension mismatch: {a.dim}-d vs {b.dim}-d")
    ca, da = a.expanded()
    cb, db = b.expanded()
    da, db = np.asarray(da), np.asarray(db)
    D = _pair_matrix(ca, cb, tol / 4)
    cand = np.unique(np.concatenate([[0.0], D.ravel(), da, db]))
    lo, hi = 0, cand.size - 1  # the largest candidate is always feasible
    while lo < hi:
        mid = (lo + hi) // 2
        if _feasible(D, da, db, cand[mid]):
            hi = mid
        else:
            lo = mid + 1
    return MetricResult(float(cand[lo]), tol, EXACT_SEARCH)


def brute_force_collection_distance(a: CurveCollection, b: CurveCollection, tol: float = 1e-9) -> float:
    """Exact minimum over every partial matching (small inputs only)."""
    ca, da = a.expanded()
    cb, db = b.expanded()
    if len(ca) + len(cb) > BRUTE_FORCE_LIMIT:
        raise ValueError(f"input too large: {len(ca) + len(cb)} curves > {BRUTE_FORCE_LIMIT}")
    D = _pair_matrix(ca, cb, tol / 4)
    best = np.inf

    def walk(i: int, used: frozenset, cost: float):
        nonlocal best
        if cost >= best:
            return
        if i == len(ca):
            rest = [db[j] for j in range(len(cb)) if j not in used]
            best = min(best, max([cost] + rest))
            return
        walk(i + 1, used, max(cost, da[i]))
        for j in range(len(cb)):
            if j not in used:
                walk(i + 1, used | {j}, max(cost, D[i, j]))

    walk(0, frozenset(), 0.0)
    return float(best)
