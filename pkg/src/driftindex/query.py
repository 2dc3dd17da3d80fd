"""Unary, refinement and synthesis drift queries.

Refinement pairs each drift at a coarse source level with the drifts at the
finest level (down to the target) whose interval lies inside the source's
two-interval window. Synthesis pairs each drift at a fine source level with
the drifts at the coarsest level (up to the target) whose window contains the
source interval. ``reference_eval`` evaluates the same set expressions by
exhaustive enumeration and serves as the oracle for the traversal code.
"""
from __future__ import annotations

import bisect
import json
from dataclasses import dataclass, field
from typing import Dict, List, Mapping, Optional, Tuple

from .detector import Drift, DriftSet, detect_drifts
from .exceptions import QueryError
from .stream import OrdinalRange, contains, interval_bounds, window

UQ, RQ, SQ = "UQ", "RQ", "SQ"
WARMUP_PAIRS = 2


@dataclass
class QueryResult:
    kind: str
    g_s: int
    g_t: Optional[int] = None
    pairs: List[Tuple[Drift, Drift]] = field(default_factory=list)
    unmatched: List[Drift] = field(default_factory=list)
    drifts: Optional[DriftSet] = None
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        if self.kind == UQ:
            return {
                "kind": UQ,
                "g": self.g_s,
                "drifts": [x.to_dict() for x in self.drifts],
                "metadata": self.metadata,
            }
        return {
            "kind": self.kind,
            "g_s": self.g_s,
            "g_t": self.g_t,
            "pairs": [{"source": s.to_dict(), "match": m.to_dict()} for s, m in self.pairs],
            "unmatched": [s.to_dict() for s in self.unmatched],
            "metadata": self.metadata,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)

    def answer(self) -> dict:
        """The formal answer without diagnostics or metadata."""
        d = self.to_dict()
        d.pop("metadata")
        return d


def _level_drifts(index, g: int):
    if g not in index.chain:
        raise QueryError(f"unknown granularity {g}")
    if g in index.levels:
        n_nodes = len(index.levels[g])
        drifts = DriftSet(g, list(index.online_drifts[g]))
        theta = index.estimators[g].theta
    else:
        nodes = index.derive_level(g)
        n_nodes = len(nodes)
        est = index.theta.fresh()
        drifts = detect_drifts(nodes, est, g)
        theta = est.theta
    meta = {
        "nodes": n_nodes,
        "pairs_scored": max(n_nodes - 1, 0),
        "warmup_pairs": min(WARMUP_PAIRS, max(n_nodes - 1, 0)),
        "theta": theta,
        "materialized": g in index.levels,
    }
    return drifts, meta


def uq(index, g: int) -> DriftSet:
    """All drifts detected at granularity ``g``."""
    return _level_drifts(index, g)[0]


def uq_result(index, g: int) -> QueryResult:
    drifts, meta = _level_drifts(index, g)
    return QueryResult(UQ, g, drifts=drifts, metadata={"levels": {str(g): meta}})


def _check_levels(chain, g_s: int, g_t: int, refinement: bool):
    for g in (g_s, g_t):
        if g not in chain:
            raise QueryError(f"unknown granularity {g}")
    if refinement and not g_t < g_s:
        raise QueryError("invalid refinement direction")
    if not refinement and not g_s < g_t:
        raise QueryError("invalid synthesis direction")


def _index_range(indices: List[int], lo: int, hi: int) -> List[int]:
    a = bisect.bisect_left(indices, lo)
    b = bisect.bisect_right(indices, hi)
    return list(range(a, b))


def _ceil_div(a: int, b: int) -> int:
    return -(-a // b)


def refine(sets: Mapping[int, DriftSet], g_s: int, g_t: int, strict: bool = False):
    """Refinement over precomputed drift sets; returns ``(pairs, unmatched)``."""
    levels = sorted(g for g in sets if g_t <= g < g_s)
    pairs, unmatched = [], []
    by_level = {g: (sets[g].indices, sets[g].drifts) for g in levels}
    for src in sets[g_s]:
        lo, hi = window(g_s, src.i)
        hits: List[Drift] = []
        for g in levels:
            indices, drifts = by_level[g]
            # I_j inside [lo, hi]  <=>  (j-1)g+1 >= lo and j*g <= hi
            j_lo = _ceil_div(lo - 1, g) + 1
            j_hi = hi // g - (1 if strict else 0)
            hits = [drifts[p] for p in _index_range(indices, j_lo, j_hi)]
            if hits:
                break
        if hits:
            pairs.extend((src, m) for m in hits)
        else:
            unmatched.append(src)
    return pairs, unmatched


def synthesize(sets: Mapping[int, DriftSet], g_s: int, g_t: int, strict: bool = False):
    """Synthesis over precomputed drift sets; returns ``(pairs, unmatched)``."""
    levels = sorted((g for g in sets if g_s < g <= g_t), reverse=True)
    pairs, unmatched = [], []
    by_level = {g: (sets[g].indices, sets[g].drifts) for g in levels}
    for src in sets[g_s]:
        a, b = window(g_s, src.i) if strict else interval_bounds(g_s, src.i)
        hits: List[Drift] = []
        for g in levels:
            indices, drifts = by_level[g]
            # [a, b] inside [(j-1)g+1, (j+1)g]  <=>  ceil(b/g)-1 <= j <= (a-1)//g + 1
            j_lo = max(_ceil_div(b, g) - 1, 1)
            j_hi = (a - 1) // g + 1
            hits = [drifts[p] for p in _index_range(indices, j_lo, j_hi)]
            if hits:
                break
        if hits:
            pairs.extend((src, m) for m in hits)
        else:
            unmatched.append(src)
    return pairs, unmatched


def _pair_query(index, kind: str, g_s: int, g_t: int, strict: bool) -> QueryResult:
    refinement = kind == RQ
    _check_levels(index.chain, g_s, g_t, refinement)
    lo, hi = (g_t, g_s) if refinement else (g_s, g_t)
    sets, meta = {}, {}
    for g in index.chain.between(lo, hi):
        sets[g], meta[str(g)] = _level_drifts(index, g)
    run = refine if refinement else synthesize
    pairs, unmatched = run(sets, g_s, g_t, strict)
    return QueryResult(kind, g_s, g_t, pairs, unmatched,
                       metadata={"strict": strict, "levels": meta})


def rq(index, g_s: int, g_t: int, strict: bool = False) -> QueryResult:
    return _pair_query(index, RQ, g_s, g_t, strict)


def sq(index, g_s: int, g_t: int, strict: bool = False) -> QueryResult:
    return _pair_query(index, SQ, g_s, g_t, strict)


def reference_eval(sets: Mapping[int, DriftSet], kind: str, g_s: int, g_t: Optional[int] = None,
                   strict: bool = False) -> QueryResult:
    """Evaluate a query by literal enumeration over the drift sets.

    No index arithmetic or early exits: every candidate drift at every level
    is tested for containment, and minimality (RQ) or maximality (SQ) is
    checked against every drift at every competing level.
    """
    levels = sorted(sets)
    if g_s not in sets:
        raise QueryError(f"unknown granularity {g_s}")
    if kind == UQ:
        return QueryResult(UQ, g_s, drifts=sets[g_s])
    if g_t not in sets:
        raise QueryError(f"unknown granularity {g_t}")

    if kind == RQ:
        if not g_t < g_s:
            raise QueryError("invalid refinement direction")
        candidates = [g for g in levels if g_t <= g < g_s]

        def inside(src: Drift, g: int, j: int) -> bool:
            outer = window(g_s, src.i)
            inner = window(g, j) if strict else interval_bounds(g, j)
            return contains(outer, inner)

        def competitors(g: int):
            return [g2 for g2 in candidates if g2 < g]
    elif kind == SQ:
        if not g_s < g_t:
            raise QueryError("invalid synthesis direction")
        candidates = [g for g in levels if g_s < g <= g_t]

        def inside(src: Drift, g: int, j: int) -> bool:
            inner = window(g_s, src.i) if strict else interval_bounds(g_s, src.i)
            return contains(window(g, j), inner)

        def competitors(g: int):
            return [g2 for g2 in candidates if g2 > g]
    else:
        raise QueryError(f"unknown query kind {kind!r}")

    pairs, unmatched = [], []
    for src in sets[g_s]:
        found = []
        for g in candidates:
            for x in sets[g]:
                if not inside(src, g, x.i):
                    continue
                blocked = any(inside(src, g2, y.i) for g2 in competitors(g) for y in sets[g2])
                if not blocked:
                    found.append(x)
        if found:
            pairs.extend((src, m) for m in sorted(found, key=lambda d: (d.g, d.i)))
        else:
            unmatched.append(src)
    return QueryResult(kind, g_s, g_t, pairs, unmatched, metadata={"strict": strict})
