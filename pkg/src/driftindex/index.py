"""The leveled drift index: online maintenance, materialization and derivation.

Raw points are clustered only at the finest granularity. Every coarser node
is derived from finest-level summaries: by CF agglomeration in independent
mode, or by reusing the aligned finest snapshot in cumulative mode. A level
that is not materialized is derived on demand when queried.
"""
from __future__ import annotations

import json
import logging
import threading
from collections import Counter
from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from .detector import Drift, ThetaEstimator, dissimilarity, judge
from .exceptions import ConfigError, DataError, QueryError
from .stream import DataPoint, GranularityChain
from .summary import (
    Clustering,
    DecayConfig,
    EpsilonConfig,
    agglomerate,
    cluster_points,
    cumulative_update,
    learn_epsilon,
    level_epsilon,
)

logger = logging.getLogger(__name__)

FORMAT_NAME = "driftindex"
FORMAT_VERSION = 1

INDEPENDENT = "independent"
CUMULATIVE = "cumulative"
MODES = (INDEPENDENT, CUMULATIVE)

FULL = "full"
BOTTOM_ONLY = "bottom"
PARTIAL = "partial"


@dataclass(frozen=True)
class IndexNode:
    g: int
    i: int
    summary: Clustering

    @property
    def closing_ord(self) -> int:
        return self.i * self.g


@dataclass(frozen=True)
class MaterializationPolicy:
    kind: str = FULL
    levels: tuple = ()
    cache_derived: bool = False

    def __post_init__(self):
        if self.kind not in (FULL, BOTTOM_ONLY, PARTIAL):
            raise ConfigError(f"unknown materialization policy {self.kind!r}")
        object.__setattr__(self, "levels", tuple(sorted(int(g) for g in self.levels)))
        if self.kind == PARTIAL and not self.levels:
            raise ConfigError("a partial policy needs an explicit level list")

    @classmethod
    def parse(cls, text: str, cache_derived: bool = False) -> "MaterializationPolicy":
        """Parse ``full``, ``bottom`` or ``partial:100,1000``."""
        kind, _, rest = text.strip().lower().partition(":")
        aliases = {"bottom_only": BOTTOM_ONLY, "bottom-only": BOTTOM_ONLY}
        kind = aliases.get(kind, kind)
        if kind == PARTIAL:
            try:
                levels = tuple(int(t) for t in rest.split(",") if t.strip())
            except ValueError as exc:
                raise ConfigError(f"bad partial level list {rest!r}") from exc
            return cls(PARTIAL, levels, cache_derived)
        if rest:
            raise ConfigError(f"policy {kind!r} takes no level list")
        return cls(kind, (), cache_derived)

    @property
    def spec(self) -> str:
        if self.kind == PARTIAL:
            return "partial:" + ",".join(map(str, self.levels))
        return self.kind

    def materialized(self, chain: GranularityChain) -> tuple:
        if self.kind == FULL:
            return chain.levels
        if self.kind == BOTTOM_ONLY:
            return (chain.finest,)
        unknown = [g for g in self.levels if g not in chain]
        if unknown:
            raise ConfigError(f"partial policy names levels outside the chain: {unknown}")
        if chain.finest not in self.levels:
            raise ConfigError(f"a partial policy must include the finest level {chain.finest}")
        return self.levels

    def to_dict(self) -> dict:
        return {"kind": self.kind, "levels": list(self.levels), "cache_derived": self.cache_derived}

    @classmethod
    def from_dict(cls, d: dict) -> "MaterializationPolicy":
        return cls(d["kind"], tuple(d.get("levels", ())), bool(d.get("cache_derived", False)))


def _clustering_to_dict(c: Clustering) -> dict:
    return {"n": c.n.tolist(), "ls": c.ls.tolist(), "ss": c.ss.tolist()}


def _clustering_from_dict(d: dict, dim: int) -> Clustering:
    return Clustering(np.array(d["n"], dtype=float), np.array(d["ls"], dtype=float),
                      np.array(d["ss"], dtype=float), dim)


class DriftIndex:
    """Multi-granularity index of interval summaries over one stream.

    Args:
        chain: granularity chain, finest level first.
        policy: which levels store their nodes.
        mode: ``"independent"`` or ``"cumulative"``.
        theta: threshold estimator template; each level gets its own copy.
        epsilon: clustering radius. When ``None`` it is learned from the first
            ``eps_config.sample_size`` points, and interval closing is
            deferred until that calibration prefix has arrived.
        eps_config: epsilon learning parameters.
        decay_config: fading rate for cumulative mode.
        dim: feature dimension; inferred from the first point if omitted.
    """

    def __init__(self, chain, policy: MaterializationPolicy | str = FULL, mode: str = INDEPENDENT,
                 theta: ThetaEstimator | None = None, epsilon: float | None = None,
                 eps_config: EpsilonConfig = EpsilonConfig(),
                 decay_config: DecayConfig = DecayConfig(), dim: int | None = None):
        self.chain = chain if isinstance(chain, GranularityChain) else GranularityChain(tuple(chain))
        self.policy = MaterializationPolicy.parse(policy) if isinstance(policy, str) else policy
        if mode not in MODES:
            raise ConfigError(f"unknown clustering mode {mode!r}")
        self.mode = mode
        self.theta = (theta or ThetaEstimator()).fresh()
        if epsilon is not None and not epsilon > 0:
            raise ConfigError(f"epsilon must be positive, got {epsilon}")
        self.epsilon = None if epsilon is None else float(epsilon)
        self.eps_config = eps_config
        self.decay_config = decay_config
        self.dim = dim

        self.materialized = self.policy.materialized(self.chain)
        self.levels: Dict[int, List[IndexNode]] = {g: [] for g in self.materialized}
        self.estimators: Dict[int, ThetaEstimator] = {g: self.theta.fresh() for g in self.materialized}
        self.online_drifts: Dict[int, List[Drift]] = {g: [] for g in self.materialized}
        self.ingested = 0
        self._buffer: List[np.ndarray] = []
        self._buffered = 0
        self._pending: List[np.ndarray] = []
        self._pending_count = 0
        self.cumulative_state: Optional[Clustering] = None
        self._cache: Dict[int, List[IndexNode]] = {}
        self._cache_lock = threading.Lock()
        self.counters: Counter = Counter()

    # ------------------------------------------------------------------ params

    @property
    def finest(self) -> int:
        return self.chain.finest

    @property
    def calibrated(self) -> bool:
        return self.epsilon is not None

    def level_epsilon(self, g: int) -> float:
        if self.epsilon is None:
            raise QueryError("epsilon has not been learned yet")
        return level_epsilon(self.epsilon, g, self.finest, self.dim)

    # ---------------------------------------------------------------- ingestion

    def _check_rows(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X.reshape(1, -1)
        if X.ndim != 2 or X.shape[1] == 0:
            raise DataError("points must form a 2-d array with at least one feature")
        if self.dim is None:
            self.dim = X.shape[1]
        elif X.shape[1] != self.dim:
            raise DataError(f"point has dimension {X.shape[1]}, stream has {self.dim}")
        if not np.isfinite(X).all():
            raise DataError("points must have finite features")
        return X

    def ingest(self, p: DataPoint) -> List[IndexNode]:
        """Ingest one point; returns every node the point closed."""
        if p.ord != self.ingested + 1:
            raise DataError(f"expected ordinal {self.ingested + 1}, got {p.ord}")
        X = self._check_rows(p.features)
        return self.ingest_many(X)

    def ingest_many(self, X) -> List[IndexNode]:
        """Ingest consecutive points given as rows; equivalent to repeated ``ingest``."""
        X = self._check_rows(X)
        if X.shape[0] == 0:
            return []
        self.ingested += X.shape[0]
        if self.epsilon is None:
            self._pending.append(X)
            self._pending_count += X.shape[0]
            if self._pending_count < self.eps_config.sample_size:
                return []
            return self._calibrate()
        return self._push(X)

    def finalize(self) -> List[IndexNode]:
        """Learn epsilon from a short stream that never filled the calibration prefix."""
        if self.epsilon is None and self._pending_count >= 2:
            return self._calibrate()
        return []

    def _calibrate(self) -> List[IndexNode]:
        pending = np.concatenate(self._pending)
        self._pending, self._pending_count = [], 0
        self.epsilon = learn_epsilon(pending, self.eps_config)
        logger.debug("learned epsilon=%g from %d points", self.epsilon,
                     min(len(pending), self.eps_config.sample_size))
        return self._push(pending)

    def _push(self, X: np.ndarray) -> List[IndexNode]:
        created: List[IndexNode] = []
        g0 = self.finest
        start = 0
        while start < X.shape[0]:
            take = min(g0 - self._buffered, X.shape[0] - start)
            self._buffer.append(X[start:start + take])
            self._buffered += take
            start += take
            if self._buffered == g0:
                batch = np.concatenate(self._buffer)
                self._buffer, self._buffered = [], 0
                created.extend(self._close_finest(batch))
        return created

    def _close_finest(self, batch: np.ndarray) -> List[IndexNode]:
        g0 = self.finest
        finest = self.levels[g0]
        i = len(finest) + 1
        if self.mode == INDEPENDENT:
            summary = cluster_points(batch, self.epsilon, self.dim)
        else:
            state = self.cumulative_state or Clustering.empty(self.dim)
            summary = cumulative_update(state, batch, self.epsilon, self.decay_config)
            self.cumulative_state = summary
        node = IndexNode(g0, i, summary)
        created = [node]
        self._append(node)
        closing = i * g0
        for g in self.materialized[1:]:
            if closing % g == 0:
                coarse = self._build_node(g, closing // g, finest)
                created.append(coarse)
                self._append(coarse)
        return created

    def _append(self, node: IndexNode) -> None:
        nodes = self.levels[node.g]
        if nodes:
            drift = judge(self.estimators[node.g], node.g, nodes[-1].i,
                          dissimilarity(nodes[-1].summary, node.summary))
            if drift is not None:
                self.online_drifts[node.g].append(drift)
        nodes.append(node)

    def _build_node(self, g: int, j: int, finest: List[IndexNode]) -> IndexNode:
        m = g // self.finest
        if self.mode == CUMULATIVE:
            self.counters[f"finest_nodes_read:{g}"] += 1
            return IndexNode(g, j, finest[j * m - 1].summary)
        children = finest[(j - 1) * m: j * m]
        self.counters[f"finest_nodes_read:{g}"] += m
        merged = Clustering(
            np.concatenate([c.summary.n for c in children]),
            np.concatenate([c.summary.ls for c in children]),
            np.concatenate([c.summary.ss for c in children]),
            self.dim,
        )
        return IndexNode(g, j, agglomerate(merged, self.level_epsilon(g)))

    # --------------------------------------------------------------- derivation

    def derive_level(self, g: int) -> List[IndexNode]:
        """Nodes at granularity ``g`` visible right now, stored or derived."""
        if g not in self.chain:
            raise QueryError(f"unknown granularity {g}")
        if g in self.levels:
            return list(self.levels[g])
        finest = list(self.levels[self.finest])
        count = len(finest) * self.finest // g
        if self.policy.cache_derived:
            with self._cache_lock:
                cached = self._cache.setdefault(g, [])
                for j in range(len(cached) + 1, count + 1):
                    cached.append(self._build_node(g, j, finest))
                return list(cached[:count])
        return [self._build_node(g, j, finest) for j in range(1, count + 1)]

    def storage_report(self) -> dict:
        levels = []
        for g in self.chain:
            nodes = self.levels.get(g) or self._cache.get(g) or []
            cfs = sum(len(nd.summary) for nd in nodes)
            levels.append({
                "g": g,
                "materialized": g in self.levels,
                "cached": g in self._cache,
                "nodes": len(nodes),
                "cfs": cfs,
                "floats": cfs * (1 + 2 * (self.dim or 0)),
            })
        return {
            "levels": levels,
            "total_nodes": sum(lv["nodes"] for lv in levels),
            "total_cfs": sum(lv["cfs"] for lv in levels),
        }

    def metadata(self) -> dict:
        eps_levels = {}
        if self.epsilon is not None and self.dim:
            eps_levels = {str(g): self.level_epsilon(g) for g in self.chain}
        return {
            "chain": list(self.chain.levels),
            "mode": self.mode,
            "policy": self.policy.spec,
            "ingested": self.ingested,
            "dim": self.dim,
            "epsilon": self.epsilon,
            "level_epsilon": eps_levels,
            "epsilon_rule": f"alpha*mean_pairwise_distance(alpha={self.eps_config.alpha:g}, "
                            f"sample_size={self.eps_config.sample_size})",
            "clustering": "sequential_leader" if self.mode == INDEPENDENT
                          else f"sequential_leader+exponential_decay(lambda={self.decay_config.lam:g})",
            "theta": self.theta.spec,
            "theta_window": self.theta.window,
        }

    # ------------------------------------------------------------- persistence

    def to_dict(self) -> dict:
        buffered = (np.concatenate(self._buffer) if self._buffer else np.zeros((0, self.dim or 0)))
        pending = (np.concatenate(self._pending) if self._pending else np.zeros((0, self.dim or 0)))
        return {
            "format": FORMAT_NAME,
            "version": FORMAT_VERSION,
            "chain": list(self.chain.levels),
            "policy": self.policy.to_dict(),
            "mode": self.mode,
            "dim": self.dim,
            "epsilon": self.epsilon,
            "level_epsilon": self.metadata()["level_epsilon"],
            "eps_config": {"alpha": self.eps_config.alpha, "sample_size": self.eps_config.sample_size},
            "decay": self.decay_config.lam,
            "theta": self.theta.to_dict(),
            "ingested": self.ingested,
            "buffer": buffered.tolist(),
            "pending": pending.tolist(),
            "cumulative_state": (None if self.cumulative_state is None
                                 else _clustering_to_dict(self.cumulative_state)),
            "levels": {str(g): [dict(i=nd.i, **_clustering_to_dict(nd.summary)) for nd in nodes]
                       for g, nodes in self.levels.items()},
            "estimators": {str(g): est.to_dict() for g, est in self.estimators.items()},
            "drifts": {str(g): [x.to_dict() for x in ds] for g, ds in self.online_drifts.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DriftIndex":
        if d.get("format") != FORMAT_NAME:
            raise DataError("not a drift index file")
        if d.get("version") != FORMAT_VERSION:
            raise DataError(f"unsupported index format version {d.get('version')}")
        eps = d["eps_config"]
        idx = cls(
            GranularityChain(tuple(d["chain"])),
            MaterializationPolicy.from_dict(d["policy"]),
            d["mode"],
            ThetaEstimator.from_dict(d["theta"]),
            d["epsilon"],
            EpsilonConfig(eps["alpha"], eps["sample_size"]),
            DecayConfig(d["decay"]),
            d["dim"],
        )
        dim = idx.dim or 0
        idx.ingested = int(d["ingested"])
        buffered = np.array(d["buffer"], dtype=float).reshape(-1, dim)
        if buffered.shape[0]:
            idx._buffer, idx._buffered = [buffered], buffered.shape[0]
        pending = np.array(d["pending"], dtype=float).reshape(-1, dim)
        if pending.shape[0]:
            idx._pending, idx._pending_count = [pending], pending.shape[0]
        if d["cumulative_state"] is not None:
            idx.cumulative_state = _clustering_from_dict(d["cumulative_state"], dim)
        for g_text, nodes in d["levels"].items():
            g = int(g_text)
            idx.levels[g] = [IndexNode(g, int(nd["i"]), _clustering_from_dict(nd, dim)) for nd in nodes]
        for g_text, est in d["estimators"].items():
            idx.estimators[int(g_text)] = ThetaEstimator.from_dict(est)
        for g_text, drifts in d["drifts"].items():
            idx.online_drifts[int(g_text)] = [Drift.from_dict(x) for x in drifts]
        return idx

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, separators=(",", ":"))

    @classmethod
    def load(cls, path) -> "DriftIndex":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read index file {path}: {exc}") from exc
        return cls.from_dict(data)

    def __repr__(self) -> str:
        return (f"DriftIndex(chain={self.chain.levels}, mode={self.mode!r}, "
                f"policy={self.policy.spec!r}, ingested={self.ingested})")
