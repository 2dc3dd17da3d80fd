"""Precision/recall scoring against ground truth and the benchmark grid runner."""
from __future__ import annotations

import itertools
import json
import logging
import time
from dataclasses import dataclass, field
from typing import Iterable, List, Optional

import numpy as np

from ..detector import ThetaEstimator
from ..exceptions import ConfigError, DataError, DriftIndexError
from ..index import DriftIndex, MaterializationPolicy
from ..query import rq, sq, uq
from ..stream import GranularityChain
from ..summary import DecayConfig, EpsilonConfig
from .csvio import load_csv, parse_columns
from .synthetic import SyntheticConfig, generate

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class GroundTruth:
    drifts: tuple = ()

    def __post_init__(self):
        drifts = tuple(int(t) for t in self.drifts)
        if any(b <= a for a, b in zip(drifts, drifts[1:])):
            raise DataError("ground-truth drift ordinals must be sorted and unique")
        object.__setattr__(self, "drifts", drifts)

    def __len__(self) -> int:
        return len(self.drifts)

    def to_dict(self) -> dict:
        return {"drifts": list(self.drifts)}

    @classmethod
    def load(cls, path) -> "GroundTruth":
        try:
            with open(path, encoding="utf-8") as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read ground truth {path}: {exc}") from exc
        return cls(tuple(data["drifts"] if isinstance(data, dict) else data))


def _ratio(num: int, den: int) -> float:
    return 1.0 if den == 0 else num / den


def score_detection(detected, truth, tau: int) -> dict:
    """Greedy one-to-one matching of detected boundaries to true drift ordinals.

    Detections are taken in boundary order; each claims the nearest unclaimed
    truth within ``tau`` ordinals (the earlier truth on a distance tie).
    Precision and recall follow the 0/0 -> 1.0 convention.
    """
    if tau < 0:
        raise ConfigError("tolerance must be non-negative")
    boundaries = sorted(getattr(x, "boundary_ord", x) for x in detected)
    truths = list(getattr(truth, "drifts", truth))
    claimed = [False] * len(truths)
    tp = 0
    for b in boundaries:
        best = None
        for k, t in enumerate(truths):
            if claimed[k] or abs(b - t) > tau:
                continue
            if best is None or abs(b - t) < abs(b - truths[best]):
                best = k
        if best is not None:
            claimed[best] = True
            tp += 1
    fp = len(boundaries) - tp
    fn = len(truths) - tp
    precision = _ratio(tp, tp + fp)
    recall = _ratio(tp, tp + fn)
    f1 = 0.0 if precision + recall == 0 else 2 * precision * recall / (precision + recall)
    return {"tau": tau, "tp": tp, "fp": fp, "fn": fn,
            "precision": precision, "recall": recall, "f1": f1}


def _load_dataset(ds: dict):
    if "csv" in ds:
        X = load_csv(ds["csv"], parse_columns(ds.get("columns")),
                     bool(ds.get("skip_header", False)), bool(ds.get("drop_non_numeric", False)))
        truth = GroundTruth.load(ds["truth"]) if ds.get("truth") else None
        return X, truth
    cfg = SyntheticConfig(
        dim=int(ds.get("dim", 5)),
        n_points=int(ds.get("points", 0)),
        drift_at=tuple(ds.get("drift_at", ())),
        period=ds.get("period"),
        schedule=tuple(tuple(s) for s in ds.get("schedule", ())),
        magnitude=float(ds.get("magnitude", 5.0)),
        n_components=int(ds.get("components", 3)),
        seed=int(ds.get("seed", 0)),
    )
    return generate(cfg)


def run_cell(X: np.ndarray, truth: Optional[GroundTruth], chain, mode: str, policy: str,
             theta: str, queries: Iterable[dict] = (), tau: Optional[int] = None,
             theta_window: int = 20, theta_adaptive: bool = True, alpha: float = 0.5, sample_size: int = 200,
             decay: float = 1.0) -> dict:
    """Run one benchmark cell end to end and return its report."""
    chain = chain if isinstance(chain, GranularityChain) else GranularityChain(tuple(chain))
    index = DriftIndex(chain, MaterializationPolicy.parse(policy), mode,
                       ThetaEstimator.parse(theta, window=theta_window, adaptive=theta_adaptive), None,
                       EpsilonConfig(alpha, sample_size), DecayConfig(decay),
                       dim=X.shape[1] if X.ndim == 2 and X.shape[1] else None)
    t0 = time.perf_counter()
    if X.shape[0]:
        index.ingest_many(X)
    index.finalize()
    ingest_s = time.perf_counter() - t0

    levels = {}
    for g in chain:
        t0 = time.perf_counter()
        ds = uq(index, g)
        elapsed = time.perf_counter() - t0
        entry = {"g": g, "uq_seconds": elapsed, "drifts": [x.to_dict() for x in ds]}
        if truth is not None:
            entry["score"] = score_detection(ds, truth, g if tau is None else tau)
        levels[str(g)] = entry

    answers = []
    for q in queries:
        kind = q["kind"].lower()
        g_s, g_t = int(q["gs"]), int(q["gt"])
        if g_s not in chain or g_t not in chain:
            continue
        fn = rq if kind == "rq" else sq
        t0 = time.perf_counter()
        res = fn(index, g_s, g_t, bool(q.get("strict", False)))
        elapsed = time.perf_counter() - t0
        answers.append({"query": f"{kind.upper()}({g_s},{g_t})", "seconds": elapsed,
                        "result": res.answer()})

    return {
        "chain": list(chain.levels),
        "mode": mode,
        "policy": policy,
        "theta": theta,
        "points": int(X.shape[0]),
        "ingest_seconds": ingest_s,
        "storage": index.storage_report(),
        "levels": levels,
        "queries": answers,
        "metadata": index.metadata(),
    }


def bench(spec: dict) -> dict:
    """Run every cell of a dataset x chain x mode x policy x threshold grid."""
    datasets = spec.get("datasets") or ([spec["dataset"]] if "dataset" in spec else [])
    if not datasets:
        raise ConfigError("bench spec has no datasets")
    grid = spec.get("grid", {})
    chains = grid.get("granularities", [[100, 500, 1000]])
    modes = grid.get("modes", ["independent"])
    policies = grid.get("policies", ["full"])
    thetas = grid.get("thetas", ["mean_k_sigma:2"])
    queries = spec.get("queries", [])
    opts = {k: grid[k] for k in ("tau", "theta_window", "theta_adaptive", "alpha", "sample_size", "decay") if k in grid}

    cells = []
    for n, ds in enumerate(datasets):
        name = ds.get("name", f"dataset{n}")
        try:
            X, truth = _load_dataset(ds)
        except DriftIndexError as exc:
            raise type(exc)(f"dataset {name}: {exc}") from exc
        for chain, mode, policy, theta in itertools.product(chains, modes, policies, thetas):
            cell_id = f"{name}/{','.join(map(str, chain))}/{mode}/{policy}/{theta}"
            logger.info("bench cell %s", cell_id)
            try:
                report = run_cell(X, truth, chain, mode, policy, theta, queries, **opts)
            except DriftIndexError as exc:
                raise type(exc)(f"cell {cell_id}: {exc}") from exc
            report["cell"] = cell_id
            report["dataset"] = name
            cells.append(report)
    return {"cells": cells}
