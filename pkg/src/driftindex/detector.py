"""Pairwise drift scoring between consecutive summaries and adaptive thresholds."""
from __future__ import annotations

import copy
import math
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Iterable, List, Optional, Tuple

import numpy as np
from scipy.spatial.distance import cdist

from .exceptions import ConfigError, DataError
from .summary import Clustering

MEAN_K_SIGMA = "mean_k_sigma"
QUANTILE = "quantile"


@dataclass(frozen=True)
class Drift:
    """A drift between intervals ``i`` and ``i + 1`` at granularity ``g``."""

    g: int
    i: int
    boundary_ord: int
    score: float
    theta: float

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Drift":
        return cls(int(d["g"]), int(d["i"]), int(d["boundary_ord"]),
                   float(d["score"]), float(d["theta"]))


@dataclass
class DriftSet:
    g: int
    drifts: List[Drift] = field(default_factory=list)

    def __post_init__(self):
        idx = [x.i for x in self.drifts]
        if any(x.g != self.g for x in self.drifts):
            raise ValueError("all drifts in a DriftSet must share its granularity")
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("drift indices must be strictly increasing")

    def __len__(self) -> int:
        return len(self.drifts)

    def __iter__(self):
        return iter(self.drifts)

    @property
    def indices(self) -> List[int]:
        return [x.i for x in self.drifts]

    @property
    def boundaries(self) -> List[int]:
        return [x.boundary_ord for x in self.drifts]

    def to_jsonl(self) -> str:
        import json

        return "".join(json.dumps(x.to_dict()) + "\n" for x in self.drifts)


class ThetaEstimator:
    """Sliding-window threshold learner.

    ``mean_k_sigma`` sets the threshold to mean + k * population stddev of the
    last ``window`` scores; ``quantile`` uses the nearest-rank ``q``-quantile.
    The threshold is undefined until two scores have been absorbed. With
    ``adaptive=False`` the window stops accepting scores once it is full, so
    the threshold is frozen after calibration.
    """

    def __init__(self, method: str = MEAN_K_SIGMA, k: float = 2.0, q: float = 0.95,
                 window: int = 20, scores: Iterable[float] = (), adaptive: bool = True):
        if method not in (MEAN_K_SIGMA, QUANTILE):
            raise ConfigError(f"unknown threshold method {method!r}")
        if not 0 < q < 1:
            raise ConfigError(f"quantile must lie in (0, 1), got {q}")
        if window < 1:
            raise ConfigError("calibration window must hold at least one score")
        if not k >= 0:
            raise ConfigError(f"k must be non-negative, got {k}")
        self.method = method
        self.k = float(k)
        self.q = float(q)
        self.window = int(window)
        self.adaptive = bool(adaptive)
        self.scores = deque((float(s) for s in scores), maxlen=self.window)

    @classmethod
    def parse(cls, text: str, window: int = 20, adaptive: bool = True) -> "ThetaEstimator":
        """Build from ``mean_k_sigma:K`` or ``quantile:Q``."""
        method, _, arg = text.partition(":")
        method = method.strip().lower()
        try:
            if method == MEAN_K_SIGMA:
                return cls(MEAN_K_SIGMA, k=float(arg) if arg else 2.0, window=window,
                           adaptive=adaptive)
            if method == QUANTILE:
                return cls(QUANTILE, q=float(arg) if arg else 0.95, window=window,
                           adaptive=adaptive)
        except ValueError as exc:
            raise ConfigError(f"bad threshold spec {text!r}") from exc
        raise ConfigError(f"unknown threshold method {method!r}")

    @property
    def spec(self) -> str:
        return f"{self.method}:{self.k:g}" if self.method == MEAN_K_SIGMA else f"{self.method}:{self.q:g}"

    @property
    def theta(self) -> Optional[float]:
        m = len(self.scores)
        if m < 2:
            return None
        if self.method == MEAN_K_SIGMA:
            w = np.fromiter(self.scores, dtype=float, count=m)
            return float(w.mean() + self.k * w.std())
        rank = max(1, math.ceil(round(self.q * m, 9)))
        return sorted(self.scores)[rank - 1]

    def absorb(self, score: float) -> None:
        if not score >= 0:
            raise DataError(f"drift scores are non-negative, got {score}")
        if self.adaptive or len(self.scores) < self.window:
            self.scores.append(float(score))

    def fresh(self) -> "ThetaEstimator":
        """Same configuration with an empty calibration window."""
        return ThetaEstimator(self.method, self.k, self.q, self.window, adaptive=self.adaptive)

    def copy(self) -> "ThetaEstimator":
        return copy.deepcopy(self)

    def to_dict(self) -> dict:
        return {"method": self.method, "k": self.k, "q": self.q, "window": self.window,
                "adaptive": self.adaptive, "scores": list(self.scores)}

    @classmethod
    def from_dict(cls, d: dict) -> "ThetaEstimator":
        return cls(d["method"], d["k"], d["q"], d["window"], d.get("scores", ()),
                   d.get("adaptive", True))

    def __repr__(self) -> str:
        return f"ThetaEstimator({self.spec}, window={self.window}, n_scores={len(self.scores)})"


def update_theta(est: ThetaEstimator, score: float) -> Tuple[ThetaEstimator, Optional[float]]:
    out = est.copy()
    out.absorb(score)
    return out, out.theta


def dissimilarity(a: Clustering, b: Clustering) -> float:
    """Weight-normalised symmetric nearest-centroid distance between two clusterings."""
    if a.dim != b.dim:
        raise DataError(f"cannot compare clusterings of dimension {a.dim} and {b.dim}")
    if len(a) == 0 or len(b) == 0:
        raise DataError("empty summary")
    D = cdist(a.centroids, b.centroids)
    forward = float(np.dot(a.n / a.n.sum(), D.min(axis=1)))
    backward = float(np.dot(b.n / b.n.sum(), D.min(axis=0)))
    return 0.5 * forward + 0.5 * backward


def _summary(node):
    return getattr(node, "summary", node)


def judge(est: ThetaEstimator, g: int, i: int, score: float) -> Optional[Drift]:
    """Judge one score against the current threshold, then absorb it."""
    theta = est.theta
    drift = None
    if theta is not None and score > theta:
        drift = Drift(g, i, i * g, score, theta)
    est.absorb(score)
    return drift


def detect_drifts(nodes, est: ThetaEstimator, g: int | None = None) -> DriftSet:
    """Scan consecutive node pairs left to right; ``est`` is updated in place.

    ``nodes`` are index nodes (with ``g``, ``i`` and ``summary``) or bare
    clusterings, in which case ``g`` must be given and indices count from 1.
    """
    nodes = list(nodes)
    if g is None:
        if not nodes:
            raise ValueError("granularity required for an empty node sequence")
        g = nodes[0].g
    out = []
    for pos in range(len(nodes) - 1):
        i = getattr(nodes[pos], "i", pos + 1)
        score = dissimilarity(_summary(nodes[pos]), _summary(nodes[pos + 1]))
        drift = judge(est, g, i, score)
        if drift is not None:
            out.append(drift)
    return DriftSet(g, out)
