"""Synthetic streams with abrupt mean shifts in a Gaussian mixture."""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ConfigError


@dataclass(frozen=True)
class SyntheticConfig:
    """Generator settings.

    Drift ordinals come from ``drift_at`` or from a period. ``schedule`` varies
    the rate: a list of ``(until_ord, period)`` segments applied in order, so
    ``[(5000, 1000), (10000, 250)]`` drifts every 1000 points up to ordinal
    5000 and every 250 points after that.
    """

    dim: int
    n_points: int
    drift_at: Tuple[int, ...] = ()
    period: Optional[int] = None
    schedule: Tuple[Tuple[int, int], ...] = ()
    magnitude: float = 5.0
    n_components: int = 3
    separation: float = 4.0
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "drift_at", tuple(int(t) for t in self.drift_at))
        object.__setattr__(self, "schedule", tuple((int(a), int(b)) for a, b in self.schedule))
        if self.dim < 1:
            raise ConfigError("dim must be at least 1")
        if self.n_points < 0:
            raise ConfigError("n_points must be non-negative")
        if self.n_components < 1:
            raise ConfigError("n_components must be at least 1")
        if not self.magnitude >= 0:
            raise ConfigError(f"magnitude must be non-negative, got {self.magnitude}")
        sources = sum(bool(x) for x in (self.drift_at, self.period, self.schedule))
        if sources > 1:
            raise ConfigError("give only one of drift_at, period or schedule")
        if self.period is not None and self.period < 1:
            raise ConfigError("period must be positive")
        if any(p < 1 for _, p in self.schedule):
            raise ConfigError("schedule periods must be positive")
        pos = self.positions()
        if any(b <= a for a, b in zip(pos, pos[1:])):
            raise ConfigError("drift positions must be strictly increasing")
        if pos and (pos[0] <= 1 or pos[-1] >= self.n_points):
            raise ConfigError(f"drift positions must lie strictly inside (1, {self.n_points})")

    def positions(self) -> List[int]:
        if self.drift_at:
            return list(self.drift_at)
        if self.period:
            return list(range(self.period, self.n_points, self.period))
        out, t = [], 0
        for until, period in self.schedule:
            while t + period <= min(until, self.n_points - 1):
                t += period
                out.append(t)
        return out

    def to_dict(self) -> dict:
        d = asdict(self)
        d["drift_at"] = list(self.drift_at)
        d["schedule"] = [list(s) for s in self.schedule]
        return d


def _unit(rng, k: int, d: int) -> np.ndarray:
    v = rng.standard_normal((k, d))
    norms = np.linalg.norm(v, axis=1, keepdims=True)
    norms[norms == 0] = 1.0
    return v / norms


def generate(cfg: SyntheticConfig):
    """Draw a stream and its ground truth; a pure function of ``cfg``.

    Points come from an equal-weight mixture of unit-variance Gaussians. After
    each drift ordinal ``t`` (so from ordinal ``t + 1`` on) every component
    mean moves by ``magnitude`` along its own random unit direction.

    Returns ``(X, truth)`` where row ``r`` of ``X`` is the point with ordinal
    ``r + 1``.
    """
    from .evaluation import GroundTruth

    rng = np.random.default_rng(cfg.seed)
    means = rng.normal(0.0, cfg.separation, size=(cfg.n_components, cfg.dim))
    positions = cfg.positions()
    X = np.empty((cfg.n_points, cfg.dim))
    edges = [0] + positions + [cfg.n_points]
    for seg, (a, b) in enumerate(zip(edges, edges[1:])):
        if seg:
            means = means + cfg.magnitude * _unit(rng, cfg.n_components, cfg.dim)
        comp = rng.integers(0, cfg.n_components, size=b - a)
        X[a:b] = means[comp] + rng.standard_normal((b - a, cfg.dim))
    return X, GroundTruth(positions)


def write_stream_csv(path, X: np.ndarray, header: bool = True) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(",".join(f"x{j + 1}" for j in range(X.shape[1])) + "\n")
        for row in X:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")
