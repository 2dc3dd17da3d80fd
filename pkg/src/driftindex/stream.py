"""Stream vocabulary: points, granularity chains, intervals and ordinal ranges.

Granularities are point counts. Interval ``i`` (1-based) at granularity ``g``
covers ordinals ``(i - 1) * g + 1 .. i * g``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import NamedTuple, Optional, Sequence

import numpy as np

from .exceptions import ConfigError


class OrdinalRange(NamedTuple):
    """Closed range of stream ordinals ``[lo, hi]``."""

    lo: int
    hi: int


@dataclass(frozen=True)
class DataPoint:
    ord: int
    features: np.ndarray
    ts: Optional[float] = None

    def __post_init__(self):
        if self.ord < 1:
            raise ValueError(f"ordinals are 1-based, got {self.ord}")
        feats = np.asarray(self.features, dtype=float).reshape(-1)
        if feats.size == 0:
            raise ValueError("a data point needs at least one feature")
        feats.flags.writeable = False
        object.__setattr__(self, "features", feats)

    @property
    def dim(self) -> int:
        return self.features.shape[0]


@dataclass(frozen=True)
class GranularityChain:
    """Strictly increasing granularities where each level divides the next."""

    levels: tuple = field(default=())

    def __post_init__(self):
        levels = tuple(int(g) for g in self.levels)
        if not levels:
            raise ConfigError("a granularity chain needs at least one level")
        if levels[0] < 1:
            raise ConfigError(f"granularities must be >= 1, got {levels[0]}")
        for fine, coarse in zip(levels, levels[1:]):
            if coarse <= fine or coarse % fine:
                raise ConfigError(
                    f"granularity {coarse} is not a proper multiple of {fine}"
                )
        object.__setattr__(self, "levels", levels)

    @classmethod
    def parse(cls, text: str) -> "GranularityChain":
        try:
            return cls(tuple(int(tok) for tok in text.split(",") if tok.strip()))
        except ValueError as exc:
            raise ConfigError(f"bad granularity list {text!r}") from exc

    @property
    def finest(self) -> int:
        return self.levels[0]

    def __len__(self) -> int:
        return len(self.levels)

    def __iter__(self):
        return iter(self.levels)

    def __contains__(self, g) -> bool:
        return g in self.levels

    def position(self, g: int) -> int:
        try:
            return self.levels.index(g)
        except ValueError:
            raise ConfigError(f"unknown granularity {g}") from None

    def finer_than(self, a: int, b: int) -> bool:
        """``a`` strictly precedes ``b`` (a is the finer level)."""
        return self.position(a) < self.position(b)

    def between(self, lo: int, hi: int) -> Sequence[int]:
        """Chain levels ``g`` with ``lo <= g <= hi``, finest first."""
        return [g for g in self.levels if lo <= g <= hi]


@dataclass(frozen=True)
class Interval:
    g: int
    i: int

    @property
    def start_ord(self) -> int:
        return (self.i - 1) * self.g + 1

    @property
    def end_ord(self) -> int:
        return self.i * self.g

    @property
    def bounds(self) -> OrdinalRange:
        return OrdinalRange(self.start_ord, self.end_ord)


def interval_bounds(g: int, i: int) -> OrdinalRange:
    return OrdinalRange((i - 1) * g + 1, i * g)


def window(g: int, i: int) -> OrdinalRange:
    """Ordinal extent of the interval pair ``(I_i, I_{i+1})`` at granularity g."""
    return OrdinalRange((i - 1) * g + 1, (i + 1) * g)


def contains(outer: OrdinalRange, inner: OrdinalRange) -> bool:
    return outer[0] <= inner[0] and inner[1] <= outer[1]
