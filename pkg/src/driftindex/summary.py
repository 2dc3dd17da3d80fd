"""Cluster-feature summaries and the clustering kernels built on them.

A cluster feature (CF) is the additive triple ``(n, ls, ss)``: weight,
per-dimension linear sum and per-dimension squared sum. Clusterings store
their CFs column-wise in numpy arrays so the hot loops stay vectorised.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, List, Sequence

import numpy as np
from scipy.spatial.distance import pdist

from .exceptions import ConfigError, DataError

DROP_FLOOR = 1e-6
EPSILON_FLOOR = 1e-12


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class ClusterFeature:
    n: float
    ls: np.ndarray
    ss: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "n", float(self.n))
        object.__setattr__(self, "ls", _frozen(self.ls).reshape(-1))
        object.__setattr__(self, "ss", _frozen(self.ss).reshape(-1))
        if self.ls.shape != self.ss.shape:
            raise DataError("linear and squared sums differ in dimension")

    @classmethod
    def zero(cls, dim: int) -> "ClusterFeature":
        return cls(0.0, np.zeros(dim), np.zeros(dim))

    @classmethod
    def of_points(cls, X) -> "ClusterFeature":
        X = np.atleast_2d(np.asarray(X, dtype=float))
        return cls(X.shape[0], X.sum(axis=0), (X * X).sum(axis=0))

    @property
    def dim(self) -> int:
        return self.ls.shape[0]

    @property
    def centroid(self) -> np.ndarray:
        return self.ls / self.n

    @property
    def variance(self) -> np.ndarray:
        mu = self.ls / self.n
        return self.ss / self.n - mu * mu


def _features(p) -> np.ndarray:
    return np.asarray(getattr(p, "features", p), dtype=float).reshape(-1)


def cf_add(cf: ClusterFeature, p) -> ClusterFeature:
    x = _features(p)
    if x.shape[0] != cf.dim:
        raise DataError(f"point has dimension {x.shape[0]}, summary has {cf.dim}")
    return ClusterFeature(cf.n + 1.0, cf.ls + x, cf.ss + x * x)


def cf_merge(a: ClusterFeature, b: ClusterFeature) -> ClusterFeature:
    if a.dim != b.dim:
        raise DataError(f"cannot merge summaries of dimension {a.dim} and {b.dim}")
    return ClusterFeature(a.n + b.n, a.ls + b.ls, a.ss + b.ss)


class Clustering:
    """An ordered, immutable collection of cluster features of one dimension."""

    __slots__ = ("n", "ls", "ss", "dim", "_centroids")

    def __init__(self, n, ls, ss, dim: int | None = None):
        n = _frozen(n).reshape(-1)
        ls = np.array(ls, dtype=float)
        ss = np.array(ss, dtype=float)
        if dim is None:
            if ls.ndim != 2:
                raise DataError("cannot infer the dimension of an empty clustering")
            dim = ls.shape[1]
        ls = ls.reshape(n.shape[0], dim)
        ss = ss.reshape(n.shape[0], dim)
        ls.flags.writeable = False
        ss.flags.writeable = False
        self.n, self.ls, self.ss, self.dim = n, ls, ss, int(dim)
        self._centroids = None

    @classmethod
    def empty(cls, dim: int) -> "Clustering":
        return cls(np.zeros(0), np.zeros((0, dim)), np.zeros((0, dim)), dim)

    @classmethod
    def from_cfs(cls, cfs: Sequence[ClusterFeature], dim: int | None = None) -> "Clustering":
        cfs = list(cfs)
        if not cfs:
            if dim is None:
                raise DataError("dimension required for an empty clustering")
            return cls.empty(dim)
        return cls(
            [cf.n for cf in cfs],
            np.stack([cf.ls for cf in cfs]),
            np.stack([cf.ss for cf in cfs]),
            cfs[0].dim,
        )

    @property
    def cfs(self) -> List[ClusterFeature]:
        return [ClusterFeature(n, ls, ss) for n, ls, ss in zip(self.n, self.ls, self.ss)]

    @property
    def centroids(self) -> np.ndarray:
        if self._centroids is None:
            c = self.ls / self.n[:, None]
            c.flags.writeable = False
            self._centroids = c
        return self._centroids

    @property
    def total_weight(self) -> float:
        return float(self.n.sum())

    def __len__(self) -> int:
        return self.n.shape[0]

    def __eq__(self, other) -> bool:
        if not isinstance(other, Clustering):
            return NotImplemented
        return (
            self.dim == other.dim
            and np.array_equal(self.n, other.n)
            and np.array_equal(self.ls, other.ls)
            and np.array_equal(self.ss, other.ss)
        )

    def __repr__(self) -> str:
        return f"Clustering(k={len(self)}, dim={self.dim}, weight={self.total_weight:g})"


@dataclass(frozen=True)
class EpsilonConfig:
    alpha: float = 0.5
    sample_size: int = 200

    def __post_init__(self):
        if not 0 < self.alpha <= 1:
            raise ConfigError(f"alpha must lie in (0, 1], got {self.alpha}")
        if self.sample_size < 2:
            raise ConfigError("sample_size must be at least 2")


@dataclass(frozen=True)
class DecayConfig:
    lam: float = 1.0

    def __post_init__(self):
        if not self.lam >= 0 or not np.isfinite(self.lam):
            raise ConfigError(f"decay rate must be a finite non-negative number, got {self.lam}")

    @property
    def factor(self) -> float:
        return 2.0 ** (-self.lam)


def _as_matrix(points, dim: int | None = None) -> np.ndarray:
    if isinstance(points, np.ndarray):
        X = np.asarray(points, dtype=float)
        if X.ndim == 1:
            X = X.reshape(-1, 1) if dim in (None, 1) else X.reshape(1, -1)
    else:
        rows = [_features(p) for p in points]
        if not rows:
            return np.zeros((0, dim or 0))
        if len({r.shape[0] for r in rows}) != 1:
            raise DataError("points do not share one dimension")
        X = np.stack(rows)
    if dim is not None and X.shape[0] and X.shape[1] != dim:
        raise DataError(f"points have dimension {X.shape[1]}, expected {dim}")
    return X


def _leader_insert(n, ls, ss, X, epsilon):
    """Sequential leader rule over the rows of X, starting from existing CFs."""
    k, d = ls.shape[0], X.shape[1]
    cap = k + X.shape[0]
    N = np.empty(cap)
    LS = np.empty((cap, d))
    SS = np.empty((cap, d))
    C = np.empty((cap, d))
    N[:k], LS[:k], SS[:k] = n, ls, ss
    if k:
        C[:k] = ls / n[:, None]
    for x in X:
        if k:
            diff = C[:k] - x
            dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            j = int(dist.argmin())
            if dist[j] <= epsilon:
                N[j] += 1.0
                LS[j] += x
                SS[j] += x * x
                C[j] = LS[j] / N[j]
                continue
        N[k] = 1.0
        LS[k] = x
        SS[k] = x * x
        C[k] = x
        k += 1
    return N[:k], LS[:k], SS[:k]


def cluster_points(points, epsilon: float, dim: int | None = None) -> Clustering:
    """Cluster one interval's points from scratch with the sequential leader rule.

    Each point joins the CF with the nearest centroid if that centroid lies
    within ``epsilon`` (ties go to the lowest index); otherwise it starts a
    new CF. The result depends only on the input order.
    """
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    X = _as_matrix(points, dim)
    if X.shape[0] == 0:
        if dim is None and X.shape[1] == 0:
            raise DataError("dimension required to cluster an empty batch")
        return Clustering.empty(dim or X.shape[1])
    d = X.shape[1]
    n, ls, ss = _leader_insert(np.zeros(0), np.zeros((0, d)), np.zeros((0, d)), X, epsilon)
    return Clustering(n, ls, ss, d)


def agglomerate(cfs, epsilon: float, dim: int | None = None) -> Clustering:
    """Greedy pairwise merging of CFs while the closest centroids are within epsilon.

    Ties between equally close pairs go to the lexicographically lowest
    ``(a, b)`` index pair; the merged CF takes slot ``a``.
    """
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    if isinstance(cfs, Clustering):
        n, ls, ss, d = cfs.n.copy(), cfs.ls.copy(), cfs.ss.copy(), cfs.dim
    else:
        cfs = list(cfs)
        if not cfs:
            if dim is None:
                raise DataError("dimension required for an empty clustering")
            return Clustering.empty(dim)
        c = Clustering.from_cfs(cfs)
        n, ls, ss, d = c.n.copy(), c.ls.copy(), c.ss.copy(), c.dim
    k = n.shape[0]
    if k < 2:
        return Clustering(n, ls, ss, d)

    C = ls / n[:, None]
    diff = C[:, None, :] - C[None, :, :]
    D = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    D[np.tril_indices(k)] = np.inf
    alive = np.ones(k, dtype=bool)
    while True:
        flat = int(D.argmin())
        a, b = divmod(flat, k)
        if not D[a, b] <= epsilon:
            break
        n[a] += n[b]
        ls[a] += ls[b]
        ss[a] += ss[b]
        C[a] = ls[a] / n[a]
        alive[b] = False
        D[b, :] = np.inf
        D[:, b] = np.inf
        delta = C[alive] - C[a]
        dist = np.sqrt(np.einsum("ij,ij->i", delta, delta))
        row = np.full(k, np.inf)
        row[alive] = dist
        idx = np.arange(k)
        D[a, idx > a] = row[idx > a]
        D[idx < a, a] = row[idx < a]
        D[a, a] = np.inf
    return Clustering(n[alive], ls[alive], ss[alive], d)


def decay(c: Clustering, cfg: DecayConfig) -> Clustering:
    delta = cfg.factor
    if delta == 1.0:
        return c
    n = c.n * delta
    keep = n >= DROP_FLOOR
    return Clustering(n[keep], (c.ls * delta)[keep], (c.ss * delta)[keep], c.dim)


def cumulative_update(state: Clustering, points, epsilon: float, cfg: DecayConfig) -> Clustering:
    """Fade the running clustering by one tick, then leader-insert ``points``."""
    if not epsilon > 0:
        raise ConfigError(f"epsilon must be positive, got {epsilon}")
    faded = decay(state, cfg)
    X = _as_matrix(points, state.dim)
    if X.shape[0] == 0:
        return faded
    n, ls, ss = _leader_insert(faded.n, faded.ls, faded.ss, X, epsilon)
    return Clustering(n, ls, ss, state.dim)


def learn_epsilon(sample, cfg: EpsilonConfig = EpsilonConfig()) -> float:
    """Clustering radius: ``alpha`` times the mean pairwise distance of the prefix."""
    X = _as_matrix(sample)
    X = X[: cfg.sample_size]
    if X.shape[0] < 2:
        raise ConfigError(
            f"need at least 2 calibration points to learn epsilon, got {X.shape[0]}"
        )
    return max(cfg.alpha * float(pdist(X).mean()), EPSILON_FLOOR)


def level_epsilon(epsilon: float, g: int, g0: int, dim: int) -> float:
    """Agglomeration radius at a coarser level, widened by ``(g/g0)**(1/d)``."""
    return epsilon * (g / g0) ** (1.0 / dim)


def merge_all(cfs: Iterable[ClusterFeature]) -> ClusterFeature:
    cfs = list(cfs)
    out = cfs[0]
    for cf in cfs[1:]:
        out = cf_merge(out, cf)
    return out
