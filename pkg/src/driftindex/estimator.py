"""scikit-learn style front end for the drift index."""
from __future__ import annotations

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .detector import ThetaEstimator
from .index import DriftIndex, MaterializationPolicy
from .query import rq, sq, uq, uq_result
from .stream import GranularityChain
from .summary import DecayConfig, EpsilonConfig


class DriftIndexer(BaseEstimator):
    """Build a multi-granularity drift index from rows of ``X`` (stream order).

    ``fit`` starts a fresh index; ``partial_fit`` keeps appending to it, so
    a stream can be fed in chunks. Drift queries are methods on the fitted
    estimator.

    Parameters
    ----------
    granularities : tuple of int
        Interval sizes in points, finest first; each must divide the next.
    mode : {"independent", "cumulative"}
    policy : str
        ``"full"``, ``"bottom"`` or ``"partial:G1,G2,..."``.
    theta : str
        ``"mean_k_sigma:K"`` or ``"quantile:Q"``.
    theta_window : int
        Number of recent scores the threshold is calibrated on.
    theta_adaptive : bool
        Keep sliding the calibration window; if False the threshold freezes
        once the window is full.
    alpha, sample_size : float, int
        Epsilon learning: ``alpha`` times the mean pairwise distance of the
        first ``sample_size`` points. Ignored when ``epsilon`` is given.
    decay : float
        Fading rate for cumulative mode; older mass is scaled by ``2**-decay``
        per finest interval.
    cache_derived : bool
        Keep derived (non-materialized) levels after the first query.
    """

    def __init__(self, granularities=(100, 500, 1000), mode="independent", policy="full",
                 theta="mean_k_sigma:2", theta_window=20, theta_adaptive=True, alpha=0.5, sample_size=200,
                 decay=1.0, epsilon=None, cache_derived=False):
        self.granularities = granularities
        self.mode = mode
        self.policy = policy
        self.theta = theta
        self.theta_window = theta_window
        self.theta_adaptive = theta_adaptive
        self.alpha = alpha
        self.sample_size = sample_size
        self.decay = decay
        self.epsilon = epsilon
        self.cache_derived = cache_derived

    def _make_index(self) -> DriftIndex:
        return DriftIndex(
            GranularityChain(tuple(self.granularities)),
            MaterializationPolicy.parse(self.policy, cache_derived=self.cache_derived),
            self.mode,
            ThetaEstimator.parse(self.theta, window=self.theta_window, adaptive=self.theta_adaptive),
            self.epsilon,
            EpsilonConfig(self.alpha, self.sample_size),
            DecayConfig(self.decay),
        )

    def fit(self, X, y=None):
        for attr in ("index_", "n_features_in_"):
            self.__dict__.pop(attr, None)
        self.partial_fit(X)
        self.index_.finalize()
        return self

    def partial_fit(self, X, y=None):
        first = not hasattr(self, "index_")
        X = check_array(X, dtype=float, ensure_min_samples=1)
        if first:
            self.index_ = self._make_index()
            self.n_features_in_ = X.shape[1]
        elif X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"X has {X.shape[1]} features, but DriftIndexer is fitted with "
                f"{self.n_features_in_} features"
            )
        self.index_.ingest_many(X)
        return self

    @property
    def epsilon_(self):
        check_is_fitted(self, "index_")
        return self.index_.epsilon

    def _ready(self) -> DriftIndex:
        check_is_fitted(self, "index_")
        self.index_.finalize()
        return self.index_

    def uq(self, g: int):
        return uq(self._ready(), g)

    def uq_result(self, g: int):
        return uq_result(self._ready(), g)

    def rq(self, g_s: int, g_t: int, strict: bool = False):
        return rq(self._ready(), g_s, g_t, strict)

    def sq(self, g_s: int, g_t: int, strict: bool = False):
        return sq(self._ready(), g_s, g_t, strict)

    def drift_boundaries(self, g: int):
        """Ordinals of the interval boundaries flagged as drifts at ``g``."""
        return self.uq(g).boundaries

    def storage_report(self) -> dict:
        check_is_fitted(self, "index_")
        return self.index_.storage_report()
