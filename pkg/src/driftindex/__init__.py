"""Multi-granularity drift index for numeric data streams."""
from .detector import Drift, DriftSet, ThetaEstimator, detect_drifts, dissimilarity, update_theta
from .estimator import DriftIndexer
from .exceptions import ConfigError, DataError, DriftIndexError, QueryError
from .index import DriftIndex, IndexNode, MaterializationPolicy
from .query import QueryResult, reference_eval, rq, sq, uq, uq_result
from .stream import DataPoint, GranularityChain, Interval, contains, interval_bounds, window
from .summary import (
    ClusterFeature,
    Clustering,
    DecayConfig,
    EpsilonConfig,
    agglomerate,
    cf_add,
    cf_merge,
    cluster_points,
    cumulative_update,
    decay,
    learn_epsilon,
)

__version__ = "0.1.0"
