from .csvio import ingest_csv, load_csv, parse_columns
from .evaluation import GroundTruth, bench, score_detection
from .synthetic import SyntheticConfig, generate

__all__ = [
    "GroundTruth",
    "SyntheticConfig",
    "bench",
    "generate",
    "ingest_csv",
    "load_csv",
    "parse_columns",
    "score_detection",
]
