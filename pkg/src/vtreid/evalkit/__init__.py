"""Re-identification evaluation: splits, distances, CMC/mAP, reports."""

from vtreid.evalkit.embeddings import EmbeddingSet, extract_embeddings
from vtreid.evalkit.metrics import cmc, distance_matrix, mean_average_precision
from vtreid.evalkit.report import (
    EvalReport,
    MethodResult,
    SplitMetrics,
    compose_report,
    report_to_csv,
    report_to_json,
    write_cmc_curve,
    write_report,
)
from vtreid.evalkit.splits import TestSplit, build_test_splits

__all__ = [
    "EmbeddingSet",
    "EvalReport",
    "MethodResult",
    "SplitMetrics",
    "TestSplit",
    "build_test_splits",
    "cmc",
    "compose_report",
    "distance_matrix",
    "extract_embeddings",
    "mean_average_precision",
    "report_to_csv",
    "report_to_json",
    "write_cmc_curve",
    "write_report",
]
