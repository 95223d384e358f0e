"""Temporal streaming batch PCA for multivariate time-series panels."""

from ._types import (
    BatchView,
    CompactRepresentation,
    Counter,
    Dataset,
    InnerIterationReport,
    Pooling,
    ProjectionState,
    RunConfig,
    TimePointSlice,
    slice_batch,
    slice_time_point,
    validate_dataset,
)
from .estimator import TemporalStreamingPCA
from .oracle import batch_pca, pooled_covariance, reconstruction_error, subspace_distance
from .streaming import compress

__all__ = [
    "BatchView",
    "CompactRepresentation",
    "Counter",
    "Dataset",
    "InnerIterationReport",
    "Pooling",
    "ProjectionState",
    "RunConfig",
    "TemporalStreamingPCA",
    "TimePointSlice",
    "batch_pca",
    "compress",
    "pooled_covariance",
    "reconstruction_error",
    "slice_batch",
    "slice_time_point",
    "subspace_distance",
    "validate_dataset",
]

__version__ = "0.1.0"
