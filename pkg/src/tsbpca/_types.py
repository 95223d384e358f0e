"""Shared data model: datasets, projection state, run configuration."""

from __future__ import annotations

import dataclasses
import enum
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .exceptions import ConfigError, IndexOutOfRange, NonFinite, ShapeMismatch


def _frozen_array(a, dtype=np.float64):
    arr = np.array(a, dtype=dtype, copy=True)
    arr.setflags(write=False)
    return arr


class Pooling(str, enum.Enum):
    NONE = "none"
    MEAN = "mean-over-batch"


class Counter(str, enum.Enum):
    GLOBAL = "global"
    PER_BATCH = "per-batch"


@dataclass(frozen=True, eq=False)
class Dataset:
    """Panel of ``B`` instances observed at ``N`` time points on ``d`` variables.

    ``values`` has shape ``(B, N, d)``. Construction does not validate;
    call :func:`validate_dataset` (or use :meth:`from_array`).
    """

    values: np.ndarray
    labels: Optional[np.ndarray] = None
    names: Optional[tuple] = None

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        if self.labels is not None:
            object.__setattr__(self, "labels", _frozen_array(self.labels, np.int64))
        if self.names is not None:
            object.__setattr__(self, "names", tuple(str(n) for n in self.names))

    @classmethod
    def from_array(cls, values, labels=None, names=None) -> "Dataset":
        return validate_dataset(cls(values, labels, names))

    @property
    def shape(self):
        return self.values.shape

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def n_times(self) -> int:
        return self.values.shape[1]

    @property
    def n_vars(self) -> int:
        return self.values.shape[2]

    def with_values(self, values) -> "Dataset":
        return dataclasses.replace(self, values=values)


@dataclass(frozen=True, eq=False)
class TimePointSlice:
    """All instances at one time index, shape ``(B, d)``."""

    matrix: np.ndarray
    time_index: int = 0

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=np.float64)
        if m.ndim != 2:
            raise ShapeMismatch(f"time-point slice must be 2-D, got shape {m.shape}")
        object.__setattr__(self, "matrix", _frozen_array(m))

    @property
    def n_instances(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True, eq=False)
class BatchView:
    """A contiguous block of time points, ``values`` shaped ``(T_actual, B, d)``."""

    values: np.ndarray
    index: int
    time_indices: tuple

    def __len__(self):
        return len(self.time_indices)

    def time_point(self, j: int) -> TimePointSlice:
        return TimePointSlice(self.values[j], self.time_indices[j])


@dataclass(frozen=True, eq=False)
class ProjectionState:
    """Carried spectral history: basis ``q`` (d x k), eigenvalues, counter."""

    q: np.ndarray
    lam: np.ndarray
    time_index: int = 0

    def __post_init__(self):
        object.__setattr__(self, "q", _frozen_array(self.q))
        object.__setattr__(self, "lam", _frozen_array(self.lam))

    @property
    def n_features(self) -> int:
        return self.q.shape[0]

    @property
    def n_components(self) -> int:
        return self.q.shape[1]

    def orthonormality_error(self) -> float:
        k = self.q.shape[1]
        return float(np.linalg.norm(self.q.T @ self.q - np.eye(k)))

    def replace(self, **changes) -> "ProjectionState":
        return dataclasses.replace(self, **changes)


@dataclass(frozen=True)
class RunConfig:
    time_batch: int = 1
    components: int = 1
    tol: float = 1e-6
    max_inner_iters: int = 100
    seed: int = 0
    pooling: Pooling = Pooling.NONE
    counter: Counter = Counter.GLOBAL

    def __post_init__(self):
        object.__setattr__(self, "pooling", Pooling(self.pooling))
        object.__setattr__(self, "counter", Counter(self.counter))
        if int(self.time_batch) != self.time_batch or self.time_batch < 1:
            raise ConfigError(f"time batch T must be an integer >= 1, got {self.time_batch}")
        if int(self.components) != self.components or self.components < 1:
            raise ConfigError(f"components K must be an integer >= 1, got {self.components}")
        if not (self.tol > 0 and math.isfinite(self.tol)):
            raise ConfigError(f"tol must be a positive finite number, got {self.tol}")
        if int(self.max_inner_iters) != self.max_inner_iters or self.max_inner_iters < 1:
            raise ConfigError(f"max_inner_iters must be >= 1, got {self.max_inner_iters}")

    def check_against(self, n_times: int, n_vars: int) -> None:
        """Raise :class:`ConfigError` unless ``K <= d`` and ``T <= N``."""
        if self.components > n_vars:
            raise ConfigError(
                f"components K={self.components} violates K <= d (d={n_vars})"
            )
        if self.time_batch > n_times:
            raise ConfigError(
                f"time batch T={self.time_batch} violates T <= N (N={n_times})"
            )

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["pooling"] = self.pooling.value
        d["counter"] = self.counter.value
        return d


@dataclass(frozen=True)
class InnerIterationReport:
    time_index: int
    sweeps_used: int
    final_subspace_delta: float
    converged: bool
    restarts: int = 0

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


@dataclass(frozen=True, eq=False)
class CompactRepresentation:
    """Projected tensor ``(B, N_out, k)`` with the per-batch eigenvalue record."""

    values: np.ndarray
    eigen_trajectory: tuple
    config: RunConfig
    reports: tuple = ()
    labels: Optional[np.ndarray] = None
    batch_components: Optional[np.ndarray] = field(default=None, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen_array(self.values))
        if self.labels is not None:
            object.__setattr__(self, "labels", _frozen_array(self.labels, np.int64))

    @property
    def n_instances(self) -> int:
        return self.values.shape[0]

    @property
    def converged_fraction(self) -> float:
        if not self.reports:
            return 1.0
        return sum(r.converged for r in self.reports) / len(self.reports)

    @property
    def final_q(self) -> np.ndarray:
        return self.batch_components[-1]


def n_batches(n_times: int, time_batch: int) -> int:
    return -(-n_times // time_batch)


def validate_dataset(ds: Dataset) -> Dataset:
    values = ds.values
    if values.ndim != 3:
        raise ShapeMismatch(f"dataset values must be 3-D (B, N, d), got shape {values.shape}")
    if min(values.shape) < 1:
        raise ShapeMismatch(f"every axis must be non-empty, got shape {values.shape}")
    bad = ~np.isfinite(values)
    if bad.any():
        raise NonFinite(np.argwhere(bad)[0])
    if ds.labels is not None and ds.labels.shape != (values.shape[0],):
        raise ShapeMismatch(
            f"expected {values.shape[0]} labels (one per instance), got {ds.labels.size}"
        )
    if ds.names is not None and len(ds.names) != values.shape[2]:
        raise ShapeMismatch(f"expected {values.shape[2]} variable names, got {len(ds.names)}")
    return ds


def slice_time_point(ds: Dataset, n: int) -> TimePointSlice:
    if not 0 <= n < ds.n_times:
        raise IndexOutOfRange(f"time index {n} outside [0, {ds.n_times})")
    return TimePointSlice(ds.values[:, n, :], n)


def batch_bounds(n_times: int, i: int, time_batch: int) -> range:
    count = n_batches(n_times, time_batch)
    if not 0 <= i < count:
        raise IndexOutOfRange(f"batch index {i} outside [0, {count})")
    return range(i * time_batch, min((i + 1) * time_batch, n_times))


def slice_batch(ds: Dataset, i: int, time_batch: int) -> BatchView:
    """Time points ``[i*T, min((i+1)*T, N))``; the last batch may be short."""
    idx = batch_bounds(ds.n_times, i, time_batch)
    block = np.transpose(ds.values[:, idx.start:idx.stop, :], (1, 0, 2))
    return BatchView(_frozen_array(block), i, tuple(idx))


def iter_batches(ds: Dataset, time_batch: int) -> Sequence[BatchView]:
    return [slice_batch(ds, i, time_batch) for i in range(n_batches(ds.n_times, time_batch))]
