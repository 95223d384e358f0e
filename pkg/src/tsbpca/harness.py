"""Synthetic data, a 1-NN classification proxy, parameter sweeps and timing."""

from __future__ import annotations

import csv
import dataclasses
import io
import statistics
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.spatial.distance import cdist

from ._types import CompactRepresentation, Dataset, RunConfig
from .exceptions import DimensionMismatch, InputError, TSBPCAError, Unlabeled
from .oracle import reconstruction_error
from .streaming import compress


@dataclass(frozen=True)
class SyntheticSpec:
    """Recipe for a Gaussian panel with planted principal directions.

    Rows are ``N(mu_c, V diag(eigenvalues) V^T)`` with ``V`` a random
    rotation drawn from ``rotation_seed``. From ``change_point`` on, ``V``
    is replaced by a second rotation drawn from ``drift_seed``.
    ``class_offsets`` holds one mean vector per class in the coordinates
    of the planted eigenbasis; labels are balanced and shuffled.
    """

    B: int
    N: int
    d: int
    eigenvalues: tuple
    rotation_seed: int = 0
    change_point: Optional[int] = None
    drift_seed: Optional[int] = None
    class_offsets: Optional[tuple] = None

    def __post_init__(self):
        ev = np.asarray(self.eigenvalues, dtype=float)
        if ev.shape != (self.d,):
            raise InputError(f"need {self.d} eigenvalues, got {ev.size}")
        if (ev <= 0).any() or (np.diff(ev) > 0).any():
            raise InputError("eigenvalues must be strictly positive and descending")
        if min(self.B, self.N, self.d) < 1:
            raise InputError("B, N and d must all be >= 1")
        if self.change_point is not None and not 0 < self.change_point < self.N:
            raise InputError(f"change point must lie in (0, N={self.N})")
        if self.class_offsets is not None:
            off = np.asarray(self.class_offsets, dtype=float)
            if off.ndim != 2 or off.shape[1] != self.d or off.shape[0] < 2:
                raise InputError("class_offsets must be (n_classes >= 2, d)")

    def basis(self) -> np.ndarray:
        return random_rotation(self.d, self.rotation_seed)

    def drift_basis(self) -> Optional[np.ndarray]:
        if self.change_point is None:
            return None
        seed = self.drift_seed if self.drift_seed is not None else self.rotation_seed + 1
        return random_rotation(self.d, seed)

    def with_n(self, n: int) -> "SyntheticSpec":
        return dataclasses.replace(self, N=n)


def random_rotation(d: int, seed) -> np.ndarray:
    q, r = np.linalg.qr(np.random.default_rng(seed).standard_normal((d, d)))
    return q * np.where(np.diag(r) < 0, -1.0, 1.0)


def generate(spec: SyntheticSpec, seed=0) -> Dataset:
    rng = np.random.default_rng(seed)
    scale = np.sqrt(np.asarray(spec.eigenvalues, dtype=float))
    z = rng.standard_normal((spec.B, spec.N, spec.d)) * scale

    labels = None
    if spec.class_offsets is not None:
        offsets = np.asarray(spec.class_offsets, dtype=float)
        labels = rng.permutation(np.arange(spec.B) % offsets.shape[0])
        z = z + offsets[labels][:, None, :]

    V = spec.basis()
    values = z @ V.T
    if spec.change_point is not None:
        n = spec.change_point
        values[:, n:, :] = z[:, n:, :] @ spec.drift_basis().T
    return Dataset.from_array(values, labels)


def _gapped(head, tail_len, tail_top=0.5, ratio=0.8):
    return tuple(head) + tuple(tail_top * ratio ** np.arange(tail_len))


PRESETS = {
    "toy": SyntheticSpec(
        B=8, N=16, d=3, eigenvalues=(3.0, 1.0, 0.2), rotation_seed=3,
        class_offsets=((2.0, 0.0, 0.0), (-2.0, 0.0, 0.0)),
    ),
    "stationary": SyntheticSpec(
        B=64, N=200, d=6, eigenvalues=(5.0, 3.0, 1.0, 0.5, 0.2, 0.1),
    ),
    "stationary-2class": SyntheticSpec(
        B=40, N=60, d=8,
        eigenvalues=(4.0, 2.0, 0.1, 0.09, 0.08, 0.07, 0.06, 0.05),
        class_offsets=(
            (1.5, 1.0, 0, 0, 0, 0, 0, 0),
            (-1.5, -1.0, 0, 0, 0, 0, 0, 0),
        ),
    ),
    "drift": SyntheticSpec(
        B=64, N=200, d=6, eigenvalues=(5.0, 3.0, 1.0, 0.5, 0.2, 0.1),
        change_point=100, drift_seed=101,
    ),
    "small-sample": SyntheticSpec(
        B=4, N=100, d=8, eigenvalues=(5.0, 3.0, 1.0, 0.5, 0.2, 0.1, 0.05, 0.02),
    ),
    "bench": SyntheticSpec(B=512, N=250, d=32, eigenvalues=_gapped((8.0, 6.0, 4.0, 3.0), 28, tail_top=0.1)),
}


def _features(data):
    if isinstance(data, (Dataset, CompactRepresentation)):
        values, labels = data.values, data.labels
    else:
        values, labels = data
        values = np.asarray(values, dtype=float)
    if labels is None:
        raise Unlabeled("nearest-neighbour proxy needs labelled instances")
    return values.reshape(values.shape[0], -1), np.asarray(labels)


def knn_proxy(train, test, k_neighbors: int = 1) -> float:
    """Accuracy of a Euclidean k-NN classifier on flattened (time x feature) vectors.

    ``train``/``test`` are labelled :class:`Dataset` or
    :class:`CompactRepresentation` objects, or ``(values, labels)`` pairs.
    Ties go to the lowest training index.
    """
    Xtr, ytr = _features(train)
    Xte, yte = _features(test)
    if Xtr.shape[1] != Xte.shape[1]:
        raise DimensionMismatch(
            f"train has {Xtr.shape[1]} features per instance, test has {Xte.shape[1]}"
        )
    if k_neighbors < 1:
        raise InputError("k_neighbors must be >= 1")
    dist = cdist(Xte, Xtr, metric="sqeuclidean")
    k = min(k_neighbors, Xtr.shape[0])
    nearest = np.argsort(dist, axis=1, kind="stable")[:, :k]
    if k == 1:
        pred = ytr[nearest[:, 0]]
    else:
        pred = np.empty(len(yte), dtype=ytr.dtype)
        for row, idx in enumerate(nearest):
            votes = ytr[idx]
            labels, counts = np.unique(votes, return_counts=True)
            winners = set(labels[counts == counts.max()])
            pred[row] = next(v for v in votes if v in winners)
    return float(np.mean(pred == yte))


def split_alternating(n: int):
    """Even positions train, odd positions test."""
    idx = np.arange(n)
    return idx[::2], idx[1::2]


@dataclass(frozen=True)
class SweepCell:
    T: int
    K: int
    accuracy: float
    reconstruction_error: float
    wall_time: float
    converged_fraction: float
    unstable: bool
    error: str = ""

    def outcome(self) -> tuple:
        """Every field except the wall time."""
        return (self.T, self.K, self.accuracy, self.reconstruction_error,
                self.converged_fraction, self.unstable, self.error)


@dataclass(frozen=True)
class SweepResult:
    cells: tuple

    FIELDS = ("T", "K", "accuracy", "reconstruction_error", "wall_time",
              "converged_fraction", "unstable", "error")

    def cell(self, T, K) -> SweepCell:
        for c in self.cells:
            if c.T == T and c.K == K:
                return c
        raise KeyError((T, K))

    def instability_rate(self, K) -> float:
        hits = [c.unstable for c in self.cells if c.K == K]
        return float(np.mean(hits)) if hits else float("nan")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.FIELDS)
        for c in self.cells:
            w.writerow([repr(v) if isinstance(v, float) else v
                        for v in dataclasses.astuple(c)])
        return buf.getvalue()


def _run_cell(ds: Dataset, config: RunConfig) -> SweepCell:
    T, K = config.time_batch, config.components
    start = time.perf_counter()
    try:
        rep = compress(ds, config)
    except TSBPCAError as exc:
        return SweepCell(T, K, float("nan"), float("nan"),
                         time.perf_counter() - start, 0.0, True, str(exc))
    elapsed = time.perf_counter() - start

    finite = bool(np.isfinite(rep.values).all())
    try:
        err = reconstruction_error(ds, rep.final_q)
    except TSBPCAError:
        err = float("nan")
    acc = float("nan")
    if ds.labels is not None and ds.n_instances >= 2:
        tr, te = split_alternating(ds.n_instances)
        acc = knn_proxy((rep.values[tr], ds.labels[tr]), (rep.values[te], ds.labels[te]))
    frac = rep.converged_fraction
    return SweepCell(T, K, acc, err, elapsed, frac, frac < 1.0 or not finite)


def sweep(ds: Dataset, t_values: Sequence[int], k_values: Sequence[int],
          template: RunConfig = RunConfig(), jobs: int = 1) -> SweepResult:
    """Grid of (T, K) runs. Per-cell failures are recorded, never raised."""
    for k in k_values:
        if k > ds.n_vars:
            raise InputError(f"K={k} violates K <= d (d={ds.n_vars})")
    configs = []
    for t in t_values:
        for k in k_values:
            try:
                configs.append(dataclasses.replace(template, time_batch=t, components=k))
            except InputError as exc:
                configs.append((t, k, str(exc)))

    def bad(item):
        t, k, msg = item
        return SweepCell(t, k, float("nan"), float("nan"), 0.0, 0.0, True, msg)

    runnable = [c for c in configs if isinstance(c, RunConfig)]
    if jobs > 1 and len(runnable) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            done = iter(list(pool.map(_run_cell, [ds] * len(runnable), runnable)))
    else:
        done = iter([_run_cell(ds, c) for c in runnable])
    cells = [next(done) if isinstance(c, RunConfig) else bad(c) for c in configs]
    return SweepResult(tuple(cells))


@dataclass(frozen=True)
class BenchRow:
    N: int
    seconds: float
    runs: tuple


def bench_scaling(family: Sequence, config: RunConfig, repeats: int = 3, seed=0):
    """Median wall time of :func:`compress` for each dataset in ``family``.

    ``family`` items are :class:`SyntheticSpec` (generated with ``seed``)
    or ready-made :class:`Dataset` objects. After one untimed warm-up run
    per item, the timed repeats are interleaved round-robin across items
    so that slow drifts in machine speed hit every size alike.
    """
    datasets = [generate(item, seed) if isinstance(item, SyntheticSpec) else item
                for item in family]
    for ds in datasets:
        compress(ds, config)
    runs = [[] for _ in datasets]
    for _ in range(repeats):
        for ds, bucket in zip(datasets, runs):
            start = time.perf_counter()
            compress(ds, config)
            bucket.append(time.perf_counter() - start)
    return [BenchRow(ds.n_times, statistics.median(r), tuple(r))
            for ds, r in zip(datasets, runs)]


def bench_csv(rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["N", "median_seconds", "ratio_to_previous"])
    prev = None
    for r in rows:
        ratio = "" if prev is None else repr(r.seconds / prev)
        w.writerow([r.N, repr(r.seconds), ratio])
        prev = r.seconds
    return buf.getvalue()
