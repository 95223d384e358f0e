"""Temporal streaming batch PCA.

The dataset is consumed one time point at a time. At every time point the
``B x d`` slice of all instances defines a sample second-moment matrix
``X^T X / B``; a block power iteration with QR re-orthonormalisation finds
the top-``k`` eigenvectors of a convex mix of that matrix and the carried
spectral history ``Q diag(lam) Q^T``. Time points are grouped into batches
of ``T``; each batch is projected onto the basis held at the end of the
batch, and that basis is carried into the next batch.

The very first time point has no history, so it is power-iterated against
``I + X^T X / B`` instead.
"""

from __future__ import annotations

import logging

import numpy as np

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
    iter_batches,
    validate_dataset,
)
from .exceptions import BadCounter, BadDimensions, RankDeficient, ShapeMismatch

logger = logging.getLogger(__name__)

RANK_TOL = 1e-12


def _as_matrix(x):
    return x.matrix if isinstance(x, TimePointSlice) else np.asarray(x, dtype=np.float64)


def _check_slice(q, X, B):
    if X.ndim != 2 or X.shape[1] != q.shape[0]:
        raise ShapeMismatch(
            f"time-point slice has shape {X.shape}, expected (B, {q.shape[0]})"
        )
    if B is not None and X.shape[0] != B:
        raise ShapeMismatch(f"time-point slice has {X.shape[0]} rows, expected B={B}")


def projector_gap(q_new, q_old) -> float:
    """``||P_new - P_old||_F / sqrt(2k)`` for orthonormal bases of equal rank.

    Evaluated as ``||(I - P_old) q_new||_F / sqrt(k)``, which keeps full
    relative precision for nearly identical subspaces.
    """
    k = q_new.shape[1]
    resid = q_new - q_old @ (q_old.T @ q_new)
    return float(np.linalg.norm(resid) / np.sqrt(k))


def init_state(d: int, k: int, seed) -> ProjectionState:
    """Random orthonormal ``d x k`` starting basis drawn from ``seed``."""
    if not (1 <= k <= d):
        raise BadDimensions(f"need 1 <= k <= d, got k={k}, d={d}")
    rng = np.random.default_rng(seed)
    h = rng.standard_normal((d, k))
    q, _ = qr_orthonormalize(h)
    return ProjectionState(q, np.zeros(k), 0)


def bootstrap_update(state: ProjectionState, x, B=None) -> np.ndarray:
    """``W = Q + (1/B) X^T X Q`` for the first time point."""
    X = _as_matrix(x)
    q = state.q
    _check_slice(q, X, B)
    B = X.shape[0]
    return q + (X.T @ (X @ q)) / B


def history_weights(j: int):
    """Weights of the carried history and of the new time point."""
    if j < 2:
        raise BadCounter(f"history update needs j >= 2, got j={j}")
    return (j - 1) / j, 1 / j


def history_update(state: ProjectionState, q_iter, x, B=None, j=None) -> np.ndarray:
    """``W = (j-1)/j Q_prev L_prev Q_prev^T q + (1/j)(1/B) X^T X q``."""
    X = _as_matrix(x)
    q_iter = np.asarray(q_iter, dtype=np.float64)
    if j is None:
        j = state.time_index + 1
    w_hist, w_new = history_weights(j)
    q_prev, lam = state.q, state.lam
    if q_iter.shape != q_prev.shape:
        raise ShapeMismatch(f"iterate shape {q_iter.shape} != state shape {q_prev.shape}")
    _check_slice(q_prev, X, B)
    B = X.shape[0]
    hist = q_prev @ (lam[:, None] * (q_prev.T @ q_iter))
    data = (X.T @ (X @ q_iter)) / B
    return w_hist * hist + w_new * data


def qr_orthonormalize(W):
    """Reduced QR with a nonnegative diagonal on ``R``.

    Raises :class:`RankDeficient` when a diagonal entry of ``R`` falls
    below ``1e-12`` relative to the largest one.
    """
    W = np.asarray(W, dtype=np.float64)
    q, r = np.linalg.qr(W)
    signs = np.where(np.diag(r) < 0, -1.0, 1.0)
    q = q * signs
    r = r * signs[:, None]
    diag = np.diag(r)
    scale = diag.max() if diag.size else 0.0
    if not np.isfinite(r).all() or scale == 0.0 or diag.min() <= RANK_TOL * scale:
        raise RankDeficient(
            f"iterate lost column rank (R diagonal min {diag.min():.3e}, max {scale:.3e})"
        )
    return q, r


def estimate_eigenvalues(W) -> np.ndarray:
    """Column norms of ``W``: one eigenvalue estimate per retained direction."""
    return np.linalg.norm(np.asarray(W, dtype=np.float64), axis=0)


def _restart_basis(d, k, seed, j, attempt):
    rng = np.random.default_rng([int(seed), int(j), int(attempt)])
    q, _ = np.linalg.qr(rng.standard_normal((d, k)))
    return q


def inner_converge(state: ProjectionState, x, B=None, j=None, config: RunConfig = None):
    """Power-iterate one time point to convergence.

    Returns the new state (basis, eigenvalue estimates, counter ``j``) and
    an :class:`InnerIterationReport`.
    """
    config = config or RunConfig(components=state.n_components)
    X = _as_matrix(x)
    _check_slice(state.q, X, B)
    if j is None:
        j = state.time_index + 1
    if j != state.time_index + 1:
        raise BadCounter(f"j={j} does not follow state counter {state.time_index}")
    if j < 1:
        raise BadCounter(f"j must be >= 1, got {j}")

    d, k = state.q.shape
    q_iter = state.q
    delta = np.inf
    converged = False
    restarts = 0
    W = None
    sweeps = 0
    while sweeps < config.max_inner_iters:
        sweeps += 1
        if j == 1:
            W = bootstrap_update(state.replace(q=q_iter), X)
        else:
            W = history_update(state, q_iter, X, j=j)
        if not W.any():
            if restarts:
                # a random basis was annihilated too: the operator is zero
                # and every basis is an eigenbasis
                delta, converged = 0.0, True
                break
            restarts += 1
            q_iter = _restart_basis(d, k, config.seed, j, restarts)
            continue
        try:
            q_new, _ = qr_orthonormalize(W)
        except RankDeficient as exc:
            exc.time_index = j
            raise
        delta = projector_gap(q_new, q_iter)
        q_iter = q_new
        if delta <= config.tol:
            converged = True
            break

    lam = estimate_eigenvalues(W)
    report = InnerIterationReport(j, sweeps, float(delta), converged, restarts)
    return ProjectionState(q_iter, lam, j), report


def _project(values, q):
    # values: (T, B, d) -> (B, T, k)
    return np.transpose(values @ q, (1, 0, 2))


def process_batch(state: ProjectionState, batch: BatchView, B=None, config: RunConfig = None):
    """Absorb every time point of ``batch`` in order, then project the batch.

    Returns ``(state, Y, reports)`` with ``Y`` shaped ``(B, T_actual, k)``.
    """
    config = config or RunConfig(components=state.n_components)
    reports = []
    for j in range(len(batch)):
        x = batch.time_point(j)
        try:
            state, report = inner_converge(state, x, B, config=config)
        except RankDeficient as exc:
            exc.time_index = x.time_index
            exc.args = (f"{exc.args[0]} at time index {x.time_index}",)
            raise
        reports.append(report)
    return state, _project(batch.values, state.q), reports


def compress(ds: Dataset, config: RunConfig) -> CompactRepresentation:
    """Run the full streaming pass over ``ds``."""
    ds = validate_dataset(ds)
    B, N, d = ds.shape
    config.check_against(N, d)

    state = init_state(d, config.components, config.seed)
    outputs, trajectory, reports, snapshots = [], [], [], []
    for batch in iter_batches(ds, config.time_batch):
        if config.counter is Counter.PER_BATCH:
            state = state.replace(time_index=0)
        try:
            state, y, batch_reports = process_batch(state, batch, B, config)
        except RankDeficient as exc:
            exc.args = (
                f"{exc.args[0]}; K={config.components} is likely too large for the "
                f"information available at B={B}, try reducing K",
            )
            raise
        if config.pooling is Pooling.MEAN:
            y = y.mean(axis=1, keepdims=True)
        outputs.append(y)
        trajectory.append((batch.index, state.lam.copy()))
        reports.extend(batch_reports)
        snapshots.append(state.q)

    n_bad = sum(not r.converged for r in reports)
    if n_bad:
        logger.debug("%d of %d time points hit max_inner_iters", n_bad, len(reports))
    return CompactRepresentation(
        values=np.concatenate(outputs, axis=1),
        eigen_trajectory=tuple(trajectory),
        config=config,
        reports=tuple(reports),
        labels=ds.labels,
        batch_components=np.stack(snapshots),
    )
