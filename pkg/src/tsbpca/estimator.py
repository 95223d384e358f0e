"""Scikit-learn compatible wrapper around the streaming pass."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from ._types import Pooling, RunConfig, batch_bounds
from .streaming import compress
from .validation import check_labels, check_panel


class TemporalStreamingPCA(TransformerMixin, BaseEstimator):
    """Compress a ``(instances, time, variables)`` panel to ``n_components`` variables.

    ``fit`` streams through the time axis and keeps one projection basis
    per time batch. ``transform`` projects each batch of a new panel of
    the same length onto the matching fitted basis, so train and test sets
    end up in the same coordinates. ``fit_transform`` returns the
    streaming output itself.

    Parameters
    ----------
    n_components : int
        Number of retained directions ``K``.
    time_batch : int
        Time points per batch ``T``.
    tol : float
        Subspace-distance threshold of the inner power iteration.
    max_iter : int
        Cap on power-iteration sweeps per time point.
    pooling : {"none", "mean-over-batch"}
        Average each projected batch over time.
    counter : {"global", "per-batch"}
        Whether the history weight counter runs over the whole sequence
        or restarts at each batch.
    random_state : int or None
        Seed of the random starting basis.

    Attributes
    ----------
    components_ : ndarray of shape (n_components, n_features)
        Basis after the last time point, one direction per row.
    batch_components_ : ndarray of shape (n_batches, n_features, n_components)
    eigenvalues_ : ndarray of shape (n_components,)
    eigen_trajectory_ : list of (batch index, eigenvalue array)
    reports_ : tuple of InnerIterationReport
    embedding_ : ndarray
        Output of the streaming pass over the training panel.
    """

    def __init__(self, n_components=1, time_batch=1, tol=1e-6, max_iter=100,
                 pooling="none", counter="global", random_state=0):
        self.n_components = n_components
        self.time_batch = time_batch
        self.tol = tol
        self.max_iter = max_iter
        self.pooling = pooling
        self.counter = counter
        self.random_state = random_state

    def _config(self):
        seed = self.random_state
        if seed is None:
            seed = int(np.random.SeedSequence().entropy % (2**63))
        return RunConfig(
            time_batch=self.time_batch,
            components=self.n_components,
            tol=self.tol,
            max_inner_iters=self.max_iter,
            seed=seed,
            pooling=self.pooling,
            counter=self.counter,
        )

    def fit(self, X, y=None):
        ds = check_panel(X)
        check_labels(y, ds.n_instances)
        config = self._config()
        rep = compress(ds, config)
        self.config_ = config
        self.batch_components_ = rep.batch_components
        self.components_ = rep.final_q.T.copy()
        self.eigenvalues_ = rep.eigen_trajectory[-1][1].copy()
        self.eigen_trajectory_ = list(rep.eigen_trajectory)
        self.reports_ = rep.reports
        self.converged_fraction_ = rep.converged_fraction
        self.embedding_ = np.array(rep.values)
        self.n_features_in_ = ds.n_vars
        self.n_timepoints_ = ds.n_times
        return self

    def fit_transform(self, X, y=None, **fit_params):
        return self.fit(X, y).embedding_.copy()

    def transform(self, X):
        check_is_fitted(self, "batch_components_")
        ds = check_panel(X, n_features=self.n_features_in_, n_timepoints=self.n_timepoints_)
        T = self.config_.time_batch
        pieces = []
        for i, q in enumerate(self.batch_components_):
            span = batch_bounds(ds.n_times, i, T)
            y = ds.values[:, span.start:span.stop, :] @ q
            if self.config_.pooling is Pooling.MEAN:
                y = y.mean(axis=1, keepdims=True)
            pieces.append(y)
        return np.concatenate(pieces, axis=1)

    def inverse_transform(self, Y):
        """Map back to variable space (only defined without pooling)."""
        check_is_fitted(self, "batch_components_")
        if self.config_.pooling is Pooling.MEAN:
            raise ValueError("inverse_transform is undefined for pooled output")
        Y = np.asarray(Y, dtype=np.float64)
        T = self.config_.time_batch
        pieces = []
        for i, q in enumerate(self.batch_components_):
            span = batch_bounds(Y.shape[1], i, T)
            pieces.append(Y[:, span.start:span.stop, :] @ q.T)
        return np.concatenate(pieces, axis=1)
