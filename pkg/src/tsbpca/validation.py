"""Input checks for array-like panels, in the spirit of sklearn's ``check_array``."""

import numpy as np

from ._types import Dataset, validate_dataset
from .exceptions import ShapeMismatch


def check_panel(X, *, n_features=None, n_timepoints=None) -> Dataset:
    """Coerce ``X`` (array-like ``(B, N, d)`` or :class:`Dataset`) to a validated Dataset."""
    if isinstance(X, Dataset):
        ds = X
    else:
        arr = np.asarray(X, dtype=np.float64)
        if arr.ndim == 2:
            raise ShapeMismatch(
                f"expected a 3-D panel (instances, time, variables), got a 2-D array of shape "
                f"{arr.shape}; reshape single-variable data with X[:, :, None]"
            )
        ds = Dataset(arr)
    validate_dataset(ds)
    if n_features is not None and ds.n_vars != n_features:
        raise ShapeMismatch(f"X has {ds.n_vars} variables, but the model was fitted with {n_features}")
    if n_timepoints is not None and ds.n_times != n_timepoints:
        raise ShapeMismatch(
            f"X has {ds.n_times} time points, but the model was fitted with {n_timepoints}"
        )
    return ds


def check_labels(y, n_instances):
    if y is None:
        return None
    y = np.asarray(y)
    if y.shape != (n_instances,):
        raise ShapeMismatch(f"expected {n_instances} labels, got shape {y.shape}")
    return y
