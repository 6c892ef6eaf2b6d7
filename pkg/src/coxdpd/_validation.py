"""Input validation helpers shared across the package."""

import numpy as np


def as_1d_array(values, name, dtype=float):
    """Coerce to a 1-d float array, rejecting anything that does not convert."""
    arr = np.asarray(values, dtype=dtype)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional, got shape {arr.shape}")
    return arr


def as_2d_array(values, name, n_rows=None):
    """Coerce to a 2-d float array; (n,) input is treated as a single column."""
    arr = np.asarray(values, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise ValueError(f"{name} must be two-dimensional, got shape {arr.shape}")
    if n_rows is not None and arr.shape[0] != n_rows:
        raise ValueError(
            f"{name} must have {n_rows} rows to match the data, got {arr.shape[0]}"
        )
    return arr


def check_finite(arr, name):
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    return arr


def check_positive(arr, name):
    if np.any(np.asarray(arr) <= 0):
        raise ValueError(f"{name} must be strictly positive")
    return arr


def check_alpha(alpha):
    """The tuning constant: 0 selects maximum likelihood, larger is more robust."""
    alpha = float(alpha)
    if not np.isfinite(alpha) or alpha < 0:
        raise ValueError(f"alpha must be a finite value >= 0, got {alpha}")
    return alpha


def check_tau(tau, max_time=None):
    """Upper end of the integration window; must cover every observed time."""
    tau = float(tau)
    if np.isnan(tau) or tau <= 0:
        raise ValueError(f"tau must be positive, got {tau}")
    if max_time is not None and tau < max_time:
        raise ValueError(
            f"tau ({tau}) must not be smaller than the largest observed time ({max_time})"
        )
    return tau
