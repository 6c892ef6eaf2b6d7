"""Proportional hazards model layer on top of a baseline family.

The conditional hazard for covariates z is ``lambda(t, gamma) * exp(beta'z)``
and the survival function is ``exp(-Lambda(t, gamma) * exp(beta'z))``.  The
observed-data log density for a time/indicator pair and the per-observation
score vectors are assembled here from the hazard primitives.
"""

import numpy as np

from ._validation import as_2d_array

__all__ = [
    "linear_predictor",
    "conditional_survival",
    "survival_matrix",
    "log_density",
    "score",
]


def linear_predictor(beta, covariates):
    covariates = as_2d_array(covariates, "covariates")
    beta = np.asarray(beta, dtype=float).reshape(-1)
    if covariates.shape[1] != beta.shape[0]:
        raise ValueError(
            f"covariates have {covariates.shape[1]} columns but beta has {beta.shape[0]}"
        )
    return covariates @ beta


def conditional_survival(family, theta, covariates, times):
    """Survival probability at each row's own time, shape (n,)."""
    eta = linear_predictor(theta.beta, covariates)
    cum = family.cum_hazard(theta.gamma, np.asarray(times, dtype=float))
    return np.exp(-cum * np.exp(eta))


def survival_matrix(family, theta, covariates, time_grid):
    """Survival curves on a common time grid, shape (n, len(time_grid))."""
    eta = linear_predictor(theta.beta, covariates)
    cum = family.cum_hazard(theta.gamma, np.asarray(time_grid, dtype=float))
    return np.exp(-np.outer(np.exp(eta), cum))


def log_density(family, theta, dataset):
    """Log density of each observed (time, status) pair, shape (n,).

    Events contribute log hazard plus log survival; censored rows contribute
    log survival only.
    """
    eta = linear_predictor(theta.beta, dataset.covariates)
    cum = family.cum_hazard(theta.gamma, dataset.time)
    out = -cum * np.exp(eta)
    events = dataset.status == 1.0
    if np.any(events):
        rate = family.hazard_rate(theta.gamma, dataset.time[events])
        out[events] += np.log(rate) + eta[events]
    return out


def score(family, theta, dataset):
    """Per-observation score rows d log f / d theta, shape (n, q + p).

    Columns follow the parameter vector order: gamma block then beta block.
    """
    eta = linear_predictor(theta.beta, dataset.covariates)
    e = np.exp(eta)
    cum = family.cum_hazard(theta.gamma, dataset.time)
    cum_grad = family.cum_hazard_grad(theta.gamma, dataset.time)
    delta = dataset.status
    gamma_block = -cum_grad * e[:, None]
    events = delta == 1.0
    if np.any(events):
        gamma_block[events] += family.log_hazard_grad(theta.gamma, dataset.time[events])
    beta_block = dataset.covariates * (delta - cum * e)[:, None]
    return np.hstack([gamma_block, beta_block])
