"""Post-fit inference: sandwich covariance, influence, and residuals."""

import csv
import dataclasses
import io

import numpy as np
from scipy import linalg

from . import dpd, model
from .data import parameter_names

__all__ = [
    "SingularInformationError",
    "SandwichResult",
    "InfluenceRecord",
    "ResidualRecord",
    "per_observation_contribution",
    "sandwich_covariance",
    "influence_diagnostics",
    "residual_diagnostics",
    "write_diagnostics_csv",
]

per_observation_contribution = dpd.per_observation_contribution

_CONDITION_LIMIT = 1e12
_DIAGNOSTIC_COLUMNS = [
    "index",
    "time",
    "status",
    "cox_snell",
    "martingale",
    "deviance",
    "influence_norm",
    "outlier_flag",
]


class SingularInformationError(RuntimeError):
    """Raised when the estimated information matrix cannot be inverted."""

    def __init__(self, condition_number):
        self.condition_number = condition_number
        super().__init__(
            "information matrix is numerically singular "
            f"(condition number {condition_number:.3e})"
        )


@dataclasses.dataclass(frozen=True)
class SandwichResult:
    covariance: np.ndarray
    bread: np.ndarray  # J = -d(estimating function)/d(theta), symmetrized
    meat: np.ndarray   # K = average outer product of contribution rows
    condition_number: float

    @property
    def standard_errors(self):
        return np.sqrt(np.clip(np.diag(self.covariance), 0.0, None))


@dataclasses.dataclass(frozen=True)
class InfluenceRecord:
    index: int
    contribution: np.ndarray
    norm: float
    flagged: bool


@dataclasses.dataclass(frozen=True)
class ResidualRecord:
    index: int
    cox_snell: float
    martingale: float
    deviance: float
    outlier: bool


def _estimating_vector(family, theta, dataset, alpha, quadrature):
    value = dpd.estimating_function(family, theta, dataset, alpha, quadrature)
    return value.as_vector


def _bread_matrix(family, theta, dataset, alpha, quadrature):
    """Central finite differences of the estimating function in natural
    parameters; steps shrink near the gamma positivity boundary."""
    from .data import Theta

    vec = theta.as_vector
    dim = vec.shape[0]
    jac = np.empty((dim, dim))
    for k in range(dim):
        h = 1e-5 * max(1.0, abs(vec[k]))
        if k < theta.q:
            h = min(h, 0.5 * vec[k])  # keep gamma strictly positive
        up, down = vec.copy(), vec.copy()
        up[k] += h
        down[k] -= h
        u_up = _estimating_vector(family, Theta.from_vector(up, theta.q), dataset, alpha, quadrature)
        u_down = _estimating_vector(family, Theta.from_vector(down, theta.q), dataset, alpha, quadrature)
        jac[:, k] = (u_up - u_down) / (2.0 * h)
    bread = -jac
    return 0.5 * (bread + bread.T)


def sandwich_covariance(family, dataset, fit, quadrature=dpd.DEFAULT_QUADRATURE):
    """Sandwich covariance J^-1 K J^-1 / n of the fitted parameter vector.

    J is the (symmetrized, finite-difference) negative Jacobian of the
    estimating function and K the raw second moment of the per-observation
    contribution rows at the fitted point.
    """
    theta = fit.theta
    rows = dpd.per_observation_contribution(family, theta, dataset, fit.alpha, quadrature)
    meat = rows.T @ rows / dataset.n
    bread = _bread_matrix(family, theta, dataset, fit.alpha, quadrature)
    condition = float(np.linalg.cond(bread))
    if not np.isfinite(condition) or condition > _CONDITION_LIMIT:
        raise SingularInformationError(condition)
    inner = linalg.solve(bread, meat, assume_a="sym")
    covariance = linalg.solve(bread, inner.T, assume_a="sym") / dataset.n
    covariance = 0.5 * (covariance + covariance.T)
    return SandwichResult(
        covariance=covariance, bread=bread, meat=meat, condition_number=condition
    )


def influence_diagnostics(family, dataset, fit, quadrature=dpd.DEFAULT_QUADRATURE,
                          flag_multiplier=3.0, sandwich=None):
    """Per-observation influence: bread-inverse times the contribution row.

    A row is flagged when its influence norm exceeds ``flag_multiplier``
    times the median norm.
    """
    if sandwich is None:
        sandwich = sandwich_covariance(family, dataset, fit, quadrature)
    rows = dpd.per_observation_contribution(family, fit.theta, dataset, fit.alpha, quadrature)
    influence = linalg.solve(sandwich.bread, rows.T, assume_a="sym").T
    norms = np.linalg.norm(influence, axis=1)
    cutoff = flag_multiplier * float(np.median(norms))
    return [
        InfluenceRecord(
            index=i,
            contribution=influence[i],
            norm=float(norms[i]),
            flagged=bool(norms[i] > cutoff),
        )
        for i in range(dataset.n)
    ]


def residual_diagnostics(family, dataset, fit, outlier_threshold=2.0):
    """Cox-Snell, martingale, and deviance residuals of a fitted model.

    With a well specified model the Cox-Snell residuals of events behave like
    a unit exponential sample; deviance residuals beyond the threshold in
    absolute value are flagged as outliers.
    """
    theta = fit.theta
    eta = model.linear_predictor(theta.beta, dataset.covariates)
    cox_snell = family.cum_hazard(theta.gamma, dataset.time) * np.exp(eta)
    martingale = dataset.status - cox_snell
    events = dataset.status == 1.0
    inner = martingale + np.where(events, np.log(np.clip(cox_snell, 1e-300, None)), 0.0)
    deviance = np.sign(martingale) * np.sqrt(np.clip(-2.0 * inner, 0.0, None))
    return [
        ResidualRecord(
            index=i,
            cox_snell=float(cox_snell[i]),
            martingale=float(martingale[i]),
            deviance=float(deviance[i]),
            outlier=bool(abs(deviance[i]) > outlier_threshold),
        )
        for i in range(dataset.n)
    ]


def write_diagnostics_csv(path, dataset, residuals, influences):
    """Write one diagnostics row per observation with the standard columns."""
    if len(residuals) != dataset.n or len(influences) != dataset.n:
        raise ValueError("diagnostics records must cover every observation")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(_DIAGNOSTIC_COLUMNS)
    for res, inf in zip(residuals, influences):
        writer.writerow(
            [
                res.index,
                f"{dataset.time[res.index]:.17g}",
                int(dataset.status[res.index]),
                f"{res.cox_snell:.10g}",
                f"{res.martingale:.10g}",
                f"{res.deviance:.10g}",
                f"{inf.norm:.10g}",
                int(res.outlier),
            ]
        )
    with open(path, "w", newline="") as handle:
        handle.write(buffer.getvalue())


def fit_report(family, dataset, fit, sandwich=None, warnings=()):
    """JSON-ready summary of a fit: named estimates, errors, and metadata."""
    names = parameter_names(fit.theta.q, fit.theta.p)
    estimates = dict(zip(names, (float(v) for v in fit.theta.as_vector)))
    report = {
        "family": family.name,
        "alpha": fit.alpha,
        "estimates": estimates,
        "standard_errors": None,
        "covariance": None,
        "objective_value": fit.objective_value,
        "estimating_norm": fit.estimating_norm,
        "converged": fit.converged,
        "iterations": fit.iterations,
        "n": dataset.n,
        "n_events": dataset.n_events,
        "tau": fit.tau,
    }
    if sandwich is not None:
        report["standard_errors"] = dict(
            zip(names, (float(v) for v in sandwich.standard_errors))
        )
        report["covariance"] = [[float(v) for v in row] for row in sandwich.covariance]
    if warnings:
        report["warnings"] = list(warnings)
    if fit.message:
        report["message"] = fit.message
    return report
