"""Parametric baseline hazard families.

Each family exposes the baseline hazard ``lambda(t, gamma)``, its integral
``Lambda(t, gamma)``, and the two gradient primitives used throughout the
package:

* ``log_hazard_grad``: the gradient of ``log lambda(t, gamma)`` in ``gamma``,
* ``cum_hazard_grad``: the gradient of ``Lambda(t, gamma)`` in ``gamma``.

All methods are vectorized over ``t`` and return arrays with one gradient row
per time point.  ``gamma`` is always a strictly positive vector.
"""

import numpy as np

from ._validation import as_1d_array, check_finite, check_positive

__all__ = [
    "ExponentialHazard",
    "WeibullHazard",
    "PiecewiseConstantHazard",
    "baseline_from_name",
]


class BaselineHazard:
    """Common validation and shared behavior for hazard families."""

    name = ""
    n_gamma = 0

    def validate_gamma(self, gamma):
        gamma = as_1d_array(gamma, "gamma")
        if gamma.shape[0] != self.n_gamma:
            raise ValueError(
                f"{self.name} baseline needs {self.n_gamma} gamma parameter(s), "
                f"got {gamma.shape[0]}"
            )
        check_finite(gamma, "gamma")
        check_positive(gamma, "gamma")
        return gamma

    def quadrature_breaks(self, tau):
        """Integration segment endpoints on [0, tau]; subclasses add interior kinks."""
        return np.array([0.0, float(tau)])

    def default_gamma(self, rate):
        """Starting gamma with the exponential-equivalent event rate ``rate``."""
        raise NotImplementedError

    def __repr__(self):
        return f"{type(self).__name__}()"


class ExponentialHazard(BaselineHazard):
    """Constant baseline hazard: lambda(t) = gamma, Lambda(t) = gamma * t."""

    name = "exponential"
    n_gamma = 1

    def hazard_rate(self, gamma, t):
        gamma = self.validate_gamma(gamma)
        t = np.asarray(t, dtype=float)
        return np.full(t.shape, gamma[0])

    def cum_hazard(self, gamma, t):
        gamma = self.validate_gamma(gamma)
        return gamma[0] * np.asarray(t, dtype=float)

    def log_hazard_grad(self, gamma, t):
        gamma = self.validate_gamma(gamma)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return np.full((t.shape[0], 1), 1.0 / gamma[0])

    def cum_hazard_grad(self, gamma, t):
        self.validate_gamma(gamma)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return t.reshape(-1, 1).copy()

    def inverse_cum_hazard(self, gamma, u):
        gamma = self.validate_gamma(gamma)
        return np.asarray(u, dtype=float) / gamma[0]

    def default_gamma(self, rate):
        return np.array([rate])


class WeibullHazard(BaselineHazard):
    """Weibull baseline: lambda(t) = g1 * g2 * t**(g2 - 1), Lambda(t) = g1 * t**g2.

    The shape parameter g2 controls duration dependence; g2 = 1 recovers the
    exponential family.  For g2 < 1 the hazard is singular at t = 0, so rate
    evaluations there are rejected.
    """

    name = "weibull"
    n_gamma = 2

    def hazard_rate(self, gamma, t):
        gamma = self.validate_gamma(gamma)
        g1, g2 = gamma
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("times must be nonnegative")
        if g2 < 1 and np.any(t == 0):
            raise ValueError("Weibull hazard is singular at t = 0 when gamma_2 < 1")
        with np.errstate(divide="ignore"):
            out = g1 * g2 * np.power(t, g2 - 1.0)
        # g2 = 1 at t = 0 gives 0**0; the rate there is g1 by continuity
        if g2 == 1:
            out = np.where(np.asarray(t) == 0, g1, out)
        return out

    def cum_hazard(self, gamma, t):
        gamma = self.validate_gamma(gamma)
        g1, g2 = gamma
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("times must be nonnegative")
        return g1 * np.power(t, g2)

    def log_hazard_grad(self, gamma, t):
        gamma = self.validate_gamma(gamma)
        g1, g2 = gamma
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t <= 0):
            raise ValueError("log-hazard gradient needs strictly positive times")
        out = np.empty((t.shape[0], 2))
        out[:, 0] = 1.0 / g1
        out[:, 1] = 1.0 / g2 + np.log(t)
        return out

    def cum_hazard_grad(self, gamma, t):
        gamma = self.validate_gamma(gamma)
        g1, g2 = gamma
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any(t < 0):
            raise ValueError("times must be nonnegative")
        tg2 = np.power(t, g2)
        out = np.empty((t.shape[0], 2))
        out[:, 0] = tg2
        with np.errstate(divide="ignore", invalid="ignore"):
            logt = np.where(t > 0, np.log(np.where(t > 0, t, 1.0)), 0.0)
        # t**g2 * log t -> 0 as t -> 0, so the t = 0 entry is 0 by continuity
        out[:, 1] = g1 * tg2 * logt
        return out

    def inverse_cum_hazard(self, gamma, u):
        gamma = self.validate_gamma(gamma)
        g1, g2 = gamma
        u = np.asarray(u, dtype=float)
        return np.power(u / g1, 1.0 / g2)

    def default_gamma(self, rate):
        return np.array([rate, 1.0])


class PiecewiseConstantHazard(BaselineHazard):
    """Piecewise constant baseline on right-open intervals.

    ``cutpoints`` are the K-1 strictly increasing interior boundaries; the
    level gamma_k applies on [c_{k-1}, c_k), with c_0 = 0 and the last
    interval extending to infinity.
    """

    name = "piecewise"

    def __init__(self, cutpoints):
        cutpoints = as_1d_array(cutpoints, "cutpoints")
        if cutpoints.size == 0:
            raise ValueError("piecewise baseline needs at least one cutpoint")
        check_finite(cutpoints, "cutpoints")
        check_positive(cutpoints, "cutpoints")
        if np.any(np.diff(cutpoints) <= 0):
            raise ValueError("cutpoints must be strictly increasing")
        self.cutpoints = cutpoints
        self.n_gamma = cutpoints.size + 1
        # interval edges including the open right end
        self._edges = np.concatenate([[0.0], cutpoints, [np.inf]])

    def _interval_index(self, t):
        # right-open intervals: t = c_k belongs to the interval starting at c_k
        return np.searchsorted(self.cutpoints, t, side="right")

    def _occupancy(self, t):
        """Time spent in each interval up to t, shape (len(t), K)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        lo = self._edges[:-1]
        hi = self._edges[1:]
        occ = np.clip(np.minimum(t[:, None], hi[None, :]) - lo[None, :], 0.0, None)
        return occ

    def hazard_rate(self, gamma, t):
        gamma = self.validate_gamma(gamma)
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("times must be nonnegative")
        return gamma[self._interval_index(t)]

    def cum_hazard(self, gamma, t):
        gamma = self.validate_gamma(gamma)
        return self._occupancy(t) @ gamma

    def log_hazard_grad(self, gamma, t):
        gamma = self.validate_gamma(gamma)
        t = np.atleast_1d(np.asarray(t, dtype=float))
        idx = self._interval_index(t)
        out = np.zeros((t.shape[0], self.n_gamma))
        out[np.arange(t.shape[0]), idx] = 1.0 / gamma[idx]
        return out

    def cum_hazard_grad(self, gamma, t):
        self.validate_gamma(gamma)
        return self._occupancy(t)

    def inverse_cum_hazard(self, gamma, u):
        gamma = self.validate_gamma(gamma)
        u = np.atleast_1d(np.asarray(u, dtype=float))
        widths = np.diff(self._edges[:-1])
        # cumulative hazard reached at each finite edge
        cum_at_edges = np.concatenate([[0.0], np.cumsum(gamma[:-1] * widths)])
        seg = np.searchsorted(cum_at_edges, u, side="right") - 1
        seg = np.clip(seg, 0, self.n_gamma - 1)
        lo = self._edges[seg]
        return lo + (u - cum_at_edges[seg]) / gamma[seg]

    def quadrature_breaks(self, tau):
        tau = float(tau)
        inner = self.cutpoints[self.cutpoints < tau]
        return np.concatenate([[0.0], inner, [tau]])

    def default_gamma(self, rate):
        return np.full(self.n_gamma, rate)

    def __repr__(self):
        return f"PiecewiseConstantHazard(cutpoints={self.cutpoints.tolist()})"


def baseline_from_name(name, cutpoints=None):
    """Build a hazard family from its CLI/config name."""
    name = str(name).lower()
    if name == "exponential":
        return ExponentialHazard()
    if name == "weibull":
        return WeibullHazard()
    if name == "piecewise":
        if cutpoints is None:
            raise ValueError("piecewise baseline requires cutpoints")
        return PiecewiseConstantHazard(cutpoints)
    raise ValueError(
        f"unknown baseline family {name!r}; choose exponential, weibull, or piecewise"
    )
