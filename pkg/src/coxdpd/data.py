"""Survival data containers, parameter vectors, and CSV round-tripping."""

import csv
import dataclasses
import io
import os

import numpy as np

from ._validation import as_1d_array, as_2d_array, check_finite, check_tau

__all__ = ["Theta", "Dataset", "ingest_csv", "write_csv", "parameter_names"]


@dataclasses.dataclass(frozen=True)
class Theta:
    """Full parameter vector: baseline parameters gamma and regression beta."""

    gamma: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "gamma", as_1d_array(self.gamma, "gamma"))
        object.__setattr__(self, "beta", np.asarray(self.beta, dtype=float).reshape(-1))

    @property
    def q(self):
        return self.gamma.shape[0]

    @property
    def p(self):
        return self.beta.shape[0]

    @property
    def as_vector(self):
        return np.concatenate([self.gamma, self.beta])

    @classmethod
    def from_vector(cls, vec, q):
        vec = as_1d_array(vec, "theta")
        return cls(gamma=vec[:q], beta=vec[q:])


def parameter_names(q, p):
    """Names in vector order: gamma_1..gamma_q then beta_1..beta_p."""
    return [f"gamma_{j + 1}" for j in range(q)] + [f"beta_{j + 1}" for j in range(p)]


@dataclasses.dataclass(frozen=True)
class Dataset:
    """Right-censored sample: times, event indicators, covariates, and the
    upper end tau of the integration window (defaults to the largest time)."""

    time: np.ndarray
    status: np.ndarray
    covariates: np.ndarray
    tau: float = None

    def __post_init__(self):
        time = as_1d_array(self.time, "time")
        check_finite(time, "time")
        if time.size == 0:
            raise ValueError("dataset must contain at least one observation")
        if np.any(time <= 0):
            raise ValueError("times must be strictly positive")
        status = as_1d_array(self.status, "status")
        if not np.all(np.isin(status, (0.0, 1.0))):
            raise ValueError("status must contain only 0 (censored) and 1 (event)")
        if status.shape[0] != time.shape[0]:
            raise ValueError("time and status must have the same length")
        covariates = as_2d_array(self.covariates, "covariates", n_rows=time.shape[0])
        check_finite(covariates, "covariates")
        tau = float(time.max()) if self.tau is None else check_tau(self.tau, time.max())
        object.__setattr__(self, "time", time)
        object.__setattr__(self, "status", status)
        object.__setattr__(self, "covariates", covariates)
        object.__setattr__(self, "tau", tau)

    @property
    def n(self):
        return self.time.shape[0]

    @property
    def p(self):
        return self.covariates.shape[1]

    @property
    def n_events(self):
        return int(self.status.sum())

    def subset(self, mask):
        """New dataset keeping rows where mask is true; tau is preserved."""
        mask = np.asarray(mask, dtype=bool)
        return Dataset(
            time=self.time[mask],
            status=self.status[mask],
            covariates=self.covariates[mask],
            tau=self.tau,
        )


def _parse_float(text, row_number, column):
    try:
        return float(text)
    except (TypeError, ValueError):
        raise ValueError(
            f"row {row_number}: could not parse {column}={text!r} as a number"
        ) from None


def ingest_csv(path, tau=None):
    """Read a dataset from CSV with header ``time,status,<covariate columns...>``.

    Raises ValueError with the offending row number for malformed input.
    """
    if not os.path.exists(path):
        raise ValueError(f"data file not found: {path}")
    with open(path, newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        header = [h.strip() for h in header]
        if len(header) < 2 or header[0] != "time" or header[1] != "status":
            raise ValueError(
                f"{path}: header must start with 'time,status', got {','.join(header)}"
            )
        covariate_names = header[2:]
        times, statuses, rows = [], [], []
        for row_number, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(header):
                raise ValueError(
                    f"row {row_number}: expected {len(header)} fields, got {len(row)}"
                )
            times.append(_parse_float(row[0], row_number, "time"))
            status = _parse_float(row[1], row_number, "status")
            if status not in (0.0, 1.0):
                raise ValueError(f"row {row_number}: status must be 0 or 1, got {row[1]}")
            statuses.append(status)
            rows.append(
                [_parse_float(cell, row_number, name) for cell, name in zip(row[2:], covariate_names)]
            )
    if not times:
        raise ValueError(f"{path}: no data rows")
    covariates = np.asarray(rows, dtype=float).reshape(len(times), len(covariate_names))
    dataset = Dataset(
        time=np.asarray(times),
        status=np.asarray(statuses),
        covariates=covariates,
        tau=tau,
    )
    return dataset, covariate_names


def write_csv(dataset, path, covariate_names=None):
    """Write a dataset back to CSV; values carry 17 significant digits so a
    write/ingest round trip reproduces the arrays exactly."""
    if covariate_names is None:
        covariate_names = [f"z{j + 1}" for j in range(dataset.p)]
    if len(covariate_names) != dataset.p:
        raise ValueError("covariate_names length must match the number of covariates")
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["time", "status"] + list(covariate_names))
    for i in range(dataset.n):
        row = [f"{dataset.time[i]:.17g}", f"{int(dataset.status[i])}"]
        row += [f"{value:.17g}" for value in dataset.covariates[i]]
        writer.writerow(row)
    with open(path, "w", newline="") as handle:
        handle.write(buffer.getvalue())
