"""Command line interface.

Subcommands: ``fit`` (single tuning constant), ``path`` (a grid of tuning
constants with warm starts), ``diagnose`` (residual and influence CSV from a
saved fit report), and ``simulate`` (bias/MSE study driven by a config file).

Exit codes: 0 on success, 1 for usage or input errors, 2 when a requested
fit did not converge (reports are still written in that case).
"""

import argparse
import csv
import io
import json
import os
import sys

import numpy as np

from . import inference
from .data import Dataset, Theta, ingest_csv, parameter_names, write_csv
from .dpd import QuadratureConfig
from .fitting import FitOptions, fit_mdpde, fit_path
from .hazards import baseline_from_name
from .simulate import (
    DEFAULT_ALPHA_GRID,
    load_study_config,
    run_study,
    write_study_csvs,
)

__all__ = ["main"]


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


def _float_list(text, name):
    try:
        values = [float(v.strip()) for v in text.split(",") if v.strip()]
    except ValueError:
        raise _UsageError(f"could not parse {name} from {text!r}") from None
    if not values:
        raise _UsageError(f"{name} must contain at least one value")
    return values


def _add_model_arguments(parser):
    parser.add_argument("data", help="CSV file with header time,status,<covariates...>")
    parser.add_argument("--family", default="exponential",
                        choices=["exponential", "weibull", "piecewise"])
    parser.add_argument("--cutpoints", default=None,
                        help="comma separated boundaries for the piecewise family")
    parser.add_argument("--tau", type=float, default=None,
                        help="integration window end (default: largest observed time)")
    parser.add_argument("--nodes", type=int, default=200, help="quadrature nodes")


def _build_parser():
    parser = _Parser(prog="coxdpd",
                     description="Robust parametric proportional hazards estimation")
    sub = parser.add_subparsers(dest="command", required=True)

    fit = sub.add_parser("fit", help="fit at a single tuning constant")
    _add_model_arguments(fit)
    fit.add_argument("--alpha", type=float, default=0.3,
                     help="tuning constant; 0 is maximum likelihood")
    fit.add_argument("--gamma-init", default=None, help="comma separated start for gamma")
    fit.add_argument("--beta-init", default=None, help="comma separated start for beta")
    fit.add_argument("--out", default=None, help="write the JSON report here")

    path = sub.add_parser("path", help="fit over a grid of tuning constants")
    _add_model_arguments(path)
    path.add_argument("--alphas", default=",".join(str(a) for a in DEFAULT_ALPHA_GRID),
                      help="comma separated tuning constants")
    path.add_argument("--out", default=None, help="write the JSON report list here")
    path.add_argument("--summary-out", default=None,
                      help="write the estimate-versus-alpha CSV table here")

    diagnose = sub.add_parser("diagnose", help="residual and influence diagnostics")
    diagnose.add_argument("data", help="CSV data file the report refers to")
    diagnose.add_argument("--fit", required=True, help="JSON fit report")
    diagnose.add_argument("--out", required=True, help="diagnostics CSV destination")
    diagnose.add_argument("--drop-outliers-out", default=None,
                          help="also write the data with flagged outliers removed")

    simulate = sub.add_parser("simulate", help="run a bias/MSE simulation study")
    simulate.add_argument("--config", required=True, help="key = value study file")
    simulate.add_argument("--out-dir", required=True, help="directory for bias.csv and mse.csv")
    simulate.add_argument("--jobs", type=int, default=1,
                          help="worker processes (results identical to serial)")
    return parser


def _parse_cutpoints(args):
    if args.family == "piecewise":
        if not args.cutpoints:
            raise _UsageError("piecewise family requires --cutpoints")
        return _float_list(args.cutpoints, "cutpoints")
    if args.cutpoints:
        raise _UsageError("--cutpoints only applies to the piecewise family")
    return None


def _load_dataset(args):
    dataset, _ = ingest_csv(args.data, tau=args.tau)
    return dataset


def _initial_theta(args, family, dataset):
    if args.gamma_init is None and args.beta_init is None:
        return None
    if args.gamma_init is None or args.beta_init is None:
        raise _UsageError("provide both --gamma-init and --beta-init or neither")
    gamma = _float_list(args.gamma_init, "gamma-init")
    beta = _float_list(args.beta_init, "beta-init")
    if len(gamma) != family.n_gamma:
        raise _UsageError(f"{args.family} family needs {family.n_gamma} gamma value(s)")
    if len(beta) != dataset.p:
        raise _UsageError(f"data has {dataset.p} covariates but beta-init has {len(beta)}")
    return Theta(gamma=np.asarray(gamma), beta=np.asarray(beta))


def _report_with_errors(family, dataset, result, quadrature, cutpoints):
    warnings = []
    sandwich = None
    try:
        sandwich = inference.sandwich_covariance(family, dataset, result, quadrature)
    except inference.SingularInformationError as exc:
        warnings.append(str(exc))
    report = inference.fit_report(family, dataset, result, sandwich, warnings)
    if cutpoints is not None:
        report["cutpoints"] = list(cutpoints)
    return report


def _emit_json(payload, destination):
    text = json.dumps(payload, indent=2) + "\n"
    if destination is None:
        sys.stdout.write(text)
    else:
        with open(destination, "w") as handle:
            handle.write(text)


def _cmd_fit(args):
    if args.alpha < 0:
        raise _UsageError(f"alpha must be >= 0, got {args.alpha}")
    cutpoints = _parse_cutpoints(args)
    family = baseline_from_name(args.family, cutpoints)
    dataset = _load_dataset(args)
    options = FitOptions(quadrature=QuadratureConfig(nodes=args.nodes))
    init = _initial_theta(args, family, dataset)
    result = fit_mdpde(family, dataset, args.alpha, options=options, init=init)
    report = _report_with_errors(family, dataset, result, options.quadrature, cutpoints)
    _emit_json(report, args.out)
    return 0 if result.converged else 2


def _path_summary_csv(reports):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    names = list(reports[0]["estimates"])
    writer.writerow(["alpha", "converged", "iterations", "objective_value",
                     "estimating_norm"] + names)
    for report in reports:
        writer.writerow(
            [f"{report['alpha']:.10g}", int(report["converged"]), report["iterations"],
             f"{report['objective_value']:.10g}", f"{report['estimating_norm']:.10g}"]
            + [f"{report['estimates'][name]:.10g}" for name in names]
        )
    return buffer.getvalue()


def _cmd_path(args):
    alphas = _float_list(args.alphas, "alphas")
    if any(a < 0 for a in alphas):
        raise _UsageError("alphas must be nonnegative")
    cutpoints = _parse_cutpoints(args)
    family = baseline_from_name(args.family, cutpoints)
    dataset = _load_dataset(args)
    options = FitOptions(quadrature=QuadratureConfig(nodes=args.nodes))
    results = fit_path(family, dataset, alphas, options=options)
    reports = [
        _report_with_errors(family, dataset, result, options.quadrature, cutpoints)
        for result in results
    ]
    _emit_json(reports, args.out)
    if args.summary_out:
        with open(args.summary_out, "w", newline="") as handle:
            handle.write(_path_summary_csv(reports))
    return 0 if all(r.converged for r in results) else 2


def _theta_from_report(report):
    estimates = report["estimates"]
    q = sum(1 for name in estimates if name.startswith("gamma_"))
    p = sum(1 for name in estimates if name.startswith("beta_"))
    names = parameter_names(q, p)
    if sorted(names) != sorted(estimates):
        raise ValueError("fit report has unrecognized parameter names")
    vec = np.array([estimates[name] for name in names])
    return Theta.from_vector(vec, q)


def _cmd_diagnose(args):
    with open(args.fit) as handle:
        report = json.load(handle)
    for key in ("family", "alpha", "estimates", "tau"):
        if key not in report:
            raise ValueError(f"fit report is missing the {key!r} field")
    cutpoints = report.get("cutpoints")
    family = baseline_from_name(report["family"], cutpoints)
    theta = _theta_from_report(report)
    dataset, covariate_names = ingest_csv(args.data)
    if dataset.p != theta.p:
        raise ValueError(
            f"fit report has {theta.p} covariate coefficient(s) but the data "
            f"has {dataset.p} covariate column(s)"
        )
    tau = max(float(report["tau"]), float(dataset.time.max()))
    dataset = Dataset(time=dataset.time, status=dataset.status,
                      covariates=dataset.covariates, tau=tau)
    from .fitting import FitResult

    fit = FitResult(
        theta=theta, alpha=float(report["alpha"]), converged=bool(report.get("converged", True)),
        iterations=int(report.get("iterations", 0)),
        objective_value=float(report.get("objective_value") or np.nan),
        estimating_norm=float(report.get("estimating_norm") or np.nan),
        tau=tau,
    )
    residuals = inference.residual_diagnostics(family, dataset, fit)
    influences = inference.influence_diagnostics(family, dataset, fit)
    inference.write_diagnostics_csv(args.out, dataset, residuals, influences)
    if args.drop_outliers_out:
        keep = np.array([not record.outlier for record in residuals])
        write_csv(dataset.subset(keep), args.drop_outliers_out, covariate_names)
    return 0


def _cmd_simulate(args):
    config = load_study_config(args.config)
    if args.jobs < 1:
        raise _UsageError("jobs must be at least 1")
    os.makedirs(args.out_dir, exist_ok=True)
    result = run_study(config, jobs=args.jobs)
    write_study_csvs(result, args.out_dir)
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)
    print(f"cells: {result.n_cells}  runtime: {result.runtime_seconds:.1f}s")
    return 0


_HANDLERS = {
    "fit": _cmd_fit,
    "path": _cmd_path,
    "diagnose": _cmd_diagnose,
    "simulate": _cmd_simulate,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # --help and friends
        return int(exc.code or 0)
    try:
        return _HANDLERS[args.command](args)
    except _UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
