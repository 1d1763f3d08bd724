"""Command-line interface.

Subcommands
-----------
``estimate``
    One-shot robust estimate of a list of numbers (contiguous groups).
``bounds``
    Evaluate a closed-form deviation bound; prints a JSON report.
``simulate``
    Run a Monte Carlo experiment from a TOML config; emits CSV (stdout or
    file) and optionally an SVG plot.
``sweep``
    Like ``simulate`` plus the closed-form bound overlay on the
    median-of-means rows; SVG defaults to log-log axes.
``coverage``
    Like ``simulate`` but for interval coverage across contamination
    levels; SVG defaults to coverage vs contamination.

Exit codes: 0 success, 2 usage/config errors (bad flags, invalid config,
missing files), 1 runtime failures.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .._rng import stream
from .._version import __version__
from ..bounds import (
    GroupProfile,
    bound_corollary1,
    bound_corollary2,
    bound_corollary5,
    bound_legacy,
    bound_theorem1,
    bound_theorem2,
    bound_theorem5,
    bound_theorem7,
    delta_squared,
)
from ..losses import LossSpec
from ..partition import contiguous_partition
from ..univariate import (
    confidence_interval,
    local_means,
    local_mle,
    merge_m_estimator,
    merge_median,
    u_quantile_median,
)
from .config import ConfigError, load_config
from .emit import emit_csv, emit_svg, render_csv
from .experiment import coverage_table, run_experiment, sweep_k

__all__ = ["build_parser", "main", "entry"]


class CommandError(Exception):
    """User-facing usage error (exit code 2)."""


def _csv_floats(text: str, flag: str) -> list[float]:
    try:
        return [float(token) for token in text.replace(",", " ").split()]
    except ValueError as exc:
        raise CommandError(f"{flag} expects comma-separated numbers: {exc}") from exc


def _print_json(mapping: dict) -> None:
    sys.stdout.write(json.dumps(mapping) + "\n")


# ---------------------------------------------------------------------------
# estimate
# ---------------------------------------------------------------------------


def _read_values(args: argparse.Namespace) -> np.ndarray:
    if (args.values is None) == (args.input is None):
        raise CommandError("provide exactly one of --values or --input")
    if args.values is not None:
        tokens = args.values.replace(",", " ").split()
    else:
        if args.input == "-":
            text = sys.stdin.read()
        else:
            with open(args.input, "r", encoding="utf-8") as handle:
                text = handle.read()
        tokens = text.replace(",", " ").split()
    if not tokens:
        raise CommandError("no input values given")
    try:
        values = np.array([float(token) for token in tokens])
    except ValueError as exc:
        raise CommandError(f"could not parse input values: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise CommandError("input values must be finite")
    return values


def _cmd_estimate(args: argparse.Namespace) -> int:
    values = _read_values(args)
    n = values.size
    out: dict[str, object] = {"strategy": args.strategy, "n": n}

    if args.strategy == "sample_mean":
        out["point"] = float(values.mean())
        _print_json(out)
        return 0

    if args.strategy == "u_quantile":
        rng = stream(args.seed, "estimate", "subsets")
        point = u_quantile_median(
            values, args.subset_size, args.draws, rng, estimator=args.local
        )
        out.update(
            point=point, subset_size=args.subset_size, draws=args.draws, seed=args.seed
        )
        _print_json(out)
        return 0

    if args.k is None:
        raise CommandError(f"--k is required for strategy {args.strategy}")
    partition = contiguous_partition(n, args.k)
    if args.local == "mean":
        estimates = local_means(values, partition)
    else:
        estimates = local_mle(values, partition, model=args.local)
    out["k"] = args.k

    if args.strategy == "median_of_means":
        if args.ci_level is not None:
            report = confidence_interval(
                estimates, LossSpec.absolute_value(), args.ci_level, scale=args.scale
            )
            out.update(report.to_mapping())
        else:
            out["point"] = merge_median(estimates)
        _print_json(out)
        return 0

    # huber_merge
    loss = LossSpec.huber(args.huber_m)
    if args.ci_level is not None:
        report = confidence_interval(estimates, loss, args.ci_level, scale=args.scale)
    else:
        report = merge_m_estimator(estimates, loss, scale=args.scale)
    out.update(report.to_mapping())
    out["strategy"] = args.strategy
    out["loss"] = loss.label()
    _print_json(out)
    return 0


# ---------------------------------------------------------------------------
# bounds
# ---------------------------------------------------------------------------


def _require(args: argparse.Namespace, method: str, names: list[str]):
    missing = [
        "--" + name.replace("_", "-") for name in names if getattr(args, name) is None
    ]
    if missing:
        raise CommandError(f"--{method} needs {', '.join(missing)}")
    return [getattr(args, name) for name in names]


def _cmd_bounds(args: argparse.Namespace) -> int:
    if args.delta_squared:
        if args.loss == "huber":
            if args.huber_m is None:
                raise CommandError("--delta-squared with --loss huber needs --huber-m")
            loss = LossSpec.huber(args.huber_m)
        else:
            loss = LossSpec.absolute_value()
        _print_json({"loss": loss.label(), "delta_squared": delta_squared(loss)})
        return 0

    if args.legacy:
        sigma, n_total, k = _require(args, "legacy", ["sigma", "n", "k"])
        report = bound_legacy(sigma, n_total, k)
    elif args.theorem1:
        sigmas_text, gs_text, s = _require(args, "theorem1", ["sigmas", "gs", "s"])
        profile = GroupProfile(
            np.array(_csv_floats(sigmas_text, "--sigmas")),
            np.array(_csv_floats(gs_text, "--gs")),
        )
        report = bound_theorem1(profile, s, exact=args.exact)
    elif args.theorem2:
        sigmas_text, gs_text, s, c_rho = _require(
            args, "theorem2", ["sigmas", "gs", "s", "c_rho"]
        )
        profile = GroupProfile(
            np.array(_csv_floats(sigmas_text, "--sigmas")),
            np.array(_csv_floats(gs_text, "--gs")),
        )
        report = bound_theorem2(profile, s, c_rho)
    elif args.corollary1:
        sigma, rho3, n, k, s = _require(args, "corollary1", ["sigma", "rho3", "n", "k", "s"])
        report = bound_corollary1(sigma, rho3, n, k, s)
    elif args.corollary2:
        sigma, rho, delta, n, k, s = _require(
            args, "corollary2", ["sigma", "rho", "delta", "n", "k", "s"]
        )
        kwargs = {}
        if args.c1 is not None:
            kwargs["c1"] = args.c1
        if args.c2 is not None:
            kwargs["c2"] = args.c2
        report = bound_corollary2(sigma, rho, delta, n, k, s, **kwargs)
    elif args.theorem5:
        sigmas_text, c_rhos_text, g, k, s = _require(
            args, "theorem5", ["sigmas", "c_rhos", "g", "k", "s"]
        )
        report = bound_theorem5(
            np.array(_csv_floats(sigmas_text, "--sigmas")),
            np.array(_csv_floats(c_rhos_text, "--c-rhos")),
            g,
            k,
            s,
        )
    elif args.theorem7:
        dim, k, s, g, inv_sqrt_norm = _require(
            args, "theorem7", ["dim", "k", "s", "g", "inv_sqrt_norm"]
        )
        report = bound_theorem7(dim, k, s, g, inv_sqrt_norm, variant=args.variant)
    elif args.corollary5:
        dim, n, k, s, third_moment, sqrt_norm, sqrt_cond = _require(
            args,
            "corollary5",
            ["dim", "n", "k", "s", "third_moment", "sqrt_norm", "sqrt_cond"],
        )
        report = bound_corollary5(
            dim, n, k, s, third_moment, sqrt_norm, sqrt_cond, variant=args.variant
        )
    else:
        raise CommandError("select a bound method (e.g. --corollary1, --theorem1)")
    _print_json(report.to_mapping())
    return 0


# ---------------------------------------------------------------------------
# simulate / sweep / coverage
# ---------------------------------------------------------------------------


def _run_table_command(args: argparse.Namespace, runner) -> int:
    config = load_config(args.config)
    table = runner(config, threads=args.threads)
    if args.out_csv is not None:
        emit_csv(table, args.out_csv)
    else:
        sys.stdout.write(render_csv(table))
    if args.out_svg is not None:
        emit_svg(
            table,
            args.out_svg,
            x_field=args.x,
            y_field=args.y,
            logx=args.logx,
            logy=args.logy,
            title=args.title,
        )
    return 0


def _cmd_simulate(args: argparse.Namespace) -> int:
    return _run_table_command(args, run_experiment)


def _cmd_sweep(args: argparse.Namespace) -> int:
    return _run_table_command(args, sweep_k)


def _cmd_coverage(args: argparse.Namespace) -> int:
    return _run_table_command(args, coverage_table)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_table_arguments(
    parser: argparse.ArgumentParser, *, x_default: str, y_default: str, log_default: bool
) -> None:
    parser.add_argument("--config", required=True, help="TOML experiment config")
    parser.add_argument("--out-csv", help="write CSV here instead of stdout")
    parser.add_argument("--out-svg", help="also render an SVG plot to this path")
    parser.add_argument(
        "--threads", type=int, default=None, help="override the config's thread count"
    )
    parser.add_argument("--x", choices=("k", "contamination"), default=x_default)
    parser.add_argument(
        "--y",
        choices=("median_abs_error", "mean_abs_error", "coverage"),
        default=y_default,
    )
    parser.add_argument(
        "--logx", action=argparse.BooleanOptionalAction, default=log_default
    )
    parser.add_argument(
        "--logy", action=argparse.BooleanOptionalAction, default=log_default
    )
    parser.add_argument("--title", default=None, help="SVG plot title")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="splitmerge",
        description="Robust divide-and-conquer estimation: split, merge, certify.",
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {__version__}"
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    estimate = subparsers.add_parser(
        "estimate", help="robust estimate of a list of numbers"
    )
    estimate.add_argument("--values", help="comma- or space-separated numbers")
    estimate.add_argument("--input", help="file of numbers, or '-' for stdin")
    estimate.add_argument("--k", type=int, default=None, help="number of groups")
    estimate.add_argument(
        "--strategy",
        choices=("sample_mean", "median_of_means", "huber_merge", "u_quantile"),
        default="median_of_means",
    )
    estimate.add_argument(
        "--local",
        choices=("mean", "exponential_rate"),
        default="mean",
        help="per-group (or per-subset) estimator",
    )
    estimate.add_argument(
        "--huber-m", type=float, default=3.0, help="Huber threshold (huber_merge)"
    )
    estimate.add_argument(
        "--scale", type=float, default=None, help="override the MAD scale"
    )
    estimate.add_argument(
        "--ci-level", type=float, default=None, help="confidence level, e.g. 0.95"
    )
    estimate.add_argument(
        "--subset-size", type=int, default=2, help="u_quantile subset size"
    )
    estimate.add_argument(
        "--draws", type=int, default=1000, help="u_quantile number of subsets"
    )
    estimate.add_argument("--seed", type=int, default=0, help="u_quantile seed")
    estimate.set_defaults(func=_cmd_estimate)

    bounds = subparsers.add_parser("bounds", help="evaluate a closed-form bound")
    method = bounds.add_mutually_exclusive_group(required=True)
    method.add_argument("--legacy", action="store_true")
    method.add_argument("--theorem1", action="store_true")
    method.add_argument("--theorem2", action="store_true")
    method.add_argument("--corollary1", action="store_true")
    method.add_argument("--corollary2", action="store_true")
    method.add_argument("--theorem5", action="store_true")
    method.add_argument("--theorem7", action="store_true")
    method.add_argument("--corollary5", action="store_true")
    method.add_argument("--delta-squared", action="store_true")
    bounds.add_argument("--sigma", type=float, help="scale of one group estimate")
    bounds.add_argument("--sigmas", help="comma-separated per-group scales")
    bounds.add_argument("--gs", help="comma-separated per-group approximation errors")
    bounds.add_argument("--g", type=float, help="shared approximation error")
    bounds.add_argument("--rho3", type=float, help="third absolute central moment")
    bounds.add_argument("--rho", type=float, help="(2+delta) absolute central moment")
    bounds.add_argument("--delta", type=float, help="moment order excess in (0, 1]")
    bounds.add_argument("--n", type=int, help="per-group size (or total for --legacy)")
    bounds.add_argument("--k", type=int, help="number of groups")
    bounds.add_argument("--s", type=float, help="tail parameter")
    bounds.add_argument("--c-rho", type=float, help="loss curvature constant")
    bounds.add_argument("--c-rhos", help="comma-separated per-coordinate curvatures")
    bounds.add_argument("--dim", type=int, help="dimension")
    bounds.add_argument("--inv-sqrt-norm", type=float, help="norm of the whitening matrix")
    bounds.add_argument("--sqrt-norm", type=float, help="norm of the covariance square root")
    bounds.add_argument(
        "--sqrt-cond", type=float, help="condition number of the covariance square root"
    )
    bounds.add_argument("--third-moment", type=float, help="whitened third moment")
    bounds.add_argument("--c1", type=float, help="condition threshold override")
    bounds.add_argument("--c2", type=float, help="bound constant override")
    bounds.add_argument("--variant", choices=("proof", "displayed"), default="proof")
    bounds.add_argument("--exact", action="store_true", help="sharp variant (--theorem1)")
    bounds.add_argument("--loss", choices=("absolute_value", "huber"), default="absolute_value")
    bounds.add_argument("--huber-m", type=float, default=None, help="Huber threshold")
    bounds.set_defaults(func=_cmd_bounds)

    simulate = subparsers.add_parser("simulate", help="run a Monte Carlo experiment")
    _add_table_arguments(
        simulate, x_default="k", y_default="median_abs_error", log_default=False
    )
    simulate.set_defaults(func=_cmd_simulate)

    sweep = subparsers.add_parser(
        "sweep", help="error vs k, with the closed-form bound overlay"
    )
    _add_table_arguments(
        sweep, x_default="k", y_default="median_abs_error", log_default=True
    )
    sweep.set_defaults(func=_cmd_sweep)

    coverage = subparsers.add_parser(
        "coverage", help="interval coverage across contamination levels"
    )
    _add_table_arguments(
        coverage, x_default="contamination", y_default="coverage", log_default=False
    )
    coverage.set_defaults(func=_cmd_coverage)

    return parser


def main(argv: "list[str] | None" = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        code = exc.code
        if code is None:
            return 0
        return code if isinstance(code, int) else 2
    try:
        return args.func(args)
    except (CommandError, ConfigError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def entry() -> None:
    """Console-script entry point."""
    sys.exit(main())


if __name__ == "__main__":
    entry()
