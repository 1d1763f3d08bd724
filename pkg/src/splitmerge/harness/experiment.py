"""Monte Carlo experiment engine: runs, sweeps, coverage tables.

:func:`run_experiment` evaluates every configured (k, strategy,
contamination) cell over all replicates and aggregates absolute errors
(and interval coverage, when a confidence level is configured) into a
:class:`ResultTable`.

Determinism: every random draw comes from an addressable stream keyed by
``(master_seed, replicate, purpose[, index])``, each replicate writes into
its own column of preallocated result arrays, and aggregation happens in a
fixed order afterwards — so results are bit-identical regardless of thread
count or scheduling.
"""

from __future__ import annotations

import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .._rng import stream
from ..bounds import bound_corollary1, normal_quantile
from ..distributions import ContaminationSpec, contaminate, sample, true_moments
from ..losses import LossSpec
from ..multivariate import geometric_median, merge_coordinatewise
from ..partition import group_offsets
from ..univariate import (
    LocalEstimates,
    confidence_interval,
    merge_m_estimator,
    u_quantile_median,
)
from .config import ConfigError, ExperimentConfig, StrategySpec

__all__ = ["ResultRow", "ResultTable", "run_experiment", "sweep_k", "coverage_table"]

_K_INDEPENDENT = ("sample_mean", "u_quantile")


@dataclass(frozen=True)
class ResultRow:
    """Aggregated results for one (k, strategy, contamination) cell.

    ``coverage`` is ``None`` for strategies without a confidence interval,
    and ``bound``/``condition_holds`` are only filled by :func:`sweep_k`'s
    closed-form overlay.
    """

    k: int
    strategy: str
    contamination: int
    median_abs_error: float
    mean_abs_error: float
    coverage: float | None = None
    bound: float | None = None
    condition_holds: bool | None = None


@dataclass(frozen=True)
class ResultTable:
    """Rows in deterministic order: k ascending, then strategy, then
    contamination in config order."""

    rows: tuple[ResultRow, ...]

    def __len__(self) -> int:
        return len(self.rows)

    def __iter__(self):
        return iter(self.rows)


def _strategy_has_ci(config: ExperimentConfig, strat: StrategySpec) -> bool:
    return (
        config.ci_level is not None
        and config.dimension == 1
        and strat.kind in ("sample_mean", "median_of_means", "huber_merge")
    )


def _evaluate_flat(
    config: ExperimentConfig,
    strat: StrategySpec,
    y: np.ndarray,
    model_stddev: float | None,
    r: int,
    count_index: int,
):
    """Evaluate a strategy that ignores the grouping (same result for all k)."""
    if strat.kind == "sample_mean":
        point = y.mean(axis=0)
        ci_pair = None
        if _strategy_has_ci(config, strat):
            if config.mean_ci_scale == "model":
                assert model_stddev is not None
                sd = model_stddev
            else:
                sd = float(np.std(y, ddof=1))
            z = normal_quantile(0.5 * (1.0 + config.ci_level))
            half_width = z * sd / math.sqrt(y.shape[0])
            ci_pair = (float(point) - half_width, float(point) + half_width)
        return point, ci_pair
    if strat.kind == "u_quantile":
        rng = stream(config.master_seed, r, "subsets", count_index)
        point = u_quantile_median(y, strat.subset_size, strat.draws, rng)
        return point, None
    raise AssertionError(strat.kind)


def _evaluate_grouped(
    config: ExperimentConfig,
    strat: StrategySpec,
    means: np.ndarray,
    sizes: np.ndarray,
):
    """Evaluate a strategy built on per-group means."""
    if config.dimension == 1:
        estimates = LocalEstimates(means, sizes, "mean")
        if strat.kind in ("median_of_means", "coordinatewise_median", "geometric_median"):
            point = float(np.median(means))
            ci_pair = None
            if _strategy_has_ci(config, strat):
                report = confidence_interval(
                    estimates, LossSpec.absolute_value(), config.ci_level
                )
                ci_pair = report.ci
            return point, ci_pair
        if strat.kind == "huber_merge":
            loss = LossSpec.huber(strat.huber_threshold)
            if _strategy_has_ci(config, strat):
                report = confidence_interval(estimates, loss, config.ci_level)
                return report.point, report.ci
            return merge_m_estimator(estimates, loss).point, None
        raise AssertionError(strat.kind)
    if strat.kind in ("median_of_means", "coordinatewise_median"):
        return np.median(means, axis=0), None
    if strat.kind == "geometric_median":
        return geometric_median(means).point, None
    if strat.kind == "huber_merge":
        return merge_coordinatewise(means, LossSpec.huber(strat.huber_threshold)), None
    raise AssertionError(strat.kind)


def run_experiment(config: ExperimentConfig, threads: int | None = None) -> ResultTable:
    """Run the configured Monte Carlo experiment and aggregate per cell.

    Per replicate: draw one sample and one group permutation, then reuse
    them across every k, strategy and contamination count (common random
    numbers), contaminating a fresh copy per count.  Absolute error is
    measured against the analytic mean of the data family (Euclidean norm
    for vector data).
    """
    if threads is None:
        threads = config.threads
    if threads < 1:
        raise ConfigError(f"threads must be >= 1, got {threads}")

    n_total = config.n_total
    dim = config.dimension
    replicates = config.replicates
    k_values = config.k_values
    strategies = config.strategies
    counts = config.contamination.counts if config.contamination else (0,)
    outlier = config.contamination.outlier if config.contamination else None
    seed = config.master_seed

    moments = true_moments(config.data)
    assert moments.mean is not None  # enforced at config validation
    theta = moments.mean
    theta_vec = np.full(dim, theta)
    model_stddev = moments.stddev

    n_strat = len(strategies)
    n_counts = len(counts)
    n_cells = len(k_values) * n_strat * n_counts

    def cell_index(ki: int, si: int, ci: int) -> int:
        return (ki * n_strat + si) * n_counts + ci

    errors = np.empty((n_cells, replicates))
    covered = np.zeros((n_cells, replicates), dtype=bool)

    # Offsets/sizes per k are replicate-independent; compute once.
    offsets_by_k = [group_offsets(n_total, k) for k in k_values]
    sizes_by_k = [np.diff(offs) for offs in offsets_by_k]

    flat_slots = [si for si, s in enumerate(strategies) if s.kind in _K_INDEPENDENT]

    def run_replicate(r: int) -> None:
        shape = (n_total, dim) if dim > 1 else n_total
        x = sample(config.data, shape, stream(seed, r, "data"))
        order = stream(seed, r, "part").permutation(n_total)
        for ci, count in enumerate(counts):
            if count > 0:
                assert outlier is not None
                y = contaminate(
                    x, ContaminationSpec(count, outlier), stream(seed, r, "outlier", ci)
                )
            else:
                y = x
            y_permuted = y[order]

            flat_results = {
                si: _evaluate_flat(config, strategies[si], y, model_stddev, r, ci)
                for si in flat_slots
            }

            for ki in range(len(k_values)):
                offs = offsets_by_k[ki]
                sizes = sizes_by_k[ki]
                sums = np.add.reduceat(y_permuted, offs[:-1], axis=0)
                means = sums / (sizes if dim == 1 else sizes[:, None])
                for si, strat in enumerate(strategies):
                    if si in flat_results:
                        point, ci_pair = flat_results[si]
                    else:
                        point, ci_pair = _evaluate_grouped(config, strat, means, sizes)
                    cell = cell_index(ki, si, ci)
                    if dim == 1:
                        errors[cell, r] = abs(float(point) - theta)
                        if ci_pair is not None:
                            covered[cell, r] = ci_pair[0] <= theta <= ci_pair[1]
                    else:
                        errors[cell, r] = float(
                            np.linalg.norm(np.asarray(point) - theta_vec)
                        )

    if threads == 1:
        for r in range(replicates):
            run_replicate(r)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(run_replicate, range(replicates)))

    rows = []
    for ki, k in enumerate(k_values):
        for si, strat in enumerate(strategies):
            has_ci = _strategy_has_ci(config, strat)
            for ci, count in enumerate(counts):
                cell = cell_index(ki, si, ci)
                rows.append(
                    ResultRow(
                        k=int(k),
                        strategy=strat.label(),
                        contamination=int(count),
                        median_abs_error=float(np.median(errors[cell])),
                        mean_abs_error=float(np.mean(errors[cell])),
                        coverage=float(np.mean(covered[cell])) if has_ci else None,
                    )
                )
    return ResultTable(tuple(rows))


def sweep_k(config: ExperimentConfig, threads: int | None = None) -> ResultTable:
    """Run the experiment and overlay the closed-form median-of-means bound.

    The bound (evaluated at ``s_for_bounds``, per-group size ``n = N // k``)
    is attached to uncontaminated ``median_of_means`` rows; it needs the
    data family's stddev and third absolute central moment, so for families
    where either diverges the overlay is omitted with a warning.
    """
    table = run_experiment(config, threads=threads)
    moments = true_moments(config.data)
    sigma = moments.stddev
    rho3 = moments.abs_central_moment(3.0)
    if sigma is None or rho3 is None:
        warnings.warn(
            f"bound overlay omitted: {config.data.kind} has undefined "
            "stddev or third absolute moment",
            stacklevel=2,
        )
        return table
    rows = []
    overlaid = False
    for row in table.rows:
        if row.strategy == "median_of_means" and row.contamination == 0:
            report = bound_corollary1(
                sigma, rho3, config.n_total // row.k, row.k, config.s_for_bounds
            )
            row = replace(
                row, bound=report.bound, condition_holds=report.condition_holds
            )
            overlaid = True
        rows.append(row)
    if not overlaid:
        warnings.warn(
            "bound overlay omitted: no uncontaminated median_of_means rows",
            stacklevel=2,
        )
    return ResultTable(tuple(rows))


def coverage_table(config: ExperimentConfig, threads: int | None = None) -> ResultTable:
    """Run the experiment for interval coverage across contamination levels.

    Requires ``ci_level`` and at least one interval-producing strategy
    (sample_mean, median_of_means or huber_merge).
    """
    if config.ci_level is None:
        raise ConfigError("coverage_table needs ci_level in the config")
    if not any(
        s.kind in ("sample_mean", "median_of_means", "huber_merge")
        for s in config.strategies
    ):
        raise ConfigError(
            "coverage_table needs at least one of sample_mean, median_of_means, "
            "huber_merge"
        )
    return run_experiment(config, threads=threads)
