"""Scalar divide-and-conquer estimation: local estimates and robust merges.

The pipeline is: split the sample with a :class:`~splitmerge.partition.Partition`,
compute one estimate per group (:func:`local_means` or :func:`local_mle`),
then merge the group estimates robustly — by their median
(:func:`merge_median`, the median-of-means when the local estimates are
means) or by an M-estimator with a robust loss
(:func:`merge_m_estimator`).  :func:`confidence_interval` wraps a merge in
an asymptotic normal interval whose width uses the merge's variance
inflation factor and a median-absolute-deviation scale estimate.

:func:`u_quantile_median` is the subset-statistic variant: the median of a
statistic evaluated over many random subsets instead of disjoint groups.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .bounds import delta_squared, normal_quantile
from .losses import LossSpec
from .partition import Partition, sample_subsets

__all__ = [
    "LocalEstimates",
    "EstimateReport",
    "local_means",
    "local_mle",
    "merge_median",
    "mad_scale",
    "merge_m_estimator",
    "confidence_interval",
    "u_quantile_median",
    "MAD_CONSISTENCY",
]

# Phi^{-1}(0.75): divisor making the MAD consistent for the normal stddev.
MAD_CONSISTENCY = 0.6744897501960817

_SOLVER_TOL = 1e-12
_SOLVER_MAX_ITER = 200

_LOCAL_MODELS = ("mean", "exponential_rate")


@dataclass(frozen=True)
class LocalEstimates:
    """One estimate per group, plus the group sizes that produced them."""

    values: np.ndarray
    group_sizes: np.ndarray
    estimator: str = "mean"

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float)
        sizes = np.asarray(self.group_sizes, dtype=np.int64)
        if values.ndim != 1 or values.size < 1:
            raise ValueError("values must be a non-empty 1-D array")
        if sizes.shape != values.shape:
            raise ValueError("group_sizes must match values in shape")
        if not np.all(np.isfinite(values)):
            raise ValueError("group estimates must be finite")
        if np.any(sizes < 1):
            raise ValueError("all group sizes must be >= 1")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "group_sizes", sizes)

    @property
    def k(self) -> int:
        return self.values.size


@dataclass(frozen=True)
class EstimateReport:
    """A merged point estimate plus diagnostics.

    ``scale`` is the robust scale used by the merge/interval (``None`` when
    not applicable), ``ci`` the confidence interval when one was requested,
    and the ``solver_*`` fields describe the bisection run for M-estimator
    merges.  ``degenerate_scale`` flags the documented fallback taken when
    the scale estimate collapses to zero (more than half the group
    estimates identical): the merge returns their median.
    """

    point: float
    strategy: str
    scale: float | None = None
    ci: tuple[float, float] | None = None
    ci_level: float | None = None
    solver_iterations: int | None = None
    solver_bracket_width: float | None = None
    degenerate_scale: bool = False

    def to_mapping(self) -> dict[str, object]:
        out: dict[str, object] = {"point": self.point, "strategy": self.strategy}
        if self.scale is not None:
            out["scale"] = self.scale
        if self.ci is not None:
            out["ci_low"], out["ci_high"] = self.ci
            out["ci_level"] = self.ci_level
        if self.solver_iterations is not None:
            out["solver_iterations"] = self.solver_iterations
            out["solver_bracket_width"] = self.solver_bracket_width
        if self.degenerate_scale:
            out["degenerate_scale"] = True
        return out


def _as_estimates(e) -> LocalEstimates:
    if isinstance(e, LocalEstimates):
        return e
    values = np.asarray(e, dtype=float)
    return LocalEstimates(values, np.ones(values.shape, dtype=np.int64), "raw")


def local_means(x, partition: Partition) -> LocalEstimates:
    """Per-group sample means."""
    x = np.asarray(x, dtype=float)
    if x.shape != (partition.n_items,):
        raise ValueError(
            f"expected {partition.n_items} scalar observations, got shape {x.shape}"
        )
    permuted = x[partition.order]
    starts = partition.offsets[:-1]
    sums = np.add.reduceat(permuted, starts)
    sizes = partition.sizes
    return LocalEstimates(sums / sizes, sizes, "mean")


def local_mle(x, partition: Partition, model: str = "exponential_rate") -> LocalEstimates:
    """Per-group maximum-likelihood estimates for a named model.

    ``"mean"`` duplicates :func:`local_means`; ``"exponential_rate"`` fits
    the rate of an exponential model per group (the reciprocal group mean),
    requiring strictly positive observations.
    """
    if model not in _LOCAL_MODELS:
        raise ValueError(f"unknown local model {model!r}; expected one of {_LOCAL_MODELS}")
    if model == "mean":
        return local_means(x, partition)
    x = np.asarray(x, dtype=float)
    if x.shape != (partition.n_items,):
        raise ValueError(
            f"expected {partition.n_items} scalar observations, got shape {x.shape}"
        )
    if np.any(x <= 0):
        raise ValueError("exponential_rate requires strictly positive observations")
    permuted = x[partition.order]
    starts = partition.offsets[:-1]
    sums = np.add.reduceat(permuted, starts)
    sizes = partition.sizes
    return LocalEstimates(sizes / sums, sizes, "exponential_rate")


def merge_median(e) -> float:
    """Median of the group estimates (midpoint of the two central values
    when their number is even)."""
    return float(np.median(_as_estimates(e).values))


def mad_scale(e) -> float:
    """Median absolute deviation of the group estimates, scaled to be a
    consistent stddev estimate under normality (divisor Phi^{-1}(0.75))."""
    values = _as_estimates(e).values
    med = np.median(values)
    return float(np.median(np.abs(values - med)) / MAD_CONSISTENCY)


def merge_m_estimator(e, loss: LossSpec, scale: float | None = None) -> EstimateReport:
    """Merge group estimates by minimizing ``sum_j rho((z - v_j) / scale)``.

    The optimality condition ``G(z) = sum_j rho'((z - v_j)/scale) = 0`` is
    solved by two bisections over ``[min v, max v]`` — one locating the
    largest z with ``G < 0``, one the smallest with ``G > 0`` — and the
    midpoint of the two is returned, which lands mid-plateau whenever the
    solution set is an interval (as for the absolute-value loss with an
    even number of groups).  Bisection stops when the bracket shrinks to
    ``1e-12 * max(1, spread)`` or after 200 halvings per bisection.

    ``scale`` defaults to :func:`mad_scale`; a zero scale (more than half
    the values identical) triggers the documented degenerate fallback: the
    median of the group estimates, flagged via ``degenerate_scale``.
    """
    est = _as_estimates(e)
    if not isinstance(loss, LossSpec):
        raise TypeError(f"expected a LossSpec, got {loss!r}")
    values = est.values
    strategy = f"m_estimator[{loss.label()}]"
    if scale is None:
        scale = mad_scale(est)
    else:
        scale = float(scale)
        if not math.isfinite(scale) or scale < 0:
            raise ValueError(f"scale must be finite and >= 0, got {scale}")
    lo = float(values.min())
    hi = float(values.max())
    if lo == hi:
        return EstimateReport(lo, strategy, scale=scale, solver_iterations=0,
                              solver_bracket_width=0.0)
    if scale == 0.0:
        return EstimateReport(merge_median(est), strategy, scale=0.0,
                              degenerate_scale=True)
    tol = _SOLVER_TOL * max(1.0, hi - lo)

    def g(z: float) -> float:
        return float(np.sum(loss.rho_prime((z - values) / scale)))

    def bisect(crossed) -> tuple[float, int]:
        # Invariant: not crossed(a), crossed(b); returns the midpoint.
        a, b = lo, hi
        iterations = 0
        while b - a > tol and iterations < _SOLVER_MAX_ITER:
            mid = 0.5 * (a + b)
            if crossed(mid):
                b = mid
            else:
                a = mid
            iterations += 1
        return 0.5 * (a + b), iterations

    # G is nondecreasing with G(lo) <= 0 <= G(hi); bracket the zero set
    # from both sides and take its midpoint.
    left_edge, it_left = bisect(lambda z: g(z) >= 0.0)
    right_edge, it_right = bisect(lambda z: g(z) > 0.0)
    point = 0.5 * (left_edge + right_edge)
    return EstimateReport(
        point,
        strategy,
        scale=scale,
        solver_iterations=it_left + it_right,
        solver_bracket_width=abs(right_edge - left_edge),
    )


def confidence_interval(
    e, loss: LossSpec, level: float, scale: float | None = None
) -> EstimateReport:
    """Merge plus an asymptotic normal confidence interval.

    The half-width is ``z_{(1+level)/2} * sqrt(delta_squared(loss)) *
    scale / sqrt(k)`` where ``scale`` defaults to the MAD of the group
    estimates and ``delta_squared`` is the merge's variance inflation.  A
    degenerate (zero) scale yields a zero-width interval, flagged.
    """
    est = _as_estimates(e)
    if not 0.0 < level < 1.0:
        raise ValueError(f"level must lie in (0, 1), got {level}")
    if scale is None:
        scale = mad_scale(est)
    else:
        scale = float(scale)
        if not math.isfinite(scale) or scale < 0:
            raise ValueError(f"scale must be finite and >= 0, got {scale}")
    if loss.kind == "absolute_value":
        report = EstimateReport(merge_median(est), "m_estimator[absolute_value]",
                                scale=scale, degenerate_scale=scale == 0.0)
    else:
        report = merge_m_estimator(est, loss, scale=scale)
    z = normal_quantile(0.5 * (1.0 + level))
    half_width = z * math.sqrt(delta_squared(loss)) * scale / math.sqrt(est.k)
    return EstimateReport(
        report.point,
        report.strategy,
        scale=scale,
        ci=(report.point - half_width, report.point + half_width),
        ci_level=level,
        solver_iterations=report.solver_iterations,
        solver_bracket_width=report.solver_bracket_width,
        degenerate_scale=report.degenerate_scale,
    )


def u_quantile_median(
    x,
    subset_size: int,
    ell: int,
    rng: np.random.Generator,
    estimator: str = "mean",
) -> float:
    """Median of a statistic over ``ell`` random subsets of size ``subset_size``.

    Supported statistics: ``"mean"`` and ``"exponential_rate"`` (reciprocal
    subset mean; needs positive data).  With ``subset_size`` fixed and
    ``ell`` large this approaches the exhaustive median over all subsets;
    its Monte Carlo error shrinks like ``1 / sqrt(ell)``.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim != 1:
        raise ValueError(f"expected 1-D data, got shape {x.shape}")
    if estimator not in _LOCAL_MODELS:
        raise ValueError(f"unknown estimator {estimator!r}; expected one of {_LOCAL_MODELS}")
    if estimator == "exponential_rate" and np.any(x <= 0):
        raise ValueError("exponential_rate requires strictly positive observations")
    family = sample_subsets(x.size, subset_size, ell, rng)
    subset_means = x[family.indices].mean(axis=1)
    if estimator == "mean":
        stats = subset_means
    else:
        stats = 1.0 / subset_means
    return float(np.median(stats))
