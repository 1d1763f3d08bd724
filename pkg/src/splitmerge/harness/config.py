"""Experiment configuration: TOML loading, validation, strategy specs.

A config describes one Monte Carlo experiment: the data family, total
sample size ``N``, the grid of group counts ``k``, the list of merge
strategies to compare, an optional contamination schedule, and
reproducibility/evaluation knobs.  Loading is strict — unknown keys
anywhere raise :class:`ConfigError` (exit code 2 at the CLI) rather than
being silently ignored.

Example (TOML)::

    N = 65536
    replicates = 4096
    log_n_k_grid = [0.1, 0.2, 0.3]
    strategies = ["median_of_means", {kind = "huber_merge", threshold = 3.0}]
    master_seed = 7

    [data]
    kind = "lomax"
    alpha = 4.0
    lambda = 1.0
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from typing import Mapping, Sequence

try:
    import tomllib  # Python >= 3.11
except ModuleNotFoundError:  # pragma: no cover - depends on interpreter
    import tomli as tomllib

from ..distributions import DistSpec, true_moments

__all__ = [
    "ConfigError",
    "StrategySpec",
    "ContaminationSchedule",
    "ExperimentConfig",
    "load_config",
    "DEFAULT_S_FOR_BOUNDS",
]

# Default tail parameter for bound overlays: makes the formula failure
# probability 4 * exp(-2s) equal to 1/2, so the bound is calibrated to the
# same "median of the error distribution" the empirical columns report.
DEFAULT_S_FOR_BOUNDS = math.log(8.0) / 2.0

STRATEGY_KINDS = (
    "sample_mean",
    "median_of_means",
    "coordinatewise_median",
    "geometric_median",
    "huber_merge",
    "u_quantile",
)

_CI_STRATEGIES = ("sample_mean", "median_of_means", "huber_merge")


class ConfigError(ValueError):
    """Invalid or inconsistent experiment configuration."""


def _require_int(mapping: Mapping[str, object], key: str, minimum: int, context: str) -> int:
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{context}: {key!r} must be an integer, got {value!r}")
    if value < minimum:
        raise ConfigError(f"{context}: {key!r} must be >= {minimum}, got {value}")
    return value


def _require_number(mapping: Mapping[str, object], key: str, context: str) -> float:
    value = mapping[key]
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{context}: {key!r} must be a number, got {value!r}")
    out = float(value)
    if not math.isfinite(out):
        raise ConfigError(f"{context}: {key!r} must be finite, got {out}")
    return out


@dataclass(frozen=True)
class StrategySpec:
    """One merge strategy to evaluate.

    ``huber_merge`` carries its clipping threshold (in robust-scale units;
    the scale itself is always the MAD of the group estimates);
    ``u_quantile`` carries the subset size and the number of random
    subsets.  The bare string form ``"huber_merge"`` defaults the
    threshold to 3.0.
    """

    kind: str
    huber_threshold: float | None = None
    subset_size: int | None = None
    draws: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in STRATEGY_KINDS:
            raise ConfigError(
                f"unknown strategy {self.kind!r}; expected one of {STRATEGY_KINDS}"
            )
        if self.kind == "huber_merge":
            if self.huber_threshold is None or self.huber_threshold <= 0:
                raise ConfigError("huber_merge needs a positive threshold")
        elif self.huber_threshold is not None:
            raise ConfigError(f"{self.kind} takes no huber threshold")
        if self.kind == "u_quantile":
            if self.subset_size is None or self.subset_size < 1:
                raise ConfigError("u_quantile needs subset_size >= 1")
            if self.draws is None or self.draws < 1:
                raise ConfigError("u_quantile needs draws >= 1")
        elif self.subset_size is not None or self.draws is not None:
            raise ConfigError(f"{self.kind} takes no subset parameters")

    @classmethod
    def parse(cls, obj: object) -> "StrategySpec":
        if isinstance(obj, str):
            if obj == "huber_merge":
                return cls("huber_merge", huber_threshold=3.0)
            if obj == "u_quantile":
                raise ConfigError(
                    "u_quantile must be a table with subset_size and draws, "
                    'e.g. {kind = "u_quantile", subset_size = 2, draws = 1000}'
                )
            return cls(obj)
        if isinstance(obj, Mapping):
            data = dict(obj)
            kind = data.pop("kind", None)
            if not isinstance(kind, str):
                raise ConfigError("strategy tables need a string 'kind' entry")
            threshold = data.pop("threshold", None) if kind == "huber_merge" else None
            subset_size = data.pop("subset_size", None) if kind == "u_quantile" else None
            draws = data.pop("draws", None) if kind == "u_quantile" else None
            if data:
                raise ConfigError(
                    f"strategy {kind!r} got unknown keys {sorted(data)}"
                )
            if kind == "huber_merge":
                if threshold is None:
                    threshold = 3.0
                if isinstance(threshold, bool) or not isinstance(threshold, (int, float)):
                    raise ConfigError("huber_merge threshold must be a number")
                return cls(kind, huber_threshold=float(threshold))
            if kind == "u_quantile":
                for name, value in (("subset_size", subset_size), ("draws", draws)):
                    if isinstance(value, bool) or not isinstance(value, int):
                        raise ConfigError(f"u_quantile {name} must be an integer")
                return cls(kind, subset_size=subset_size, draws=draws)
            return cls(kind)
        raise ConfigError(f"strategies must be strings or tables, got {obj!r}")

    def label(self) -> str:
        """Stable tag used in the CSV ``strategy`` column."""
        if self.kind == "huber_merge":
            return f"huber_merge:{self.huber_threshold:g}"
        if self.kind == "u_quantile":
            return f"u_quantile:{self.subset_size}:{self.draws}"
        return self.kind


@dataclass(frozen=True)
class ContaminationSchedule:
    """Outlier counts to sweep, and the distribution outliers come from."""

    counts: tuple[int, ...]
    outlier: DistSpec

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object], n_total: int) -> "ContaminationSchedule":
        data = dict(mapping)
        outlier_map = data.pop("outlier", None)
        if not isinstance(outlier_map, Mapping):
            raise ConfigError("[contamination] needs an [contamination.outlier] table")
        try:
            outlier = DistSpec.from_mapping(outlier_map)
        except ValueError as exc:
            raise ConfigError(f"[contamination.outlier]: {exc}") from exc
        counts_raw = data.pop("counts", None)
        fractions = data.pop("sqrt_fractions", None)
        if data:
            raise ConfigError(f"[contamination] got unknown keys {sorted(data)}")
        if (counts_raw is None) == (fractions is None):
            raise ConfigError(
                "[contamination] needs exactly one of 'counts' or 'sqrt_fractions'"
            )
        if counts_raw is not None:
            if not isinstance(counts_raw, Sequence) or isinstance(counts_raw, (str, bytes)):
                raise ConfigError("[contamination] counts must be a list of integers")
            counts = []
            for value in counts_raw:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"contamination count {value!r} is not an integer")
                counts.append(value)
        else:
            if not isinstance(fractions, Sequence) or isinstance(fractions, (str, bytes)):
                raise ConfigError("[contamination] sqrt_fractions must be a list of numbers")
            root = math.sqrt(n_total)
            counts = []
            for value in fractions:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"sqrt fraction {value!r} is not a number")
                if value < 0:
                    raise ConfigError(f"sqrt fractions must be >= 0, got {value}")
                counts.append(round(float(value) * root))
        if not counts:
            raise ConfigError("[contamination] schedule must not be empty")
        for count in counts:
            if not 0 <= count <= n_total:
                raise ConfigError(
                    f"contamination count {count} outside [0, N={n_total}]"
                )
        return cls(tuple(counts), outlier)


@dataclass(frozen=True)
class ExperimentConfig:
    """Validated description of one Monte Carlo experiment."""

    data: DistSpec
    n_total: int
    replicates: int
    k_values: tuple[int, ...]
    strategies: tuple[StrategySpec, ...]
    master_seed: int = 0
    dimension: int = 1
    contamination: ContaminationSchedule | None = None
    s_for_bounds: float = DEFAULT_S_FOR_BOUNDS
    ci_level: float | None = None
    threads: int = 1
    mean_ci_scale: str = "model"

    def __post_init__(self) -> None:
        if not self.k_values:
            raise ConfigError("at least one k value is required")
        if not self.strategies:
            raise ConfigError("at least one strategy is required")
        for k in self.k_values:
            if not 1 <= k <= self.n_total:
                raise ConfigError(f"k={k} outside [1, N={self.n_total}]")
        if list(self.k_values) != sorted(set(self.k_values)):
            raise ConfigError("k_values must be strictly increasing and unique")
        if self.mean_ci_scale not in ("model", "sample"):
            raise ConfigError(
                f"mean_ci_scale must be 'model' or 'sample', got {self.mean_ci_scale!r}"
            )
        if self.ci_level is not None and not 0.0 < self.ci_level < 1.0:
            raise ConfigError(f"ci_level must lie in (0, 1), got {self.ci_level}")
        if self.dimension > 1:
            if self.ci_level is not None:
                raise ConfigError("confidence intervals are scalar-only (dimension = 1)")
            for strat in self.strategies:
                if strat.kind == "u_quantile":
                    raise ConfigError("u_quantile is scalar-only (dimension = 1)")
        for strat in self.strategies:
            if strat.kind == "u_quantile" and strat.subset_size > self.n_total:
                raise ConfigError(
                    f"u_quantile subset_size {strat.subset_size} exceeds N={self.n_total}"
                )
        moments = true_moments(self.data)
        if moments.mean is None:
            raise ConfigError(
                f"data family {self.data.kind!r} has no finite mean; "
                "the experiment needs a well-defined truth"
            )
        if (
            self.ci_level is not None
            and self.mean_ci_scale == "model"
            and moments.variance is None
            and any(s.kind == "sample_mean" for s in self.strategies)
        ):
            raise ConfigError(
                "sample_mean coverage with mean_ci_scale='model' needs a finite "
                "data variance; use mean_ci_scale='sample' or drop sample_mean"
            )

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, object]) -> "ExperimentConfig":
        data = dict(mapping)
        context = "config"

        dist_map = data.pop("data", None)
        if not isinstance(dist_map, Mapping):
            raise ConfigError("config needs a [data] table selecting the distribution")
        try:
            dist = DistSpec.from_mapping(dist_map)
        except ValueError as exc:
            raise ConfigError(f"[data]: {exc}") from exc

        if "N" not in data:
            raise ConfigError("config needs N (total sample size)")
        n_total = _require_int(data, "N", 1, context)
        data.pop("N")
        if "replicates" not in data:
            raise ConfigError("config needs replicates")
        replicates = _require_int(data, "replicates", 1, context)
        data.pop("replicates")

        k_raw = data.pop("k_values", None)
        grid_raw = data.pop("log_n_k_grid", None)
        if (k_raw is None) == (grid_raw is None):
            raise ConfigError("config needs exactly one of 'k_values' or 'log_n_k_grid'")
        if k_raw is not None:
            if not isinstance(k_raw, Sequence) or isinstance(k_raw, (str, bytes)):
                raise ConfigError("k_values must be a list of integers")
            ks = []
            for value in k_raw:
                if isinstance(value, bool) or not isinstance(value, int):
                    raise ConfigError(f"k value {value!r} is not an integer")
                ks.append(value)
            k_values = tuple(ks)
        else:
            if not isinstance(grid_raw, Sequence) or isinstance(grid_raw, (str, bytes)):
                raise ConfigError("log_n_k_grid must be a list of numbers")
            ks = []
            for value in grid_raw:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"grid exponent {value!r} is not a number")
                q = float(value)
                if not 0.0 < q <= 1.0:
                    raise ConfigError(f"grid exponents must lie in (0, 1], got {q}")
                ks.append(min(max(round(n_total**q), 1), n_total))
            k_values = tuple(sorted(set(ks)))

        strategies_raw = data.pop("strategies", None)
        if not isinstance(strategies_raw, Sequence) or isinstance(strategies_raw, (str, bytes)):
            raise ConfigError("config needs a strategies list")
        strategies = tuple(StrategySpec.parse(obj) for obj in strategies_raw)

        master_seed = 0
        if "master_seed" in data:
            master_seed = _require_int(data, "master_seed", 0, context)
            data.pop("master_seed")
        dimension = 1
        if "dimension" in data:
            dimension = _require_int(data, "dimension", 1, context)
            data.pop("dimension")
        threads = 1
        if "threads" in data:
            threads = _require_int(data, "threads", 1, context)
            data.pop("threads")
        s_for_bounds = DEFAULT_S_FOR_BOUNDS
        if "s_for_bounds" in data:
            s_for_bounds = _require_number(data, "s_for_bounds", context)
            if s_for_bounds <= 0:
                raise ConfigError(f"s_for_bounds must be > 0, got {s_for_bounds}")
            data.pop("s_for_bounds")
        ci_level = None
        if "ci_level" in data:
            ci_level = _require_number(data, "ci_level", context)
            data.pop("ci_level")
        mean_ci_scale = data.pop("mean_ci_scale", "model")
        if not isinstance(mean_ci_scale, str):
            raise ConfigError("mean_ci_scale must be a string")

        contamination = None
        contamination_map = data.pop("contamination", None)
        if contamination_map is not None:
            if not isinstance(contamination_map, Mapping):
                raise ConfigError("[contamination] must be a table")
            contamination = ContaminationSchedule.from_mapping(contamination_map, n_total)

        if data:
            raise ConfigError(f"config got unknown keys {sorted(data)}")

        return cls(
            data=dist,
            n_total=n_total,
            replicates=replicates,
            k_values=k_values,
            strategies=strategies,
            master_seed=master_seed,
            dimension=dimension,
            contamination=contamination,
            s_for_bounds=s_for_bounds,
            ci_level=ci_level,
            threads=threads,
            mean_ci_scale=mean_ci_scale,
        )


def load_config(path: str | os.PathLike) -> ExperimentConfig:
    """Parse and validate a TOML experiment config file."""
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"invalid TOML in {path}: {exc}") from exc
    return ExperimentConfig.from_mapping(raw)
