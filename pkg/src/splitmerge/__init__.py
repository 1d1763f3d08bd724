"""Robust divide-and-conquer estimation.

Split a sample into groups, estimate within each group, and merge the
group estimates robustly — by medians, M-estimators, or the geometric
median — so that heavy tails and a bounded number of arbitrary outliers
cannot destroy the result.  Closed-form deviation bounds certify the
merged estimates, and a deterministic Monte Carlo harness measures them.
"""

from ._rng import stream
from ._version import __version__
from .bounds import (
    BoundReport,
    CoordinatewiseBoundReport,
    GroupProfile,
    bound_corollary1,
    bound_corollary2,
    bound_corollary5,
    bound_legacy,
    bound_theorem1,
    bound_theorem2,
    bound_theorem5,
    bound_theorem7,
    c1_constant,
    c2_constant,
    delta_squared,
    harmonic_mean,
    normal_cdf,
    normal_quantile,
    zeta_exact,
)
from .distributions import (
    ContaminationSpec,
    DistSpec,
    MomentReport,
    MomentValue,
    contaminate,
    pdf,
    sample,
    support,
    tail_index,
    true_moments,
)
from .harness import (
    DEFAULT_S_FOR_BOUNDS,
    ConfigError,
    ContaminationSchedule,
    ExperimentConfig,
    ResultRow,
    ResultTable,
    StrategySpec,
    coverage_table,
    emit_csv,
    emit_svg,
    load_config,
    render_csv,
    render_svg,
    run_experiment,
    sweep_k,
)
from .losses import LossSpec
from .multivariate import (
    GeometricMedianResult,
    ProximityCertificate,
    as_point_cloud,
    geometric_median,
    merge_coordinatewise,
    proximity_certificate,
    proximity_radius,
    sym_eigenvalues,
)
from .partition import (
    Partition,
    SubsetFamily,
    contiguous_partition,
    group_offsets,
    partition_disjoint,
    sample_subsets,
)
from .univariate import (
    MAD_CONSISTENCY,
    EstimateReport,
    LocalEstimates,
    confidence_interval,
    local_means,
    local_mle,
    mad_scale,
    merge_m_estimator,
    merge_median,
    u_quantile_median,
)

__all__ = [
    "__version__",
    "stream",
    # losses
    "LossSpec",
    # distributions
    "DistSpec",
    "ContaminationSpec",
    "MomentReport",
    "MomentValue",
    "sample",
    "contaminate",
    "true_moments",
    "pdf",
    "support",
    "tail_index",
    # partition
    "Partition",
    "SubsetFamily",
    "group_offsets",
    "partition_disjoint",
    "contiguous_partition",
    "sample_subsets",
    # univariate
    "LocalEstimates",
    "EstimateReport",
    "MAD_CONSISTENCY",
    "local_means",
    "local_mle",
    "merge_median",
    "mad_scale",
    "merge_m_estimator",
    "confidence_interval",
    "u_quantile_median",
    # multivariate
    "GeometricMedianResult",
    "ProximityCertificate",
    "as_point_cloud",
    "merge_coordinatewise",
    "geometric_median",
    "sym_eigenvalues",
    "proximity_certificate",
    "proximity_radius",
    # bounds
    "BoundReport",
    "CoordinatewiseBoundReport",
    "GroupProfile",
    "normal_cdf",
    "normal_quantile",
    "harmonic_mean",
    "zeta_exact",
    "bound_legacy",
    "bound_theorem1",
    "bound_theorem2",
    "bound_corollary1",
    "bound_corollary2",
    "bound_theorem5",
    "bound_theorem7",
    "bound_corollary5",
    "c1_constant",
    "c2_constant",
    "delta_squared",
    # harness
    "DEFAULT_S_FOR_BOUNDS",
    "ConfigError",
    "ContaminationSchedule",
    "ExperimentConfig",
    "StrategySpec",
    "ResultRow",
    "ResultTable",
    "load_config",
    "run_experiment",
    "sweep_k",
    "coverage_table",
    "emit_csv",
    "emit_svg",
    "render_csv",
    "render_svg",
]
