"""Local estimates, robust merges, confidence intervals, subset medians."""

import itertools
import math

import numpy as np
import pytest

from splitmerge import (
    MAD_CONSISTENCY,
    LocalEstimates,
    LossSpec,
    confidence_interval,
    contiguous_partition,
    delta_squared,
    local_means,
    local_mle,
    mad_scale,
    merge_m_estimator,
    merge_median,
    normal_quantile,
    partition_disjoint,
    stream,
    u_quantile_median,
)


# ---------------------------------------------------------------------------
# local estimates
# ---------------------------------------------------------------------------


def test_local_means_matches_loop():
    x = stream(1, "lm").normal(size=53)
    part = partition_disjoint(53, 7, stream(1, "p"))
    est = local_means(x, part)
    assert est.estimator == "mean"
    expected = [float(x[g].mean()) for g in part.groups()]
    assert est.values.tolist() == pytest.approx(expected, rel=1e-14)
    assert est.group_sizes.tolist() == part.sizes.tolist()


def test_local_means_shape_check():
    part = contiguous_partition(10, 2)
    with pytest.raises(ValueError):
        local_means(np.zeros(9), part)
    with pytest.raises(ValueError):
        local_means(np.zeros((10, 1)), part)


def test_local_mle_exponential_rate():
    rng = stream(2, "mle")
    x = rng.exponential(scale=0.5, size=60)  # true rate 2
    part = contiguous_partition(60, 6)
    est = local_mle(x, part)
    assert est.estimator == "exponential_rate"
    expected = [float(g_size / x[g].sum()) for g, g_size in zip(part.groups(), part.sizes)]
    assert est.values.tolist() == pytest.approx(expected, rel=1e-14)
    # sanity: rates cluster near the truth
    assert abs(merge_median(est) - 2.0) < 0.6


def test_local_mle_mean_delegates():
    x = stream(3, "d").normal(size=20)
    part = contiguous_partition(20, 4)
    assert local_mle(x, part, "mean").values.tolist() == local_means(x, part).values.tolist()


def test_local_mle_requires_positive_data():
    part = contiguous_partition(4, 2)
    with pytest.raises(ValueError, match="strictly positive"):
        local_mle(np.array([1.0, -1.0, 2.0, 3.0]), part)
    with pytest.raises(ValueError, match="unknown local model"):
        local_mle(np.ones(4), part, "poisson_rate")


def test_local_estimates_validation():
    with pytest.raises(ValueError):
        LocalEstimates(np.array([1.0, math.nan]), np.array([1, 1]))
    with pytest.raises(ValueError):
        LocalEstimates(np.array([1.0, 2.0]), np.array([1, 0]))
    with pytest.raises(ValueError):
        LocalEstimates(np.array([]), np.array([]))
    with pytest.raises(ValueError):
        LocalEstimates(np.array([1.0, 2.0]), np.array([1]))


# ---------------------------------------------------------------------------
# median merge and MAD scale
# ---------------------------------------------------------------------------


def test_merge_median_odd_and_even():
    assert merge_median([3.0, 1.0, 2.0]) == 2.0
    assert merge_median([4.0, 1.0, 2.0, 3.0]) == 2.5  # midpoint of central pair
    assert merge_median([7.0]) == 7.0


def test_merge_median_permutation_invariant():
    rng = stream(4, "perm")
    values = rng.normal(size=9)
    base = merge_median(values)
    for _ in range(50):
        assert merge_median(rng.permutation(values)) == base


def test_mad_scale_oracle():
    assert mad_scale([-1.0, 0.0, 1.0]) == pytest.approx(1.482602218505602, abs=1e-12)
    assert mad_scale([-1.0, 0.0, 1.0]) == pytest.approx(1.0 / MAD_CONSISTENCY, abs=1e-12)
    assert mad_scale([5.0, 5.0, 5.0]) == 0.0
    # consistent for the normal stddev
    big = stream(4, "mad").normal(0.0, 2.5, size=200_000)
    assert mad_scale(big) == pytest.approx(2.5, rel=0.02)


def test_mad_consistency_constant():
    assert MAD_CONSISTENCY == pytest.approx(normal_quantile(0.75), abs=1e-15)


# ---------------------------------------------------------------------------
# M-estimator merge
# ---------------------------------------------------------------------------


def test_m_estimator_abs_loss_matches_median_odd():
    rng = stream(5, "abs")
    for trial in range(20):
        values = rng.normal(size=2 * int(rng.integers(1, 8)) + 1)
        rep = merge_m_estimator(values, LossSpec.absolute_value())
        assert rep.point == pytest.approx(float(np.median(values)), abs=1e-9)


def test_m_estimator_abs_loss_even_plateau_midpoint():
    # with an even count the abs-loss minimizers form an interval; the
    # solver returns its midpoint, which is exactly the median
    values = np.array([0.0, 1.0, 5.0, 10.0])
    rep = merge_m_estimator(values, LossSpec.absolute_value())
    assert rep.point == pytest.approx(3.0, abs=1e-9)
    assert rep.solver_bracket_width == pytest.approx(4.0, abs=1e-6)


def test_m_estimator_huber_matches_grid_search():
    rng = stream(6, "grid")
    loss = LossSpec.huber(1.5)
    for trial in range(10):
        values = rng.normal(size=11) * 3.0
        rep = merge_m_estimator(values, loss)
        sc = mad_scale(values)
        grid = np.linspace(values.min(), values.max(), 200_001)
        objective = loss.rho((grid[:, None] - values) / sc).sum(axis=1)
        best = grid[int(np.argmin(objective))]
        assert rep.point == pytest.approx(float(best), abs=2e-4 * (values.max() - values.min()))


def test_m_estimator_equivariance():
    values = stream(7, "eq").normal(size=15)
    loss = LossSpec.huber(2.0)
    base = merge_m_estimator(values, loss).point
    shifted = merge_m_estimator(values + 11.0, loss).point
    scaled = merge_m_estimator(values * -3.0, loss).point
    assert shifted == pytest.approx(base + 11.0, abs=1e-8)
    assert scaled == pytest.approx(-3.0 * base, abs=1e-8)


def test_m_estimator_explicit_scale_is_used():
    values = np.array([0.0, 1.0, 10.0])
    loss = LossSpec.huber(1.0)
    # huge scale -> quadratic regime everywhere -> mean; tiny scale -> median
    wide = merge_m_estimator(values, loss, scale=1e6)
    narrow = merge_m_estimator(values, loss, scale=1e-3)
    assert wide.point == pytest.approx(values.mean(), abs=1e-4)
    assert narrow.point == pytest.approx(1.0, abs=1e-3)
    assert wide.scale == 1e6


def test_m_estimator_degenerate_scale_falls_back_to_median():
    values = np.array([2.0, 2.0, 2.0, 9.0, 1.0])  # MAD = 0
    rep = merge_m_estimator(values, LossSpec.huber(3.0))
    assert rep.degenerate_scale
    assert rep.scale == 0.0
    assert rep.point == 2.0
    constant = merge_m_estimator(np.full(4, 5.5), LossSpec.huber(3.0))
    assert constant.point == 5.5 and not constant.degenerate_scale


def test_m_estimator_diagnostics_and_validation():
    values = stream(8, "diag").normal(size=9)
    rep = merge_m_estimator(values, LossSpec.huber(2.0))
    assert rep.strategy == "m_estimator[huber(2)]"
    assert rep.solver_iterations is not None and rep.solver_iterations > 0
    assert rep.solver_bracket_width is not None and rep.solver_bracket_width >= 0.0
    with pytest.raises(TypeError):
        merge_m_estimator(values, "huber")
    with pytest.raises(ValueError):
        merge_m_estimator(values, LossSpec.huber(2.0), scale=-1.0)
    with pytest.raises(ValueError):
        merge_m_estimator(values, LossSpec.huber(2.0), scale=math.inf)


def test_m_estimator_accepts_local_estimates():
    est = LocalEstimates(np.array([1.0, 2.0, 3.0]), np.array([5, 5, 5]))
    rep = merge_m_estimator(est, LossSpec.absolute_value())
    assert rep.point == pytest.approx(2.0, abs=1e-9)


# ---------------------------------------------------------------------------
# confidence intervals
# ---------------------------------------------------------------------------


def test_confidence_interval_width_formula():
    values = np.array([-1.0, 0.0, 1.0, 2.0, 4.0])
    loss = LossSpec.absolute_value()
    rep = confidence_interval(values, loss, 0.95)
    sc = mad_scale(values)
    half = normal_quantile(0.975) * math.sqrt(math.pi / 2.0) * sc / math.sqrt(5)
    assert rep.point == pytest.approx(1.0)
    assert rep.ci[0] == pytest.approx(1.0 - half, rel=1e-12)
    assert rep.ci[1] == pytest.approx(1.0 + half, rel=1e-12)
    assert rep.ci_level == 0.95
    assert rep.scale == pytest.approx(sc)


def test_confidence_interval_huber_uses_delta_squared():
    values = stream(9, "ci").normal(size=25)
    loss = LossSpec.huber(3.0)
    rep = confidence_interval(values, loss, 0.9, scale=1.0)
    merged = merge_m_estimator(values, loss, scale=1.0)
    half = normal_quantile(0.95) * math.sqrt(delta_squared(loss)) / math.sqrt(25)
    assert rep.point == pytest.approx(merged.point, abs=1e-12)
    assert rep.ci[1] - rep.point == pytest.approx(half, rel=1e-12)


def test_confidence_interval_level_validation():
    with pytest.raises(ValueError):
        confidence_interval([1.0, 2.0], LossSpec.absolute_value(), 0.0)
    with pytest.raises(ValueError):
        confidence_interval([1.0, 2.0], LossSpec.absolute_value(), 1.0)


def test_confidence_interval_degenerate_scale():
    rep = confidence_interval([3.0, 3.0, 3.0], LossSpec.absolute_value(), 0.95)
    assert rep.degenerate_scale
    assert rep.ci == (3.0, 3.0)


def test_estimate_report_mapping_round_trip():
    values = stream(10, "map").normal(size=7)
    rep = confidence_interval(values, LossSpec.huber(2.0), 0.8)
    mapping = rep.to_mapping()
    assert mapping["point"] == rep.point
    assert mapping["ci_low"] == rep.ci[0] and mapping["ci_high"] == rep.ci[1]
    assert mapping["ci_level"] == 0.8
    assert "degenerate_scale" not in mapping


# ---------------------------------------------------------------------------
# subset-statistic median
# ---------------------------------------------------------------------------


def test_u_quantile_matches_exhaustive_pairs():
    x = np.array([0.17, 1.31, -0.49, 2.03, 0.88, -1.22])
    pair_means = [0.5 * (a + b) for a, b in itertools.combinations(x, 2)]
    exact = float(np.median(pair_means))
    approx = u_quantile_median(x, 2, 50_000, stream(11, "uq"))
    # the atom medians of a 15-point discrete law: with 5e4 draws the
    # empirical median equals the population one except with vanishing
    # probability (Hoeffding at margin 1/30)
    assert approx == pytest.approx(exact, abs=1e-12)


def test_u_quantile_exponential_rate():
    # six values -> 15 pair rates, an odd count with a unique median atom
    x = np.array([0.17, 1.31, -0.49, 2.03, 0.88, -1.22]) + 3.0
    pair_rates = [2.0 / (a + b) for a, b in itertools.combinations(x, 2)]
    exact = float(np.median(pair_rates))
    approx = u_quantile_median(x, 2, 50_000, stream(12, "ur"), estimator="exponential_rate")
    assert approx == pytest.approx(exact, abs=1e-12)


def test_u_quantile_full_subset_is_plain_statistic():
    x = np.array([1.0, 2.0, 4.0])
    assert u_quantile_median(x, 3, 10, stream(13, "uf")) == pytest.approx(x.mean(), abs=1e-15)


def test_u_quantile_validation():
    with pytest.raises(ValueError):
        u_quantile_median(np.zeros((3, 2)), 2, 10, stream(14, "uv"))
    with pytest.raises(ValueError):
        u_quantile_median(np.array([1.0, -2.0]), 2, 10, stream(14, "uv"), "exponential_rate")
    with pytest.raises(ValueError):
        u_quantile_median(np.array([1.0, 2.0]), 2, 10, stream(14, "uv"), "mode")


def test_median_of_means_clt_sanity():
    # aggregate error of the full pipeline shrinks like 1/sqrt(N) with the
    # asymptotic median-of-means constant sqrt(pi/2)
    n, k, reps = 4096, 64, 400
    errors = np.empty(reps)
    for r in range(reps):
        x = stream(15, "clt", r).normal(size=n)
        part = partition_disjoint(n, k, stream(15, "cltp", r))
        errors[r] = merge_median(local_means(x, part))
    ratio = float(np.std(errors)) * math.sqrt(n) / math.sqrt(math.pi / 2.0)
    assert 0.85 < ratio < 1.15
