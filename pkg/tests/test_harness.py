"""Experiment harness: config validation, deterministic runs, CSV/SVG output."""

import math
import xml.dom.minidom
from pathlib import Path

import numpy as np
import pytest

from splitmerge import DistSpec, bound_corollary1, true_moments
from splitmerge.harness import (
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


def _base_mapping(**overrides):
    mapping = {
        "N": 240,
        "replicates": 40,
        "k_values": [4, 12],
        "strategies": ["median_of_means", "sample_mean"],
        "master_seed": 7,
        "data": {"kind": "normal", "mean": 1.0, "stddev": 2.0},
    }
    mapping.update(overrides)
    return mapping


# ---------------------------------------------------------------------------
# strategy specs
# ---------------------------------------------------------------------------


def test_strategy_parse_strings():
    assert StrategySpec.parse("median_of_means").kind == "median_of_means"
    hub = StrategySpec.parse("huber_merge")
    assert hub.huber_threshold == 3.0
    assert hub.label() == "huber_merge:3"
    with pytest.raises(ConfigError, match="subset_size and draws"):
        StrategySpec.parse("u_quantile")
    with pytest.raises(ConfigError, match="unknown strategy"):
        StrategySpec.parse("trimmed_mean")


def test_strategy_parse_tables():
    hub = StrategySpec.parse({"kind": "huber_merge", "threshold": 2.5})
    assert hub.huber_threshold == 2.5 and hub.label() == "huber_merge:2.5"
    uq = StrategySpec.parse({"kind": "u_quantile", "subset_size": 2, "draws": 1000})
    assert uq.label() == "u_quantile:2:1000"
    with pytest.raises(ConfigError, match="unknown keys"):
        StrategySpec.parse({"kind": "median_of_means", "threshold": 1.0})
    with pytest.raises(ConfigError, match="'kind'"):
        StrategySpec.parse({"threshold": 1.0})
    with pytest.raises(ConfigError):
        StrategySpec.parse(42)
    with pytest.raises(ConfigError):
        StrategySpec.parse({"kind": "u_quantile", "subset_size": 2.5, "draws": 10})


def test_strategy_spec_validation():
    with pytest.raises(ConfigError):
        StrategySpec("huber_merge")  # missing threshold
    with pytest.raises(ConfigError):
        StrategySpec("median_of_means", huber_threshold=1.0)
    with pytest.raises(ConfigError):
        StrategySpec("u_quantile", subset_size=2)  # missing draws
    with pytest.raises(ConfigError):
        StrategySpec("sample_mean", subset_size=2)


# ---------------------------------------------------------------------------
# experiment config
# ---------------------------------------------------------------------------


def test_config_minimal_round_trip():
    config = ExperimentConfig.from_mapping(_base_mapping())
    assert config.n_total == 240
    assert config.k_values == (4, 12)
    assert config.master_seed == 7
    assert config.dimension == 1 and config.threads == 1
    assert config.s_for_bounds == DEFAULT_S_FOR_BOUNDS
    assert config.mean_ci_scale == "model"
    assert config.data == DistSpec.normal(1.0, 2.0)


def test_config_rejects_unknown_keys():
    with pytest.raises(ConfigError, match="unknown keys"):
        ExperimentConfig.from_mapping(_base_mapping(burn_in=10))


def test_config_requires_core_keys():
    for missing in ("N", "replicates", "strategies", "data"):
        mapping = _base_mapping()
        mapping.pop(missing)
        with pytest.raises(ConfigError):
            ExperimentConfig.from_mapping(mapping)


def test_config_k_values_xor_grid():
    with pytest.raises(ConfigError, match="exactly one"):
        ExperimentConfig.from_mapping(_base_mapping(log_n_k_grid=[0.5]))
    mapping = _base_mapping()
    mapping.pop("k_values")
    with pytest.raises(ConfigError, match="exactly one"):
        ExperimentConfig.from_mapping(mapping)


def test_config_grid_maps_to_rounded_powers():
    mapping = _base_mapping(N=65536, replicates=2)
    mapping.pop("k_values")
    mapping["log_n_k_grid"] = [0.5, 0.1, 0.5]  # duplicates collapse, sorted
    config = ExperimentConfig.from_mapping(mapping)
    assert config.k_values == (3, 256)
    mapping["log_n_k_grid"] = [1.5]
    with pytest.raises(ConfigError, match=r"\(0, 1\]"):
        ExperimentConfig.from_mapping(mapping)


def test_config_k_range_and_order():
    with pytest.raises(ConfigError, match="outside"):
        ExperimentConfig.from_mapping(_base_mapping(k_values=[4, 241]))
    with pytest.raises(ConfigError, match="strictly increasing"):
        ExperimentConfig.from_mapping(_base_mapping(k_values=[12, 4]))
    with pytest.raises(ConfigError, match="strictly increasing"):
        ExperimentConfig.from_mapping(_base_mapping(k_values=[4, 4]))


def test_config_ci_and_dimension_rules():
    with pytest.raises(ConfigError, match=r"\(0, 1\)"):
        ExperimentConfig.from_mapping(_base_mapping(ci_level=1.0))
    with pytest.raises(ConfigError, match="scalar-only"):
        ExperimentConfig.from_mapping(_base_mapping(dimension=2, ci_level=0.95))
    mapping = _base_mapping(
        dimension=2,
        strategies=[{"kind": "u_quantile", "subset_size": 2, "draws": 10}],
    )
    with pytest.raises(ConfigError, match="scalar-only"):
        ExperimentConfig.from_mapping(mapping)


def test_config_u_quantile_subset_size_bound():
    mapping = _base_mapping(
        strategies=[{"kind": "u_quantile", "subset_size": 300, "draws": 10}]
    )
    with pytest.raises(ConfigError, match="exceeds N"):
        ExperimentConfig.from_mapping(mapping)


def test_config_requires_finite_mean():
    mapping = _base_mapping(data={"kind": "pareto", "shape": 0.8, "scale": 1.0})
    with pytest.raises(ConfigError, match="no finite mean"):
        ExperimentConfig.from_mapping(mapping)


def test_config_model_scale_coverage_needs_variance():
    mapping = _base_mapping(
        data={"kind": "student_t", "dof": 2.0},
        strategies=["sample_mean"],
        ci_level=0.95,
    )
    with pytest.raises(ConfigError, match="finite"):
        ExperimentConfig.from_mapping(mapping)
    # the sample-scale interval is allowed there
    mapping["mean_ci_scale"] = "sample"
    config = ExperimentConfig.from_mapping(mapping)
    assert config.mean_ci_scale == "sample"
    with pytest.raises(ConfigError, match="mean_ci_scale"):
        ExperimentConfig.from_mapping(_base_mapping(mean_ci_scale="mad"))


def test_contamination_schedule_counts_xor_fractions():
    outlier = {"outlier": {"kind": "normal", "mean": 0.0, "stddev": 10.0}}
    sched = ContaminationSchedule.from_mapping({"counts": [0, 3], **outlier}, 100)
    assert sched.counts == (0, 3)
    sched2 = ContaminationSchedule.from_mapping(
        {"sqrt_fractions": [0.0, 0.5, 1.0], **outlier}, 100
    )
    assert sched2.counts == (0, 5, 10)
    with pytest.raises(ConfigError, match="exactly one"):
        ContaminationSchedule.from_mapping(
            {"counts": [1], "sqrt_fractions": [0.1], **outlier}, 100
        )
    with pytest.raises(ConfigError, match="outlier"):
        ContaminationSchedule.from_mapping({"counts": [1]}, 100)
    with pytest.raises(ConfigError, match="outside"):
        ContaminationSchedule.from_mapping({"counts": [101], **outlier}, 100)
    with pytest.raises(ConfigError, match="unknown keys"):
        ContaminationSchedule.from_mapping({"counts": [1], "rate": 0.1, **outlier}, 100)


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="not found"):
        load_config(tmp_path / "missing.toml")
    bad = tmp_path / "bad.toml"
    bad.write_text("N = [unclosed\n")
    with pytest.raises(ConfigError, match="invalid TOML"):
        load_config(bad)
    good = tmp_path / "good.toml"
    good.write_text(
        'N = 60\nreplicates = 3\nk_values = [5]\nstrategies = ["median_of_means"]\n'
        '[data]\nkind = "normal"\nmean = 0.0\nstddev = 1.0\n'
    )
    config = load_config(good)
    assert config.n_total == 60 and config.k_values == (5,)


def test_shipped_configs_parse():
    configs = Path(__file__).resolve().parents[1] / "configs"
    for name in ("fig3_lomax", "fig2_pareto", "fig2_student_t", "fig4_half_t"):
        config = load_config(configs / f"{name}.toml")
        assert config.replicates >= 1


# ---------------------------------------------------------------------------
# experiment runs
# ---------------------------------------------------------------------------


def test_run_experiment_deterministic_and_thread_invariant():
    config = ExperimentConfig.from_mapping(_base_mapping(replicates=24))
    a = run_experiment(config)
    b = run_experiment(config)
    c = run_experiment(config, threads=4)
    assert a.rows == b.rows == c.rows


def test_run_experiment_row_order():
    mapping = _base_mapping(
        strategies=["median_of_means", "huber_merge"],
        contamination={
            "counts": [0, 5],
            "outlier": {"kind": "normal", "mean": 0.0, "stddev": 100.0},
        },
    )
    table = run_experiment(ExperimentConfig.from_mapping(mapping))
    keys = [(row.k, row.strategy, row.contamination) for row in table.rows]
    assert keys == [
        (4, "median_of_means", 0),
        (4, "median_of_means", 5),
        (4, "huber_merge:3", 0),
        (4, "huber_merge:3", 5),
        (12, "median_of_means", 0),
        (12, "median_of_means", 5),
        (12, "huber_merge:3", 0),
        (12, "huber_merge:3", 5),
    ]
    assert len(table) == 8


def test_run_experiment_error_columns_sane():
    config = ExperimentConfig.from_mapping(_base_mapping(replicates=60))
    table = run_experiment(config)
    for row in table.rows:
        assert row.median_abs_error >= 0.0
        assert row.mean_abs_error >= 0.0
        assert row.coverage is None  # no ci_level configured
        assert row.bound is None and row.condition_holds is None
        # errors of a consistent estimator at N=240, sigma=2: well below 2
        assert row.median_abs_error < 1.0


def test_run_experiment_k_independent_strategies():
    config = ExperimentConfig.from_mapping(
        _base_mapping(
            strategies=[
                "sample_mean",
                {"kind": "u_quantile", "subset_size": 2, "draws": 64},
            ]
        )
    )
    table = run_experiment(config)
    by_strategy = {}
    for row in table.rows:
        by_strategy.setdefault(row.strategy, []).append(row)
    for rows in by_strategy.values():
        assert len({row.k for row in rows}) == 2
        assert len({row.median_abs_error for row in rows}) == 1  # same for all k


def test_run_experiment_sample_mean_coverage_calibrated():
    config = ExperimentConfig.from_mapping(
        _base_mapping(replicates=400, strategies=["sample_mean"], ci_level=0.9)
    )
    table = run_experiment(config)
    coverage = table.rows[0].coverage
    assert coverage == pytest.approx(0.9, abs=0.06)


def test_run_experiment_contamination_degrades_mean_not_median():
    mapping = _base_mapping(
        N=400,
        replicates=80,
        k_values=[20],
        strategies=["sample_mean", "median_of_means"],
        contamination={
            "counts": [0, 5],
            "outlier": {"kind": "normal", "mean": 0.0, "stddev": 1e5},
        },
    )
    table = run_experiment(ExperimentConfig.from_mapping(mapping))
    cells = {(row.strategy, row.contamination): row for row in table.rows}
    assert cells[("sample_mean", 5)].median_abs_error > 50.0
    assert cells[("median_of_means", 5)].median_abs_error < 1.0


def test_run_experiment_vector_data():
    mapping = _base_mapping(
        N=120,
        replicates=30,
        k_values=[8],
        dimension=3,
        strategies=["coordinatewise_median", "geometric_median", "huber_merge"],
    )
    table = run_experiment(ExperimentConfig.from_mapping(mapping))
    assert len(table) == 3
    for row in table.rows:
        assert 0.0 <= row.median_abs_error < 2.5  # Euclidean error around tight truth
        assert row.coverage is None


def test_run_experiment_thread_invariance_with_contamination():
    mapping = _base_mapping(
        replicates=16,
        contamination={
            "counts": [0, 4],
            "outlier": {"kind": "normal", "mean": 0.0, "stddev": 100.0},
        },
    )
    config = ExperimentConfig.from_mapping(mapping)
    assert run_experiment(config, threads=1).rows == run_experiment(config, threads=8).rows


def test_run_experiment_thread_validation():
    config = ExperimentConfig.from_mapping(_base_mapping())
    with pytest.raises(ConfigError):
        run_experiment(config, threads=0)


# ---------------------------------------------------------------------------
# sweeps and coverage tables
# ---------------------------------------------------------------------------


def test_sweep_k_overlays_bound_on_clean_mom_rows():
    mapping = _base_mapping(
        N=512,
        replicates=20,
        k_values=[4, 16],
        strategies=["median_of_means", "sample_mean"],
        contamination={
            "counts": [0, 3],
            "outlier": {"kind": "normal", "mean": 0.0, "stddev": 100.0},
        },
    )
    config = ExperimentConfig.from_mapping(mapping)
    table = sweep_k(config)
    moments = true_moments(config.data)
    for row in table.rows:
        if row.strategy == "median_of_means" and row.contamination == 0:
            ref = bound_corollary1(
                moments.stddev,
                moments.abs_central_moment(3.0),
                config.n_total // row.k,
                row.k,
                config.s_for_bounds,
            )
            assert row.bound == pytest.approx(ref.bound, rel=1e-13)
            assert row.condition_holds == ref.condition_holds
        else:
            assert row.bound is None and row.condition_holds is None


def test_sweep_k_warns_when_moments_missing():
    mapping = _base_mapping(
        data={"kind": "student_t", "dof": 2.0}, strategies=["median_of_means"]
    )
    config = ExperimentConfig.from_mapping(mapping)
    with pytest.warns(UserWarning, match="overlay omitted"):
        table = sweep_k(config)
    assert all(row.bound is None for row in table.rows)


def test_sweep_k_warns_without_mom_rows():
    config = ExperimentConfig.from_mapping(_base_mapping(strategies=["sample_mean"]))
    with pytest.warns(UserWarning, match="no uncontaminated"):
        sweep_k(config)


def test_coverage_table_requires_ci_setup():
    with pytest.raises(ConfigError, match="ci_level"):
        coverage_table(ExperimentConfig.from_mapping(_base_mapping()))
    mapping = _base_mapping(strategies=["coordinatewise_median"], ci_level=0.95)
    with pytest.raises(ConfigError, match="at least one"):
        coverage_table(ExperimentConfig.from_mapping(mapping))
    table = coverage_table(
        ExperimentConfig.from_mapping(_base_mapping(ci_level=0.9, replicates=20))
    )
    for row in table.rows:
        assert row.coverage is not None


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _toy_table() -> ResultTable:
    return ResultTable(
        (
            ResultRow(
                k=3,
                strategy="median_of_means",
                contamination=0,
                median_abs_error=0.123456789012345,
                mean_abs_error=0.25,
                coverage=None,
                bound=1.5,
                condition_holds=True,
            ),
            ResultRow(
                k=9,
                strategy="huber_merge:3",
                contamination=12,
                median_abs_error=2e-9,
                mean_abs_error=3.0,
                coverage=0.9375,
                bound=None,
                condition_holds=False,
            ),
        )
    )


def test_render_csv_golden_bytes():
    expected = (
        "k,strategy,contamination,median_abs_error,mean_abs_error,"
        "coverage,bound,condition_holds\r\n"
        "3,median_of_means,0,0.123456789012,0.25,,1.5,true\r\n"
        "9,huber_merge:3,12,2e-09,3,0.9375,,false\r\n"
    )
    assert render_csv(_toy_table()) == expected


def test_emit_csv_bytes_match_render(tmp_path):
    path = tmp_path / "out.csv"
    emit_csv(_toy_table(), path)
    raw = path.read_bytes()
    assert raw == render_csv(_toy_table()).encode("utf-8")
    assert raw.count(b"\r\n") == 3
    assert raw.replace(b"\r\n", b"").count(b"\n") == 0  # CRLF only


def test_csv_float_formatting_12_significant_digits():
    table = ResultTable(
        (
            ResultRow(
                k=1,
                strategy="sample_mean",
                contamination=0,
                median_abs_error=math.pi,
                mean_abs_error=1.0 / 3.0,
            ),
        )
    )
    body = render_csv(table).splitlines()[1]
    assert "3.14159265359" in body
    assert "0.333333333333" in body


# ---------------------------------------------------------------------------
# SVG output
# ---------------------------------------------------------------------------


def test_render_svg_well_formed_and_deterministic():
    table = _toy_table()
    svg = render_svg(table, title="demo <plot>")
    assert svg == render_svg(table, title="demo <plot>")
    document = xml.dom.minidom.parseString(svg)
    assert document.documentElement.tagName == "svg"
    assert "demo &lt;plot&gt;" in svg
    assert "polyline" in svg or "circle" in svg


def test_render_svg_bound_overlay_styles():
    rows = []
    for k, holds in ((2, True), (4, True), (8, False), (16, False)):
        rows.append(
            ResultRow(
                k=k,
                strategy="median_of_means",
                contamination=0,
                median_abs_error=1.0 / k,
                mean_abs_error=1.0 / k,
                bound=2.0 / k,
                condition_holds=holds,
            )
        )
    svg = render_svg(ResultTable(tuple(rows)))
    assert 'stroke-dasharray="6,4"' in svg  # dashed where the condition fails
    assert 'stroke="#000000"' in svg
    assert "closed-form bound" in svg


def test_render_svg_single_point_series_draws_marker():
    table = ResultTable(
        (
            ResultRow(
                k=5,
                strategy="sample_mean",
                contamination=0,
                median_abs_error=0.5,
                mean_abs_error=0.5,
            ),
        )
    )
    svg = render_svg(table)
    assert "<circle" in svg and "<polyline" not in svg


def test_render_svg_validation():
    with pytest.raises(ValueError, match="nothing to plot"):
        render_svg(ResultTable(()))
    table = _toy_table()
    with pytest.raises(ValueError, match="x_field"):
        render_svg(table, x_field="strategy")
    with pytest.raises(ValueError, match="y_field"):
        render_svg(table, y_field="bound")
    zero = ResultTable(
        (
            ResultRow(
                k=1,
                strategy="sample_mean",
                contamination=0,
                median_abs_error=0.0,
                mean_abs_error=0.0,
            ),
        )
    )
    with pytest.raises(ValueError, match="log y"):
        render_svg(zero, logy=True)


def test_render_svg_coverage_axis():
    table = ResultTable(
        tuple(
            ResultRow(
                k=10,
                strategy="median_of_means",
                contamination=c,
                median_abs_error=0.1,
                mean_abs_error=0.1,
                coverage=0.95 - 0.01 * c,
            )
            for c in (0, 10, 20)
        )
    )
    svg = render_svg(table, x_field="contamination", y_field="coverage")
    assert "coverage" in svg


def test_emit_svg_round_trip(tmp_path):
    path = tmp_path / "plot.svg"
    emit_svg(_toy_table(), path, logx=True, logy=True)
    text = path.read_text()
    assert text.startswith("<?xml")
    assert text == render_svg(_toy_table(), logx=True, logy=True)
