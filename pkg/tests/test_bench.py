import json
import math

import pytest

from flintforest.bench import (
    BenchConfig,
    BenchReport,
    geometric_mean,
    load_injected_cells,
    render_report,
    report_from_cells,
    run_bench,
)
from flintforest.errors import BenchError


def cell(n_trees, max_depth, seed, strategy, times):
    return {
        "n_trees": n_trees,
        "max_depth": max_depth,
        "seed": seed,
        "strategy": strategy,
        "raw_times": times,
    }


class TestGeometricMean:
    def test_identical_values(self):
        assert geometric_mean([0.5, 0.5]) == pytest.approx(0.5, abs=1e-12)

    def test_hand_computed_pair(self):
        # sqrt(0.8 * 0.5)
        assert geometric_mean([0.8, 0.5]) == pytest.approx(math.sqrt(0.4), abs=1e-9)
        assert geometric_mean([0.8, 0.5]) == pytest.approx(0.63245553, abs=1e-7)

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            geometric_mean([])


class TestAggregation:
    def test_baseline_ratio_exactly_one(self):
        report = report_from_cells(
            [cell(1, 5, 1, "float", [2.0, 2.0, 2.0])], ["float"], host={}
        )
        assert report.cells[0].ratio == 1.0

    def test_injected_ratio(self):
        report = report_from_cells(
            [
                cell(1, 5, 1, "float", [2.0, 2.0, 2.0]),
                cell(1, 5, 1, "flint", [1.0, 1.0, 1.0]),
            ],
            ["float", "flint"],
            host={},
        )
        flint = [c for c in report.cells if c.strategy == "flint"][0]
        assert flint.ratio == 0.5
        group = [g for g in report.groups if g.strategy == "flint"][0]
        assert group.geomean == pytest.approx(0.5, abs=1e-12)

    def test_median_summary(self):
        report = report_from_cells(
            [cell(1, 5, 1, "float", [1.0, 9.0, 2.0])], ["float"], host={}
        )
        assert report.cells[0].summary == 2.0

    def test_depth_group_geomeans(self):
        rows = [
            cell(1, 5, 1, "float", [1.0]),
            cell(1, 5, 1, "flint", [0.8]),
            cell(2, 5, 1, "float", [1.0]),
            cell(2, 5, 1, "flint", [0.5]),
        ]
        report = report_from_cells(rows, ["float", "flint"], host={})
        group = [g for g in report.groups if g.strategy == "flint"][0]
        assert group.max_depth == 5
        assert group.geomean == pytest.approx(math.sqrt(0.4), abs=1e-9)
        # population variance of the stored ratios
        mean = (0.8 + 0.5) / 2
        expected_var = ((0.8 - mean) ** 2 + (0.5 - mean) ** 2) / 2
        assert group.variance == pytest.approx(expected_var, abs=1e-12)

    def test_d20_row_spans_groups(self):
        rows = [
            cell(1, 20, 1, "float", [1.0]),
            cell(1, 20, 1, "flint", [0.8]),
            cell(1, 30, 1, "float", [1.0]),
            cell(1, 30, 1, "flint", [0.5]),
            cell(1, 5, 1, "float", [1.0]),
            cell(1, 5, 1, "flint", [10.0]),  # shallow group must not leak in
        ]
        report = report_from_cells(rows, ["float", "flint"], host={})
        assert report.depth_ge_20["flint"] == pytest.approx(math.sqrt(0.4), abs=1e-9)
        assert report.depth_ge_20["float"] == 1.0

    def test_missing_baseline_rejected(self):
        with pytest.raises(BenchError, match="baseline"):
            report_from_cells([cell(1, 5, 1, "flint", [1.0])], ["flint"], host={})

    def test_geomean_recomputable_from_stored_ratios(self):
        rows = [
            cell(1, 20, 1, "float", [1.0]),
            cell(1, 20, 1, "flint", [0.7]),
            cell(2, 20, 1, "float", [1.0]),
            cell(2, 20, 1, "flint", [0.9]),
        ]
        report = report_from_cells(rows, ["float", "flint"], host={})
        group = [g for g in report.groups if g.strategy == "flint"][0]
        assert geometric_mean(group.ratios) == group.geomean


class TestRender:
    def small_report(self):
        rows = [
            cell(1, 20, 1, "float", [1.0]),
            cell(1, 20, 1, "flint", [0.8]),
            cell(1, 30, 1, "float", [1.0]),
            cell(1, 30, 1, "flint", [0.5]),
        ]
        return report_from_cells(rows, ["float", "flint"], host={})

    def test_table_layout(self):
        text = render_report(self.small_report(), "table")
        lines = text.splitlines()
        assert lines[0].startswith("strategy")
        assert "D=20" in lines[0] and "D=30" in lines[0]
        assert any(line.startswith("float ") or line.startswith("float  ") for line in lines)
        d20 = [line for line in lines if "(D>=20)" in line]
        assert len(d20) == 2
        assert "0.63246" in [l for l in d20 if l.startswith("flint")][0]

    def test_single_strategy_single_group(self):
        report = report_from_cells(
            [cell(1, 5, 1, "float", [1.0])], ["float"], host={}
        )
        text = render_report(report, "table")
        assert "D=5" in text and "1.00000" in text
        assert "(D>=20)" not in text

    def test_json_round_trip(self):
        report = self.small_report()
        doc = json.loads(render_report(report, "json"))
        assert BenchReport.from_dict(doc) == report

    def test_unknown_format_rejected(self):
        with pytest.raises(ValueError):
            render_report(self.small_report(), "yaml")


class TestInjection:
    def test_load_orders_baseline_first(self, tmp_path):
        path = tmp_path / "t.json"
        path.write_text(
            json.dumps(
                {
                    "cells": [
                        cell(1, 5, 1, "flint", [0.5]),
                        cell(1, 5, 1, "float", [1.0]),
                    ]
                }
            )
        )
        rows, strategies = load_injected_cells(path)
        assert strategies == ("float", "flint")
        assert len(rows) == 2


class TestConfig:
    def test_validation(self):
        with pytest.raises(BenchError, match="repetitions"):
            BenchConfig(repetitions=2)
        with pytest.raises(BenchError, match="warmup"):
            BenchConfig(warmup_rounds=0)
        with pytest.raises(BenchError, match="non-empty"):
            BenchConfig(tree_counts=())
        with pytest.raises(BenchError, match="baseline"):
            BenchConfig(strategies=("flint",))


class TestFakeClockRuns:
    def test_scripted_durations_produce_expected_ratios(self):
        cfg = BenchConfig(
            tree_counts=(1,),
            max_depths=(5,),
            seeds=(1,),
            strategies=("float", "flint"),
            repetitions=3,
            warmup_rounds=1,
            rows=4,
            n_features=3,
            n_classes=2,
        )
        # 2 clock reads per repetition; float passes take 2.0, flint 1.0
        schedule = iter(
            [0.0, 2.0, 10.0, 12.0, 20.0, 22.0, 100.0, 101.0, 110.0, 111.0, 120.0, 121.0]
        )
        report = run_bench(cfg, clock=lambda: next(schedule), timer_resolution=0.0)
        flint = [c for c in report.cells if c.strategy == "flint"][0]
        baseline = [c for c in report.cells if c.strategy == "float"][0]
        assert baseline.raw_times == (2.0, 2.0, 2.0)
        assert flint.raw_times == (1.0, 1.0, 1.0)
        assert baseline.ratio == 1.0
        assert flint.ratio == 0.5

    def test_resolution_flagging(self):
        cfg = BenchConfig(
            tree_counts=(1,),
            max_depths=(5,),
            seeds=(1,),
            strategies=("float",),
            repetitions=3,
            warmup_rounds=1,
            rows=2,
            n_features=3,
            n_classes=2,
        )
        schedule = iter([0.0, 1e-7, 1.0, 1.0 + 1e-7, 2.0, 2.0 + 1e-7])
        report = run_bench(
            cfg, clock=lambda: next(schedule), timer_resolution=1e-6
        )
        assert not report.cells[0].resolution_ok
        assert "timer ticks" in render_report(report, "table")


class TestRealRun:
    def test_small_real_measurement(self):
        cfg = BenchConfig(
            tree_counts=(1, 2),
            max_depths=(3, 20),
            seeds=(1,),
            strategies=("float", "flint"),
            repetitions=3,
            warmup_rounds=1,
            rows=16,
            n_features=4,
            n_classes=2,
        )
        report = run_bench(cfg)
        assert all(
            c.ratio == 1.0 for c in report.cells if c.strategy == "float"
        )
        assert all(len(c.raw_times) == 3 for c in report.cells)
        assert "flint" in report.depth_ge_20
        assert report.host["clock"] == "time.perf_counter"
