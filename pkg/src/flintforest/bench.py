"""Timing harness: per-configuration wall time, ratios vs the float baseline,
geometric means grouped by maximum tree depth.

The aggregation math is pure and driven by injected raw timings in tests, so
it is verified independently of any real clock.  Real runs use the monotonic
performance counter, time whole dataset passes, and keep every raw repetition
in the report for auditability.
"""

from __future__ import annotations

import json
import math
import platform
import statistics
import subprocess
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Sequence

from .errors import BenchError
from .flint import FloatWidth
from .forest import Dataset, Forest, fuzz_rows, load_dataset, save_dataset, synth_forest
from .inference import ComparisonStrategy, predict_forest, prepare

__all__ = [
    "REPORT_FORMAT_VERSION",
    "BenchConfig",
    "BenchCell",
    "BenchReport",
    "geometric_mean",
    "run_bench",
    "report_from_cells",
    "load_injected_cells",
    "render_report",
]

REPORT_FORMAT_VERSION = 1
BASELINE_STRATEGY = "float"
COMPILED_SUFFIX = "-compiled"
MIN_TIMER_TICKS = 100


def geometric_mean(values: Sequence[float]) -> float:
    if not values:
        raise ValueError("geometric mean of no values")
    return math.exp(sum(math.log(v) for v in values) / len(values))


@dataclass(frozen=True)
class BenchConfig:
    tree_counts: tuple[int, ...] = (1, 5, 10)
    max_depths: tuple[int, ...] = (1, 5, 10, 20)
    seeds: tuple[int, ...] = (1, 2, 3)
    strategies: tuple[str, ...] = ("float", "flint")
    repetitions: int = 5
    warmup_rounds: int = 2
    dataset: Optional[str] = None
    rows: int = 256
    row_seed: int = 99
    width: FloatWidth = FloatWidth.DOUBLE
    n_features: int = 8
    n_classes: int = 3

    def __post_init__(self):
        if self.repetitions < 3:
            raise BenchError("repetitions must be >= 3")
        if self.warmup_rounds < 1:
            raise BenchError("warmup_rounds must be >= 1")
        if not (self.tree_counts and self.max_depths and self.seeds):
            raise BenchError("benchmark grid must be non-empty")
        if BASELINE_STRATEGY not in self.strategies:
            raise BenchError(f"strategies must include the {BASELINE_STRATEGY!r} baseline")


@dataclass(frozen=True)
class BenchCell:
    n_trees: int
    max_depth: int
    seed: int
    strategy: str
    raw_times: tuple[float, ...]
    summary: float
    ratio: float
    resolution_ok: bool

    @property
    def grid_key(self) -> tuple[int, int, int]:
        return (self.n_trees, self.max_depth, self.seed)


@dataclass(frozen=True)
class GroupSummary:
    max_depth: int
    strategy: str
    ratios: tuple[float, ...]
    geomean: float
    variance: float


@dataclass(frozen=True)
class BenchReport:
    version: int
    strategies: tuple[str, ...]
    cells: tuple[BenchCell, ...]
    groups: tuple[GroupSummary, ...]
    depth_ge_20: dict
    host: dict = field(compare=False)
    variance_estimator: str = "population"

    def to_dict(self) -> dict:
        return {
            "version": self.version,
            "strategies": list(self.strategies),
            "variance_estimator": self.variance_estimator,
            "host": dict(self.host),
            "cells": [
                {
                    "n_trees": c.n_trees,
                    "max_depth": c.max_depth,
                    "seed": c.seed,
                    "strategy": c.strategy,
                    "raw_times": list(c.raw_times),
                    "summary": c.summary,
                    "ratio": c.ratio,
                    "resolution_ok": c.resolution_ok,
                }
                for c in self.cells
            ],
            "groups": [
                {
                    "max_depth": g.max_depth,
                    "strategy": g.strategy,
                    "ratios": list(g.ratios),
                    "geomean": g.geomean,
                    "variance": g.variance,
                }
                for g in self.groups
            ],
            "depth_ge_20": dict(self.depth_ge_20),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "BenchReport":
        cells = tuple(
            BenchCell(
                n_trees=c["n_trees"],
                max_depth=c["max_depth"],
                seed=c["seed"],
                strategy=c["strategy"],
                raw_times=tuple(c["raw_times"]),
                summary=c["summary"],
                ratio=c["ratio"],
                resolution_ok=c["resolution_ok"],
            )
            for c in doc["cells"]
        )
        groups = tuple(
            GroupSummary(
                max_depth=g["max_depth"],
                strategy=g["strategy"],
                ratios=tuple(g["ratios"]),
                geomean=g["geomean"],
                variance=g["variance"],
            )
            for g in doc["groups"]
        )
        return cls(
            version=doc["version"],
            strategies=tuple(doc["strategies"]),
            cells=cells,
            groups=groups,
            depth_ge_20=dict(doc["depth_ge_20"]),
            host=dict(doc.get("host", {})),
            variance_estimator=doc.get("variance_estimator", "population"),
        )


def _population_variance(values: Sequence[float]) -> float:
    if len(values) < 2:
        return 0.0
    return statistics.pvariance(values)


def _host_metadata() -> dict:
    return {
        "platform": platform.platform(),
        "machine": platform.machine(),
        "python": platform.python_version(),
        "processor": platform.processor() or "unknown",
        "clock": "time.perf_counter",
        "clock_resolution": time.get_clock_info("perf_counter").resolution,
    }


def report_from_cells(
    measured: Sequence[dict], strategies: Sequence[str], host: Optional[dict] = None
) -> BenchReport:
    """Assemble a full report from raw timing rows.

    Each row carries ``n_trees, max_depth, seed, strategy, raw_times`` and an
    optional ``resolution_ok``.  Summaries are medians; every strategy's
    summary is normalized against the float baseline of the same grid point.
    """
    baselines: dict[tuple[int, int, int], float] = {}
    staged = []
    for row in measured:
        raw = tuple(float(t) for t in row["raw_times"])
        if not raw:
            raise BenchError("cell has no raw timings")
        summary = statistics.median(raw)
        key = (row["n_trees"], row["max_depth"], row["seed"])
        if row["strategy"] == BASELINE_STRATEGY:
            baselines[key] = summary
        staged.append((row, raw, summary, key))

    cells = []
    for row, raw, summary, key in staged:
        baseline = baselines.get(key)
        if baseline is None:
            raise BenchError(f"no {BASELINE_STRATEGY!r} baseline for grid point {key}")
        cells.append(
            BenchCell(
                n_trees=row["n_trees"],
                max_depth=row["max_depth"],
                seed=row["seed"],
                strategy=row["strategy"],
                raw_times=raw,
                summary=summary,
                ratio=summary / baseline,
                resolution_ok=bool(row.get("resolution_ok", True)),
            )
        )

    groups = []
    depths = sorted({c.max_depth for c in cells})
    for depth in depths:
        for strategy in strategies:
            ratios = tuple(
                c.ratio
                for c in cells
                if c.max_depth == depth and c.strategy == strategy
            )
            if not ratios:
                continue
            groups.append(
                GroupSummary(
                    max_depth=depth,
                    strategy=strategy,
                    ratios=ratios,
                    geomean=geometric_mean(ratios),
                    variance=_population_variance(ratios),
                )
            )

    depth_ge_20 = {}
    for strategy in strategies:
        ratios = [c.ratio for c in cells if c.strategy == strategy and c.max_depth >= 20]
        if ratios:
            depth_ge_20[strategy] = geometric_mean(ratios)

    return BenchReport(
        version=REPORT_FORMAT_VERSION,
        strategies=tuple(strategies),
        cells=tuple(cells),
        groups=tuple(groups),
        depth_ge_20=depth_ge_20,
        host=host if host is not None else _host_metadata(),
    )


def load_injected_cells(path) -> tuple[list[dict], tuple[str, ...]]:
    """Read raw timing rows from an injection JSON file (no clock involved)."""
    with open(path, "r", encoding="utf-8") as fp:
        doc = json.load(fp)
    rows = doc["cells"] if isinstance(doc, dict) else doc
    strategies = []
    for row in rows:
        if row["strategy"] not in strategies:
            strategies.append(row["strategy"])
    if BASELINE_STRATEGY in strategies:
        strategies.remove(BASELINE_STRATEGY)
        strategies.insert(0, BASELINE_STRATEGY)
    return rows, tuple(strategies)


def _bench_dataset(cfg: BenchConfig) -> Dataset:
    if cfg.dataset is not None:
        return load_dataset(cfg.dataset, cfg.width)
    return fuzz_rows(cfg.rows, cfg.n_features, cfg.row_seed, cfg.width)


def _time_interpreted(
    forest: Forest,
    strategy_name: str,
    rows: list[list[float]],
    cfg: BenchConfig,
    clock: Callable[[], float],
) -> list[float]:
    pf = prepare(forest, ComparisonStrategy.from_name(strategy_name))
    for _ in range(cfg.warmup_rounds):
        for row in rows:
            predict_forest(pf, row)
    times = []
    for _ in range(cfg.repetitions):
        t0 = clock()
        for row in rows:
            predict_forest(pf, row)
        t1 = clock()
        times.append(t1 - t0)
    return times


def _time_compiled(
    forest: Forest,
    strategy_name: str,
    csv_path: str,
    cfg: BenchConfig,
    workdir: Path,
) -> list[float]:
    import shutil

    from .codegen import emit_harness, emit_ifelse, source_file_names

    compiler = shutil.which("cc") or shutil.which("gcc")
    if compiler is None:
        raise BenchError("no C compiler available for compiled strategies")
    flavor = ComparisonStrategy.from_name(strategy_name.removesuffix(COMPILED_SUFFIX))
    source_name, harness_name = source_file_names("bench_model", flavor)
    generated = emit_ifelse(forest, flavor)
    (workdir / source_name).write_text(generated.text, encoding="utf-8")
    (workdir / harness_name).write_text(
        emit_harness(forest, flavor, source_name), encoding="utf-8"
    )
    binary = workdir / f"bench_{flavor.value}"
    subprocess.run(
        [compiler, "-O2", str(workdir / harness_name), "-o", str(binary)],
        check=True,
        capture_output=True,
    )
    proc = subprocess.run(
        [str(binary), csv_path, str(cfg.repetitions), str(cfg.warmup_rounds)],
        check=True,
        capture_output=True,
        text=True,
    )
    times = []
    for line in proc.stdout.splitlines():
        if line.startswith("pass_ns,"):
            times.append(int(line.split(",", 1)[1]) / 1e9)
    if len(times) != cfg.repetitions:
        raise BenchError(f"compiled harness reported {len(times)} timings")
    return times


def run_bench(
    cfg: BenchConfig,
    clock: Callable[[], float] = time.perf_counter,
    timer_resolution: Optional[float] = None,
) -> BenchReport:
    """Measure every grid point under every strategy and aggregate.

    Timed sections run single-threaded.  A cell whose median pass is shorter
    than 100 timer ticks is flagged (``resolution_ok=False``), never fatal.
    """
    if timer_resolution is None:
        if clock is time.perf_counter:
            timer_resolution = time.get_clock_info("perf_counter").resolution
        else:
            timer_resolution = 0.0

    dataset = _bench_dataset(cfg)
    rows = [dataset.features[r].tolist() for r in range(dataset.n_rows)]
    n_features = dataset.n_features if cfg.dataset is not None else cfg.n_features

    needs_compiled = any(s.endswith(COMPILED_SUFFIX) for s in cfg.strategies)
    measured = []
    with tempfile.TemporaryDirectory(prefix="flintforest-bench-") as tmp:
        csv_path = None
        if needs_compiled:
            csv_path = str(Path(tmp) / "bench_data.csv")
            save_dataset(dataset, csv_path)
        for n_trees in cfg.tree_counts:
            for max_depth in cfg.max_depths:
                for seed in cfg.seeds:
                    forest = synth_forest(
                        n_trees, max_depth, n_features, cfg.n_classes, seed, cfg.width
                    )
                    for strategy in cfg.strategies:
                        if strategy.endswith(COMPILED_SUFFIX):
                            times = _time_compiled(
                                forest, strategy, csv_path, cfg, Path(tmp)
                            )
                        else:
                            times = _time_interpreted(
                                forest, strategy, rows, cfg, clock
                            )
                        summary = statistics.median(times)
                        measured.append(
                            {
                                "n_trees": n_trees,
                                "max_depth": max_depth,
                                "seed": seed,
                                "strategy": strategy,
                                "raw_times": times,
                                "resolution_ok": summary
                                >= MIN_TIMER_TICKS * timer_resolution,
                            }
                        )
    return report_from_cells(measured, cfg.strategies)


def render_report(report: BenchReport, fmt: str = "table") -> str:
    """Human table (rows per strategy, columns per depth group, trailing
    D>=20 aggregate rows) or the full JSON document."""
    if fmt == "json":
        return json.dumps(report.to_dict(), indent=1)
    if fmt != "table":
        raise ValueError(f"unknown report format {fmt!r}")

    depths = sorted({g.max_depth for g in report.groups})
    by_key = {(g.strategy, g.max_depth): g for g in report.groups}
    label_width = max(
        [len("strategy")]
        + [len(s) + len(" (D>=20)") for s in report.strategies]
    )
    col_width = 10

    lines = []
    header = "strategy".ljust(label_width) + "".join(
        f"D={d}".rjust(col_width) for d in depths
    )
    lines.append(header)
    for strategy in report.strategies:
        row = strategy.ljust(label_width)
        for depth in depths:
            g = by_key.get((strategy, depth))
            row += (f"{g.geomean:.5f}" if g else "-").rjust(col_width)
        lines.append(row)
    for strategy in report.strategies:
        if strategy in report.depth_ge_20:
            row = f"{strategy} (D>=20)".ljust(label_width)
            row += f"{report.depth_ge_20[strategy]:.5f}".rjust(col_width)
            lines.append(row)
    flagged = sum(1 for c in report.cells if not c.resolution_ok)
    if flagged:
        lines.append(f"note: {flagged} cell(s) below {MIN_TIMER_TICKS} timer ticks")
    return "\n".join(lines)
