"""Experiment harness: sweeps, timing runs, CSV records and SVG charts."""

from .plan import DEFAULT_GRIDS, SweepPlan, base_from_run, noise_seed, run_seed
from .records import BenchRecord, CsvSink, best_rows, read_records
from .svg import line_chart
from .sweep import make_noisy, run_sweep, run_timing

__all__ = [
    "DEFAULT_GRIDS", "BenchRecord", "CsvSink", "SweepPlan", "base_from_run", "best_rows",
    "line_chart", "make_noisy", "noise_seed", "read_records", "run_seed", "run_sweep",
    "run_timing",
]
