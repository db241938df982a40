"""Correlation-driven input reduction for smart-building energy forecasting."""

from .ingest import AlignedFrame, TelemetryRecord, align, parse_telemetry
from .reduction import CorrelationReport, TestConfig, run_reduction
from .windows import WindowSpec, build_windows, split_chronological

__version__ = "0.1.0"

__all__ = [
    "AlignedFrame", "TelemetryRecord", "align", "parse_telemetry",
    "CorrelationReport", "TestConfig", "run_reduction",
    "WindowSpec", "build_windows", "split_chronological",
]
