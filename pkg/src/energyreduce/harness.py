"""Experiment rounds, metric aggregation and table emission."""
from __future__ import annotations

import csv
import io
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import AlgorithmSetMismatch, ZeroVarianceTargetWarning
from .ingest import AlignedFrame
from .reduction import CorrelationReport
from .regressors import DISPLAY_NAMES, ModelSpec, fit, predict
from .seeding import derive_seed
from .windows import WindowSpec, build_windows, split_chronological

METRICS: tuple[str, ...] = ("r2", "mse", "rmse", "mae")
METRIC_HEADERS = {"r2": "R²", "mse": "MSE", "rmse": "RMSE", "mae": "MAE"}
CSV_METRIC_HEADERS = {"r2": "R2", "mse": "MSE", "rmse": "RMSE", "mae": "MAE"}


@dataclass(frozen=True)
class MetricSet:
    mse: float
    rmse: float
    mae: float
    r2: float

    def to_dict(self) -> dict:
        return {"mse": self.mse, "rmse": self.rmse, "mae": self.mae, "r2": self.r2}


def compute_metrics(y, y_hat) -> MetricSet:
    y = np.asarray(y, dtype=np.float64)
    y_hat = np.asarray(y_hat, dtype=np.float64)
    if y.shape != y_hat.shape or y.ndim != 1 or len(y) == 0:
        raise ValueError(f"need equal nonzero-length vectors, got {y.shape} and {y_hat.shape}")
    err = y - y_hat
    ss_res = float(err @ err)
    mse = ss_res / len(y)
    dev = y - y.mean()
    ss_tot = float(dev @ dev)
    if ss_tot == 0.0:
        warnings.warn(ZeroVarianceTargetWarning("constant target, R² undefined"), stacklevel=2)
        r2 = math.nan
    else:
        r2 = 1.0 - ss_res / ss_tot
    return MetricSet(mse, math.sqrt(mse), float(np.abs(err).mean()), r2)


def _mean(values: Sequence[float]) -> float:
    return math.fsum(values) / len(values)


def _pstd(values: Sequence[float]) -> float:
    if all(v == values[0] for v in values):
        return 0.0
    mu = _mean(values)
    return math.sqrt(math.fsum((v - mu) ** 2 for v in values) / len(values))


@dataclass
class RoundReport:
    round_id: str
    algorithms: list[str]
    runs: dict[str, list[MetricSet]]
    timings: dict[str, list[float]] = field(default_factory=dict)
    variables: list[str] = field(default_factory=list)

    @property
    def repetitions(self) -> int:
        return len(next(iter(self.runs.values()))) if self.runs else 0

    def mean(self, algorithm: str) -> MetricSet:
        runs = self.runs[algorithm]
        return MetricSet(**{m: _mean([getattr(r, m) for r in runs]) for m in ("mse", "rmse", "mae", "r2")})

    def std(self, algorithm: str) -> MetricSet:
        runs = self.runs[algorithm]
        return MetricSet(**{m: _pstd([getattr(r, m) for r in runs]) for m in ("mse", "rmse", "mae", "r2")})

    def mean_training_time(self, algorithm: str) -> float:
        t = self.timings.get(algorithm, [])
        return _mean(t) if t else math.nan

    def to_dict(self) -> dict:
        """Metrics only; timings are nondeterministic and kept apart."""
        return {
            "round": self.round_id,
            "variables": list(self.variables),
            "algorithms": list(self.algorithms),
            "runs": {a: [r.to_dict() for r in self.runs[a]] for a in self.algorithms},
        }

    @classmethod
    def from_dict(cls, d: dict, timings: dict | None = None) -> "RoundReport":
        runs = {a: [MetricSet(**r) for r in d["runs"][a]] for a in d["algorithms"]}
        return cls(d["round"], list(d["algorithms"]), runs, dict(timings or {}), list(d.get("variables", [])))


def run_round(frame: AlignedFrame, spec: WindowSpec, model_specs: Sequence[ModelSpec],
              repetitions: int = 5, seed: int = 0, *, round_id: str = "full",
              workers: int = 1) -> RoundReport:
    """Fit and score every model ``repetitions`` times on one chronological split.

    Repetition r reseeds every model with a seed derived from (seed, r), so
    deterministic solvers repeat exactly and only the stochastic ones vary.
    """
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    ds = build_windows(frame, spec)
    train, test = split_chronological(ds)
    jobs = [(r, ms) for r in range(repetitions) for ms in model_specs]

    def job(item):
        r, ms = item
        model = fit(ms.with_seed(derive_seed(seed, r)), train.features, train.targets)
        return compute_metrics(test.targets, predict(model, test.features)), model.training_time

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            results = list(pool.map(job, jobs))
    else:
        results = [job(j) for j in jobs]

    algorithms = [ms.algorithm for ms in model_specs]
    if len(set(algorithms)) != len(algorithms):
        raise ValueError("each algorithm may appear once per round")
    runs: dict[str, list[MetricSet]] = {a: [] for a in algorithms}
    timings: dict[str, list[float]] = {a: [] for a in algorithms}
    for (r, ms), (metrics, elapsed) in zip(jobs, results):
        runs[ms.algorithm].append(metrics)
        timings[ms.algorithm].append(elapsed)
    return RoundReport(round_id, algorithms, runs, timings, list(spec.variables))


@dataclass
class RoundDiff:
    """Positive entries mean the reduced round did better: higher mean R²,
    lower mean errors, and lower spread for every standard deviation."""

    algorithms: list[str]
    mean: dict[str, MetricSet]
    std: dict[str, MetricSet]


def compare_rounds(full: RoundReport, reduced: RoundReport) -> RoundDiff:
    if set(full.algorithms) != set(reduced.algorithms):
        raise AlgorithmSetMismatch(
            f"rounds cover different algorithms: {sorted(full.algorithms)} vs {sorted(reduced.algorithms)}"
        )
    means, stds = {}, {}
    for a in full.algorithms:
        fm, rm = full.mean(a), reduced.mean(a)
        means[a] = MetricSet(
            mse=fm.mse - rm.mse, rmse=fm.rmse - rm.rmse, mae=fm.mae - rm.mae, r2=rm.r2 - fm.r2
        )
        fs, rs = full.std(a), reduced.std(a)
        stds[a] = MetricSet(
            mse=fs.mse - rs.mse, rmse=fs.rmse - rs.rmse, mae=fs.mae - rs.mae, r2=fs.r2 - rs.r2
        )
    return RoundDiff(list(full.algorithms), means, stds)


def fmt(value: float, places: int = 4) -> str:
    if math.isnan(value):
        return "nan"
    s = f"{value:.{places}f}"
    # -0.0000 and 0.0000 describe the same table entry
    return s[1:] if s.startswith("-") and float(s) == 0.0 else s


def _markdown(headers: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    lines = ["| " + " | ".join(headers) + " |", "|" + "|".join("---" for _ in headers) + "|"]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return "\n".join(lines) + "\n"


def _csv(headers: Sequence[str], rows: Iterable[Sequence[str]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(headers)
    w.writerows(rows)
    return buf.getvalue()


def metric_rows(algorithms: Sequence[str], table: dict[str, MetricSet]) -> list[list[str]]:
    return [[DISPLAY_NAMES.get(a, a)] + [fmt(getattr(table[a], m)) for m in METRICS] for a in algorithms]


def metric_table(algorithms: Sequence[str], table: dict[str, MetricSet], fmt_name: str) -> str:
    rows = metric_rows(algorithms, table)
    if fmt_name == "md":
        return _markdown(["Algorithms"] + [METRIC_HEADERS[m] for m in METRICS], rows)
    return _csv(["Algorithms"] + [CSV_METRIC_HEADERS[m] for m in METRICS], rows)


def correlation_table(report: CorrelationReport, fmt_name: str) -> str:
    rows = []
    for v, s in report.pairs.items():
        rows.append([
            f"{v.capitalize()}-Power", fmt(s.min_p), fmt(s.max_p), fmt(s.mean_p), fmt(s.median_p),
            f"{fmt(100 * s.rejection_rate, 2)} %" if fmt_name == "md" else fmt(100 * s.rejection_rate, 2),
            s.verdict,
        ])
    if fmt_name == "md":
        return _markdown(["Variables", "Min.", "Max.", "Mean", "Median", "Reject H₀", "verdict"], rows)
    return _csv(["Variables", "Min.", "Max.", "Mean", "Median", "Reject H0 %", "verdict"], rows)


TABLE_FILES = {
    "table1_correlation": "correlation",
    "table2_full_avg": ("full", "mean"),
    "table3_reduced_avg": ("reduced", "mean"),
    "table4_full_std": ("full", "std"),
    "table5_reduced_std": ("reduced", "std"),
    "table6_diff_avg": ("diff", "mean"),
    "table7_diff_std": ("diff", "std"),
}


def emit_reports(out_dir, *, correlation: CorrelationReport | None = None,
                 full: RoundReport | None = None, reduced: RoundReport | None = None,
                 formats: Sequence[str] = ("csv", "md"), timing: bool = True) -> list[Path]:
    """Write every table the given inputs allow; returns the paths written.

    The difference tables need both rounds. ``timing.csv`` is the one
    nondeterministic file and carries mean training seconds per model.
    """
    formats = ["md" if f == "markdown" else f for f in formats]
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rounds = {"full": full, "reduced": reduced}
    diff = compare_rounds(full, reduced) if full and reduced else None
    written: list[Path] = []
    for stem, source in TABLE_FILES.items():
        for f in formats:
            if source == "correlation":
                if correlation is None:
                    continue
                text = correlation_table(correlation, f)
            elif source[0] == "diff":
                if diff is None:
                    continue
                text = metric_table(diff.algorithms, getattr(diff, source[1]), f)
            else:
                rep = rounds[source[0]]
                if rep is None:
                    continue
                table = {a: getattr(rep, source[1])(a) for a in rep.algorithms}
                text = metric_table(rep.algorithms, table, f)
            path = out / f"{stem}.{f}"
            path.write_text(text, encoding="utf-8")
            written.append(path)
    if timing and (full or reduced):
        algs = (full or reduced).algorithms
        rows = []
        for a in algs:
            rows.append([DISPLAY_NAMES.get(a, a)] + [
                fmt(r.mean_training_time(a)) if r and a in r.timings else "" for r in (full, reduced)
            ])
        path = out / "timing.csv"
        path.write_text(_csv(["Algorithms", "full_fit_seconds", "reduced_fit_seconds"], rows), encoding="utf-8")
        written.append(path)
    return written
