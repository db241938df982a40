"""Sampled correlation testing of environmental variables against power.

Each trial draws one random subset of rows, and every environmental variable
is tested against power on that same subset. A variable whose null
hypothesis (zero correlation) is rejected in too few trials is dropped.
"""
from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .errors import InsufficientRows, ZeroVariance
from .ingest import ENVIRONMENTAL, TARGET, VARIABLES, AlignedFrame
from .seeding import derive_rng
from .stats import correlation_t_test, pearson_r

MAX_REDRAWS = 100


@dataclass(frozen=True)
class TestConfig:
    n_samples: int = 30
    sample_size: int = 50
    alpha: float = 0.05
    drop_threshold: float = 1 / 3
    rng_seed: int = 0

    __test__ = False  # keep pytest from collecting this

    def __post_init__(self) -> None:
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.sample_size < 3:
            raise ValueError("sample_size must be >= 3")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie in (0, 1)")
        if not 0.0 <= self.drop_threshold <= 1.0:
            raise ValueError("drop_threshold must lie in [0, 1]")


@dataclass(frozen=True)
class TrialResult:
    variable: str
    trial: int
    r: float
    t_stat: float
    p_value: float
    reject_h0: bool

    @property
    def pair(self) -> tuple[str, str]:
        return (self.variable, TARGET)


@dataclass
class PairSummary:
    variable: str
    trials: list[TrialResult]
    min_p: float
    max_p: float
    mean_p: float
    median_p: float
    rejection_rate: float
    verdict: str


@dataclass
class CorrelationReport:
    config: TestConfig
    pairs: dict[str, PairSummary]
    redraws: list[dict] = field(default_factory=list)

    @property
    def kept(self) -> list[str]:
        return [v for v in ENVIRONMENTAL if v in self.pairs and self.pairs[v].verdict == "keep"]

    @property
    def dropped(self) -> list[str]:
        return [v for v in ENVIRONMENTAL if v in self.pairs and self.pairs[v].verdict == "drop"]

    def reduced_variables(self) -> list[str]:
        """Variables surviving the reduction, in frame order, power last."""
        return [v for v in VARIABLES if v == TARGET or v in self.kept]

    def to_dict(self) -> dict:
        return {
            "config": asdict(self.config),
            "pairs": {
                v: {
                    "variable": s.variable,
                    "min_p": s.min_p,
                    "max_p": s.max_p,
                    "mean_p": s.mean_p,
                    "median_p": s.median_p,
                    "rejection_rate": s.rejection_rate,
                    "verdict": s.verdict,
                    "trials": [asdict(t) for t in s.trials],
                }
                for v, s in self.pairs.items()
            },
            "redraws": self.redraws,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, data: dict) -> "CorrelationReport":
        pairs = {}
        for v, s in data["pairs"].items():
            trials = [TrialResult(**t) for t in s["trials"]]
            pairs[v] = PairSummary(
                s["variable"], trials, s["min_p"], s["max_p"], s["mean_p"],
                s["median_p"], s["rejection_rate"], s["verdict"],
            )
        order = [v for v in ENVIRONMENTAL if v in pairs]
        return cls(TestConfig(**data["config"]), {v: pairs[v] for v in order}, data.get("redraws", []))


def sample_rows(frame: AlignedFrame, cfg: TestConfig, trial_index: int, attempt: int = 0) -> np.ndarray:
    """Row indices for one trial, uniform without replacement.

    ``attempt`` selects a fresh draw for the same trial when an earlier
    draw proved unusable.
    """
    n = len(frame)
    if n < cfg.sample_size:
        raise InsufficientRows(f"frame has {n} rows, sample needs {cfg.sample_size}")
    rng = derive_rng(cfg.rng_seed, trial_index, attempt)
    return rng.choice(n, size=cfg.sample_size, replace=False)


def _median(values: list[float]) -> float:
    s = sorted(values)
    k = len(s)
    mid = k // 2
    return s[mid] if k % 2 else (s[mid - 1] + s[mid]) / 2.0


def _run_trial(frame: AlignedFrame, cfg: TestConfig, trial: int, variables):
    for attempt in range(MAX_REDRAWS + 1):
        rows = sample_rows(frame, cfg, trial, attempt)
        y = frame[TARGET][rows]
        try:
            results = []
            for v in variables:
                r = pearson_r(frame[v][rows], y)
                tt = correlation_t_test(r, cfg.sample_size, cfg.alpha)
                results.append(TrialResult(v, trial, r, tt.t_stat, tt.p_value, tt.reject_h0))
            return results, attempt
        except ZeroVariance:
            continue
    raise ZeroVariance(f"trial {trial}: {MAX_REDRAWS + 1} draws all had a constant column")


def summarize(variable: str, trials: list[TrialResult], cfg: TestConfig) -> PairSummary:
    ps = [t.p_value for t in trials]
    rejected = sum(t.reject_h0 for t in trials)
    rate = rejected / cfg.n_samples
    return PairSummary(
        variable=variable,
        trials=trials,
        min_p=min(ps),
        max_p=max(ps),
        mean_p=math.fsum(ps) / len(ps),
        median_p=_median(ps),
        rejection_rate=rate,
        verdict="drop" if rate < cfg.drop_threshold else "keep",
    )


def run_reduction(frame: AlignedFrame, cfg: TestConfig = TestConfig(), *,
                  variables=ENVIRONMENTAL, workers: int = 1) -> CorrelationReport:
    if len(frame) == 0:
        raise InsufficientRows("frame is empty")
    trials = range(cfg.n_samples)
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            outcomes = list(pool.map(lambda i: _run_trial(frame, cfg, i, variables), trials))
    else:
        outcomes = [_run_trial(frame, cfg, i, variables) for i in trials]

    per_var: dict[str, list[TrialResult]] = {v: [] for v in variables}
    redraws = []
    for i, (results, attempts) in enumerate(outcomes):
        if attempts:
            redraws.append({"trial": i, "redraws": attempts})
        for res in results:
            per_var[res.variable].append(res)
    pairs = {v: summarize(v, per_var[v], cfg) for v in variables}
    return CorrelationReport(cfg, pairs, redraws)
