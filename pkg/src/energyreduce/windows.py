"""Lagged feature windows with a forecast-horizon target."""
from __future__ import annotations

import io
import math
from dataclasses import dataclass, replace

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .errors import CannotDropTarget, DegenerateSplit, FrameTooShort, UnknownVariable
from .ingest import MINUTE_MS, TARGET, VARIABLES, AlignedFrame


@dataclass(frozen=True)
class WindowSpec:
    lags: int = 10
    horizon: int = 5
    variables: tuple[str, ...] = VARIABLES
    train_fraction: float = 0.8
    max_gap: int = 1  # minutes allowed between consecutive rows inside a window

    def __post_init__(self) -> None:
        object.__setattr__(self, "variables", tuple(self.variables))
        if self.lags < 1 or self.horizon < 1:
            raise ValueError("lags and horizon must be >= 1")
        if TARGET not in self.variables:
            raise ValueError("window variables must include power")
        unknown = [v for v in self.variables if v not in VARIABLES]
        if unknown:
            raise UnknownVariable(f"unknown variables {unknown}")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must lie in (0, 1)")
        if self.max_gap < 1:
            raise ValueError("max_gap must be >= 1")

    @property
    def column_labels(self) -> list[str]:
        return [f"{v}_lag{k}" for v in self.variables for k in range(self.lags - 1, -1, -1)]


@dataclass(frozen=True)
class DatasetView:
    features: np.ndarray
    targets: np.ndarray
    start_minutes: np.ndarray
    target_minutes: np.ndarray

    def __len__(self) -> int:
        return len(self.targets)


@dataclass(frozen=True)
class WindowedDataset:
    spec: WindowSpec
    features: np.ndarray
    targets: np.ndarray
    start_index: np.ndarray  # frame row of each window's oldest lag
    start_minutes: np.ndarray
    target_minutes: np.ndarray
    skipped: int

    @property
    def rows(self) -> int:
        return len(self.targets)

    @property
    def split_index(self) -> int:
        # rounding guards against e.g. 0.29 * 100 = 28.999999999999996
        return math.floor(round(self.spec.train_fraction * self.rows, 9))

    @property
    def column_labels(self) -> list[str]:
        return self.spec.column_labels

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(self.column_labels + ["target"]) + "\n")
        for feats, y in zip(self.features.tolist(), self.targets.tolist()):
            buf.write(",".join(repr(v) for v in feats) + f",{y!r}\n")
        return buf.getvalue()


def build_windows(frame: AlignedFrame, spec: WindowSpec = WindowSpec()) -> WindowedDataset:
    n = len(frame)
    L, h = spec.lags, spec.horizon
    if n < L + h:
        raise FrameTooShort(f"frame has {n} rows, windows need at least {L + h}")
    span = L + h  # rows from oldest lag through the target
    candidates = n - span + 1

    gaps = np.diff(frame.minutes) > spec.max_gap * MINUTE_MS
    # a window is usable when none of its span-1 consecutive steps is a gap
    bad = np.concatenate([[0], np.cumsum(gaps)])
    valid = bad[span - 1 : span - 1 + candidates] - bad[:candidates] == 0
    starts = np.flatnonzero(valid)

    blocks = [sliding_window_view(frame[v], L)[starts] for v in spec.variables]
    features = np.ascontiguousarray(np.hstack(blocks)) if blocks else np.empty((len(starts), 0))
    target_idx = starts + L - 1 + h
    return WindowedDataset(
        spec=spec,
        features=features,
        targets=frame[TARGET][target_idx].copy(),
        start_index=starts,
        start_minutes=frame.minutes[starts],
        target_minutes=frame.minutes[target_idx],
        skipped=int(candidates - len(starts)),
    )


def split_chronological(ds: WindowedDataset) -> tuple[DatasetView, DatasetView]:
    k = ds.split_index
    if k == 0 or k >= ds.rows:
        raise DegenerateSplit(f"{ds.rows} rows at fraction {ds.spec.train_fraction} leave an empty side")

    def view(sl):
        return DatasetView(ds.features[sl], ds.targets[sl], ds.start_minutes[sl], ds.target_minutes[sl])

    return view(slice(0, k)), view(slice(k, None))


def drop_variable(spec: WindowSpec, variable: str) -> WindowSpec:
    if variable == TARGET:
        raise CannotDropTarget("power is the forecast target and cannot be dropped")
    if variable not in spec.variables:
        raise UnknownVariable(f"{variable!r} is not among {spec.variables}")
    return replace(spec, variables=tuple(v for v in spec.variables if v != variable))


@dataclass(frozen=True)
class Scaler:
    mean: np.ndarray
    scale: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=np.float64) - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> "Scaler":
        return cls(np.array(d["mean"], dtype=np.float64), np.array(d["scale"], dtype=np.float64))


def fit_scaler(X) -> Scaler:
    X = np.asarray(X, dtype=np.float64)
    if len(X) == 0:
        raise ValueError("cannot fit a scaler on zero rows")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    constant = np.ptp(X, axis=0) == 0
    # constant columns pass through untouched
    mean = np.where(constant, 0.0, mean)
    std = np.where(constant, 1.0, std)
    return Scaler(mean, std)


def standardize(train, test) -> tuple[np.ndarray, np.ndarray, Scaler]:
    """z-score both sides with statistics from ``train`` only; targets are
    never touched."""
    scaler = fit_scaler(train)
    return scaler.transform(train), scaler.transform(test), scaler
