"""Raw telemetry parsing and minute alignment.

Readings arrive from independent devices at unrelated instants. They are
snapped to the nearest minute, duplicates within a (minute, variable) key are
averaged, and only minutes where every variable was observed survive into the
aligned frame.
"""
from __future__ import annotations

import csv
import io
import json
import math
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import IO, Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import EmptyFrame, EmptyInput, MalformedLine

VARIABLES: tuple[str, ...] = ("temperature", "humidity", "light", "power")
ENVIRONMENTAL: tuple[str, ...] = ("temperature", "humidity", "light")
TARGET = "power"

MINUTE_MS = 60_000
_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_HEADER = ("ts", "device", "key", "value")


@dataclass(frozen=True, slots=True)
class TelemetryRecord:
    timestamp: int  # epoch milliseconds, UTC
    source: str
    variable: str
    value: float


@dataclass
class ParseResult:
    records: list[TelemetryRecord]
    errors: list[MalformedLine] = field(default_factory=list)


@dataclass
class DropReport:
    """Why minutes were eliminated: ``missing`` counts, per variable, the
    dropped minutes that lacked it."""

    observed_minutes: int
    kept: int
    dropped: int
    missing: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "observed_minutes": self.observed_minutes,
            "kept": self.kept,
            "dropped": self.dropped,
            "missing": dict(self.missing),
        }


@dataclass
class AlignedFrame:
    minutes: np.ndarray  # int64 epoch ms, strictly increasing
    columns: dict[str, np.ndarray]
    drop_report: DropReport | None = None

    def __post_init__(self) -> None:
        self.minutes = np.asarray(self.minutes, dtype=np.int64)
        self.columns = {v: np.asarray(self.columns[v], dtype=np.float64) for v in VARIABLES}
        n = len(self.minutes)
        if any(len(c) != n for c in self.columns.values()):
            raise ValueError("column lengths differ from minute index")
        if n > 1 and not np.all(np.diff(self.minutes) > 0):
            raise ValueError("minutes must be strictly increasing")

    def __len__(self) -> int:
        return len(self.minutes)

    def __getitem__(self, variable: str) -> np.ndarray:
        return self.columns[variable]

    def take(self, rows) -> "AlignedFrame":
        rows = np.asarray(rows)
        return AlignedFrame(self.minutes[rows], {v: c[rows] for v, c in self.columns.items()})

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("minute," + ",".join(VARIABLES) + "\n")
        cols = [self.columns[v].tolist() for v in VARIABLES]
        for i, m in enumerate(self.minutes.tolist()):
            buf.write(format_instant(m, seconds=True))
            for c in cols:
                buf.write("," + repr(c[i]))
            buf.write("\n")
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "AlignedFrame":
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None:
            raise EmptyInput("frame file is empty")
        expected = ["minute", *VARIABLES]
        if [h.strip() for h in header] != expected:
            raise MalformedLine(1, f"expected header {','.join(expected)}")
        minutes: list[int] = []
        values: list[list[float]] = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 5:
                raise MalformedLine(lineno, "expected 5 fields")
            try:
                minutes.append(parse_timestamp(row[0]))
                values.append([float(x) for x in row[1:]])
            except ValueError as exc:
                raise MalformedLine(lineno, str(exc)) from None
        if not minutes:
            raise EmptyFrame("frame file has no rows")
        arr = np.array(values, dtype=np.float64)
        return cls(np.array(minutes), {v: arr[:, j] for j, v in enumerate(VARIABLES)})


def parse_timestamp(text: str | int) -> int:
    """ISO-8601 string or integer epoch milliseconds -> epoch milliseconds.

    Naive ISO strings are taken as UTC.
    """
    if isinstance(text, bool):
        raise ValueError("boolean is not a timestamp")
    if isinstance(text, int):
        return text
    s = str(text).strip()
    if not s:
        raise ValueError("empty timestamp")
    if s.lstrip("-").isdigit():
        return int(s)
    iso = s[:-1] + "+00:00" if s[-1] in "Zz" else s
    iso = _normalize_fraction(iso)
    try:
        dt = datetime.fromisoformat(iso)
    except ValueError:
        raise ValueError(f"bad timestamp {s!r}") from None
    if dt.tzinfo is None:
        dt = dt.replace(tzinfo=timezone.utc)
    delta = dt - _EPOCH
    return (delta.days * 86_400 + delta.seconds) * 1000 + delta.microseconds // 1000


def _normalize_fraction(iso: str) -> str:
    # fromisoformat on 3.10 accepts only 3 or 6 fractional digits
    dot = iso.find(".")
    if dot < 0:
        return iso
    end = dot + 1
    while end < len(iso) and iso[end].isdigit():
        end += 1
    digits = iso[dot + 1 : end]
    if len(digits) in (3, 6) or not digits:
        return iso
    digits = (digits + "000000")[:6]
    return iso[: dot + 1] + digits + iso[end:]


def format_instant(ms: int, *, seconds: bool = False) -> str:
    dt = _EPOCH + timedelta(milliseconds=int(ms))
    if seconds:
        return dt.strftime("%Y-%m-%dT%H:%M:%SZ")
    return dt.strftime("%Y-%m-%dT%H:%M:%S.") + f"{dt.microsecond // 1000:03d}Z"


def _make_record(lineno: int, ts, device, key, value, raw: str) -> TelemetryRecord:
    try:
        stamp = parse_timestamp(ts)
    except (ValueError, TypeError) as exc:
        raise MalformedLine(lineno, str(exc), raw) from None
    if key not in VARIABLES:
        raise MalformedLine(lineno, f"unknown variable key {key!r}", raw)
    if isinstance(value, bool):
        raise MalformedLine(lineno, "non-numeric value", raw)
    try:
        val = float(value)
    except (ValueError, TypeError):
        raise MalformedLine(lineno, f"non-numeric value {value!r}", raw) from None
    if not math.isfinite(val):
        raise MalformedLine(lineno, f"non-finite value {value!r}", raw)
    return TelemetryRecord(stamp, str(device), key, val)


def _iter_csv(text: str) -> Iterator[tuple[int, object]]:
    lines = text.splitlines()
    if not lines or not lines[0].strip():
        raise EmptyInput("telemetry input is empty")
    header = [h.strip() for h in lines[0].split(",")]
    if tuple(header) != _HEADER:
        raise MalformedLine(1, f"expected header {','.join(_HEADER)}", lines[0])
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = next(csv.reader([line]))
        if len(fields) != 4:
            yield lineno, MalformedLine(lineno, f"expected 4 fields, got {len(fields)}", line)
            continue
        yield lineno, (fields[0], fields[1], fields[2].strip(), fields[3], line)


def _iter_ndjson(text: str) -> Iterator[tuple[int, object]]:
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            yield lineno, MalformedLine(lineno, f"invalid JSON: {exc.msg}", line)
            continue
        if not isinstance(obj, dict) or any(k not in obj for k in _HEADER):
            yield lineno, MalformedLine(lineno, "object needs keys ts, device, key, value", line)
            continue
        yield lineno, (obj["ts"], obj["device"], obj["key"], obj["value"], line)


def parse_telemetry(data: bytes | str, fmt: str = "csv", *, strict: bool = False) -> ParseResult:
    """Parse a telemetry export into records, preserving input order.

    Malformed lines are collected in ``errors`` (or raised at once when
    ``strict``). Raises EmptyInput when there is nothing to parse.
    """
    text = data.decode("utf-8") if isinstance(data, (bytes, bytearray)) else data
    if fmt == "csv":
        items = _iter_csv(text)
    elif fmt == "ndjson":
        items = _iter_ndjson(text)
    else:
        raise ValueError(f"unknown telemetry format {fmt!r}")
    result = ParseResult([])
    seen = False
    for lineno, item in items:
        seen = True
        if isinstance(item, MalformedLine):
            err = item
        else:
            try:
                result.records.append(_make_record(lineno, *item))
                continue
            except MalformedLine as exc:
                err = exc
        if strict:
            raise err
        result.errors.append(err)
    if not seen:
        raise EmptyInput("telemetry input has no data lines")
    return result


def write_telemetry(records: Iterable[TelemetryRecord], fp: IO[str], fmt: str = "csv") -> int:
    n = 0
    if fmt == "csv":
        fp.write(",".join(_HEADER) + "\n")
        for r in records:
            fp.write(f"{format_instant(r.timestamp)},{r.source},{r.variable},{r.value!r}\n")
            n += 1
    elif fmt == "ndjson":
        for r in records:
            fp.write(json.dumps({"ts": format_instant(r.timestamp), "device": r.source,
                                 "key": r.variable, "value": r.value}) + "\n")
            n += 1
    else:
        raise ValueError(f"unknown telemetry format {fmt!r}")
    return n


def round_to_minute(ms: int) -> int:
    """Nearest minute boundary; exactly half a minute rounds up."""
    return (ms + MINUTE_MS // 2) // MINUTE_MS * MINUTE_MS


def aggregate_duplicates(records: Iterable[TelemetryRecord]) -> dict[tuple[int, str], float]:
    """Mean value per (minute, variable).

    Timestamps are rounded here, so raw records can be passed directly;
    already-rounded ones are unaffected since rounding is idempotent.
    """
    sums: dict[tuple[int, str], float] = {}
    counts: Counter = Counter()
    for r in records:
        key = (round_to_minute(r.timestamp), r.variable)
        sums[key] = sums.get(key, 0.0) + r.value
        counts[key] += 1
    return {k: sums[k] / counts[k] for k in sums}


def merge_and_drop(aggregated: Mapping[tuple[int, str], float]) -> AlignedFrame:
    by_minute: dict[int, dict[str, float]] = {}
    for (minute, variable), value in aggregated.items():
        by_minute.setdefault(minute, {})[variable] = value
    minutes = sorted(by_minute)
    kept: list[int] = []
    missing = {v: 0 for v in VARIABLES}
    for m in minutes:
        row = by_minute[m]
        if len(row) == len(VARIABLES) and all(v in row for v in VARIABLES):
            kept.append(m)
        else:
            for v in VARIABLES:
                if v not in row:
                    missing[v] += 1
    report = DropReport(len(minutes), len(kept), len(minutes) - len(kept), missing)
    if not kept:
        raise EmptyFrame(f"no complete minutes among {len(minutes)} observed")
    cols = {v: np.array([by_minute[m][v] for m in kept], dtype=np.float64) for v in VARIABLES}
    return AlignedFrame(np.array(kept, dtype=np.int64), cols, report)


def align(records: Sequence[TelemetryRecord]) -> AlignedFrame:
    return merge_and_drop(aggregate_duplicates(records))
