"""Stage-wise orchestration over plain files.

Layout of an output directory::

    frame.csv               aligned minute frame (ingest)
    correlation.json        sampled correlation tests and verdicts (reduce)
    metrics_<round>.json    per-repetition metrics (train)
    timing_<round>.json     fit wall-clock seconds (train, nondeterministic)
    report/                 the seven tables plus timing.csv (report)
    run.json                resolved configuration and artifact hashes

Every stage records the SHA-256 of what it writes in ``run.json`` and checks
the hashes of what it reads, so a hand-edited or regenerated upstream file
is refused rather than silently mixed in.
"""
from __future__ import annotations

import hashlib
import json
import logging
import shutil
import tempfile
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import DataError, StaleArtifact, UsageError
from .harness import RoundReport, emit_reports, run_round
from .ingest import AlignedFrame, align, parse_telemetry
from .reduction import CorrelationReport, TestConfig, run_reduction
from .regressors import ALGORITHMS, ModelSpec
from .windows import WindowSpec

log = logging.getLogger(__name__)

MANIFEST = "run.json"
FRAME = "frame.csv"
CORRELATION = "correlation.json"
REPORT_DIR = "report"
ROUNDS = ("full", "reduced")


@dataclass
class PipelineConfig:
    seed: int = 0
    n_samples: int = 30
    sample_size: int = 50
    alpha: float = 0.05
    drop_threshold: float = 1 / 3
    lags: int = 10
    horizon: int = 5
    train_fraction: float = 0.8
    max_gap: int = 1
    repetitions: int = 5
    models: list[str] = field(default_factory=lambda: list(ALGORITHMS))
    hyperparameters: dict[str, dict] = field(default_factory=dict)
    formats: list[str] = field(default_factory=lambda: ["csv", "md"])

    def __post_init__(self) -> None:
        bad = [m for m in self.models if m not in ALGORITHMS]
        if bad:
            raise UsageError(f"unknown models {bad}; choose from {', '.join(ALGORITHMS)}")
        if not self.models:
            raise UsageError("at least one model is required")
        if self.repetitions < 1:
            raise UsageError("repetitions must be >= 1")
        for f in self.formats:
            if f not in ("csv", "md"):
                raise UsageError(f"unknown report format {f!r}")
        try:
            self.test_config()
            self.window_spec()
            self.model_specs()
        except ValueError as exc:
            raise UsageError(str(exc)) from None

    def test_config(self) -> TestConfig:
        return TestConfig(self.n_samples, self.sample_size, self.alpha, self.drop_threshold, self.seed)

    def window_spec(self, variables=None) -> WindowSpec:
        kw = {} if variables is None else {"variables": tuple(variables)}
        return WindowSpec(self.lags, self.horizon, train_fraction=self.train_fraction,
                          max_gap=self.max_gap, **kw)

    def model_specs(self) -> list[ModelSpec]:
        return [ModelSpec(m, dict(self.hyperparameters.get(m, {})), self.seed) for m in self.models]

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        known = {f.name for f in fields(cls)}
        return cls(**{k: v for k, v in d.items() if k in known})


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_manifest(out_dir) -> dict:
    path = Path(out_dir) / MANIFEST
    if not path.exists():
        return {"format": "energyreduce.run", "version": 1, "artifacts": {}}
    return json.loads(path.read_text(encoding="utf-8"))


def save_manifest(out_dir, manifest: dict) -> None:
    (Path(out_dir) / MANIFEST).write_text(_dump(manifest), encoding="utf-8")


def _record(manifest: dict, out_dir: Path, name: str, inputs: dict[str, str] | None = None) -> str:
    digest = sha256_file(out_dir / name)
    manifest.setdefault("artifacts", {})[name] = {"sha256": digest, "inputs": dict(inputs or {})}
    return digest


def _checked(manifest: dict, path: Path, name: str | None = None) -> str:
    """Hash of an artifact about to be read, refusing one the manifest says
    was different when written."""
    if not path.exists():
        raise DataError(f"missing artifact {path}")
    digest = sha256_file(path)
    entry = manifest.get("artifacts", {}).get(name or path.name)
    if entry and entry["sha256"] != digest:
        raise StaleArtifact(f"{path} changed since it was recorded in {MANIFEST}")
    return digest


def detect_format(path: Path) -> str:
    return "ndjson" if path.suffix.lower() in (".ndjson", ".jsonl", ".json") else "csv"


def stage_ingest(input_path, out_dir, fmt: str | None = None, cfg: PipelineConfig | None = None) -> AlignedFrame:
    src = Path(input_path)
    if not src.is_file():
        raise DataError(f"input telemetry {src} does not exist")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    parsed = parse_telemetry(src.read_bytes(), fmt or detect_format(src))
    for err in parsed.errors[:10]:
        log.warning("skipped %s", err)
    frame = align(parsed.records)
    (out / FRAME).write_text(frame.to_csv(), encoding="utf-8")
    manifest = load_manifest(out)
    manifest["input"] = {"path": str(input_path), "sha256": sha256_file(src)}
    manifest["ingest"] = {
        "records": len(parsed.records),
        "malformed_lines": [e.line_number for e in parsed.errors],
        "drops": frame.drop_report.to_dict() if frame.drop_report else None,
    }
    if cfg is not None:
        manifest["config"] = cfg.to_dict()
    _record(manifest, out, FRAME, {"input": manifest["input"]["sha256"]})
    save_manifest(out, manifest)
    return frame


def _load_frame(out: Path, manifest: dict, frame_path=None) -> tuple[AlignedFrame, str]:
    path = Path(frame_path) if frame_path else out / FRAME
    name = FRAME if path.resolve() == (out / FRAME).resolve() else None
    if name is None and not path.exists():
        raise DataError(f"frame {path} does not exist")
    digest = _checked(manifest, path, name) if name else sha256_file(path)
    return AlignedFrame.from_csv(path.read_text(encoding="utf-8")), digest


def stage_reduce(out_dir, cfg: PipelineConfig, frame_path=None) -> CorrelationReport:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = load_manifest(out)
    frame, frame_hash = _load_frame(out, manifest, frame_path)
    report = run_reduction(frame, cfg.test_config())
    (out / CORRELATION).write_text(report.to_json(), encoding="utf-8")
    emit_reports(out / REPORT_DIR, correlation=report, formats=cfg.formats, timing=False)
    manifest["config"] = cfg.to_dict()
    _record(manifest, out, CORRELATION, {FRAME: frame_hash})
    save_manifest(out, manifest)
    return report


def load_correlation(out: Path, manifest: dict) -> tuple[CorrelationReport, str]:
    path = out / CORRELATION
    if not path.exists():
        raise UsageError(f"no {CORRELATION} in {out}; run the reduce stage first")
    digest = _checked(manifest, path)
    return CorrelationReport.from_dict(json.loads(path.read_text(encoding="utf-8"))), digest


def stage_train(out_dir, cfg: PipelineConfig, round_id: str, frame_path=None, workers: int = 1) -> RoundReport:
    if round_id not in ROUNDS:
        raise UsageError(f"round must be one of {ROUNDS}")
    out = Path(out_dir)
    manifest = load_manifest(out)
    frame, frame_hash = _load_frame(out, manifest, frame_path)
    inputs = {FRAME: frame_hash}
    if round_id == "reduced":
        corr, corr_hash = load_correlation(out, manifest)
        recorded = manifest.get("artifacts", {}).get(CORRELATION, {}).get("inputs", {}).get(FRAME)
        if recorded is not None and recorded != frame_hash:
            raise StaleArtifact(f"{CORRELATION} was computed from a different frame")
        variables = corr.reduced_variables()
        inputs[CORRELATION] = corr_hash
    else:
        variables = None
    spec = cfg.window_spec(variables)
    report = run_round(frame, spec, cfg.model_specs(), cfg.repetitions, cfg.seed,
                       round_id=round_id, workers=workers)
    name = f"metrics_{round_id}.json"
    (out / name).write_text(_dump(report.to_dict()), encoding="utf-8")
    (out / f"timing_{round_id}.json").write_text(_dump(report.timings), encoding="utf-8")
    manifest["config"] = cfg.to_dict()
    _record(manifest, out, name, inputs)
    save_manifest(out, manifest)
    return report


def stage_report(out_dir, cfg: PipelineConfig) -> list[Path]:
    out = Path(out_dir)
    manifest = load_manifest(out)
    corr, corr_hash = load_correlation(out, manifest)
    rounds = {}
    for r in ROUNDS:
        path = out / f"metrics_{r}.json"
        if not path.exists():
            raise UsageError(f"no {path.name} in {out}; run the train stage with --round {r}")
        _checked(manifest, path)
        entry = manifest.get("artifacts", {}).get(path.name, {})
        if r == "reduced" and entry.get("inputs", {}).get(CORRELATION, corr_hash) != corr_hash:
            raise StaleArtifact(f"{path.name} was trained against a different {CORRELATION}")
        tpath = out / f"timing_{r}.json"
        timings = json.loads(tpath.read_text(encoding="utf-8")) if tpath.exists() else {}
        rounds[r] = RoundReport.from_dict(json.loads(path.read_text(encoding="utf-8")), timings)
    return emit_reports(out / REPORT_DIR, correlation=corr, full=rounds["full"],
                        reduced=rounds["reduced"], formats=cfg.formats)


def run_pipeline(input_path, out_dir, cfg: PipelineConfig, fmt: str | None = None, workers: int = 1) -> Path:
    """Every stage in a scratch directory, moved into ``out_dir`` only on
    success so a failed run leaves no partial reports."""
    src = Path(input_path)
    if not src.is_file():
        raise DataError(f"input telemetry {src} does not exist")
    out = Path(out_dir)
    out.parent.mkdir(parents=True, exist_ok=True)
    scratch = Path(tempfile.mkdtemp(prefix=".energyreduce-", dir=out.parent))
    try:
        stage_ingest(src, scratch, fmt, cfg)
        stage_reduce(scratch, cfg)
        for r in ROUNDS:
            stage_train(scratch, cfg, r, workers=workers)
        stage_report(scratch, cfg)
        out.mkdir(exist_ok=True)
        for item in sorted(scratch.rglob("*")):
            if item.is_file():
                dest = out / item.relative_to(scratch)
                dest.parent.mkdir(parents=True, exist_ok=True)
                shutil.move(str(item), dest)
    finally:
        shutil.rmtree(scratch, ignore_errors=True)
    return out
