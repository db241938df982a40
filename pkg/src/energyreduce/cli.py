"""Command-line entry point.

Exit codes: 0 success, 1 usage, 2 data error, 3 numeric failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .errors import DataError, PipelineError, UsageError
from .ingest import write_telemetry
from .pipeline import PipelineConfig
from .regressors import ALGORITHMS
from .synth import SynthConfig, generate

log = logging.getLogger("energyreduce")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be a positive integer, got {text}")
    return value


def _add_run_options(p: argparse.ArgumentParser) -> None:
    d = PipelineConfig()
    p.add_argument("--seed", type=int, default=d.seed)
    p.add_argument("--samples", type=_positive_int, default=d.n_samples, help="correlation trials (30)")
    p.add_argument("--sample-size", type=int, default=d.sample_size, help="rows per trial (50)")
    p.add_argument("--alpha", type=float, default=d.alpha, help="significance level (0.05)")
    p.add_argument("--drop-threshold", type=float, default=d.drop_threshold,
                   help="drop a variable rejected in fewer than this fraction of trials (0.3333)")
    p.add_argument("--lags", type=_positive_int, default=d.lags, help="lag window per variable (10)")
    p.add_argument("--horizon", type=_positive_int, default=d.horizon, help="forecast steps ahead (5)")
    p.add_argument("--split", type=float, default=d.train_fraction, help="chronological train fraction (0.8)")
    p.add_argument("--repetitions", type=_positive_int, default=d.repetitions)
    p.add_argument("--models", default=",".join(d.models), help=f"comma list from {','.join(ALGORITHMS)}")
    p.add_argument("--hyperparameters", type=Path, default=None,
                   help="JSON file mapping model name to hyperparameter overrides")
    p.add_argument("--format", choices=("csv", "md", "both"), default="both")
    p.add_argument("--workers", type=_positive_int, default=1, help="parallel model fits")


def _config(args) -> PipelineConfig:
    hyper = {}
    if args.hyperparameters is not None:
        hyper = json.loads(args.hyperparameters.read_text(encoding="utf-8"))
    return PipelineConfig(
        seed=args.seed,
        n_samples=args.samples,
        sample_size=args.sample_size,
        alpha=args.alpha,
        drop_threshold=args.drop_threshold,
        lags=args.lags,
        horizon=args.horizon,
        train_fraction=args.split,
        repetitions=args.repetitions,
        models=[m.strip() for m in args.models.split(",") if m.strip()],
        hyperparameters=hyper,
        formats=["csv", "md"] if args.format == "both" else [args.format],
    )


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="energyreduce", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("synth", help="write synthetic telemetry")
    d = SynthConfig()
    s.add_argument("--minutes", type=int, default=d.duration)
    s.add_argument("--seed", type=int, default=d.seed)
    s.add_argument("--rho-temp", type=float, default=d.rho_temp)
    s.add_argument("--rho-light", type=float, default=d.rho_light)
    s.add_argument("--rho-hum", type=float, default=d.rho_hum)
    s.add_argument("--noise", type=float, default=d.noise)
    s.add_argument("--missing-rate", type=float, default=d.missing_rate)
    s.add_argument("--env-period", type=float, default=d.env_period)
    s.add_argument("--power-cadence", type=float, default=d.power_cadence)
    s.add_argument("--start", default=d.start)
    s.add_argument("--format", choices=("csv", "ndjson"), default="csv")
    s.add_argument("--out", type=Path, default=Path("telemetry.csv"))

    i = sub.add_parser("ingest", help="align raw telemetry into a minute frame")
    i.add_argument("--input", type=Path, required=True)
    i.add_argument("--input-format", choices=("csv", "ndjson"), default=None)
    i.add_argument("--out", type=Path, required=True)

    r = sub.add_parser("reduce", help="sampled correlation tests on a frame")
    r.add_argument("--input", type=Path, default=None, help="frame CSV (default OUT/frame.csv)")
    r.add_argument("--out", type=Path, required=True)
    _add_run_options(r)

    t = sub.add_parser("train", help="one experiment round")
    t.add_argument("--round", choices=pipeline.ROUNDS, required=True)
    t.add_argument("--input", type=Path, default=None, help="frame CSV (default OUT/frame.csv)")
    t.add_argument("--out", type=Path, required=True)
    _add_run_options(t)

    rep = sub.add_parser("report", help="render tables from stored stage outputs")
    rep.add_argument("--out", type=Path, required=True)
    rep.add_argument("--format", choices=("csv", "md", "both"), default="both")

    p = sub.add_parser("pipeline", help="ingest, reduce, both rounds and report")
    p.add_argument("--input", type=Path, default=None)
    p.add_argument("--input-format", choices=("csv", "ndjson"), default=None)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--manifest", type=Path, default=None,
                   help="rerun from a run.json: its input and configuration replace the flags")
    _add_run_options(p)
    return parser


def cmd_synth(args) -> int:
    try:
        cfg = SynthConfig(
            duration=args.minutes, start=args.start, env_period=args.env_period,
            power_cadence=args.power_cadence, rho_temp=args.rho_temp, rho_light=args.rho_light,
            rho_hum=args.rho_hum, noise=args.noise, missing_rate=args.missing_rate, seed=args.seed,
        )
    except ValueError as exc:
        if isinstance(exc, PipelineError):
            raise
        raise UsageError(str(exc)) from None
    records = generate(cfg)
    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", encoding="utf-8", newline="") as fh:
        n = write_telemetry(records, fh, args.format)
    digest = hashlib.sha256(args.out.read_bytes()).hexdigest()
    print(f"wrote {n} records to {args.out} (sha256 {digest[:16]})")
    return 0


def cmd_ingest(args) -> int:
    frame = pipeline.stage_ingest(args.input, args.out, args.input_format)
    rep = frame.drop_report
    print(f"{len(frame)} complete minutes, {rep.dropped} dropped -> {args.out / pipeline.FRAME}")
    return 0


def cmd_reduce(args) -> int:
    report = pipeline.stage_reduce(args.out, _config(args), args.input)
    for v, s in report.pairs.items():
        print(f"{v}-power: reject {100 * s.rejection_rate:.2f}% mean p {s.mean_p:.4f} -> {s.verdict}")
    return 0


def cmd_train(args) -> int:
    report = pipeline.stage_train(args.out, _config(args), args.round, args.input, workers=args.workers)
    for a in report.algorithms:
        m = report.mean(a)
        print(f"{a:12s} R2 {m.r2:.4f}  RMSE {m.rmse:.4f}")
    return 0


def cmd_report(args) -> int:
    manifest = pipeline.load_manifest(args.out)
    cfg = PipelineConfig.from_dict(manifest.get("config", {}))
    cfg.formats = ["csv", "md"] if args.format == "both" else [args.format]
    for path in pipeline.stage_report(args.out, cfg):
        print(path)
    return 0


def cmd_pipeline(args) -> int:
    fmt = args.input_format
    if args.manifest is not None:
        manifest = json.loads(args.manifest.read_text(encoding="utf-8"))
        cfg = PipelineConfig.from_dict(manifest["config"])
        source = Path(manifest["input"]["path"])
        if source.is_file() and pipeline.sha256_file(source) != manifest["input"]["sha256"]:
            raise DataError(f"{source} no longer matches the hash in {args.manifest}")
    else:
        if args.input is None:
            raise UsageError("pipeline needs --input or --manifest")
        cfg = _config(args)
        source = args.input
    out = pipeline.run_pipeline(source, args.out, cfg, fmt, workers=args.workers)
    print(f"reports written to {out / pipeline.REPORT_DIR}")
    return 0


COMMANDS = {
    "synth": cmd_synth,
    "ingest": cmd_ingest,
    "reduce": cmd_reduce,
    "train": cmd_train,
    "report": cmd_report,
    "pipeline": cmd_pipeline,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except PipelineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except (ArithmeticError, FloatingPointError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except (ValueError, TypeError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
