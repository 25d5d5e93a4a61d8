"""Command-line entry point.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric or
model error, 5 I/O error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .errors import ConfigInvalid, FetchError, PaynowcastError, ReportError, StageFailure
from .ingest import fetch_raw
from .pipeline import COMMAND_STAGES, PipelineConfig, fixture_config_path, run_pipeline
from .report.jsonreport import parse_json

logger = logging.getLogger("paynowcast")


def u64(text):
    try:
        v = int(text, 10)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError(f"seed must be an unsigned 64-bit integer, got {v}")
    return v


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="pipeline configuration (JSON); --fixture uses the bundled one")
    common.add_argument("--fixture", action="store_true", help="use the bundled fixture configuration")
    common.add_argument("--seed", type=u64, help="RNG seed for random splits and shuffled folds")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="override a configuration key (dotted path, JSON value)")
    common.add_argument("--output-dir", type=Path, help="output directory (else config, else $PAYNOWCAST_OUTPUT_DIR)")
    common.add_argument("--features", type=Path, help="start from an existing features CSV instead of raw inputs")
    common.add_argument("-v", "--verbose", action="store_true")

    ap = argparse.ArgumentParser(prog="paynowcast", description="Nowcast GDP from payment-system data.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    helps = {
        "ingest": "read, clean, align and resample inputs; write canonical CSVs",
        "describe": "summary statistics, boxplots, correlations and predictor selection",
        "decompose": "classical additive seasonal decomposition",
        "fit": "fit the configured models on the training split and diagnose them",
        "validate": "k-fold cross-validation of the configured models",
        "run": "the full pipeline",
    }
    for name, text in helps.items():
        sub.add_parser(name, parents=[common], help=text)
    rp = sub.add_parser("report", help="validate an existing report.json and print its fit summaries")
    rp.add_argument("path", type=Path, nargs="?", help="report JSON (default: <output-dir>/report.json)")
    rp.add_argument("--output-dir", type=Path)
    fp = sub.add_parser("fetch", help="download a source file")
    fp.add_argument("url")
    fp.add_argument("-o", "--output", type=Path, required=True)
    fp.add_argument("--timeout", type=float, default=30.0)
    return ap


def _load_config(args):
    if args.fixture and args.config:
        raise ConfigInvalid("give either --config or --fixture, not both")
    path = fixture_config_path() if args.fixture else args.config
    if path is None:
        raise ConfigInvalid("no configuration given (--config PATH or --fixture)")
    return PipelineConfig.load(path, overrides=args.overrides, seed=args.seed, output_dir=args.output_dir)


def _report(args):
    import os

    path = args.path
    if path is None:
        out = args.output_dir or os.environ.get("PAYNOWCAST_OUTPUT_DIR")
        if not out:
            raise ConfigInvalid("no report path or output directory given")
        path = Path(out) / "report.json"
    report = parse_json(path.read_text(encoding="utf-8"))
    meta = report.metadata or {}
    print(f"report {path}: schema v{report.schema_version}, stages {', '.join(meta.get('stages_run', []))}")
    for label, fit in (report.fits or {}).items():
        print(fit.get("summary_text") or f"{label}: no summary")
    return 0


def _fetch(args):
    raw = fetch_raw(args.url, timeout=args.timeout)
    args.output.parent.mkdir(parents=True, exist_ok=True)
    text = "\n".join(",".join(_quote(c) for c in row) for row in raw.rows) + "\n"
    args.output.write_text(text, encoding="utf-8")
    print(f"{args.url} -> {args.output} ({len(raw.rows)} rows)")
    return 0


def _quote(cell):
    if any(ch in cell for ch in ',"\n'):
        return '"' + cell.replace('"', '""') + '"'
    return cell


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "report":
            return _report(args)
        if args.command == "fetch":
            return _fetch(args)
        config = _load_config(args)
        pipe = run_pipeline(config, COMMAND_STAGES[args.command], features_csv=args.features)
        print(f"{args.command}: stages {', '.join(pipe.stage_log)} -> {pipe.out}")
        return 0
    except StageFailure as exc:
        print(f"error: stage {exc.stage}: {exc.cause}", file=sys.stderr)
        return exc.exit_code
    except (PaynowcastError, ReportError, FetchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5


if __name__ == "__main__":
    sys.exit(main())
