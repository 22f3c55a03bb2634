"""Command-line front end: ``fd-eval evaluate|compare|plot|synth``.

Exit status: 0 on success, 1 for user or data errors, 2 when an internal
invariant check fails.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path
from typing import Sequence

from . import __version__
from .calibration import DEFAULT_BINS
from .errors import ConfigError, FdEvalError, IoError, TooFewModels
from .ingest import load_predictions, write_predictions
from .plot import PlotSpec, model_curves, parse_shade, render_rc_svg
from .report import (
    MetricsReport,
    build_report,
    compare_models,
    comparison_to_dict,
    load_report,
    render_table_markdown,
)
from .scoring import ScoreKind, score_set
from .selection import rank
from .synth import SynthConfig, generate_synthetic

NO_COLOR_ENV = "FD_EVAL_NO_COLOR"


class UsageError(FdEvalError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits 2 on bad flags; 2 is reserved for internal failures here
    def error(self, message: str):
        raise UsageError(f"{self.prog}: {message}")


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _add_scoring_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--score", choices=[k.value for k in ScoreKind], default=ScoreKind.MSP.value,
                   help="uncertainty score used for ranking (default: msp)")
    p.add_argument("--scores-file", type=Path,
                   help="one uncertainty per line, in record order; required with --score external")
    p.add_argument("--bins", type=_positive_int, default=DEFAULT_BINS, help="ECE bin count M (default: 15)")
    p.add_argument("--format", choices=["auto", "csv", "jsonl"], default="auto", help="dump format")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fd-eval", description="Failure-detection metrics from classifier prediction dumps.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ev = sub.add_parser("evaluate", help="compute the metric report for one dump")
    ev.add_argument("input", type=Path)
    _add_scoring_flags(ev)
    ev.add_argument("--name", help="model name recorded in the report (default: file stem)")
    ev.add_argument("--out", type=Path, help="write the JSON report here instead of stdout")

    cmp_ = sub.add_parser("compare", help="compare two or more dumps or report JSONs")
    cmp_.add_argument("inputs", type=Path, nargs="+")
    _add_scoring_flags(cmp_)
    cmp_.add_argument("--out", type=Path, help="write the markdown table here instead of stdout")
    cmp_.add_argument("--json-out", type=Path, help="also write the combined reports as JSON")
    cmp_.add_argument("--no-ece", action="store_true", help="omit the ECE columns")

    pl = sub.add_parser("plot", help="render risk-coverage curves to SVG")
    pl.add_argument("inputs", type=Path, nargs="+")
    _add_scoring_flags(pl)
    pl.add_argument("--shade", default="", help="comma list of auor,e_aurc,e_auoptrc")
    pl.add_argument("--coverage-min", type=float, default=0.0, help="left end of the coverage axis")
    pl.add_argument("--title")
    pl.add_argument("--no-optimal", action="store_true", help="hide the optimal-risk curves")
    pl.add_argument("--out", type=Path, help="write the SVG here instead of stdout")

    sy = sub.add_parser("synth", help="generate a seeded synthetic dump")
    sy.add_argument("--n", type=int, required=True)
    sy.add_argument("--k", type=int, required=True)
    sy.add_argument("--accuracy", type=float, required=True)
    sy.add_argument("--temperature", type=float, default=1.0)
    sy.add_argument("--seed", type=int, default=0)
    sy.add_argument("--format", choices=["auto", "csv", "jsonl"], default="auto")
    sy.add_argument("--float-precision", type=int, help="decimals to print (default: exact round-trip)")
    sy.add_argument("--out", type=Path, required=True)
    return parser


def _external_scores(args) -> list[float] | None:
    if args.score != ScoreKind.EXTERNAL.value:
        return None
    if args.scores_file is None:
        raise UsageError("--score external requires --scores-file")
    try:
        lines = args.scores_file.read_text(encoding="utf-8").split()
    except OSError as exc:
        raise IoError(f"{args.scores_file}: {exc}") from exc
    try:
        return [float(x) for x in lines]
    except ValueError as exc:
        raise UsageError(f"{args.scores_file}: {exc}") from None


def _evaluate_path(path: Path, args, name: str | None = None) -> MetricsReport:
    pset = load_predictions(path, args.format)
    return build_report(pset, args.score, args.bins, name or path.stem, _external_scores(args))


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    try:
        out.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoError(f"{out}: {exc}") from exc


def cmd_evaluate(args) -> int:
    report = _evaluate_path(args.input, args, args.name)
    _emit(report.to_json(), args.out)
    return 0


def _is_report(path: Path) -> bool:
    return path.suffix.lower() == ".json"


def cmd_compare(args) -> int:
    if len(args.inputs) < 2:
        raise TooFewModels("need at least two models to compare")
    reports = [load_report(p) if _is_report(p) else _evaluate_path(p, args) for p in args.inputs]
    table = compare_models(reports, include_ece=False if args.no_ece else None)
    if args.out is None and sys.stdout.isatty() and not os.environ.get(NO_COLOR_ENV):
        style = "ansi"
    else:
        style = "markdown"
    _emit(render_table_markdown(table, style=style), args.out)
    if args.json_out is not None:
        _emit(json.dumps(comparison_to_dict(reports, table), indent=2, allow_nan=False) + "\n", args.json_out)
    return 0


def cmd_plot(args) -> int:
    try:
        shade = parse_shade(args.shade)
        spec = PlotSpec(shade=shade, coverage_min=args.coverage_min, show_optimal=not args.no_optimal,
                        title=args.title)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    curves = []
    for path in args.inputs:
        if _is_report(path):
            raise UsageError(f"{path}: plotting needs prediction dumps; report JSONs carry no curves")
        pset = load_predictions(path, args.format)
        ranked = rank(score_set(pset, args.score, _external_scores(args)))
        curves.append(model_curves(path.stem, ranked))
    _emit(render_rc_svg(spec, curves), args.out)
    return 0


def cmd_synth(args) -> int:
    cfg = SynthConfig(args.n, args.k, args.accuracy, args.temperature, args.seed).validate()
    if args.float_precision is not None and args.float_precision < 0:
        raise ConfigError("--float-precision must be >= 0")
    pset = generate_synthetic(cfg)
    write_predictions(pset, args.out, args.format, args.float_precision)
    return 0


COMMANDS = {
    "evaluate": cmd_evaluate,
    "compare": cmd_compare,
    "plot": cmd_plot,
    "synth": cmd_synth,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return COMMANDS[args.command](args)
    except FdEvalError as exc:
        print(f"fd-eval: error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # anything else is a bug
        print(f"fd-eval: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
