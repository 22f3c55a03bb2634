"""Metric bundles, their JSON form, and model comparison tables.

JSON always carries raw metric values. Scaling (areas x 10^3, accuracy and
ECE in percent) happens only when a table is rendered.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .calibration import DEFAULT_BINS, BinStats, EceReport, ece, ece_at_optimal_point
from .errors import FormatError, InvariantViolation, IoError, TooFewModels
from .ingest import PredictionSet, validate
from .metrics import FdMetrics, check_invariants, evaluate_fd
from .scoring import ScoreKind, score_set
from .selection import rank

GRID = "per-sample"
TIE_RULE = "orig_index"
SCHEMA_VERSION = 1


@dataclass(frozen=True)
class MetricsReport:
    model_name: str
    fd: FdMetrics
    ece: EceReport | None
    ece_op: EceReport | None
    score_kind: str = ScoreKind.MSP.value
    bins_m: int | None = DEFAULT_BINS
    grid: str = GRID
    tie_rule: str = TIE_RULE

    def to_dict(self) -> dict:
        fd = self.fd
        out = {
            "model_name": self.model_name,
            "aurc": fd.aurc,
            "auor": fd.auor,
            "e_aurc": fd.e_aurc,
            "e_auoptrc": fd.e_auoptrc,
            "accuracy": fd.accuracy,
            "trust_index": fd.trust_index,
            "optimal_point": fd.optimal_point,
            "ece": None if self.ece is None else self.ece.ece,
            "ece_op": None if self.ece_op is None else self.ece_op.ece,
            "n": fd.n,
            "n_correct": fd.n_correct,
            "score_kind": self.score_kind,
            "bins_m": self.bins_m,
            "estimator": {"grid": self.grid, "tie_rule": self.tie_rule, "schema_version": SCHEMA_VERSION},
        }
        if self.ece is not None:
            out["ece_detail"] = _ece_to_dict(self.ece)
        if self.ece_op is not None:
            out["ece_op_detail"] = _ece_to_dict(self.ece_op)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, obj: dict) -> "MetricsReport":
        """Inverse of :meth:`to_dict`.

        Also accepts summary-only records (e.g. published table rows) that
        carry just ``model_name``, ``aurc``, ``e_aurc``, ``e_auoptrc``,
        ``accuracy`` and ``trust_index``.
        """
        if not isinstance(obj, dict):
            raise FormatError("report must be a JSON object")
        try:
            aurc = _num(obj["aurc"])
            e_aurc = _num(obj["e_aurc"])
            auor = _num(obj["auor"]) if obj.get("auor") is not None else aurc - e_aurc
            accuracy = _num(obj["accuracy"])
            fd = FdMetrics(
                aurc=aurc,
                auor=auor,
                e_aurc=e_aurc,
                e_auoptrc=_num(obj["e_auoptrc"]),
                accuracy=accuracy,
                trust_index=_num(obj["trust_index"]),
                optimal_point=_num(obj["optimal_point"]) if obj.get("optimal_point") is not None else accuracy,
                n=_opt_int(obj.get("n")),
                n_correct=_opt_int(obj.get("n_correct")),
            )
            name = obj["model_name"]
        except KeyError as exc:
            raise FormatError(f"report is missing field {exc.args[0]!r}") from None
        if not isinstance(name, str):
            raise FormatError("model_name must be a string")
        est = obj.get("estimator") or {}
        return cls(
            model_name=name,
            fd=fd,
            ece=_ece_from(obj, "ece", "ece_detail"),
            ece_op=_ece_from(obj, "ece_op", "ece_op_detail"),
            score_kind=str(obj.get("score_kind", ScoreKind.MSP.value)),
            bins_m=_opt_int(obj.get("bins_m")),
            grid=str(est.get("grid", GRID)),
            tie_rule=str(est.get("tie_rule", TIE_RULE)),
        )

    @classmethod
    def from_json(cls, text: str) -> "MetricsReport":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON ({exc.msg})", line=exc.lineno) from None


def _num(v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise FormatError(f"expected a number, got {v!r}")
    return float(v)


def _opt_int(v) -> int | None:
    if v is None:
        return None
    if isinstance(v, bool) or not isinstance(v, int):
        raise FormatError(f"expected an integer, got {v!r}")
    return v


def _ece_to_dict(rep: EceReport) -> dict:
    return {
        "n_evaluated": rep.n_evaluated,
        "bins": [
            {
                "lo": b.lo,
                "hi": b.hi,
                "count": b.count,
                "mean_confidence": b.mean_confidence,
                "mean_accuracy": b.mean_accuracy,
            }
            for b in rep.bins
        ],
    }


def _ece_from(obj: dict, key: str, detail_key: str) -> EceReport | None:
    value = obj.get(key)
    if value is None:
        return None
    detail = obj.get(detail_key) or {}
    bins = tuple(
        BinStats(
            _num(b["lo"]),
            _num(b["hi"]),
            int(b["count"]),
            None if b.get("mean_confidence") is None else _num(b["mean_confidence"]),
            None if b.get("mean_accuracy") is None else _num(b["mean_accuracy"]),
        )
        for b in detail.get("bins", [])
    )
    n_eval = detail.get("n_evaluated")
    return EceReport(_num(value), bins, int(n_eval) if n_eval is not None else 0)


def build_report(
    pset: PredictionSet,
    kind: ScoreKind | str = ScoreKind.MSP,
    m: int = DEFAULT_BINS,
    model_name: str | None = None,
    external_scores: Sequence[float] | None = None,
) -> MetricsReport:
    """Score, rank, and compute every metric for one model."""
    pset = validate(pset)
    scored = score_set(pset, kind, external_scores)
    ranked = rank(scored)
    fd = evaluate_fd(ranked)
    check_invariants(fd)
    full = ece(scored, m)
    at_op = ece_at_optimal_point(ranked, m)
    if sum(b.count for b in full.bins) != fd.n or at_op.n_evaluated != fd.n_correct:
        raise InvariantViolation("ECE bin counts disagree with sample counts")
    return MetricsReport(
        model_name=model_name if model_name is not None else _default_name(pset.source),
        fd=fd,
        ece=full,
        ece_op=at_op,
        score_kind=ScoreKind(kind).value,
        bins_m=m,
    )


def _default_name(source: str) -> str:
    return Path(source).stem if source not in ("memory", "synthetic") else source


def write_report(report: MetricsReport, path: str | Path) -> None:
    try:
        Path(path).write_text(report.to_json(), encoding="utf-8")
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc


def load_report(path: str | Path) -> MetricsReport:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc
    try:
        return MetricsReport.from_json(text)
    except FormatError as exc:
        raise FormatError(f"{path}: {exc}") from None


# ---------------------------------------------------------------------------
# comparison tables


@dataclass(frozen=True)
class Column:
    key: str
    title: str
    higher_is_better: bool
    scale: float
    decimals: int


AREA_COLUMNS = (
    Column("aurc", "AURC", False, 1e3, 2),
    Column("e_aurc", "E-AURC", False, 1e3, 2),
    Column("e_auoptrc", "E-AUoptRC", False, 1e3, 2),
)
ACC_TI_COLUMNS = (
    Column("accuracy", "ACC(%)", True, 100.0, 2),
    Column("trust_index", "TI", True, 1.0, 3),
)
ECE_COLUMNS = (
    Column("ece", "ECE(%)", False, 100.0, 2),
    Column("ece_op", "ECE_OP(%)", False, 100.0, 2),
)


@dataclass(frozen=True)
class ComparisonTable:
    models: tuple[str, ...]
    columns: tuple[Column, ...]
    values: tuple[tuple[float | None, ...], ...]  # raw, one tuple per model
    best: dict[str, frozenset[int]] = field(default_factory=dict)
    footnotes: tuple[str, ...] = ()

    def is_best(self, row: int, key: str) -> bool:
        return row in self.best.get(key, frozenset())


def _raw_value(report: MetricsReport, key: str) -> float | None:
    if key == "ece":
        return None if report.ece is None else report.ece.ece
    if key == "ece_op":
        return None if report.ece_op is None else report.ece_op.ece
    return getattr(report.fd, key)


def compare_models(reports: Sequence[MetricsReport], include_ece: bool | None = None) -> ComparisonTable:
    """Tabulate reports and mark the best model per column.

    Lower is better for the areas and ECE columns, higher for ACC and TI.
    Ties on the raw values mark every tied row. ECE columns appear when every
    report carries ECE, unless ``include_ece`` says otherwise.
    """
    reports = list(reports)
    if len(reports) < 2:
        raise TooFewModels("need at least two models to compare")
    has_ece = all(r.ece is not None and r.ece_op is not None for r in reports)
    if include_ece is None:
        include_ece = has_ece
    columns = AREA_COLUMNS + ACC_TI_COLUMNS + (ECE_COLUMNS if include_ece else ())
    values = tuple(tuple(_raw_value(r, c.key) for c in columns) for r in reports)
    best = {}
    for j, col in enumerate(columns):
        present = [(i, row[j]) for i, row in enumerate(values) if row[j] is not None and math.isfinite(row[j])]
        if not present:
            best[col.key] = frozenset()
            continue
        pick = max if col.higher_is_better else min
        target = pick(v for _, v in present)
        best[col.key] = frozenset(i for i, v in present if v == target)

    footnotes = []
    sizes = {r.fd.n for r in reports}
    if len(sizes) > 1:
        shown = ", ".join(f"{r.model_name}: n={r.fd.n if r.fd.n is not None else '?'}" for r in reports)
        footnotes.append(f"Note: models were evaluated on test sets of different sizes ({shown}).")
    kinds = {r.score_kind for r in reports}
    if len(kinds) > 1:
        footnotes.append("Note: models were ranked with different uncertainty scores (" + ", ".join(sorted(kinds)) + ").")
    return ComparisonTable(
        models=tuple(r.model_name for r in reports),
        columns=columns,
        values=values,
        best=best,
        footnotes=tuple(footnotes),
    )


def format_value(value: float | None, col: Column) -> str:
    if value is None:
        return "-"
    return f"{value * col.scale:.{col.decimals}f}"


_STYLES = {
    "markdown": ("**", "**"),
    "ansi": ("\x1b[1;31m", "\x1b[0m"),
    "plain": ("", ""),
}


def render_table_markdown(table: ComparisonTable, style: str = "markdown") -> str:
    """GitHub-flavoured pipe table; best cells emphasized.

    ``style`` picks the emphasis: ``markdown`` (bold), ``ansi`` (bold red, for
    terminals) or ``plain``.
    """
    open_, close = _STYLES[style]
    header = ["Model"] + [c.title for c in table.columns]
    body = []
    for i, name in enumerate(table.models):
        cells = [_escape_cell(name)]
        for j, col in enumerate(table.columns):
            text = format_value(table.values[i][j], col)
            if table.is_best(i, col.key):
                text = f"{open_}{text}{close}"
            cells.append(text)
        body.append(cells)

    def visible(s: str) -> int:
        # ANSI escapes take no columns on a terminal; markdown markers do
        if style == "ansi" and s.startswith(open_):
            return len(s) - len(open_) - len(close)
        return len(s)

    widths = [max(visible(r[j]) for r in [header] + body) for j in range(len(header))]

    def line(cells: list[str], numeric: bool) -> str:
        out = []
        for j, c in enumerate(cells):
            pad = " " * (widths[j] - visible(c))
            out.append(c + pad if j == 0 or not numeric else pad + c)
        return "| " + " | ".join(out) + " |"

    rule = "|" + "|".join(
        ("-" * (w + 2)) if j == 0 else ("-" * (w + 1) + ":") for j, w in enumerate(widths)
    ) + "|"
    lines = [line(header, numeric=False), rule] + [line(r, numeric=True) for r in body]
    if table.footnotes:
        lines.append("")
        lines.extend(table.footnotes)
    return "\n".join(lines) + "\n"


def _escape_cell(text: str) -> str:
    return text.replace("|", "\\|")


def comparison_to_dict(reports: Iterable[MetricsReport], table: ComparisonTable) -> dict:
    return {
        "models": [r.to_dict() for r in reports],
        "best": {k: [table.models[i] for i in sorted(v)] for k, v in table.best.items()},
        "footnotes": list(table.footnotes),
    }
