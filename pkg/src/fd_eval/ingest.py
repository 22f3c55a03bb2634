"""Reading, validating and writing prediction dumps.

Two on-disk layouts are supported:

* CSV with a header row ``label,p0,...,p{k-1}``, optionally preceded by a
  ``sample_id`` column (``sample_id,label,p0,...``).
* JSONL with one object per line:
  ``{"label": int, "probs": [float, ...], "sample_id": "optional"}``.

Record order is kept exactly as in the file; downstream ranking breaks score
ties by that order.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator, Sequence

import numpy as np

from .errors import FormatError, IoError, ValidationError

SUM_TOLERANCE = 1e-3
# Rows whose sum is already this close to 1 are treated as normalized, which
# keeps ``validate`` idempotent at the bit level.
_ROUNDING_SLACK = 4.0 * np.finfo(np.float64).eps

_MAX_LISTED = 20


@dataclass(frozen=True)
class PredictionRecord:
    probs: tuple[float, ...]
    label: int
    sample_id: str | None = None


@dataclass(frozen=True, eq=False)
class PredictionSet:
    """An immutable batch of predictions sharing one class count.

    Stored column-wise: ``probs`` is an ``(n, k)`` float64 array and ``labels``
    an ``(n,)`` int64 array. Both are flagged read-only.
    """

    probs: np.ndarray
    labels: np.ndarray
    sample_ids: tuple[str | None, ...] | None = None
    source: str = "memory"

    def __post_init__(self):
        probs = _owned(self.probs, np.float64)
        labels = _owned(self.labels, None)
        if probs.ndim != 2:
            if probs.size == 0:
                probs = probs.reshape(0, 0)
            else:
                raise ValidationError("probabilities must form an (n, k) array")
        if labels.ndim != 1 or labels.shape[0] != probs.shape[0]:
            raise ValidationError("labels must be a 1-d array with one entry per record")
        if labels.dtype.kind not in "iu":
            if labels.size and not np.all(np.equal(np.mod(labels, 1), 0)):
                raise ValidationError("labels must be integers")
            labels = labels.astype(np.int64)
        labels = labels.astype(np.int64, copy=False)
        probs.setflags(write=False)
        labels.setflags(write=False)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "labels", labels)
        if self.sample_ids is not None:
            ids = tuple(self.sample_ids)
            if len(ids) != probs.shape[0]:
                raise ValidationError("sample_ids must have one entry per record")
            object.__setattr__(self, "sample_ids", ids)

    @property
    def n(self) -> int:
        return int(self.probs.shape[0])

    @property
    def num_classes(self) -> int:
        return int(self.probs.shape[1])

    def __len__(self) -> int:
        return self.n

    @property
    def records(self) -> list[PredictionRecord]:
        ids = self.sample_ids or (None,) * self.n
        return [
            PredictionRecord(tuple(float(p) for p in row), int(label), sid)
            for row, label, sid in zip(self.probs, self.labels, ids)
        ]

    @classmethod
    def from_records(cls, records: Iterable[PredictionRecord], source: str = "memory") -> "PredictionSet":
        records = list(records)
        if not records:
            return cls(np.zeros((0, 0)), np.zeros(0, dtype=np.int64), None, source)
        widths = {len(r.probs) for r in records}
        if len(widths) != 1:
            k = len(records[0].probs)
            bad = [i for i, r in enumerate(records) if len(r.probs) != k]
            raise ValidationError(
                f"class count mismatch: expected {k} probabilities, records {_fmt_indices(bad)} differ",
                bad,
            )
        ids = tuple(r.sample_id for r in records)
        return cls(
            np.array([r.probs for r in records], dtype=np.float64),
            np.array([r.label for r in records], dtype=np.int64),
            ids if any(s is not None for s in ids) else None,
            source,
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, PredictionSet):
            return NotImplemented
        return (
            self.probs.shape == other.probs.shape
            and np.array_equal(self.probs, other.probs)
            and np.array_equal(self.labels, other.labels)
            and self.sample_ids == other.sample_ids
            and self.source == other.source
        )

    __hash__ = None  # type: ignore[assignment]


def _owned(values, dtype) -> np.ndarray:
    # Read-only arrays are already owned by some PredictionSet; reuse them.
    if isinstance(values, np.ndarray) and not values.flags.writeable:
        if dtype is None or values.dtype == dtype:
            return values
    return np.array(values, dtype=dtype, copy=True)


def _fmt_indices(indices: Sequence[int]) -> str:
    shown = ", ".join(str(int(i)) for i in indices[:_MAX_LISTED])
    if len(indices) > _MAX_LISTED:
        shown += f", ... ({len(indices)} total)"
    return shown


def validate(pset: PredictionSet) -> PredictionSet:
    """Re-check every invariant and renormalize rows to sum to one.

    Raises :class:`ValidationError` naming every offending record index.
    Calling it on its own output returns an equal set.
    """
    probs, labels = pset.probs, pset.labels
    n = probs.shape[0]
    if n == 0:
        raise ValidationError("empty prediction set")
    k = probs.shape[1]
    if k == 0:
        raise ValidationError("probability vectors must be non-empty", range(n))

    problems: list[str] = []
    offending: set[int] = set()

    # row min/max propagate NaN and expose inf, without n*k temporaries
    with np.errstate(invalid="ignore"):
        ok = (probs.min(axis=1) >= 0.0) & (probs.max(axis=1) <= 1.0)
    bad = np.flatnonzero(~ok)
    if bad.size:
        problems.append(f"non-finite or out-of-range probabilities at records {_fmt_indices(bad)}")
        offending.update(bad.tolist())

    sums = probs.sum(axis=1)
    with np.errstate(invalid="ignore"):
        off = np.abs(sums - 1.0)
        bad = np.flatnonzero(ok & (off > SUM_TOLERANCE))
    if bad.size:
        detail = ", ".join(f"{int(i)} (sum={sums[i]:.6g})" for i in bad[:_MAX_LISTED])
        if bad.size > _MAX_LISTED:
            detail += f", ... ({bad.size} total)"
        problems.append(f"probabilities do not sum to 1 within {SUM_TOLERANCE:g} at records {detail}")
        offending.update(bad.tolist())

    bad = np.flatnonzero((labels < 0) | (labels >= k))
    if bad.size:
        problems.append(f"label outside [0, {k}) at records {_fmt_indices(bad)}")
        offending.update(bad.tolist())

    if problems:
        raise ValidationError("; ".join(problems), sorted(offending))

    fix = off > _ROUNDING_SLACK * k
    if fix.any():
        probs = probs.copy()
        probs[fix] /= sums[fix, None]
        probs.setflags(write=False)
        return PredictionSet(probs, labels, pset.sample_ids, pset.source)
    return pset


def _resolve_format(path: Path, fmt: str) -> str:
    if fmt not in ("csv", "jsonl", "auto"):
        raise FormatError(f"unknown format {fmt!r}; expected csv, jsonl or auto")
    if fmt != "auto":
        return fmt
    suffix = path.suffix.lower()
    if suffix == ".csv":
        return "csv"
    if suffix in (".jsonl", ".ndjson"):
        return "jsonl"
    raise FormatError(f"cannot infer format from extension {suffix!r}; pass csv or jsonl", path=str(path))


def load_predictions(path: str | Path, fmt: str = "auto") -> PredictionSet:
    """Parse and validate a prediction dump."""
    path = Path(path)
    fmt = _resolve_format(path, fmt)
    if not path.is_file():
        raise IoError(f"{path}: no such file")
    try:
        if fmt == "csv":
            pset = _read_csv(path)
        else:
            pset = _read_jsonl(path)
    except (OSError, UnicodeDecodeError) as exc:
        raise IoError(f"{path}: {exc}") from exc
    return validate(pset)


def _parse_header(header: list[str], path: Path) -> tuple[bool, int]:
    """Return (has_sample_id, k) for a CSV header row."""
    cols = [h.strip() for h in header]
    if cols and cols[0].startswith("﻿"):
        cols[0] = cols[0][1:]
    has_id = len(cols) >= 2 and cols[0] != "label" and cols[1] == "label"
    prob_cols = cols[2:] if has_id else cols[1:]
    if not cols or (cols[0] != "label" and not has_id):
        raise FormatError("header must start with 'label' or '<sample_id>,label'", line=1, path=str(path))
    if not prob_cols:
        raise FormatError("header has no probability columns", line=1, path=str(path))
    expected = [f"p{j}" for j in range(len(prob_cols))]
    if prob_cols != expected:
        raise FormatError(
            f"probability columns must be named p0..p{len(prob_cols) - 1}", line=1, path=str(path)
        )
    return has_id, len(prob_cols)


def _read_csv(path: Path) -> PredictionSet:
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError("empty file: header row required", line=1, path=str(path)) from None
    has_id, k = _parse_header(header, path)
    fast = _read_csv_fast(path, has_id, k)
    if fast is not None:
        return fast
    return _read_csv_slow(path, has_id, k)


def _read_csv_fast(path: Path, has_id: bool, k: int) -> PredictionSet | None:
    """Columnar parse via polars; ``None`` means fall back to the line parser."""
    try:
        import polars as pl
    except ImportError:  # pragma: no cover
        return None
    schema: dict[str, object] = {}
    if has_id:
        schema["sample_id"] = pl.String
    schema["label"] = pl.Int64
    for j in range(k):
        schema[f"p{j}"] = pl.Float64
    try:
        df = pl.read_csv(path, has_header=True, schema=schema, new_columns=list(schema), encoding="utf8")
    except Exception:
        return None
    if df.null_count().sum_horizontal().item() != 0:
        return None
    labels = df.get_column("label").to_numpy()
    ids = tuple(df.get_column("sample_id").to_list()) if has_id else None
    probs = df.select([f"p{j}" for j in range(k)]).to_numpy(order="c")
    del df
    probs.setflags(write=False)
    return PredictionSet(probs, labels, ids, str(path))


def _read_csv_slow(path: Path, has_id: bool, k: int) -> PredictionSet:
    width = k + (2 if has_id else 1)
    ids: list[str] = []
    labels: list[int] = []
    rows: list[list[float]] = []
    with path.open("r", encoding="utf-8-sig", newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            line = reader.line_num
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != width:
                raise FormatError(f"expected {width} columns, found {len(row)}", line=line, path=str(path))
            if has_id:
                ids.append(row[0])
                row = row[1:]
            labels.append(_parse_label(row[0], line, path))
            try:
                rows.append([float(v) for v in row[1:]])
            except ValueError:
                bad = next(v for v in row[1:] if not _is_float(v))
                raise FormatError(f"unparseable probability {bad!r}", line=line, path=str(path)) from None
    probs = np.array(rows, dtype=np.float64).reshape(len(rows), k)
    return PredictionSet(probs, np.array(labels, dtype=np.int64), tuple(ids) if has_id else None, str(path))


def _is_float(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def _parse_label(text: str, line: int, path: Path) -> int:
    try:
        return int(text.strip())
    except ValueError:
        raise FormatError(f"label {text!r} is not an integer", line=line, path=str(path)) from None


def _read_jsonl(path: Path) -> PredictionSet:
    ids: list[str | None] = []
    labels: list[int] = []
    rows: list[list[float]] = []
    k: int | None = None
    mismatched: list[int] = []
    with path.open("r", encoding="utf-8-sig") as fh:
        for line_no, text in enumerate(fh, start=1):
            if not text.strip():
                continue
            try:
                obj = json.loads(text)
            except json.JSONDecodeError as exc:
                raise FormatError(f"invalid JSON ({exc.msg})", line=line_no, path=str(path)) from None
            if not isinstance(obj, dict) or "label" not in obj or "probs" not in obj:
                raise FormatError("expected an object with 'label' and 'probs'", line=line_no, path=str(path))
            label = obj["label"]
            if isinstance(label, bool) or not isinstance(label, int):
                raise FormatError(f"label {label!r} is not an integer", line=line_no, path=str(path))
            probs = obj["probs"]
            if not isinstance(probs, list) or not all(
                isinstance(p, (int, float)) and not isinstance(p, bool) for p in probs
            ):
                raise FormatError("'probs' must be a list of numbers", line=line_no, path=str(path))
            sid = obj.get("sample_id")
            if sid is not None and not isinstance(sid, str):
                raise FormatError("'sample_id' must be a string", line=line_no, path=str(path))
            if k is None:
                k = len(probs)
            elif len(probs) != k:
                mismatched.append(len(labels))
            ids.append(sid)
            labels.append(label)
            rows.append([float(p) for p in probs])
    if mismatched:
        raise ValidationError(
            f"class count mismatch: expected {k} probabilities, records {_fmt_indices(mismatched)} differ",
            mismatched,
        )
    if not rows:
        raise ValidationError("empty prediction set")
    probs_arr = np.array(rows, dtype=np.float64).reshape(len(rows), k or 0)
    has_ids = any(s is not None for s in ids)
    return PredictionSet(probs_arr, np.array(labels, dtype=np.int64), tuple(ids) if has_ids else None, str(path))


def write_predictions(
    pset: PredictionSet, path: str | Path, fmt: str = "auto", float_precision: int | None = None
) -> None:
    """Write a set in the CSV or JSONL layout accepted by :func:`load_predictions`.

    ``float_precision`` limits CSV output to that many decimals; the default
    writes shortest round-trip representations.
    """
    path = Path(path)
    fmt = _resolve_format(path, fmt)
    try:
        if fmt == "csv":
            _write_csv(pset, path, float_precision)
        else:
            _write_jsonl(pset, path, float_precision)
    except OSError as exc:
        raise IoError(f"{path}: {exc}") from exc


def _write_csv(pset: PredictionSet, path: Path, float_precision: int | None) -> None:
    import polars as pl

    cols: dict[str, object] = {}
    if pset.sample_ids is not None:
        cols["sample_id"] = pl.Series("sample_id", [s if s is not None else "" for s in pset.sample_ids], pl.String)
    cols["label"] = pl.Series("label", pset.labels, pl.Int64)
    for j in range(pset.num_classes):
        cols[f"p{j}"] = pl.Series(f"p{j}", pset.probs[:, j], pl.Float64)
    pl.DataFrame(cols).write_csv(path, float_precision=float_precision, line_terminator="\n")


def _iter_jsonl(pset: PredictionSet, float_precision: int | None) -> Iterator[str]:
    ids = pset.sample_ids or (None,) * pset.n
    for row, label, sid in zip(pset.probs.tolist(), pset.labels.tolist(), ids):
        if float_precision is not None:
            row = [round(p, float_precision) for p in row]
        obj: dict[str, object] = {"label": label, "probs": row}
        if sid is not None:
            obj["sample_id"] = sid
        yield json.dumps(obj, allow_nan=False) + "\n"


def _write_jsonl(pset: PredictionSet, path: Path, float_precision: int | None) -> None:
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.writelines(_iter_jsonl(pset, float_precision))

