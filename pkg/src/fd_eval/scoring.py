"""Per-sample uncertainty scores and correctness flags."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import LengthMismatch, MarginUndefined, NonFiniteScore
from .ingest import PredictionSet


class ScoreKind(str, enum.Enum):
    MSP = "msp"
    ENTROPY = "entropy"
    MARGIN = "margin"
    EXTERNAL = "external"

    def __str__(self) -> str:
        return self.value


@dataclass(frozen=True)
class ScoredSample:
    uncertainty: float
    correct: bool
    msp_confidence: float
    orig_index: int


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class ScoredSet:
    """Column-wise scored samples, in input order.

    Higher ``uncertainty`` means less trusted. ``msp_confidence`` is always the
    maximum class probability, whatever ``score_kind`` produced the ranking.
    """

    uncertainty: np.ndarray
    correct: np.ndarray
    msp_confidence: np.ndarray
    orig_index: np.ndarray
    score_kind: ScoreKind = ScoreKind.MSP

    @property
    def n(self) -> int:
        return int(self.uncertainty.shape[0])

    @property
    def n_correct(self) -> int:
        return int(np.count_nonzero(self.correct))

    def __len__(self) -> int:
        return self.n

    @property
    def samples(self) -> list[ScoredSample]:
        return [
            ScoredSample(float(u), bool(c), float(m), int(i))
            for u, c, m, i in zip(self.uncertainty, self.correct, self.msp_confidence, self.orig_index)
        ]

    @classmethod
    def from_arrays(
        cls,
        uncertainty: Sequence[float],
        correct: Sequence[bool],
        msp_confidence: Sequence[float] | None = None,
        orig_index: Sequence[int] | None = None,
        score_kind: ScoreKind | str = ScoreKind.EXTERNAL,
    ) -> "ScoredSet":
        """Build a set directly from scores, e.g. for tests or external rankers.

        Missing confidences default to ``1 - uncertainty`` clipped to [0, 1].
        """
        u = np.array(uncertainty, dtype=np.float64)
        c = np.array(correct, dtype=bool)
        if u.shape != c.shape or u.ndim != 1:
            raise LengthMismatch(f"{u.shape[0]} scores for {c.shape[0]} correctness flags")
        if not np.isfinite(u).all():
            raise NonFiniteScore(f"non-finite uncertainty at index {int(np.flatnonzero(~np.isfinite(u))[0])}")
        if msp_confidence is None:
            m = np.clip(1.0 - u, 0.0, 1.0)
        else:
            m = np.array(msp_confidence, dtype=np.float64)
            if m.shape != u.shape:
                raise LengthMismatch(f"{m.shape[0]} confidences for {u.shape[0]} scores")
        idx = np.arange(u.shape[0], dtype=np.int64) if orig_index is None else np.array(orig_index, dtype=np.int64)
        if idx.shape != u.shape:
            raise LengthMismatch(f"{idx.shape[0]} indices for {u.shape[0]} scores")
        return cls(_readonly(u), _readonly(c), _readonly(m), _readonly(idx), ScoreKind(score_kind))


def _as_matrix(probs) -> np.ndarray:
    p = np.asarray(probs, dtype=np.float64)
    return p[None, :] if p.ndim == 1 else p


def msp_confidence(probs: Sequence[float]) -> float:
    """Maximum class probability; the matching uncertainty is ``1 - msp``."""
    return float(np.max(np.asarray(probs, dtype=np.float64)))


def entropy_uncertainties(probs: np.ndarray) -> np.ndarray:
    """Row-wise Shannon entropy divided by ``log(k)`` (0 log 0 = 0)."""
    p = _as_matrix(probs)
    k = p.shape[1]
    if k < 2:
        return np.zeros(p.shape[0])
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(p > 0.0, p * np.log(p), 0.0)
    h = -terms.sum(axis=1) / math.log(k)
    return np.clip(h, 0.0, 1.0)


def entropy_uncertainty(probs: Sequence[float]) -> float:
    return float(entropy_uncertainties(np.asarray(probs, dtype=np.float64))[0])


def margin_uncertainties(probs: np.ndarray) -> np.ndarray:
    """Row-wise ``1 - (top1 - top2)``."""
    p = _as_matrix(probs)
    if p.shape[1] < 2:
        raise MarginUndefined(f"margin needs at least 2 classes, got {p.shape[1]}")
    top2 = np.partition(p, p.shape[1] - 2, axis=1)[:, -2:]
    return np.clip(1.0 - (top2[:, 1] - top2[:, 0]), 0.0, 1.0)


def margin_uncertainty(probs: Sequence[float]) -> float:
    return float(margin_uncertainties(np.asarray(probs, dtype=np.float64))[0])


_ARGMAX_ROWS = 1024


def _row_argmax(probs: np.ndarray) -> np.ndarray:
    # numpy copies read-only inputs before argmax; small blocks keep that copy in cache
    out = np.empty(probs.shape[0], dtype=np.int64)
    for start in range(0, probs.shape[0], _ARGMAX_ROWS):
        out[start : start + _ARGMAX_ROWS] = np.argmax(probs[start : start + _ARGMAX_ROWS], axis=1)
    return out


def score_set(
    pset: PredictionSet,
    kind: ScoreKind | str = ScoreKind.MSP,
    external_scores: Sequence[float] | None = None,
) -> ScoredSet:
    """Score every record of ``pset``; output order equals input order.

    The predicted class is the argmax of the probability vector, with exact
    ties going to the lowest class index.
    """
    kind = ScoreKind(kind)
    probs = pset.probs
    n = pset.n
    predicted = _row_argmax(probs)
    correct = predicted == pset.labels
    msp = probs[np.arange(n), predicted] if n else np.zeros(0)

    if kind is ScoreKind.MSP:
        u = 1.0 - msp
    elif kind is ScoreKind.ENTROPY:
        u = entropy_uncertainties(probs)
    elif kind is ScoreKind.MARGIN:
        u = margin_uncertainties(probs)
    else:
        if external_scores is None:
            raise LengthMismatch(f"external scoring needs {n} scores, got none")
        u = np.array(external_scores, dtype=np.float64).reshape(-1)
        if u.shape[0] != n:
            raise LengthMismatch(f"external scoring needs {n} scores, got {u.shape[0]}")
        bad = np.flatnonzero(~np.isfinite(u))
        if bad.size:
            raise NonFiniteScore(f"non-finite external score at index {int(bad[0])}")

    return ScoredSet(
        _readonly(np.asarray(u, dtype=np.float64)),
        _readonly(correct),
        _readonly(np.asarray(msp, dtype=np.float64)),
        _readonly(np.arange(n, dtype=np.int64)),
        kind,
    )
