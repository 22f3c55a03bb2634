"""Ranking, the reject rule and risk-coverage curves.

Coverage lives on the per-sample grid ``i/n`` for ``i = 1..n``. A curve stores
``risks[i-1]``, the error rate over the ``i`` most-confident samples.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import CoverageOutOfRange, EmptySet, InvalidCounts
from .scoring import ScoredSet, ScoreKind, ScoredSample


class CurveKind(str, enum.Enum):
    EMPIRICAL = "empirical"
    OPTIMAL = "optimal"


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class RankedSet:
    """Scored samples sorted ascending by ``(uncertainty, orig_index)``."""

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


@dataclass(frozen=True, eq=False)
class RCCurve:
    """Prefix risks; ``errors[i-1]`` is the integer error count behind ``risks[i-1]``."""

    risks: np.ndarray
    errors: np.ndarray
    kind: CurveKind

    @property
    def n(self) -> int:
        return int(self.risks.shape[0])

    @property
    def coverage(self) -> np.ndarray:
        return np.arange(1, self.n + 1, dtype=np.float64) / self.n

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RCCurve):
            return NotImplemented
        return np.array_equal(self.errors, other.errors) and np.array_equal(self.risks, other.risks)

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True)
class Partition:
    covered: tuple[int, ...]
    rejected: tuple[int, ...]
    threshold: float

    @property
    def coverage(self) -> float:
        total = len(self.covered) + len(self.rejected)
        return len(self.covered) / total if total else 0.0


def rank(scored: ScoredSet) -> RankedSet:
    if scored.n == 0:
        raise EmptySet("cannot rank an empty set")
    # lexsort: last key is primary
    order = np.lexsort((scored.orig_index, scored.uncertainty))
    return RankedSet(
        _readonly(scored.uncertainty[order]),
        _readonly(scored.correct[order]),
        _readonly(scored.msp_confidence[order]),
        _readonly(scored.orig_index[order]),
        scored.score_kind,
    )


def reject_at_threshold(scored: ScoredSet | RankedSet, t: float) -> Partition:
    """Cover samples with ``u <= t`` and reject those with ``u > t``."""
    t = float(t)
    if not math.isfinite(t):
        raise ValueError("threshold must be finite")
    keep = scored.uncertainty <= t
    return Partition(
        tuple(scored.orig_index[keep].tolist()),
        tuple(scored.orig_index[~keep].tolist()),
        t,
    )


def empirical_risk_curve(ranked: RankedSet) -> RCCurve:
    n = ranked.n
    if n == 0:
        raise EmptySet("cannot build a curve from an empty set")
    errors = np.cumsum(~ranked.correct, dtype=np.int64)
    risks = errors / np.arange(1, n + 1, dtype=np.float64)
    return RCCurve(_readonly(risks), _readonly(errors), CurveKind.EMPIRICAL)


def optimal_risk_curve(n: int, n_correct: int) -> RCCurve:
    """The curve of a perfect ranking: every correct sample comes first."""
    n, n_correct = int(n), int(n_correct)
    if n < 1 or not 0 <= n_correct <= n:
        raise InvalidCounts(f"need n >= 1 and 0 <= n_correct <= n, got n={n}, n_correct={n_correct}")
    i = np.arange(1, n + 1, dtype=np.int64)
    errors = np.maximum(i - n_correct, 0)
    risks = errors / i.astype(np.float64)
    return RCCurve(_readonly(risks), _readonly(errors), CurveKind.OPTIMAL)


def coverage_index(c: float, n: int) -> int:
    """Prefix length ``ceil(c*n)`` for coverage ``c`` in (0, 1].

    Products within a relative 1e-9 of an integer are snapped to it first, so
    binary rounding of ``c`` cannot push the prefix one sample past the request
    (0.6 * 5 is 3, not 4).
    """
    c = float(c)
    if not (0.0 < c <= 1.0):
        raise CoverageOutOfRange(f"coverage must lie in (0, 1], got {c}")
    x = c * n
    nearest = round(x)
    if abs(x - nearest) <= 1e-9 * max(1.0, x):
        i = int(nearest)
    else:
        i = math.ceil(x)
    return min(max(i, 1), n)


def risk_at_coverage(curve: RCCurve, c: float) -> float:
    return float(curve.risks[coverage_index(c, curve.n) - 1])


def threshold_for_coverage(ranked: RankedSet, c: float) -> float:
    """Uncertainty of the ``ceil(c*n)``-th ranked sample.

    Applying :func:`reject_at_threshold` with it covers at least that many
    samples, and exactly that many when the boundary score is unique.
    """
    if ranked.n == 0:
        raise EmptySet("cannot threshold an empty set")
    return float(ranked.uncertainty[coverage_index(c, ranked.n) - 1])
