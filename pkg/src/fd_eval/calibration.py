"""Expected calibration error with equal-width bins.

Bin ``m`` (0-based) of ``M`` covers ``(m/M, (m+1)/M]``; a confidence of exactly
0 goes to bin 0. Confidence is always the maximum class probability.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptySet
from .scoring import ScoredSet
from .selection import RankedSet

DEFAULT_BINS = 15


@dataclass(frozen=True)
class BinStats:
    lo: float
    hi: float
    count: int
    mean_confidence: float | None = None
    mean_accuracy: float | None = None

    @property
    def empty(self) -> bool:
        return self.count == 0


@dataclass(frozen=True)
class EceReport:
    ece: float
    bins: tuple[BinStats, ...]
    n_evaluated: int


def _check_bins(m: int) -> int:
    if int(m) != m or m < 1:
        raise ValueError(f"bin count must be a positive integer, got {m}")
    return int(m)


def bin_indices(confidences: np.ndarray, m: int) -> np.ndarray:
    """Map each confidence to its right-inclusive bin."""
    conf = np.asarray(confidences, dtype=np.float64)
    idx = np.ceil(conf * m).astype(np.int64) - 1
    np.clip(idx, 0, m - 1, out=idx)
    # conf * m can round across an edge; settle against the exact edges m/M
    lo = idx / m
    hi = (idx + 1) / m
    idx = np.where((conf <= lo) & (idx > 0), idx - 1, idx)
    idx = np.where((conf > hi) & (idx < m - 1), idx + 1, idx)
    return idx


def reliability_bins(confidences, correct, m: int = DEFAULT_BINS) -> tuple[BinStats, ...]:
    m = _check_bins(m)
    conf = np.asarray(confidences, dtype=np.float64)
    hit = np.asarray(correct, dtype=bool)
    if conf.size == 0:
        raise EmptySet("no samples to bin")
    if conf.shape != hit.shape:
        raise ValueError("confidences and correctness flags differ in length")
    idx = bin_indices(conf, m)
    counts = np.bincount(idx, minlength=m)
    conf_sums = np.bincount(idx, weights=conf, minlength=m)
    hit_sums = np.bincount(idx, weights=hit.astype(np.float64), minlength=m)
    bins = []
    for b in range(m):
        c = int(counts[b])
        if c:
            bins.append(BinStats(b / m, (b + 1) / m, c, float(conf_sums[b] / c), float(hit_sums[b] / c)))
        else:
            bins.append(BinStats(b / m, (b + 1) / m, 0))
    return tuple(bins)


def _empty_bins(m: int) -> tuple[BinStats, ...]:
    return tuple(BinStats(b / m, (b + 1) / m, 0) for b in range(m))


def ece_from_bins(bins: tuple[BinStats, ...], n: int) -> float:
    total = 0.0
    for b in bins:
        if b.count:
            total += (b.count / n) * abs(b.mean_accuracy - b.mean_confidence)
    return total


def ece_of(confidences, correct, m: int = DEFAULT_BINS) -> EceReport:
    bins = reliability_bins(confidences, correct, m)
    n = int(np.asarray(confidences).shape[0])
    return EceReport(ece_from_bins(bins, n), bins, n)


def ece(scored: ScoredSet | RankedSet, m: int = DEFAULT_BINS) -> EceReport:
    if scored.n == 0:
        raise EmptySet("cannot compute ECE of an empty set")
    return ece_of(scored.msp_confidence, scored.correct, m)


def ece_at_optimal_point(ranked: RankedSet, m: int = DEFAULT_BINS) -> EceReport:
    """ECE over the ``n_correct`` most-confident ranked samples."""
    m = _check_bins(m)
    i_op = ranked.n_correct
    if i_op == 0:
        return EceReport(0.0, _empty_bins(m), 0)
    return ece_of(ranked.msp_confidence[:i_op], ranked.correct[:i_op], m)
