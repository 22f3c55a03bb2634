"""Scalar failure-detection metrics over risk-coverage curves.

All areas are Riemann sums on the per-sample grid: the area of a curve is the
mean of its ``n`` prefix risks. Sums go through :func:`math.fsum`, so every
area is the correctly rounded value of the exact sum of the stored risks and
does not depend on summation order.

The optimal point sits at coverage ``n_correct / n``, i.e. prefix length
``i_op = n_correct``. The excess area is split there: terms ``i < i_op`` form
the part before the optimal point and terms ``i >= i_op`` form E-AUoptRC.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import CurveMismatch, EmptySet, InvalidCounts, InvariantViolation
from .selection import RankedSet, RCCurve, empirical_risk_curve, optimal_risk_curve

# Slack for checks that compare independently rounded sums.
DECOMPOSITION_TOLERANCE = 1e-12


@dataclass(frozen=True)
class FdMetrics:
    aurc: float
    auor: float
    e_aurc: float
    e_auoptrc: float
    accuracy: float
    trust_index: float
    optimal_point: float
    n: int | None
    n_correct: int | None

    def as_dict(self) -> dict:
        return asdict(self)


def _area(values: np.ndarray, n: int) -> float:
    return math.fsum(values.tolist()) / n


def aurc(curve: RCCurve) -> float:
    """Mean prefix risk of ``curve``."""
    if curve.n == 0:
        raise EmptySet("empty curve")
    return _area(curve.risks, curve.n)


def auor(n: int, n_correct: int) -> float:
    return aurc(optimal_risk_curve(n, n_correct))


def e_aurc(aurc_value: float, auor_value: float) -> float:
    return aurc_value - auor_value


def optimal_point_index(n: int, n_correct: int) -> int:
    if n < 1 or not 0 <= n_correct <= n:
        raise InvalidCounts(f"need n >= 1 and 0 <= n_correct <= n, got n={n}, n_correct={n_correct}")
    return int(n_correct)


def _check_pair(emp: RCCurve, opt: RCCurve) -> None:
    if emp.n != opt.n:
        raise CurveMismatch(f"curves have different lengths ({emp.n} vs {opt.n})")


def excess_area(emp: RCCurve, opt: RCCurve, start: int = 1) -> float:
    """``(1/n) * sum_{i >= start} (emp_i - opt_i)``.

    Each difference is non-negative, so the result is monotone in ``start``.
    """
    _check_pair(emp, opt)
    lo = max(int(start), 1) - 1
    return _area(emp.risks[lo:] - opt.risks[lo:], emp.n)


def e_auoptrc(emp: RCCurve, opt: RCCurve, i_op: int) -> float:
    """Excess area from the optimal point (inclusive) to full coverage.

    With ``i_op == 0`` the whole range is summed and the result equals the
    excess over full coverage.
    """
    return excess_area(emp, opt, start=i_op)


def trust_index(emp: RCCurve, i_op: int) -> float:
    """Accuracy over the ``i_op`` most-confident samples; 0 when ``i_op == 0``."""
    if i_op <= 0:
        return 0.0
    if i_op > emp.n:
        raise InvalidCounts(f"optimal point {i_op} beyond curve length {emp.n}")
    return (i_op - int(emp.errors[i_op - 1])) / i_op


def evaluate_fd(ranked: RankedSet) -> FdMetrics:
    n = ranked.n
    if n == 0:
        raise EmptySet("cannot evaluate an empty set")
    n_correct = ranked.n_correct
    emp = empirical_risk_curve(ranked)
    opt = optimal_risk_curve(n, n_correct)
    i_op = optimal_point_index(n, n_correct)
    accuracy = n_correct / n
    return FdMetrics(
        aurc=aurc(emp),
        auor=aurc(opt),
        e_aurc=excess_area(emp, opt),
        e_auoptrc=e_auoptrc(emp, opt, i_op),
        accuracy=accuracy,
        trust_index=trust_index(emp, i_op),
        optimal_point=accuracy,
        n=n,
        n_correct=n_correct,
    )


def check_invariants(fd: FdMetrics) -> None:
    """Raise :class:`InvariantViolation` if ``fd`` is internally inconsistent."""
    problems = []
    if abs(fd.aurc - (fd.e_aurc + fd.auor)) > DECOMPOSITION_TOLERANCE:
        problems.append("aurc != e_aurc + auor")
    if not 0.0 <= fd.e_auoptrc <= fd.e_aurc <= fd.aurc <= 1.0:
        problems.append("expected 0 <= e_auoptrc <= e_aurc <= aurc <= 1")
    if not 0.0 <= fd.trust_index <= 1.0:
        problems.append("trust_index outside [0, 1]")
    if fd.n is not None and fd.n_correct is not None and fd.optimal_point != fd.n_correct / fd.n:
        problems.append("optimal_point != n_correct / n")
    if problems:
        raise InvariantViolation("; ".join(problems) + f" ({fd})")
