import math
from dataclasses import asdict

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracle import brute_force_metrics, exact_metrics
from fd_eval.errors import CurveMismatch, EmptySet
from fd_eval.metrics import (
    aurc,
    auor,
    check_invariants,
    e_aurc,
    e_auoptrc,
    evaluate_fd,
    optimal_point_index,
    trust_index,
)
from fd_eval.scoring import ScoredSet, score_set
from fd_eval.selection import empirical_risk_curve, optimal_risk_curve, rank


def ranked_from_flags(flags):
    return rank(ScoredSet.from_arrays(np.arange(len(flags), dtype=float), flags))


WORKED = [True, True, False, True, False]
ANTI = [False, False, True, True]


def test_aurc_examples():
    assert aurc(empirical_risk_curve(ranked_from_flags(WORKED))) == pytest.approx(59 / 300, abs=1e-15)
    assert aurc(empirical_risk_curve(ranked_from_flags([True] * 4))) == 0.0
    assert aurc(empirical_risk_curve(ranked_from_flags([False] * 4))) == 1.0


def test_auor_examples():
    assert auor(5, 3) == pytest.approx(0.13, abs=1e-15)
    assert auor(7, 7) == 0.0


@pytest.mark.parametrize("err", [0.1, 0.16, 0.3])
def test_auor_continuous_limit(err):
    n = 100_000
    analytic = err + (1 - err) * math.log(1 - err)
    assert abs(auor(n, round(n * (1 - err))) - analytic) < 1e-3


def test_e_aurc_examples():
    assert e_aurc(59 / 300, 0.13) == pytest.approx(1 / 15, abs=1e-15)
    r = ranked_from_flags([True, True, False, False])
    fd = evaluate_fd(r)
    assert fd.e_aurc == 0.0


def test_optimal_point_index():
    assert optimal_point_index(5, 3) == 3
    assert optimal_point_index(5, 0) == 0
    assert optimal_point_index(5, 5) == 5


def test_e_auoptrc_examples():
    r = ranked_from_flags(WORKED)
    emp, opt = empirical_risk_curve(r), optimal_risk_curve(5, 3)
    assert e_auoptrc(emp, opt, 3) == pytest.approx(1 / 15, abs=1e-15)
    r = ranked_from_flags(ANTI)
    emp, opt = empirical_risk_curve(r), optimal_risk_curve(4, 2)
    assert e_auoptrc(emp, opt, 2) == pytest.approx(1 / 3, abs=1e-15)
    r = ranked_from_flags([True, True, False])
    assert e_auoptrc(empirical_risk_curve(r), optimal_risk_curve(3, 2), 2) == 0.0


def test_e_auoptrc_mismatched_curves():
    with pytest.raises(CurveMismatch):
        e_auoptrc(empirical_risk_curve(ranked_from_flags(WORKED)), optimal_risk_curve(4, 2), 2)


def test_trust_index_examples():
    assert trust_index(empirical_risk_curve(ranked_from_flags(WORKED)), 3) == pytest.approx(2 / 3, abs=1e-15)
    assert trust_index(empirical_risk_curve(ranked_from_flags([True, True, False])), 2) == 1.0
    assert trust_index(empirical_risk_curve(ranked_from_flags([False, False])), 0) == 0.0


def test_trust_index_anchor_values():
    # 525 correct out of 625 (acc 0.84) with 42 errors among the top 525 (risk 0.08)
    flags = [True] * 483 + [False] * 42 + [True] * 42 + [False] * 58
    r = ranked_from_flags(flags)
    assert r.n_correct / r.n == 0.84
    assert evaluate_fd(r).trust_index == 0.92


def test_evaluate_worked(worked_set):
    fd = evaluate_fd(rank(score_set(worked_set)))
    expected = {"aurc": 59 / 300, "auor": 0.13, "e_aurc": 1 / 15, "e_auoptrc": 1 / 15,
                "accuracy": 0.6, "trust_index": 2 / 3, "optimal_point": 0.6}
    for key, value in expected.items():
        assert getattr(fd, key) == pytest.approx(value, abs=1e-12), key


def test_evaluate_all_correct():
    fd = evaluate_fd(ranked_from_flags([True] * 6))
    assert (fd.aurc, fd.auor, fd.e_aurc, fd.e_auoptrc, fd.accuracy, fd.trust_index, fd.optimal_point) == (
        0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0
    )


def test_evaluate_anti(anti_set):
    fd = evaluate_fd(rank(score_set(anti_set)))
    got = (fd.aurc, fd.auor, fd.e_aurc, fd.e_auoptrc, fd.accuracy, fd.trust_index, fd.optimal_point)
    assert got == pytest.approx((19 / 24, 5 / 24, 7 / 12, 1 / 3, 0.5, 0.0, 0.5), abs=1e-12)


def test_never_correct():
    fd = evaluate_fd(ranked_from_flags([False] * 3))
    assert fd.optimal_point == 0.0 and fd.trust_index == 0.0
    assert fd.e_auoptrc == fd.e_aurc


def test_evaluate_empty():
    from fd_eval.selection import RankedSet

    z = np.zeros(0)
    with pytest.raises(EmptySet):
        evaluate_fd(RankedSet(z, z.astype(bool), z, z.astype(np.int64)))


def test_ranking_disagreement_is_representable():
    # A: perfect until just past the optimal point; B: one confident error, clean tail
    a = evaluate_fd(ranked_from_flags([True] * 5 + [False, False, True, False, False]))
    b = evaluate_fd(ranked_from_flags([False] + [True] * 6 + [False] * 3))
    assert a.accuracy == b.accuracy
    assert a.e_aurc < b.e_aurc
    assert a.e_auoptrc > b.e_auoptrc


instances = st.integers(1, 12).flatmap(
    lambda n: st.tuples(
        st.lists(st.integers(0, 4).map(lambda v: v / 4), min_size=n, max_size=n),
        st.lists(st.booleans(), min_size=n, max_size=n),
    )
)


@settings(max_examples=300)
@given(instances)
def test_matches_brute_force(inst):
    u, c = inst
    fd = evaluate_fd(rank(ScoredSet.from_arrays(u, c)))
    assert asdict(fd) == brute_force_metrics(u, c)


@settings(max_examples=300)
@given(instances)
def test_invariants(inst):
    u, c = inst
    fd = evaluate_fd(rank(ScoredSet.from_arrays(u, c)))
    check_invariants(fd)
    assert abs(fd.aurc - (fd.e_aurc + fd.auor)) <= 1e-12
    assert 0.0 <= fd.e_auoptrc <= fd.e_aurc <= fd.aurc <= 1.0
    assert 0.0 <= fd.trust_index <= 1.0
    top = fd.n_correct
    flags = rank(ScoredSet.from_arrays(u, c)).correct
    if top:
        assert (fd.trust_index == 1.0) == bool(flags[:top].all())
    exact = exact_metrics(flags.tolist())
    for key in ("aurc", "auor", "e_aurc", "e_auoptrc", "trust_index"):
        assert abs(getattr(fd, key) - float(exact[key])) <= 1e-12


@settings(max_examples=100)
@given(instances)
def test_monotone_transform_invariance(inst):
    u, c = inst
    a = evaluate_fd(rank(ScoredSet.from_arrays(u, c)))
    b = evaluate_fd(rank(ScoredSet.from_arrays([np.log1p(x) * 10 + 2 for x in u], c)))
    assert a == b
