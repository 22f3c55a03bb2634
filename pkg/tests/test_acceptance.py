"""One test per acceptance criterion; each prints a single PASS/FAIL line."""

import json
import os
import subprocess
import sys
import time
from pathlib import Path

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from oracle import brute_force_metrics, exact_metrics, ranked_correctness
from published_rows import CIFAR100, IMAGENET, report_dicts
from fd_eval.calibration import ece_of
from fd_eval.cli import main
from fd_eval.ingest import PredictionSet, load_predictions
from fd_eval.metrics import auor, evaluate_fd
from fd_eval.report import MetricsReport, build_report
from fd_eval.scoring import ScoredSet, score_set
from fd_eval.selection import empirical_risk_curve, optimal_risk_curve, rank
from fd_eval.synth import SynthConfig, generate_synthetic

# fixed once after checking seed pairs (1,2) .. (19,20); every pair satisfied the criterion
SEED_A, SEED_B = 1, 2


def verdict(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number}: {'PASS' if ok else 'FAIL'} {detail}"
    print(line)
    ACCEPTANCE_LINES.append(line)
    assert ok, line


def close(a: float, b: float, tol: float) -> bool:
    return abs(a - b) <= tol


def test_criterion_1_worked_instances(worked_set, anti_set):
    t0 = time.perf_counter()
    w = evaluate_fd(rank(score_set(worked_set)))
    a = evaluate_fd(rank(score_set(anti_set)))
    elapsed = time.perf_counter() - t0
    want_w = (59 / 300, 0.13, 1 / 15, 1 / 15, 2 / 3, 0.6)
    want_a = (19 / 24, 5 / 24, 7 / 12, 1 / 3, 0.0)
    got_w = (w.aurc, w.auor, w.e_aurc, w.e_auoptrc, w.trust_index, w.optimal_point)
    got_a = (a.aurc, a.auor, a.e_aurc, a.e_auoptrc, a.trust_index)
    # the frozen values are themselves the rational oracle's output
    assert exact_metrics([True, True, False, True, False])["aurc"] * 300 == 59
    ok = all(close(g, e, 1e-12) for g, e in zip(got_w + got_a, want_w + want_a)) and elapsed < 1e-3
    verdict(1, ok, f"worked={got_w} anti={got_a} tol=1e-12 runtime={elapsed * 1e3:.3f}ms")


def test_criterion_2_brute_force_equivalence():
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    mismatches = 0
    for _ in range(1000):
        n = int(rng.integers(1, 13))
        u = (rng.integers(0, 5, n) / 4).tolist()
        c = (rng.random(n) < rng.random()).tolist()
        fd = evaluate_fd(rank(ScoredSet.from_arrays(u, c)))
        if fd.as_dict() != brute_force_metrics(u, c):
            mismatches += 1
    elapsed = time.perf_counter() - t0
    verdict(2, mismatches == 0 and elapsed < 5.0, f"1000 instances, {mismatches} mismatches, runtime={elapsed:.2f}s")


def test_criterion_3_dominance_and_decomposition():
    rng = np.random.default_rng(3)
    worst_gap = 0.0
    failures = 0
    for _ in range(2000):
        n = int(rng.integers(1, 60))
        u = rng.random(n)
        c = rng.random(n) < rng.random()
        r = rank(ScoredSet.from_arrays(u, c))
        emp = empirical_risk_curve(r).risks
        opt = optimal_risk_curve(r.n, r.n_correct).risks
        fd = evaluate_fd(r)
        gap = abs(fd.aurc - (fd.e_aurc + fd.auor))
        worst_gap = max(worst_gap, gap)
        if not ((emp >= opt).all() and gap <= 1e-12 and 0.0 <= fd.e_auoptrc <= fd.e_aurc):
            failures += 1
    verdict(3, failures == 0, f"2000 instances, {failures} failures, max |aurc-(e_aurc+auor)|={worst_gap:.1e}")


def test_criterion_4_auor_convergence():
    n = 100_000
    t0 = time.perf_counter()
    errs = {}
    for r in (0.1, 0.16, 0.3):
        analytic = r + (1 - r) * np.log(1 - r)
        errs[r] = abs(auor(n, round(n * (1 - r))) - analytic)
    elapsed = time.perf_counter() - t0
    ok = all(e <= 1e-3 for e in errs.values()) and elapsed < 1.0
    shown = ", ".join(f"r={r}: {e:.2e}" for r, e in errs.items())
    verdict(4, ok, f"{shown} tol=1e-3 runtime={elapsed * 1e3:.1f}ms")


def test_criterion_5_trust_index_anchor():
    # 625 samples, 525 correct; 42 errors inside the top 525 gives prefix risk 0.08 there
    flags = [True] * 483 + [False] * 42 + [True] * 42 + [False] * 58
    r = rank(ScoredSet.from_arrays(np.arange(625.0), flags))
    fd = evaluate_fd(r)
    risk_at_op = empirical_risk_curve(r).risks[r.n_correct - 1]
    ok = fd.accuracy == 0.84 and risk_at_op == 0.08 and fd.trust_index == 0.92
    verdict(5, ok, f"acc={fd.accuracy} risk@op={risk_at_op} TI={fd.trust_index}")


def _compare_best(tmp_path: Path, rows: dict, tag: str) -> dict:
    paths = []
    for obj in report_dicts(rows):
        p = tmp_path / f"{tag}_{obj['model_name']}.json"
        p.write_text(json.dumps(obj))
        paths.append(str(p))
    out = tmp_path / f"{tag}.json"
    assert main(["compare", *paths, "--json-out", str(out), "--out", str(tmp_path / f"{tag}.md")]) == 0
    return {k: set(v) for k, v in json.loads(out.read_text())["best"].items()}


def test_criterion_6_table_best_marks(tmp_path):
    t0 = time.perf_counter()
    imnet = _compare_best(tmp_path, IMAGENET, "in")
    cifar = _compare_best(tmp_path, CIFAR100, "cf")
    elapsed = time.perf_counter() - t0
    checks = {
        "IN ACC=SwinTran": imnet["accuracy"] == {"SwinTran"},
        "IN TI=ViT+ConvNext": imnet["trust_index"] == {"ViT", "ConvNext"},
        "IN E-AUoptRC=ConvNext": imnet["e_auoptrc"] == {"ConvNext"},
        "CF AURC=VGG13_bn": cifar["aurc"] == {"VGG13_bn"},
        "CF E-AURC=VGG13_bn": cifar["e_aurc"] == {"VGG13_bn"},
        "CF ACC=VGG13_bn": cifar["accuracy"] == {"VGG13_bn"},
        "CF E-AUoptRC=VGG19_bn": cifar["e_auoptrc"] == {"VGG19_bn"},
        "CF TI=VGG19_bn": cifar["trust_index"] == {"VGG19_bn"},
    }
    failed = [k for k, v in checks.items() if not v]
    ok = not failed and elapsed < 1.0
    verdict(6, ok, f"{len(checks) - len(failed)}/{len(checks)} marks match runtime={elapsed * 1e3:.0f}ms"
            + (f" failed={failed}" if failed else ""))


def test_criterion_7_accuracy_vs_trust():
    t0 = time.perf_counter()
    a = build_report(generate_synthetic(SynthConfig(50_000, 10, 0.76, 1.0, SEED_A)), model_name="A")
    b = build_report(generate_synthetic(SynthConfig(50_000, 10, 0.78, 0.25, SEED_B)), model_name="B")
    elapsed = time.perf_counter() - t0
    ok = (
        b.fd.accuracy > a.fd.accuracy
        and a.fd.trust_index > b.fd.trust_index
        and a.ece.ece < b.ece.ece
        and elapsed < 5.0
    )
    verdict(
        7,
        ok,
        f"ACC A={a.fd.accuracy:.4f} B={b.fd.accuracy:.4f}; TI A={a.fd.trust_index:.4f} B={b.fd.trust_index:.4f}; "
        f"ECE A={a.ece.ece:.4f} B={b.ece.ece:.4f}; runtime={elapsed:.2f}s",
    )


def test_criterion_8_ece():
    small = ece_of([0.9, 0.9, 0.6, 0.6], [True, False, True, True], 15).ece
    scored = score_set(generate_synthetic(SynthConfig(100_000, 10, 0.8, 1.0, seed=11)))
    big = ece_of(scored.msp_confidence, scored.correct, 15).ece
    verdict(8, small == 0.4 and big < 0.02, f"4-sample ECE={small!r} (exact 0.4); calibrated n=1e5 ECE={big:.4f} (<0.02)")


@pytest.mark.slow
def test_criterion_9_performance(tmp_path_factory):
    tmp = tmp_path_factory.mktemp("perf")
    dump = tmp / "big.csv"
    try:
        assert main(["synth", "--n", "1000000", "--k", "100", "--accuracy", "0.8", "--seed", "9",
                     "--out", str(dump)]) == 0
        report = tmp / "big.json"
        t0 = time.perf_counter()
        proc = subprocess.run(
            [sys.executable, "-m", "fd_eval", "evaluate", str(dump), "--out", str(report)],
            capture_output=True, text=True,
        )
        full = time.perf_counter() - t0
        assert proc.returncode == 0, proc.stderr
        pset = load_predictions(dump)
        t0 = time.perf_counter()
        build_report(pset)
        post = time.perf_counter() - t0
    finally:
        dump.unlink(missing_ok=True)
    verdict(9, full < 10.0 and post < 2.0, f"evaluate 1e6x100 CSV={full:.2f}s (<10s); post-ingest={post:.2f}s (<2s)")


def test_criterion_10_determinism(tmp_path):
    def run(tag: str, argv: list[str], suffix: str) -> list[bytes]:
        outs = []
        for i, seed in enumerate(("0", "12345")):
            out = tmp_path / f"{tag}{i}{suffix}"
            env = {**os.environ, "PYTHONHASHSEED": seed}
            cmd = [sys.executable, "-m", "fd_eval", *argv, "--out", str(out)]
            proc = subprocess.run(cmd, capture_output=True, text=True, env=env)
            assert proc.returncode == 0, proc.stderr
            outs.append(out.read_bytes())
        return outs

    a, b = tmp_path / "a.csv", tmp_path / "b.jsonl"
    main(["synth", "--n", "3000", "--k", "10", "--accuracy", "0.8", "--seed", "1", "--out", str(a)])
    main(["synth", "--n", "2000", "--k", "10", "--accuracy", "0.7", "--temperature", "0.5", "--seed", "2",
          "--out", str(b)])
    results = {
        "synth-csv": run("s", ["synth", "--n", "2000", "--k", "5", "--accuracy", "0.7", "--seed", "4"], ".csv"),
        "synth-jsonl": run("j", ["synth", "--n", "2000", "--k", "5", "--accuracy", "0.7", "--temperature", "2",
                                 "--seed", "4"], ".jsonl"),
        "evaluate": run("e", ["evaluate", str(a)], ".json"),
        "compare": run("c", ["compare", str(a), str(b)], ".md"),
        "plot": run("p", ["plot", str(a), str(b), "--shade", "auor,e_aurc,e_auoptrc"], ".svg"),
    }
    same = {k: v[0] == v[1] for k, v in results.items()}
    verdict(10, all(same.values()), "byte-identical: " + ", ".join(f"{k}={v}" for k, v in same.items()))
