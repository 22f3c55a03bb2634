import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from fd_eval.ingest import PredictionSet  # noqa: E402

# Ranked correctness C, C, W, C, W: confidences fall strictly down the list.
WORKED_PROBS = [
    [0.95, 0.05],
    [0.90, 0.10],
    [0.85, 0.15],
    [0.80, 0.20],
    [0.70, 0.30],
]
WORKED_LABELS = [0, 0, 1, 0, 1]

# Ranked correctness W, W, C, C.
ANTI_PROBS = [
    [0.95, 0.05],
    [0.90, 0.10],
    [0.80, 0.20],
    [0.70, 0.30],
]
ANTI_LABELS = [1, 1, 0, 0]


@pytest.fixture
def worked_set() -> PredictionSet:
    return PredictionSet(np.array(WORKED_PROBS), np.array(WORKED_LABELS))


@pytest.fixture
def anti_set() -> PredictionSet:
    return PredictionSet(np.array(ANTI_PROBS), np.array(ANTI_LABELS))


def write_csv(path: Path, probs, labels, ids=None) -> Path:
    k = len(probs[0])
    head = (["sample_id"] if ids else []) + ["label"] + [f"p{j}" for j in range(k)]
    lines = [",".join(head)]
    for i, (row, label) in enumerate(zip(probs, labels)):
        cells = ([ids[i]] if ids else []) + [str(label)] + [repr(float(p)) for p in row]
        lines.append(",".join(cells))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
