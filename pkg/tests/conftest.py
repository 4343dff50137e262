import sys
from pathlib import Path

import numpy as np
import pytest

from mtbt.dataset import MultiTaskDataset, TaskData, TaskSpec

sys.path.insert(0, str(Path(__file__).parent))

ACCEPTANCE_LINES: list[str] = []


def make_dataset(sizes, widths, overlap_dim, objective="regression", seed=0, label_fn=None):
    """Random dataset; overlap columns are named c*, private ones t<k>_*."""
    rng = np.random.default_rng(seed)
    tasks = []
    for t, (n, d) in enumerate(zip(sizes, widths)):
        names = tuple(f"c{j}" for j in range(overlap_dim)) + tuple(f"t{t}_{j}" for j in range(d - overlap_dim))
        X = rng.normal(size=(n, d))
        if label_fn is not None:
            y = label_fn(t, X, rng)
        elif objective == "regression":
            y = X[:, 0] + 0.5 * (X[:, -1] > 0) + 0.1 * rng.normal(size=n)
        else:
            y = (X[:, 0] + 0.5 * rng.normal(size=n) > 0).astype(float)
        tasks.append(TaskData(TaskSpec(t, f"task{t}", names), X, y))
    return MultiTaskDataset(overlap_dim, objective, tuple(tasks))


@pytest.fixture
def small_regression():
    return make_dataset((60, 40), (4, 6), 3, seed=1)


@pytest.fixture
def small_binary():
    return make_dataset((80, 50), (4, 5), 3, objective="binary", seed=2)


@pytest.fixture
def record():
    def _record(criterion: str, ok: bool, detail: str = ""):
        line = f"[{'PASS' if ok else 'FAIL'}] {criterion}" + (f": {detail}" if detail else "")
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
