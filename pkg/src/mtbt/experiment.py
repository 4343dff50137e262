"""Grid search and repeated-split benchmarking."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import statistics
from dataclasses import dataclass

from .config import Hyperparams, field_names
from .dataset import MultiTaskDataset, holdout, split_train_valid_test
from .metrics import evaluate
from .trainer import train_method

log = logging.getLogger(__name__)


def grid_cells(grid: dict | None) -> list[dict]:
    if not grid:
        return [{}]
    bad = set(grid) - field_names()
    if bad:
        raise ValueError(f"grid keys are not hyperparameters: {sorted(bad)}")
    keys = sorted(grid)
    return [dict(zip(keys, vals)) for vals in itertools.product(*(grid[k] for k in keys))]


def _better(objective: str, a: float, b: float) -> bool:
    return a < b if objective == "regression" else a > b


def grid_search(ds: MultiTaskDataset, method: str, hp: Hyperparams, grid: dict | None, n_repeats: int = 1,
                seed: int = 0, select_frac: float = 0.2):
    """Choose the grid cell with the best mean held-out score.

    Each repeat holds out ``select_frac`` of every task's rows (seeded by
    ``seed + repeat``), trains on the rest and scores the held-out rows with
    the report's headline aggregate. Returns ``(best_hp, table)``.
    """
    if grid and method != "mtbt-variance":
        # beta only enters the variance score; sweeping it elsewhere repeats cells
        grid = {k: v for k, v in grid.items() if k != "beta"}
    cells = grid_cells(grid)
    if len(cells) == 1 and not cells[0]:
        return hp, []
    table, best = [], None
    for cell in cells:
        cell_hp = hp.replace(**cell)
        scores = []
        for r in range(n_repeats):
            fit, held = holdout(ds, select_frac, seed + r, require=True)
            model = train_method(method, fit, cell_hp.replace(seed=seed + r))
            scores.append(evaluate(model, held).aggregate)
        mean = statistics.fmean(scores)
        sd = statistics.stdev(scores) if len(scores) > 1 else 0.0
        table.append({**cell, "mean": mean, "std": sd, "n_repeats": n_repeats})
        log.info("grid %s %s -> %.6g", method, cell, mean)
        if best is None or _better(ds.objective, mean, best[0]):
            best = (mean, cell_hp)
    return best[1], table


@dataclass(frozen=True)
class BenchmarkRow:
    method: str
    task: str  # task id, or ALL / MEAN for aggregates
    metric: str
    mean: float
    std: float
    n_repeats: int


def benchmark(ds: MultiTaskDataset, methods, hp: Hyperparams, n_repeats: int = 10, seed: int = 0,
              test_frac: float = 0.2, grid: dict | None = None, grid_repeats: int = 1) -> list[BenchmarkRow]:
    """Fresh seeded train/test split per repeat; every method trains on it and is scored on test."""
    values: dict[tuple[str, str, str], list[float]] = {}
    for r in range(n_repeats):
        train, _, test = split_train_valid_test(ds, test_frac, 0.0, seed + r)
        for method in methods:
            best_hp, _ = grid_search(train, method, hp.replace(seed=seed + r), grid, grid_repeats, seed + r)
            model = train_method(method, train, best_hp)
            for task, metric, value, _ in evaluate(model, test).rows():
                values.setdefault((method, str(task), metric), []).append(float(value))
            log.info("repeat %d %s done", r, method)
    rows = []
    for (method, task, metric), v in values.items():
        sd = statistics.stdev(v) if len(v) > 1 else 0.0
        rows.append(BenchmarkRow(method, task, metric, statistics.fmean(v), sd, len(v)))
    return rows


def rows_to_csv(rows: list[BenchmarkRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["method", "task", "metric", "mean", "std", "n_repeats"])
    for r in rows:
        w.writerow([r.method, r.task, r.metric, repr(r.mean), repr(r.std), r.n_repeats])
    return buf.getvalue()


def wide_table(rows: list[BenchmarkRow]) -> str:
    """Tasks down, methods across: mean (std) per cell."""
    methods = list(dict.fromkeys(r.method for r in rows))
    keys = list(dict.fromkeys((r.task, r.metric) for r in rows))
    cell = {(r.method, r.task, r.metric): f"{r.mean:.4f} ({r.std:.4f})" for r in rows}
    header = ["task", "metric", *methods]
    lines = [header] + [[t, m, *(cell.get((meth, t, m), "") for meth in methods)] for t, m in keys]
    widths = [max(len(str(l[i])) for l in lines) for i in range(len(header))]
    return "\n".join("  ".join(str(c).ljust(w) for c, w in zip(l, widths)) for l in lines)
