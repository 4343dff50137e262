"""Per-task feature importance and per-instance contributions.

Both walk the trees that make up one task's model: the common forest up to
the task's quit round, then its specific forest. Common trees only split on
overlap columns, which share indices with the task's own columns.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .trainer import MtbtModel


@dataclass(frozen=True)
class ImportanceEntry:
    feature_index: int
    feature_name: str
    total_gain: float
    n_splits: int


@dataclass(frozen=True)
class ImportanceReport:
    task_id: int
    entries: list[ImportanceEntry]

    def top(self, n: int) -> "ImportanceReport":
        return ImportanceReport(self.task_id, self.entries[:n])

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["rank", "feature_name", "total_gain", "n_splits"])
        for i, e in enumerate(self.entries, 1):
            w.writerow([i, e.feature_name, repr(e.total_gain), e.n_splits])
        return buf.getvalue()


@dataclass(frozen=True)
class ContributionVector:
    bias: float
    contributions: np.ndarray
    feature_names: tuple[str, ...]

    @property
    def margin(self) -> float:
        return self.bias + float(self.contributions.sum())

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["feature_name", "contribution"])
        w.writerow(["<bias>", repr(self.bias)])
        for name, c in zip(self.feature_names, self.contributions.tolist()):
            w.writerow([name, repr(c)])
        return buf.getvalue()


def _require_task(model, task_id: int):
    if not isinstance(model, MtbtModel):
        raise TypeError(f"explanations need a two-stage or IBT model, got {type(model).__name__}")
    if not 0 <= task_id < model.n_tasks:
        raise ValueError(f"unknown task {task_id}; model has {model.n_tasks} tasks")


def feature_importance(model: MtbtModel, task_id: int) -> ImportanceReport:
    """Total recorded split gain per feature, ranked descending."""
    _require_task(model, task_id)
    gains: dict[int, list[float]] = {}
    for tree, _ in model.task_trees(task_id):
        for _, f, g in tree.splits():
            gains.setdefault(f, []).append(g)
    names = model.task_specs[task_id].feature_names
    entries = [ImportanceEntry(f, names[f], float(sum(v)), len(v)) for f, v in gains.items()]
    entries.sort(key=lambda e: (-e.total_gain, e.feature_index))
    return ImportanceReport(task_id, entries)


def instance_contributions(model: MtbtModel, task_id: int, x) -> ContributionVector:
    """Path attribution: each split on x's path credits its feature with the
    change in cover-weighted expected leaf value from parent to child."""
    _require_task(model, task_id)
    spec = model.task_specs[task_id]
    x = np.asarray(x, float).ravel()
    if x.size != spec.n_features:
        raise ValueError(f"task {task_id} expects {spec.n_features} features, got {x.size}")
    eta = model.common.eta
    contrib = np.zeros(spec.n_features)
    bias = model.base(task_id)
    for tree, _ in model.task_trees(task_id):
        ev = tree.expected_values()
        path = tree.path(x)
        bias += eta * ev[0]
        for parent, child in zip(path[:-1], path[1:]):
            contrib[tree.feature[parent]] += eta * (ev[child] - ev[parent])
    return ContributionVector(float(bias), contrib, spec.feature_names)
