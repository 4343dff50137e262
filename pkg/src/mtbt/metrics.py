from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata


def rmse(y, yhat) -> float:
    y, yhat = np.asarray(y, float).ravel(), np.asarray(yhat, float).ravel()
    if y.shape != yhat.shape:
        raise ValueError(f"length mismatch: {y.size} labels vs {yhat.size} predictions")
    if y.size == 0:
        raise ValueError("rmse of an empty vector")
    return math.sqrt(float(np.mean((y - yhat) ** 2)))


def auc(labels, scores) -> float:
    """Area under the ROC curve via the Mann-Whitney rank sum (ties count 1/2)."""
    labels, scores = np.asarray(labels).ravel(), np.asarray(scores, float).ravel()
    if labels.shape != scores.shape:
        raise ValueError(f"length mismatch: {labels.size} labels vs {scores.size} scores")
    pos = labels == 1
    n_pos, n_neg = int(pos.sum()), int((~pos).sum())
    if n_pos == 0 or n_neg == 0:
        raise ValueError("auc needs at least one positive and one negative label")
    ranks = rankdata(scores, method="average")
    u = ranks[pos].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


@dataclass(frozen=True)
class TaskMetric:
    task_id: int
    metric_name: str
    value: float
    n_test: int


@dataclass(frozen=True)
class EvalReport:
    per_task: list[TaskMetric]
    aggregate: float  # pooled RMSE (regression) or mean AUC (binary)
    mean_task: float  # unweighted mean of per-task values
    metric_name: str

    def rows(self) -> list[tuple]:
        out = [(m.task_id, m.metric_name, m.value, m.n_test) for m in self.per_task]
        n = sum(m.n_test for m in self.per_task)
        agg_name = "pooled_rmse" if self.metric_name == "rmse" else "mean_auc"
        out.append(("ALL", agg_name, self.aggregate, n))
        out.append(("MEAN", f"mean_{self.metric_name}", self.mean_task, n))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["task_id", "metric", "value", "n_test"])
        for r in self.rows():
            w.writerow([r[0], r[1], repr(float(r[2])), r[3]])
        return buf.getvalue()


def evaluate(model, test) -> EvalReport:
    """Per-task RMSE or AUC of ``model`` on the test dataset."""
    if test.n_tasks != model.n_tasks:
        raise ValueError(f"test set has {test.n_tasks} tasks, model has {model.n_tasks}")
    for a, b in zip(test.task_specs, model.task_specs):
        if a.feature_names != b.feature_names:
            raise ValueError(f"task {a.task_id}: feature names differ between test data and model")
    name = "rmse" if test.objective == "regression" else "auc"
    per_task, sq_err = [], []
    for t in test.tasks:
        if t.n_rows == 0:
            raise ValueError(f"task {t.spec.name!r}: no test rows")
        pred = model.predict(t.spec.task_id, t.features)
        if name == "rmse":
            v = rmse(t.labels, pred)
            sq_err.append((t.labels - pred) ** 2)
        else:
            v = auc(t.labels, pred)
        per_task.append(TaskMetric(t.spec.task_id, name, v, t.n_rows))
    mean_task = float(np.mean([m.value for m in per_task]))
    aggregate = math.sqrt(float(np.mean(np.concatenate(sq_err)))) if name == "rmse" else mean_task
    return EvalReport(per_task, aggregate, mean_task, name)
