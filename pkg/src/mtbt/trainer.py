"""Two-stage multi-task boosting plus the pooled and independent baselines.

Stage one grows a common forest on the overlap columns of every task's rows.
Each task is early-stopped on its own validation rows and, once stopped, leaves
the pool; the prefix of the forest up to its best round is its common part.
Stage two boosts one forest per task on all of that task's columns, starting
from the margin its common part already produces.
"""

from __future__ import annotations

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.special import expit

from .config import Hyperparams
from .dataset import MultiTaskDataset, TaskData, TaskSpec, UnionLayout, common_view, holdout, zero_pad_union
from .gbt import RegTree, accumulate, base_margin, build_tree, gradients, presort
from .metrics import auc, rmse
from .split import SplitFinder

log = logging.getLogger(__name__)

IMPROVE_TOL = 1e-7


@dataclass(frozen=True)
class EarlyStopState:
    best_metric: float
    best_round: int = 0
    rounds_since_improve: int = 0
    active: bool = True


def improved(objective: str, metric: float, best: float) -> bool:
    if objective == "regression":
        return metric < best - IMPROVE_TOL
    return metric > best + IMPROVE_TOL


def early_stop_update(state: EarlyStopState, metric, round: int, objective: str, patience: int) -> EarlyStopState:
    """Advance the stopping rule by one round.

    ``metric`` may be None when the validation rows cannot score the task (for
    instance a single-class AUC); such rounds count as improvements so that
    tasks without usable validation data train for the full budget.
    """
    if not state.active:
        raise ValueError("early_stop_update on an inactive state")
    if metric is None:
        return replace(state, best_round=round, rounds_since_improve=0)
    if state.best_metric is None or improved(objective, metric, state.best_metric):
        return EarlyStopState(metric, round, 0, True)
    n = state.rounds_since_improve + 1
    return EarlyStopState(state.best_metric, state.best_round, n, n < patience)


def validation_metric(objective: str, y, margin):
    """RMSE for regression, AUC for binary; None when undefined on these rows."""
    y = np.asarray(y)
    if y.size == 0:
        return None
    if objective == "regression":
        return rmse(y, margin)
    if y.min() == y.max():
        return None
    return auc(y, margin)


@dataclass
class CommonModel:
    trees: list[RegTree]
    quit_round: list[int]
    base_margin: list[float]
    eta: float
    objective: str = "regression"
    overlap_dim: int = 1

    def margin(self, task_id: int, X_overlap) -> np.ndarray:
        r = self.quit_round[task_id]
        return accumulate(self.trees[:r], self.eta, X_overlap, self.base_margin[task_id])


@dataclass
class SpecificModel:
    task_id: int
    trees: list[RegTree]

    @property
    def n_rounds(self) -> int:
        return len(self.trees)


def _link(objective: str, margin, raw: bool):
    if raw or objective == "regression":
        return margin
    return expit(margin)


@dataclass
class MtbtModel:
    objective: str
    overlap_dim: int
    common: CommonModel
    specific: list[SpecificModel]
    hyperparams: Hyperparams
    task_specs: list[TaskSpec]
    method: str = "mtbt"
    history: list[dict] = field(default_factory=list, repr=False, compare=False)

    @property
    def n_tasks(self) -> int:
        return len(self.task_specs)

    def _check(self, task_id, X) -> np.ndarray:
        if not 0 <= task_id < self.n_tasks:
            raise ValueError(f"unknown task {task_id}; model has {self.n_tasks} tasks")
        X = np.atleast_2d(np.asarray(X, float))
        d = self.task_specs[task_id].n_features
        if X.shape[1] != d:
            raise ValueError(f"task {task_id} expects {d} features, got {X.shape[1]}")
        return X

    def common_margin(self, task_id: int, X) -> np.ndarray:
        X = self._check(task_id, X)
        return self.common.margin(task_id, X[:, : self.overlap_dim])

    def margin(self, task_id: int, X) -> np.ndarray:
        X = self._check(task_id, X)
        start = self.common.margin(task_id, X[:, : self.overlap_dim])
        return accumulate(self.specific[task_id].trees, self.common.eta, X, start)

    def predict(self, task_id: int, X, raw_margin: bool = False) -> np.ndarray:
        return _link(self.objective, self.margin(task_id, X), raw_margin)

    def task_trees(self, task_id: int):
        """(tree, in_common) pairs that make up this task's model."""
        r = self.common.quit_round[task_id]
        return [(t, True) for t in self.common.trees[:r]] + [(t, False) for t in self.specific[task_id].trees]

    def base(self, task_id: int) -> float:
        return self.common.base_margin[task_id]


@dataclass
class GbtModel:
    """One forest over the zero-padded union of all tasks' columns."""

    objective: str
    overlap_dim: int
    trees: list[RegTree]
    base_margin: float
    hyperparams: Hyperparams
    task_specs: list[TaskSpec]
    method: str = "gbt"
    history: list[dict] = field(default_factory=list, repr=False, compare=False)

    @property
    def n_tasks(self) -> int:
        return len(self.task_specs)

    @property
    def layout(self) -> UnionLayout:
        return UnionLayout.of(self.task_specs, self.overlap_dim)

    def margin(self, task_id: int, X) -> np.ndarray:
        if not 0 <= task_id < self.n_tasks:
            raise ValueError(f"unknown task {task_id}; model has {self.n_tasks} tasks")
        Xp = self.layout.pad(task_id, np.atleast_2d(np.asarray(X, float)))
        return accumulate(self.trees, self.hyperparams.eta, Xp, self.base_margin)

    def predict(self, task_id: int, X, raw_margin: bool = False) -> np.ndarray:
        return _link(self.objective, self.margin(task_id, X), raw_margin)


# ------------------------------------------------------------------ boosting


def _boost(objective, X, y, task, Xv, yv, vtask, start, vstart, n_tasks, n_rounds, hp, finder, stage, history,
           task_ids=None):
    """Boost over a pool of tasks with per-task early stopping.

    Returns (trees, best_rounds). All arrays are row-aligned with the pool;
    ``task``/``vtask`` index tasks 0..n_tasks-1, ``task_ids`` maps them to the
    ids written into the history.
    """
    task_ids = list(range(n_tasks)) if task_ids is None else task_ids
    margin = np.array(start, dtype=float)
    vmargin = np.array(vstart, dtype=float)
    vrows = [np.flatnonzero(vtask == t) for t in range(n_tasks)]
    states = []
    for t in range(n_tasks):
        m0 = validation_metric(objective, yv[vrows[t]], vmargin[vrows[t]])
        states.append(EarlyStopState(m0))
        history.append({"stage": stage, "round": 0, "task_id": task_ids[t], "metric": m0})
    active = np.ones(n_tasks, dtype=bool)
    orders = presort(X)
    trees = []
    for r in range(1, n_rounds + 1):
        if not active.any():
            break
        in_pool = active[task]
        act_ids = np.flatnonzero(active)
        compact = np.full(n_tasks, -1, dtype=np.intp)
        compact[act_ids] = np.arange(act_ids.size)
        g, h = gradients(objective, y, margin)
        tree = build_tree(X, g, h, hp, finder, task=np.maximum(compact[task], 0), n_tasks=act_ids.size,
                          orders=[o[in_pool[o]] for o in orders])
        trees.append(tree)
        margin[in_pool] += hp.eta * tree.predict(X[in_pool])
        for t in act_ids:
            vr = vrows[t]
            if vr.size:
                vmargin[vr] += hp.eta * tree.predict(Xv[vr])
            m = validation_metric(objective, yv[vr], vmargin[vr])
            states[t] = early_stop_update(states[t], m, r, objective, hp.patience)
            history.append({"stage": stage, "round": r, "task_id": task_ids[t], "metric": m})
            if not states[t].active:
                active[t] = False
                log.info("%s: task %s stops after round %d, keeps %d", stage, task_ids[t], r, states[t].best_round)
    return trees, [s.best_round for s in states]


def _task_bases(objective, ds: MultiTaskDataset) -> list[float]:
    return [base_margin(objective, t.labels) for t in ds.tasks]


def train_common(train: MultiTaskDataset, valid: MultiTaskDataset, hp: Hyperparams,
                 history: list | None = None) -> CommonModel:
    """Stage one: shared forest on pooled overlap columns."""
    history = [] if history is None else history
    m = train.n_tasks
    if hp.common_rounds == 0:
        return CommonModel([], [0] * m, _task_bases(train.objective, train), hp.eta, train.objective,
                           train.overlap_dim)
    if hp.regularizer == "entropy" and m == 1:
        warnings.warn("entropy regularizer with a single task scores every split 0; the common model stays empty",
                      stacklevel=2)
    cv, vv = common_view(train), common_view(valid)
    if cv.features.shape[0] == 0:
        raise ValueError("no training rows for the common model")
    base = base_margin(train.objective, cv.labels)
    finder = SplitFinder.from_hyperparams(hp)
    trees, best = _boost(train.objective, cv.features, cv.labels, cv.task_of_row, vv.features, vv.labels,
                         vv.task_of_row, np.full(len(cv.labels), base), np.full(len(vv.labels), base), m,
                         hp.common_rounds, hp, finder, "common", history)
    return CommonModel(trees, best, [base] * m, hp.eta, train.objective, train.overlap_dim)


def train_specific(task: TaskData, valid_task: TaskData, common: CommonModel, hp: Hyperparams,
                   history: list | None = None) -> SpecificModel:
    """Stage two for one task, chained off its common-part margin."""
    history = [] if history is None else history
    t = task.spec.task_id
    X, Xv = task.features, valid_task.features
    d0 = common.overlap_dim
    start = common.margin(t, X[:, :d0])
    vstart = common.margin(t, Xv[:, :d0])
    if hp.specific_rounds == 0:
        return SpecificModel(t, [])
    finder = SplitFinder.from_hyperparams(hp, regularizer="none")
    trees, best = _boost(common.objective, X, task.labels, np.zeros(task.n_rows, np.intp), Xv,
                         valid_task.labels, np.zeros(valid_task.n_rows, np.intp), start, vstart, 1,
                         hp.specific_rounds, hp, finder, "specific", history, task_ids=[t])
    return SpecificModel(t, trees[: best[0]])


def train_full(ds: MultiTaskDataset, hp: Hyperparams, method: str = "mtbt") -> MtbtModel:
    """Split off per-task validation rows, then run both stages."""
    train, valid = holdout(ds, hp.valid_frac, hp.seed)
    history: list[dict] = []
    common = train_common(train, valid, hp, history)
    specific = [train_specific(t, v, common, hp, history) for t, v in zip(train.tasks, valid.tasks)]
    return MtbtModel(ds.objective, ds.overlap_dim, common, specific, hp, ds.task_specs, method, history)


def train_ibt_baseline(ds: MultiTaskDataset, hp: Hyperparams) -> MtbtModel:
    """Independent per-task forests: the two-stage model with stage one disabled."""
    return train_full(ds, hp.replace(common_rounds=0), method="ibt")


def train_gbt_baseline(ds: MultiTaskDataset, hp: Hyperparams) -> GbtModel:
    """One unregularized forest on the zero-padded union, boosted for ``common_rounds``."""
    train, valid = holdout(ds, hp.valid_frac, hp.seed)
    pooled_train = _as_single_task(train)
    pooled_valid = _as_single_task(valid)
    history: list[dict] = []
    common = train_common(pooled_train, pooled_valid, hp.replace(regularizer="none"), history)
    trees = common.trees[: common.quit_round[0]]
    return GbtModel(ds.objective, ds.overlap_dim, trees, common.base_margin[0], hp, ds.task_specs, "gbt", history)


def _as_single_task(ds: MultiTaskDataset) -> MultiTaskDataset:
    union = zero_pad_union(ds)
    return MultiTaskDataset(union.spec.n_features, ds.objective, (union,))


METHODS = ("mtbt-entropy", "mtbt-variance", "gbt", "ibt")


def train_method(method: str, ds: MultiTaskDataset, hp: Hyperparams):
    if method == "mtbt-entropy":
        return train_full(ds, hp.replace(regularizer="entropy"), method)
    if method == "mtbt-variance":
        return train_full(ds, hp.replace(regularizer="variance"), method)
    if method == "gbt":
        return train_gbt_baseline(ds, hp)
    if method == "ibt":
        return train_ibt_baseline(ds, hp)
    raise ValueError(f"unknown method {method!r}; choose from {METHODS}")


def predict(model, task_id: int, x, raw_margin: bool = False) -> float:
    """Prediction for a single feature vector of task ``task_id``."""
    return float(model.predict(task_id, np.asarray(x, float).reshape(1, -1), raw_margin)[0])
