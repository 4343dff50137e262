"""Heterogeneous multi-task data model.

Every task owns a dense feature matrix whose first ``overlap_dim`` columns carry
the same features, in the same order, for all tasks. Columns past that prefix
are private to the task.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

OBJECTIVES = ("regression", "binary")


class DatasetError(ValueError):
    """Raised for malformed dataset configs or task files."""


@dataclass(frozen=True)
class TaskSpec:
    task_id: int
    name: str
    feature_names: tuple[str, ...]

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    def to_dict(self) -> dict:
        return {"task_id": self.task_id, "name": self.name, "feature_names": list(self.feature_names)}

    @classmethod
    def from_dict(cls, d: dict) -> "TaskSpec":
        return cls(int(d["task_id"]), str(d["name"]), tuple(d["feature_names"]))


def _frozen(a, dtype=float) -> np.ndarray:
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TaskData:
    spec: TaskSpec
    features: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "features", _frozen(self.features).reshape(-1, self.spec.n_features))
        object.__setattr__(self, "labels", _frozen(self.labels).reshape(-1))
        if self.features.shape[0] != self.labels.shape[0]:
            raise DatasetError(
                f"task {self.spec.name!r}: {self.features.shape[0]} feature rows but {self.labels.shape[0]} labels"
            )

    @property
    def n_rows(self) -> int:
        return self.features.shape[0]

    def take(self, rows) -> "TaskData":
        rows = np.asarray(rows, dtype=np.intp)
        return TaskData(self.spec, self.features[rows], self.labels[rows])


@dataclass(frozen=True)
class MultiTaskDataset:
    overlap_dim: int
    objective: str
    tasks: tuple[TaskData, ...]

    def __post_init__(self):
        object.__setattr__(self, "tasks", tuple(self.tasks))
        validate(self)

    @property
    def n_tasks(self) -> int:
        return len(self.tasks)

    @property
    def task_specs(self) -> list[TaskSpec]:
        return [t.spec for t in self.tasks]

    @property
    def n_rows(self) -> int:
        return sum(t.n_rows for t in self.tasks)

    def with_tasks(self, tasks: Sequence[TaskData]) -> "MultiTaskDataset":
        return MultiTaskDataset(self.overlap_dim, self.objective, tuple(tasks))


def validate(ds: MultiTaskDataset, require_rows: bool = False) -> None:
    if ds.objective not in OBJECTIVES:
        raise DatasetError(f"objective must be one of {OBJECTIVES}, got {ds.objective!r}")
    if ds.overlap_dim < 1:
        raise DatasetError(f"overlap_dim must be positive, got {ds.overlap_dim}")
    if not ds.tasks:
        raise DatasetError("dataset has no tasks")
    prefix = None
    for i, t in enumerate(ds.tasks):
        name = t.spec.name
        if t.spec.task_id != i:
            raise DatasetError(f"task {name!r}: task_id {t.spec.task_id} but position {i}")
        if t.spec.n_features < ds.overlap_dim:
            raise DatasetError(f"task {name!r}: {t.spec.n_features} features < overlap_dim {ds.overlap_dim}")
        head = t.spec.feature_names[: ds.overlap_dim]
        if prefix is None:
            prefix = head
        elif head != prefix:
            bad = next(k for k, (a, b) in enumerate(zip(head, prefix)) if a != b)
            raise DatasetError(
                f"task {name!r}: overlap feature {bad} is {head[bad]!r}, expected {prefix[bad]!r}"
            )
        if require_rows and t.n_rows < 1:
            raise DatasetError(f"task {name!r}: no rows")
        if not np.all(np.isfinite(t.features)):
            r, c = np.argwhere(~np.isfinite(t.features))[0]
            raise DatasetError(f"task {name!r}: non-finite value at row {r}, column {t.spec.feature_names[c]!r}")
        if not np.all(np.isfinite(t.labels)):
            r = int(np.argwhere(~np.isfinite(t.labels))[0, 0])
            raise DatasetError(f"task {name!r}: non-finite label at row {r}")
        if ds.objective == "binary" and not np.all((t.labels == 0) | (t.labels == 1)):
            r = int(np.argwhere((t.labels != 0) & (t.labels != 1))[0, 0])
            raise DatasetError(f"task {name!r}: binary label must be 0 or 1, row {r} has {t.labels[r]!r}")


# --------------------------------------------------------------------------- io


def _read_task_csv(path: Path, name: str, label_column: str):
    if not path.exists():
        raise DatasetError(f"task {name!r}: file not found: {path}")
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DatasetError(f"task {name!r}: empty file {path}") from None
        if label_column not in header:
            raise DatasetError(f"task {name!r}: label column {label_column!r} absent from {path}")
        li = header.index(label_column)
        feat_cols = [i for i in range(len(header)) if i != li]
        rows, labels = [], []
        for r, raw in enumerate(reader):
            if not raw:
                continue
            if len(raw) != len(header):
                raise DatasetError(f"task {name!r}: row {r} has {len(raw)} cells, header has {len(header)}")
            vals = []
            for c, cell in enumerate(raw):
                try:
                    v = float(cell)
                except ValueError:
                    raise DatasetError(
                        f"task {name!r}: non-numeric cell {cell!r} at row {r}, column {header[c]!r}"
                    ) from None
                if not math.isfinite(v):
                    raise DatasetError(f"task {name!r}: non-finite cell {cell!r} at row {r}, column {header[c]!r}")
                vals.append(v)
            labels.append(vals[li])
            rows.append([vals[i] for i in feat_cols])
    names = tuple(header[i] for i in feat_cols)
    X = np.array(rows, dtype=float).reshape(len(rows), len(names))
    return names, X, np.array(labels, dtype=float)


def load_dataset(config_path) -> MultiTaskDataset:
    """Load a dataset from a JSON config referencing one CSV per task.

    Task file paths are resolved relative to the config's directory.
    """
    config_path = Path(config_path)
    if not config_path.exists():
        raise DatasetError(f"dataset config not found: {config_path}")
    try:
        cfg = json.loads(config_path.read_text())
    except json.JSONDecodeError as e:
        raise DatasetError(f"{config_path}: invalid JSON ({e})") from None
    for key in ("objective", "overlap_dim", "tasks"):
        if key not in cfg:
            raise DatasetError(f"{config_path}: missing field {key!r}")
    tasks = []
    for i, entry in enumerate(cfg["tasks"]):
        name = entry.get("name", f"task{i}")
        if "path" not in entry:
            raise DatasetError(f"task {name!r}: missing 'path'")
        label_column = entry.get("label_column", "label")
        names, X, y = _read_task_csv(config_path.parent / entry["path"], name, label_column)
        if X.shape[0] < 1:
            raise DatasetError(f"task {name!r}: no data rows")
        tasks.append(TaskData(TaskSpec(i, name, names), X, y))
    return MultiTaskDataset(int(cfg["overlap_dim"]), cfg["objective"], tuple(tasks))


def save_dataset(ds: MultiTaskDataset, directory, label_column: str = "label") -> Path:
    """Write ``config.json`` plus one CSV per task; returns the config path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for t in ds.tasks:
        fname = f"task{t.spec.task_id:03d}.csv"
        if label_column in t.spec.feature_names:
            raise DatasetError(f"task {t.spec.name!r}: feature named like the label column {label_column!r}")
        with open(directory / fname, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow([*t.spec.feature_names, label_column])
            for x, y in zip(t.features.tolist(), t.labels.tolist()):
                w.writerow([*map(repr, x), repr(y)])
        entries.append({"name": t.spec.name, "path": fname, "label_column": label_column})
    cfg = {"objective": ds.objective, "overlap_dim": ds.overlap_dim, "tasks": entries}
    path = directory / "config.json"
    path.write_text(json.dumps(cfg, indent=2) + "\n")
    return path


# ------------------------------------------------------------------------ views


@dataclass(frozen=True)
class CommonView:
    """All tasks' rows stacked on the overlap columns, in task order."""

    features: np.ndarray
    task_of_row: np.ndarray
    origin_row: np.ndarray  # (N, 2): task id, row within task
    labels: np.ndarray


def common_view(ds: MultiTaskDataset) -> CommonView:
    d0 = ds.overlap_dim
    feats = [t.features[:, :d0] for t in ds.tasks]
    task_of_row = np.concatenate([np.full(t.n_rows, t.spec.task_id, dtype=np.intp) for t in ds.tasks])
    origin = np.concatenate(
        [np.column_stack([np.full(t.n_rows, t.spec.task_id), np.arange(t.n_rows)]) for t in ds.tasks]
    ).astype(np.intp)
    return CommonView(
        _frozen(np.concatenate(feats, axis=0).reshape(-1, d0)),
        _frozen(task_of_row, np.intp),
        _frozen(origin.reshape(-1, 2), np.intp),
        _frozen(np.concatenate([t.labels for t in ds.tasks])),
    )


def _holdout_counts(n: int, frac: float) -> int:
    return int(math.floor(n * frac))


def holdout(ds: MultiTaskDataset, frac: float, seed: int, require: bool = False):
    """Per-task random holdout of ``floor(n_i * frac)`` rows.

    Returns ``(rest, held)``. With ``require`` a task whose held part would be
    empty raises instead.
    """
    rest, held = [], []
    for t in ds.tasks:
        rng = np.random.default_rng([seed, t.spec.task_id])
        perm = rng.permutation(t.n_rows)
        k = _holdout_counts(t.n_rows, frac)
        if require and frac > 0 and k == 0:
            raise DatasetError(f"task {t.spec.name!r}: {t.n_rows} rows too few for a {frac} holdout")
        if t.n_rows - k < 1:
            raise DatasetError(f"task {t.spec.name!r}: holdout of {frac} leaves no rows")
        held.append(t.take(np.sort(perm[:k])))
        rest.append(t.take(np.sort(perm[k:])))
    return ds.with_tasks(rest), ds.with_tasks(held)


def split_train_valid_test(ds: MultiTaskDataset, test_frac: float, valid_frac: float, seed: int):
    """Stratified-by-task split into train / valid / test.

    Test takes ``floor(n_i * test_frac)`` rows; validation takes
    ``floor(remaining * valid_frac)``; the rest trains.
    """
    if not 0 < test_frac < 1:
        raise DatasetError(f"test_frac must lie in (0, 1), got {test_frac}")
    if not 0 <= valid_frac < 1:
        raise DatasetError(f"valid_frac must lie in [0, 1), got {valid_frac}")
    rest, test = holdout(ds, test_frac, seed, require=True)
    train, valid = holdout(rest, valid_frac, seed + 1, require=True)
    return train, valid, test


# ------------------------------------------------------------------ padded union


@dataclass(frozen=True)
class UnionLayout:
    """Column layout of the zero-padded union matrix."""

    overlap_dim: int
    offsets: tuple[int, ...]  # start column of each task's private block
    widths: tuple[int, ...]

    @property
    def n_columns(self) -> int:
        return self.overlap_dim + sum(self.widths)

    @classmethod
    def of(cls, specs: Sequence[TaskSpec], overlap_dim: int) -> "UnionLayout":
        widths = tuple(s.n_features - overlap_dim for s in specs)
        offsets = tuple(int(overlap_dim + sum(widths[:i])) for i in range(len(widths)))
        return cls(overlap_dim, offsets, widths)

    def pad(self, task_id: int, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        d0, off, w = self.overlap_dim, self.offsets[task_id], self.widths[task_id]
        if X.shape[1] != d0 + w:
            raise ValueError(f"task {task_id} expects {d0 + w} features, got {X.shape[1]}")
        out = np.zeros((X.shape[0], self.n_columns))
        out[:, :d0] = X[:, :d0]
        out[:, off : off + w] = X[:, d0:]
        return out

    def column_names(self, specs: Sequence[TaskSpec]) -> tuple[str, ...]:
        names = list(specs[0].feature_names[: self.overlap_dim])
        for s in specs:
            names += [f"{s.name}:{n}" for n in s.feature_names[self.overlap_dim :]]
        return tuple(names)


def zero_pad_union(ds: MultiTaskDataset) -> TaskData:
    """Stack all tasks into one homogeneous matrix, zero-filling other tasks' private blocks."""
    layout = UnionLayout.of(ds.task_specs, ds.overlap_dim)
    X = np.concatenate([layout.pad(t.spec.task_id, t.features) for t in ds.tasks], axis=0)
    y = np.concatenate([t.labels for t in ds.tasks])
    spec = TaskSpec(0, "union", layout.column_names(ds.task_specs))
    return TaskData(spec, X.reshape(-1, layout.n_columns), y)

