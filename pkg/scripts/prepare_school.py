"""Convert the school exam-score data (``school.mat``) into a dataset config.

The .mat file holds two 1 x 139 cell arrays: ``X`` (per-school feature
matrices, identical columns) and ``Y`` (exam scores). Every column is shared,
so the overlap width equals the full width.

    python3 scripts/prepare_school.py path/to/school.mat data/school
"""

import argparse
from pathlib import Path

import numpy as np
from scipy.io import loadmat

from mtbt.dataset import MultiTaskDataset, TaskData, TaskSpec, save_dataset


def load_school(path) -> MultiTaskDataset:
    mat = loadmat(path)
    xs, ys = mat["X"].ravel(), mat["Y"].ravel()
    if len(xs) != len(ys):
        raise SystemExit(f"{path}: X has {len(xs)} cells but Y has {len(ys)}")
    d = xs[0].shape[1]
    names = tuple(f"f{j}" for j in range(d))
    tasks = []
    for t, (X, y) in enumerate(zip(xs, ys)):
        X, y = np.asarray(X, float), np.asarray(y, float).ravel()
        tasks.append(TaskData(TaskSpec(t, f"school{t + 1:03d}", names), X, y))
    return MultiTaskDataset(d, "regression", tuple(tasks))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("mat")
    ap.add_argument("out", nargs="?", default="data/school")
    args = ap.parse_args()
    ds = load_school(args.mat)
    cfg = save_dataset(ds, Path(args.out))
    print(f"wrote {cfg}: {ds.n_tasks} tasks, {ds.n_rows} rows, {ds.overlap_dim} features")


if __name__ == "__main__":
    main()
