"""Command-line entry point: ``mtbt <subcommand> ...``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 internal error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .config import DEFAULT_GRID, Hyperparams
from .dataset import DatasetError, load_dataset, save_dataset
from .experiment import benchmark, grid_search, rows_to_csv, wide_table
from .explain import feature_importance, instance_contributions
from .metrics import evaluate
from .serialize import ModelFormatError, dumps, load_model
from .syndata import SCENES, SynSpec, generate, scene_spec
from .trainer import METHODS, train_method

log = logging.getLogger("mtbt")

EXIT_USAGE, EXIT_DATA, EXIT_INTERNAL = 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _parse_assignments(items, allow_lists: bool) -> dict:
    out = {}
    for item in items or []:
        if "=" not in item:
            raise UsageError(f"expected KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        out[k.strip()] = [x.strip() for x in v.split(",")] if allow_lists else v.strip()
    return out


def _hyperparams(args) -> Hyperparams:
    raw = {}
    if getattr(args, "params", None):
        raw.update(json.loads(Path(args.params).read_text()))
    raw.update(_parse_assignments(getattr(args, "set", None), allow_lists=False))
    if getattr(args, "seed", None) is not None:
        raw["seed"] = args.seed
    try:
        return Hyperparams.from_dict(raw)
    except (ValueError, TypeError) as e:
        raise UsageError(str(e)) from None


def _grid(args) -> dict | None:
    if not args.grid:
        return None
    if args.grid == ["default"]:
        return DEFAULT_GRID
    grid = _parse_assignments(args.grid, allow_lists=True)
    try:
        for k, vals in grid.items():
            grid[k] = [Hyperparams().replace(**{k: v}).to_dict()[k] for v in vals]
    except ValueError as e:
        raise UsageError(str(e)) from None
    return grid


def _write(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    sys.stdout.write(text)


def _read_feature_csv(path, spec):
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows:
        raise DatasetError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if set(spec.feature_names) <= set(header):
        cols = [header.index(n) for n in spec.feature_names]
    elif len(header) == spec.n_features:
        cols = list(range(len(header)))
    else:
        raise DatasetError(
            f"{path}: {len(header)} columns do not match task {spec.name!r} ({spec.n_features} features)"
        )
    try:
        X = np.array([[float(r[c]) for c in cols] for r in rows[1:] if r], dtype=float)
    except (ValueError, IndexError) as e:
        raise DatasetError(f"{path}: malformed row ({e})") from None
    if X.size and not np.all(np.isfinite(X)):
        raise DatasetError(f"{path}: non-finite feature value")
    return X.reshape(-1, spec.n_features)


def _task(model, task_id: int):
    if not 0 <= task_id < model.n_tasks:
        raise UsageError(f"unknown task {task_id}; model has {model.n_tasks} tasks")
    return model.task_specs[task_id]


# ------------------------------------------------------------------ commands


def cmd_train(args) -> int:
    ds = load_dataset(args.config)
    hp = _hyperparams(args)
    grid = _grid(args)
    best_hp, table = grid_search(ds, args.method, hp, grid, args.n_repeats, hp.seed)
    if table:
        for row in table:
            log.info("grid %s", row)
    model = train_method(args.method, ds, best_hp)
    Path(args.out).write_text(dumps(model))
    train_log = {
        "method": args.method,
        "hyperparams": best_hp.to_dict(),
        "grid": table,
        "rounds": model.history,
        "quit_rounds": list(model.common.quit_round) if hasattr(model, "common") else None,
        "specific_rounds": [s.n_rounds for s in model.specific] if hasattr(model, "specific") else None,
    }
    log_path = args.log or str(Path(args.out).with_suffix(".log.json"))
    Path(log_path).write_text(json.dumps(train_log, indent=1) + "\n")
    print(f"wrote {args.out} and {log_path}")
    return 0


def cmd_predict(args) -> int:
    model = load_model(args.model)
    spec = _task(model, args.task)
    X = _read_feature_csv(args.input, spec)
    pred = model.predict(args.task, X, raw_margin=args.raw_margin) if len(X) else np.zeros(0)
    name = "margin" if args.raw_margin or model.objective == "regression" else "probability"
    _write("\n".join([name, *map(repr, map(float, pred))]) + "\n", args.out)
    return 0


def cmd_evaluate(args) -> int:
    model = load_model(args.model)
    report = evaluate(model, load_dataset(args.config))
    _write(report.to_csv(), args.out)
    return 0


def cmd_explain(args) -> int:
    model = load_model(args.model)
    spec = _task(model, args.task)
    if args.instance:
        X = _read_feature_csv(args.instance, spec)
        if not 0 <= args.row < len(X):
            raise UsageError(f"--row {args.row} outside the {len(X)} rows of {args.instance}")
        text = instance_contributions(model, args.task, X[args.row]).to_csv()
    else:
        report = feature_importance(model, args.task)
        text = (report.top(args.top) if args.top else report).to_csv()
    _write(text, args.out)
    return 0


def cmd_benchmark(args) -> int:
    ds = load_dataset(args.config)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    unknown = set(methods) - set(METHODS)
    if unknown:
        raise UsageError(f"unknown methods {sorted(unknown)}; choose from {METHODS}")
    rows = benchmark(ds, methods, _hyperparams(args), args.n_repeats, args.seed or 0, args.test_frac,
                     _grid(args), args.grid_repeats)
    text = rows_to_csv(rows)
    if args.out:
        Path(args.out).write_text(text)
    agg = [r for r in rows if r.task in ("ALL", "MEAN")] if not args.all_tasks else rows
    print(wide_table(agg))
    return 0


def cmd_generate(args) -> int:
    if args.spec:
        spec = SynSpec.from_dict(json.loads(Path(args.spec).read_text()))
        if args.seed is not None:
            spec = SynSpec.from_dict({**spec.to_dict(), "seed": args.seed})
    else:
        strengths = {k: v for k, v in (("shared_strength", args.shared), ("specific_strength", args.specific),
                                       ("interaction_strength", args.interaction), ("noise_sd", args.noise))
                     if v is not None}
        spec = scene_spec(args.preset, args.scale, args.seed or 0, **strengths)
    ds = generate(spec)
    path = save_dataset(ds, args.out)
    (Path(args.out) / "synspec.json").write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
    print(f"wrote {path}: {ds.n_tasks} tasks, rows {[t.n_rows for t in ds.tasks]}")
    return 0


# -------------------------------------------------------------------- parser


def _add_hp_args(p):
    p.add_argument("--params", help="JSON file of hyperparameters")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one hyperparameter")
    p.add_argument("--grid", action="append", metavar="KEY=V1,V2,...",
                   help="grid-search values for a hyperparameter (or 'default')")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mtbt", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    t = sub.add_parser("train", help="train a model")
    t.add_argument("--method", choices=METHODS, required=True)
    t.add_argument("--config", required=True, help="dataset config JSON")
    t.add_argument("--out", required=True, help="model file to write")
    t.add_argument("--log", help="training log JSON (default: <out>.log.json)")
    t.add_argument("--n-repeats", type=int, default=1, help="grid-search repeats")
    t.add_argument("--seed", type=int)
    _add_hp_args(t)
    t.set_defaults(func=cmd_train)

    pr = sub.add_parser("predict", help="predict one task's rows")
    pr.add_argument("--model", required=True)
    pr.add_argument("--task", type=int, required=True)
    pr.add_argument("--input", required=True, help="feature CSV with a header row")
    pr.add_argument("--out")
    pr.add_argument("--raw-margin", action="store_true")
    pr.add_argument("--seed", type=int)
    pr.set_defaults(func=cmd_predict)

    ev = sub.add_parser("evaluate", help="per-task RMSE/AUC on a dataset")
    ev.add_argument("--model", required=True)
    ev.add_argument("--config", required=True)
    ev.add_argument("--out")
    ev.add_argument("--seed", type=int)
    ev.set_defaults(func=cmd_evaluate)

    ex = sub.add_parser("explain", help="feature importance or one instance's contributions")
    ex.add_argument("--model", required=True)
    ex.add_argument("--task", type=int, required=True)
    ex.add_argument("--top", type=int, help="keep the N most important features")
    ex.add_argument("--instance", help="feature CSV; explains --row of it")
    ex.add_argument("--row", type=int, default=0)
    ex.add_argument("--out")
    ex.add_argument("--seed", type=int)
    ex.set_defaults(func=cmd_explain)

    b = sub.add_parser("benchmark", help="repeated split benchmark of several methods")
    b.add_argument("--config", required=True)
    b.add_argument("--methods", default=",".join(METHODS))
    b.add_argument("--n-repeats", type=int, default=10)
    b.add_argument("--grid-repeats", type=int, default=1)
    b.add_argument("--test-frac", type=float, default=0.2)
    b.add_argument("--seed", type=int, default=0)
    b.add_argument("--out", help="long-format results CSV")
    b.add_argument("--all-tasks", action="store_true", help="print every task, not just aggregates")
    _add_hp_args(b)
    b.set_defaults(func=cmd_benchmark)

    g = sub.add_parser("generate", help="write a synthetic dataset")
    g.add_argument("--preset", choices=sorted(SCENES), default="scene2")
    g.add_argument("--spec", help="SynSpec JSON (overrides --preset)")
    g.add_argument("--scale", type=float, default=0.01)
    g.add_argument("--shared", type=float)
    g.add_argument("--specific", type=float)
    g.add_argument("--interaction", type=float)
    g.add_argument("--noise", type=float)
    g.add_argument("--seed", type=int)
    g.add_argument("--out", required=True, help="output directory")
    g.set_defaults(func=cmd_generate)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except UsageError as e:
        print(f"mtbt: error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (DatasetError, ModelFormatError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"mtbt: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as e:
        print(f"mtbt: data error: {e}", file=sys.stderr)
        return EXIT_DATA
    except Exception as e:  # noqa: BLE001
        log.exception("internal error")
        print(f"mtbt: internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
