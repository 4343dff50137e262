"""JSON model files.

Floats go through ``repr`` (shortest round-trip form), so a reloaded model
predicts bit-identically and re-saving reproduces the same bytes.
"""

from __future__ import annotations

import json
from pathlib import Path

from .config import Hyperparams
from .dataset import TaskSpec
from .gbt import RegTree
from .trainer import CommonModel, GbtModel, MtbtModel, SpecificModel

FORMAT_VERSION = 1


class ModelFormatError(ValueError):
    pass


def model_to_dict(model) -> dict:
    head = {
        "format_version": FORMAT_VERSION,
        "kind": "gbt" if isinstance(model, GbtModel) else "mtbt",
        "method": model.method,
        "objective": model.objective,
        "overlap_dim": model.overlap_dim,
        "task_specs": [s.to_dict() for s in model.task_specs],
        "hyperparams": model.hyperparams.to_dict(),
    }
    if isinstance(model, GbtModel):
        head["base_margin"] = model.base_margin
        head["trees"] = [t.to_dict() for t in model.trees]
        return head
    c = model.common
    head["common"] = {
        "eta": c.eta,
        "base_margin": list(c.base_margin),
        "quit_rounds": list(c.quit_round),
        "trees": [t.to_dict() for t in c.trees],
    }
    head["specific"] = [{"task_id": s.task_id, "trees": [t.to_dict() for t in s.trees]} for s in model.specific]
    return head


def model_from_dict(d: dict):
    if d.get("format_version") != FORMAT_VERSION:
        raise ModelFormatError(f"unsupported model format_version {d.get('format_version')!r}")
    try:
        specs = [TaskSpec.from_dict(s) for s in d["task_specs"]]
        hp = Hyperparams.from_dict(d["hyperparams"])
        if d["kind"] == "gbt":
            trees = [RegTree.from_dict(t) for t in d["trees"]]
            return GbtModel(d["objective"], int(d["overlap_dim"]), trees, float(d["base_margin"]), hp, specs,
                            d.get("method", "gbt"))
        c = d["common"]
        common = CommonModel(
            [RegTree.from_dict(t) for t in c["trees"]],
            [int(r) for r in c["quit_rounds"]],
            [float(b) for b in c["base_margin"]],
            float(c["eta"]),
            d["objective"],
            int(d["overlap_dim"]),
        )
        specific = [SpecificModel(int(s["task_id"]), [RegTree.from_dict(t) for t in s["trees"]])
                    for s in d["specific"]]
    except (KeyError, TypeError) as e:
        raise ModelFormatError(f"malformed model file: {e!r}") from None
    return MtbtModel(d["objective"], int(d["overlap_dim"]), common, specific, hp, specs, d.get("method", "mtbt"))


def dumps(model) -> str:
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":")) + "\n"


def loads(text: str):
    return model_from_dict(json.loads(text))


def save_model(model, path) -> None:
    Path(path).write_text(dumps(model))


def load_model(path):
    path = Path(path)
    if not path.exists():
        raise ModelFormatError(f"model file not found: {path}")
    try:
        return loads(path.read_text())
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path}: invalid JSON ({e})") from None
