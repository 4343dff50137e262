from __future__ import annotations

import dataclasses
from dataclasses import dataclass

REGULARIZERS = ("none", "entropy", "variance")

# Documented default sweep; not claimed to match any published grid.
DEFAULT_GRID = {
    "eta": [0.05, 0.1, 0.3],
    "max_depth": [3, 4, 6],
    "lam": [1.0, 10.0],
    "beta": [0.1, 1.0, 10.0],
}


@dataclass(frozen=True)
class Hyperparams:
    lam: float = 1.0
    gamma: float = 0.0
    eta: float = 0.1
    max_depth: int = 4
    common_rounds: int = 100
    specific_rounds: int = 100
    patience: int = 10
    regularizer: str = "variance"
    beta: float = 1.0
    valid_frac: float = 0.125
    seed: int = 0
    min_child_weight: float = 1e-3

    def __post_init__(self):
        checks = [
            (self.lam >= 0, "lam must be >= 0"),
            (self.gamma >= 0, "gamma must be >= 0"),
            (0 < self.eta <= 1, "eta must lie in (0, 1]"),
            (self.max_depth >= 1, "max_depth must be >= 1"),
            (self.common_rounds >= 0, "common_rounds must be >= 0"),
            (self.specific_rounds >= 0, "specific_rounds must be >= 0"),
            (self.patience >= 1, "patience must be >= 1"),
            (self.regularizer in REGULARIZERS, f"regularizer must be one of {REGULARIZERS}"),
            (self.beta >= 0, "beta must be >= 0"),
            (0 <= self.valid_frac < 1, "valid_frac must lie in [0, 1)"),
            (self.min_child_weight >= 0, "min_child_weight must be >= 0"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ValueError(f"{msg} ({self})")

    def replace(self, **changes) -> "Hyperparams":
        return dataclasses.replace(self, **coerce(changes))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "Hyperparams":
        unknown = set(d) - field_names()
        if unknown:
            raise ValueError(f"unknown hyperparameters: {sorted(unknown)}")
        return cls(**coerce(d))


def field_names() -> set[str]:
    return {f.name for f in dataclasses.fields(Hyperparams)}


def coerce(values: dict) -> dict:
    """Cast raw (possibly string) values to each Hyperparams field's type."""
    types = {f.name: f.type for f in dataclasses.fields(Hyperparams)}
    out = {}
    for k, v in values.items():
        if k not in types:
            raise ValueError(f"unknown hyperparameter {k!r}")
        t = types[k]
        if t == "int":
            if isinstance(v, float) and not v.is_integer():
                raise ValueError(f"{k} must be an integer, got {v}")
            out[k] = int(float(v)) if isinstance(v, str) else int(v)
        elif t == "float":
            out[k] = float(v)
        else:
            out[k] = str(v)
    return out
