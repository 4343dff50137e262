"""Synthetic imbalanced binary multi-task data.

The generator plants a shared signal on the overlap columns, task-private
signal on each task's extra columns, and optionally a per-task re-weighting of
the overlap columns, then calibrates a per-task intercept to hit the requested
positive rate.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit, ndtr

from .dataset import MultiTaskDataset, TaskData, TaskSpec

N_INFORMATIVE = 8


@dataclass(frozen=True)
class SynSpec:
    d_0: int
    d_extra: tuple[int, ...]
    n: tuple[int, ...]
    pos_rate: tuple[float, ...]
    shared_strength: float = 1.0
    specific_strength: float = 1.0
    interaction_strength: float = 0.0  # per-task weights on overlap columns
    noise_sd: float = 0.0
    seed: int = 0
    names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        m = self.m
        if not (len(self.d_extra) == len(self.pos_rate) == m and m >= 1):
            raise ValueError("d_extra, n and pos_rate must have one entry per task")
        if self.d_0 < 1 or any(d < 0 for d in self.d_extra) or any(k < 1 for k in self.n):
            raise ValueError("sizes must be positive (d_extra may be 0)")
        if any(not 0 < p < 1 for p in self.pos_rate):
            raise ValueError("pos_rate entries must lie in (0, 1)")
        if min(self.shared_strength, self.specific_strength, self.interaction_strength, self.noise_sd) < 0:
            raise ValueError("strengths and noise_sd must be >= 0")
        if self.names and len(self.names) != m:
            raise ValueError("names must have one entry per task")

    @property
    def m(self) -> int:
        return len(self.n)

    def to_dict(self) -> dict:
        return {k: (list(v) if isinstance(v, tuple) else v) for k, v in self.__dict__.items()}

    @classmethod
    def from_dict(cls, d: dict) -> "SynSpec":
        d = dict(d)
        for k in ("d_extra", "n", "pos_rate", "names"):
            if k in d:
                d[k] = tuple(d[k])
        return cls(**d)


@dataclass(frozen=True)
class _Signal:
    """Linear term plus centred threshold indicators over the first few columns."""

    cols: np.ndarray
    w: np.ndarray
    cut: np.ndarray
    sign: np.ndarray

    @classmethod
    def draw(cls, rng, n_cols: int, offset: int = 0) -> "_Signal":
        # Use columns [offset, offset + N_INFORMATIVE) when they exist, else the first ones.
        start = offset if n_cols >= offset + N_INFORMATIVE else 0
        cols = np.arange(start, min(n_cols, start + N_INFORMATIVE))
        k = cols.size
        return cls(cols, rng.normal(size=k) / np.sqrt(max(k, 1)), rng.uniform(-0.5, 0.5, size=k),
                   rng.choice([-1.0, 1.0], size=k))

    def __call__(self, X, strength: float) -> np.ndarray:
        k = self.w.size
        if k == 0 or strength == 0:
            return np.zeros(X.shape[0])
        Z = X[:, self.cols]
        step = (Z > self.cut).astype(float) - (1.0 - ndtr(self.cut))
        return strength * (Z @ self.w + 2.0 * step @ self.sign / np.sqrt(k))


def calibrate_intercept(score: np.ndarray, pos_rate: float) -> float:
    """Intercept b with mean(sigmoid(score + b)) == pos_rate."""
    if not np.all(np.isfinite(score)):
        raise ValueError("non-finite scores; strengths are degenerate")
    f = lambda b: float(np.mean(expit(score + b))) - pos_rate  # noqa: E731
    lo, hi = -60.0 - score.max(), 60.0 - score.min()
    if f(lo) * f(hi) > 0:
        raise ValueError(f"cannot calibrate positive rate {pos_rate}")
    return brentq(f, lo, hi, xtol=1e-12)


def generate(spec: SynSpec) -> MultiTaskDataset:
    rng = np.random.default_rng(spec.seed)
    shared = _Signal.draw(np.random.default_rng([spec.seed, 1]), spec.d_0)
    tasks = []
    for t in range(spec.m):
        n, dx = spec.n[t], spec.d_extra[t]
        X0 = rng.normal(size=(n, spec.d_0))
        Xp = rng.normal(size=(n, dx))
        task_rng = np.random.default_rng([spec.seed, 2, t])
        score = shared(X0, spec.shared_strength)
        score = score + _Signal.draw(task_rng, spec.d_0, offset=N_INFORMATIVE)(X0, spec.interaction_strength)
        score = score + _Signal.draw(task_rng, dx)(Xp, spec.specific_strength)
        if spec.noise_sd > 0:
            score = score + spec.noise_sd * rng.normal(size=n)
        b = calibrate_intercept(score, spec.pos_rate[t])
        y = (rng.uniform(size=n) < expit(score + b)).astype(float)
        names = tuple(f"c{j}" for j in range(spec.d_0)) + tuple(f"t{t}_x{j}" for j in range(dx))
        name = spec.names[t] if spec.names else f"task{t + 1}"
        tasks.append(TaskData(TaskSpec(t, name, names), np.hstack([X0, Xp]), y))
    return MultiTaskDataset(spec.d_0, "binary", tuple(tasks))


# Shapes of two fraud-detection scenes: (negatives, positives, dimension) per task.
SCENES = {
    "scene1": {"overlap": 81, "tasks": [(77_000, 2296, 81), (25_000, 989, 202)]},
    "scene2": {"overlap": 44, "tasks": [(187_000, 4709, 44), (968_000, 11850, 44)]},
}


def scene_spec(scene: str, scale: float = 0.01, seed: int = 0, **strengths) -> SynSpec:
    """SynSpec with a scene's per-task sizes (times ``scale``), widths and positive rates."""
    if scene not in SCENES:
        raise ValueError(f"unknown scene {scene!r}; choose from {sorted(SCENES)}")
    s = SCENES[scene]
    d0 = s["overlap"]
    n = tuple(max(1, round((neg + pos) * scale)) for neg, pos, _ in s["tasks"])
    rate = tuple(pos / (neg + pos) for neg, pos, _ in s["tasks"])
    extra = tuple(d - d0 for _, _, d in s["tasks"])
    return SynSpec(d0, extra, n, rate, seed=seed, **strengths)
