"""Second-order gradient boosted regression trees.

Trees are stored as flat node arrays in preorder (left child first). Leaf
weights are stored unscaled; shrinkage is applied when margins are updated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .config import Hyperparams

BASE_CLAMP = 10.0


@dataclass(frozen=True)
class GradPair:
    g: float
    h: float


def _check_objective(objective: str) -> None:
    if objective not in ("regression", "binary"):
        raise ValueError(f"unknown objective {objective!r}")


def loss(objective: str, y, margin):
    """Squared error (halved) or logistic loss on the raw margin."""
    _check_objective(objective)
    y, margin = np.asarray(y, float), np.asarray(margin, float)
    if objective == "regression":
        return 0.5 * (y - margin) ** 2
    return np.logaddexp(0.0, margin) - y * margin


def gradients(objective: str, y, margin) -> tuple[np.ndarray, np.ndarray]:
    _check_objective(objective)
    y, margin = np.asarray(y, float), np.asarray(margin, float)
    if objective == "regression":
        return margin - y, np.ones_like(margin)
    if not np.all((y == 0) | (y == 1)):
        raise ValueError("binary objective requires labels in {0, 1}")
    p = expit(margin)
    return p - y, p * (1.0 - p)


def grad_hess(objective: str, y: float, margin: float) -> GradPair:
    g, h = gradients(objective, [y], [margin])
    return GradPair(float(g[0]), float(h[0]))


def base_margin(objective: str, y) -> float:
    """Initial margin: label mean, or clamped log-odds of the positive rate."""
    y = np.asarray(y, float)
    if y.size == 0:
        return 0.0
    mean = math.fsum(y.tolist()) / y.size
    if objective == "regression":
        return mean
    if mean <= 0.0:
        return -BASE_CLAMP
    if mean >= 1.0:
        return BASE_CLAMP
    return float(np.clip(math.log(mean / (1.0 - mean)), -BASE_CLAMP, BASE_CLAMP))


def score_term(G, H, lam):
    """G^2 / (H + lam), with 0 where the denominator vanishes."""
    G, den = np.asarray(G, float), np.asarray(H, float) + lam
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.where(den > 0, G * G / np.where(den > 0, den, 1.0), 0.0)
    return out


def split_gain(G_L, H_L, G_R, H_R, lam, gamma):
    """Loss reduction of splitting a node into (G_L, H_L) and (G_R, H_R)."""
    G, H = G_L + G_R, H_L + H_R
    for g_, h_ in ((G_L, H_L), (G_R, H_R)):
        if h_ + lam == 0 and g_ != 0:
            raise ZeroDivisionError("empty child with lam = 0 and non-zero gradient")
    val = 0.5 * (score_term(G_L, H_L, lam) + score_term(G_R, H_R, lam) - score_term(G, H, lam)) - gamma
    return float(val) if np.ndim(val) == 0 else val


def leaf_weight(G: float, H: float, lam: float) -> float:
    if H + lam <= 0:
        raise ZeroDivisionError(f"leaf weight undefined for H + lam = {H + lam}")
    return -G / (H + lam)


# ------------------------------------------------------------------------ trees


@dataclass(frozen=True)
class RegTree:
    feature: np.ndarray  # -1 marks a leaf
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    weight: np.ndarray
    gain: np.ndarray
    cover: np.ndarray

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_leaves(self) -> int:
        return int(np.sum(self.feature < 0))

    @property
    def max_feature(self) -> int:
        return int(self.feature.max(initial=-1))

    def is_leaf(self, node: int) -> bool:
        return self.feature[node] < 0

    def apply(self, X) -> np.ndarray:
        """Leaf index reached by each row of ``X``."""
        X = np.asarray(X, float)
        if X.ndim != 2:
            raise ValueError("X must be 2-D")
        if self.max_feature >= X.shape[1]:
            raise IndexError(f"tree uses feature {self.max_feature}, input has {X.shape[1]} columns")
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        while True:
            inner = self.feature[node] >= 0
            if not inner.any():
                return node
            r, n = rows[inner], node[inner]
            go_left = X[r, self.feature[n]] < self.threshold[n]
            node[inner] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X) -> np.ndarray:
        return self.weight[self.apply(X)]

    def path(self, x) -> list[int]:
        node, out = 0, [0]
        while self.feature[node] >= 0:
            f = self.feature[node]
            node = self.left[node] if x[f] < self.threshold[node] else self.right[node]
            out.append(int(node))
        return out

    def expected_values(self) -> np.ndarray:
        """Cover-weighted mean leaf weight below every node."""
        ev = np.zeros(self.n_nodes)
        for n in range(self.n_nodes - 1, -1, -1):
            if self.feature[n] < 0:
                ev[n] = self.weight[n]
                continue
            lft, rgt = self.left[n], self.right[n]
            c = self.cover[lft] + self.cover[rgt]
            ev[n] = (self.cover[lft] * ev[lft] + self.cover[rgt] * ev[rgt]) / c if c > 0 else 0.5 * (ev[lft] + ev[rgt])
        return ev

    def splits(self):
        """Yield (node, feature, gain) for every internal node."""
        for n in np.flatnonzero(self.feature >= 0):
            yield int(n), int(self.feature[n]), float(self.gain[n])

    def to_dict(self) -> dict:
        nodes = []
        for n in range(self.n_nodes):
            if self.feature[n] < 0:
                nodes.append({"weight": float(self.weight[n]), "cover": float(self.cover[n])})
            else:
                nodes.append(
                    {
                        "feature": int(self.feature[n]),
                        "threshold": float(self.threshold[n]),
                        "gain": float(self.gain[n]),
                        "cover": float(self.cover[n]),
                        "left": int(self.left[n]),
                        "right": int(self.right[n]),
                    }
                )
        return {"nodes": nodes}

    @classmethod
    def from_dict(cls, d: dict) -> "RegTree":
        b = _NodeBuffer()
        for nd in d["nodes"]:
            if "feature" in nd:
                b.add(int(nd["feature"]), float(nd["threshold"]), int(nd["left"]), int(nd["right"]),
                      0.0, float(nd["gain"]), float(nd["cover"]))
            else:
                b.add(-1, 0.0, -1, -1, float(nd["weight"]), 0.0, float(nd["cover"]))
        return b.freeze()

    @classmethod
    def leaf(cls, weight: float, cover: float = 0.0) -> "RegTree":
        b = _NodeBuffer()
        b.add(-1, 0.0, -1, -1, weight, 0.0, cover)
        return b.freeze()


class _NodeBuffer:
    def __init__(self):
        self.cols = [[] for _ in range(7)]

    def add(self, feature, threshold, left, right, weight, gain, cover) -> int:
        for col, v in zip(self.cols, (feature, threshold, left, right, weight, gain, cover)):
            col.append(v)
        return len(self.cols[0]) - 1

    def set(self, node, **kw):
        names = ("feature", "threshold", "left", "right", "weight", "gain", "cover")
        for k, v in kw.items():
            self.cols[names.index(k)][node] = v

    def freeze(self) -> RegTree:
        f, t, l, r, w, g, c = self.cols
        arrs = [np.array(f, np.intp), np.array(t, float), np.array(l, np.intp), np.array(r, np.intp),
                np.array(w, float), np.array(g, float), np.array(c, float)]
        for a in arrs:
            a.setflags(write=False)
        return RegTree(*arrs)


# A finder maps (X, g, h, task, n_tasks, orders) to a SplitEval-like object with
# ``feature_index``, ``threshold`` and ``s`` attributes, or None.
Finder = Callable[..., object]


def presort(X: np.ndarray, rows: np.ndarray | None = None) -> list[np.ndarray]:
    """Per-feature row indices sorted by feature value (stable)."""
    if rows is None:
        rows = np.arange(X.shape[0])
    rows = np.asarray(rows, dtype=np.intp)
    return [rows[np.argsort(X[rows, d], kind="stable")] for d in range(X.shape[1])]


def build_tree(
    X,
    g,
    h,
    hp: Hyperparams,
    finder: Finder,
    task=None,
    n_tasks: int = 1,
    rows=None,
    orders: Sequence[np.ndarray] | None = None,
) -> RegTree:
    """Grow one tree depth-first on ``rows`` of ``X`` with the given split finder."""
    X = np.asarray(X, float)
    g, h = np.asarray(g, float), np.asarray(h, float)
    if task is None:
        task = np.zeros(X.shape[0], dtype=np.intp)
    if orders is None:
        orders = presort(X, rows)
    if len(orders[0]) == 0:
        raise ValueError("cannot build a tree on zero rows")
    buf = _NodeBuffer()
    mask = np.zeros(X.shape[0], dtype=bool)

    def grow(orders, depth):
        node_rows = orders[0]
        G = math.fsum(g[node_rows].tolist())
        H = math.fsum(h[node_rows].tolist())
        node = buf.add(-1, 0.0, -1, -1, 0.0, 0.0, H)
        best = None
        if depth < hp.max_depth and len(node_rows) >= 2:
            best = finder(X, g, h, task, n_tasks, orders)
        if best is None:
            buf.set(node, weight=leaf_weight(G, H, hp.lam) if H + hp.lam > 0 else 0.0)
            return node
        f, thr = best.feature_index, best.threshold
        mask[node_rows] = X[node_rows, f] < thr
        left_orders = [o[mask[o]] for o in orders]
        right_orders = [o[~mask[o]] for o in orders]
        mask[node_rows] = False
        buf.set(node, feature=f, threshold=thr, gain=best.s)
        buf.set(node, left=grow(left_orders, depth + 1))
        buf.set(node, right=grow(right_orders, depth + 1))
        return node

    grow(list(orders), 0)
    return buf.freeze()


def predict_tree(tree: RegTree, x) -> float:
    x = np.asarray(x, float).reshape(1, -1)
    return float(tree.predict(x)[0])


def accumulate(trees: Sequence[RegTree], eta: float, X, start) -> np.ndarray:
    """``start + eta * f_1(X) + eta * f_2(X) + ...`` accumulated tree by tree."""
    X = np.asarray(X, float)
    out = np.array(np.broadcast_to(np.asarray(start, float), (X.shape[0],)), dtype=float)
    for t in trees:
        out += eta * t.predict(X)
    return out


def predict_margin(trees: Sequence[RegTree], eta: float, x, base: float) -> float:
    return float(accumulate(trees, eta, np.asarray(x, float).reshape(1, -1), base)[0])
