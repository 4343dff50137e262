"""Task-regularized exact split finding.

For every candidate threshold the finder tracks the pooled gain ``s`` and the
gain ``s_t`` each task would see from the same partition of its own rows, then
ranks candidates by a regularized score that penalizes splits serving only the
dominant task.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from numba import njit

from .config import Hyperparams, REGULARIZERS
from .gbt import presort, score_term

# Candidates whose scores differ by less than this (relative) count as tied.
TIE_RTOL = 1e-11


@dataclass(frozen=True)
class SplitEval:
    feature_index: int
    threshold: float
    s: float
    per_task_s: tuple[float, ...]
    score: float
    G_L: float
    H_L: float
    G_R: float
    H_R: float


def gain(G_L, H_L, G, H, lam, gamma):
    """Vectorized loss reduction with the right child taken as (G - G_L, H - H_L)."""
    return 0.5 * (score_term(G_L, H_L, lam) + score_term(G - G_L, H - H_L, lam) - score_term(G, H, lam)) - gamma


def entropy_score(per_task_s, s):
    """Pooled gain scaled by the entropy of the clipped per-task gain shares.

    Works on a single candidate (``per_task_s`` of shape (T,)) or a batch of
    shape (n, T) with ``s`` of shape (n,).
    """
    r = np.maximum(np.asarray(per_task_s, float), 0.0)
    z = r.sum(axis=-1, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        p = np.where(z > 0, r / np.where(z > 0, z, 1.0), 0.0)
        plogp = np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)
    ent = -plogp.sum(axis=-1)
    out = np.where(z[..., 0] > 0, ent * np.asarray(s, float), 0.0)
    return float(out) if out.ndim == 0 else out


def variance_score(per_task_s, s, beta):
    """Pooled gain minus ``beta`` times the sample variance of per-task gains."""
    st = np.asarray(per_task_s, float)
    T = st.shape[-1]
    if T < 2:
        v = np.zeros(st.shape[:-1])
    else:
        v = st.var(axis=-1, ddof=1)
    out = np.asarray(s, float) - beta * v
    return float(out) if out.ndim == 0 else out


def regularized_score(regularizer: str, per_task_s, s, beta: float):
    if regularizer == "none":
        return np.asarray(s, float)
    if regularizer == "entropy":
        return entropy_score(per_task_s, s)
    if regularizer == "variance":
        return variance_score(per_task_s, s, beta)
    raise ValueError(f"unknown regularizer {regularizer!r}")


def _task_sums(task, values, n_tasks):
    return np.bincount(task, weights=values, minlength=n_tasks)[:n_tasks]


_REG_CODE = {"none": 0, "entropy": 1, "variance": 2}


@njit(cache=True)
def _term(G, H, lam):
    den = H + lam
    return G * G / den if den > 0.0 else 0.0


@njit(cache=True)
def _scan_feature(xs, gs, hs, ts, G, H, Gt, Ht, lam, gamma, reg, beta, mcw):
    """Sorted-order scan of one feature.

    Returns candidate positions (index of the last left row), regularized
    scores, pooled gains and left sums for every threshold between distinct
    consecutive values that passes the min-child-weight guard.
    """
    n = xs.size
    T = Gt.size
    GtL = np.zeros(T)
    HtL = np.zeros(T)
    st = np.zeros(T)
    pos = np.empty(max(n - 1, 0), np.int64)
    score = np.empty(max(n - 1, 0))
    sg = np.empty(max(n - 1, 0))
    gl = np.empty(max(n - 1, 0))
    hl = np.empty(max(n - 1, 0))
    parent = _term(G, H, lam)
    GL = 0.0
    HL = 0.0
    k = 0
    for j in range(n - 1):
        GL += gs[j]
        HL += hs[j]
        if reg != 0:
            t = ts[j]
            GtL[t] += gs[j]
            HtL[t] += hs[j]
            st[t] = 0.5 * (_term(GtL[t], HtL[t], lam) + _term(Gt[t] - GtL[t], Ht[t] - HtL[t], lam)
                           - _term(Gt[t], Ht[t], lam))
        if not xs[j] < xs[j + 1]:
            continue
        if HL < mcw or H - HL < mcw:
            continue
        s = 0.5 * (_term(GL, HL, lam) + _term(G - GL, H - HL, lam) - parent) - gamma
        if reg == 0:
            sc = s
        elif reg == 1:
            z = 0.0
            for u in range(T):
                if st[u] > 0.0:
                    z += st[u]
            ent = 0.0
            if z > 0.0:
                for u in range(T):
                    if st[u] > 0.0:
                        p = st[u] / z
                        if p > 0.0:
                            ent -= p * np.log(p)
                sc = ent * s
            else:
                sc = 0.0
        else:
            v = 0.0
            if T >= 2:
                mean = 0.0
                for u in range(T):
                    mean += st[u]
                mean /= T
                for u in range(T):
                    v += (st[u] - mean) ** 2
                v /= T - 1
            sc = s - beta * v
        pos[k] = j
        score[k] = sc
        sg[k] = s
        gl[k] = GL
        hl[k] = HL
        k += 1
    return pos[:k], score[:k], sg[:k], gl[:k], hl[:k]


@dataclass(frozen=True)
class SplitFinder:
    """Callable split finder; ``regularizer='none'`` is the plain greedy finder."""

    lam: float = 1.0
    gamma: float = 0.0
    regularizer: str = "none"
    beta: float = 0.0
    min_child_weight: float = 0.0

    def __post_init__(self):
        if self.regularizer not in REGULARIZERS:
            raise ValueError(f"unknown regularizer {self.regularizer!r}")

    @classmethod
    def from_hyperparams(cls, hp: Hyperparams, regularizer: str | None = None) -> "SplitFinder":
        return cls(hp.lam, hp.gamma, hp.regularizer if regularizer is None else regularizer,
                   hp.beta, hp.min_child_weight)

    def __call__(self, X, g, h, task, n_tasks, orders) -> SplitEval | None:
        task = np.asarray(task, dtype=np.int64)
        rows = orders[0]
        G = math.fsum(g[rows].tolist())
        H = math.fsum(h[rows].tolist())
        Gt = _task_sums(task[rows], g[rows], n_tasks)
        Ht = _task_sums(task[rows], h[rows], n_tasks)
        reg = _REG_CODE[self.regularizer]

        scans = []
        best_score = -np.inf
        for d, order in enumerate(orders):
            scan = _scan_feature(X[order, d], g[order], h[order], task[order], G, H, Gt, Ht,
                                 float(self.lam), float(self.gamma), reg, float(self.beta),
                                 float(self.min_child_weight))
            scans.append(scan)
            if scan[1].size:
                best_score = max(best_score, scan[1].max())
        if not best_score > 0:
            return None
        # Lowest (feature, threshold) among candidates tied with the maximum.
        tol = TIE_RTOL * max(1.0, abs(best_score))
        for d, (pos, score, s, GL, HL) in enumerate(scans):
            hit = np.flatnonzero(score >= best_score - tol)
            if hit.size:
                k = int(hit[0])
                break
        if not score[k] > 0:
            return None
        order = orders[d]
        c = pos[k]
        lo, hi = X[order[c], d], X[order[c + 1], d]
        thr = 0.5 * lo + 0.5 * hi
        if not lo < thr <= hi:
            thr = hi
        left = order[: c + 1]
        GtL = _task_sums(task[left], g[left], n_tasks)
        HtL = _task_sums(task[left], h[left], n_tasks)
        st = gain(GtL, HtL, Gt, Ht, self.lam, 0.0)
        return SplitEval(d, float(thr), float(s[k]), tuple(float(v) for v in st), float(score[k]),
                         float(GL[k]), float(HL[k]), float(G - GL[k]), float(H - HL[k]))


def find_best_split(X, g, h, task, n_tasks, lam, gamma, regularizer="none", beta=0.0,
                    min_child_weight=0.0, rows=None) -> SplitEval | None:
    """Best regularized split over ``rows`` of ``X`` (all rows by default)."""
    X = np.asarray(X, float)
    finder = SplitFinder(lam, gamma, regularizer, beta, min_child_weight)
    return finder(X, np.asarray(g, float), np.asarray(h, float), np.asarray(task, dtype=np.int64),
                  n_tasks, presort(X, rows))
