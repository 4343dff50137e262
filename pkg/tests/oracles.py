"""Independent reference computations used by the tests.

Nothing here calls into the incremental scan: every quantity is recomputed
from scratch with plain Python loops.
"""

import math
import statistics

import mpmath
import numpy as np

TIE_RTOL = 1e-11


def _term(G, H, lam):
    den = H + lam
    return G * G / den if den > 0 else 0.0


def half_gain(GL, HL, GR, HR, lam):
    return 0.5 * (_term(GL, HL, lam) + _term(GR, HR, lam) - _term(GL + GR, HL + HR, lam))


def entropy_oracle(st, s):
    r = [max(v, 0.0) for v in st]
    z = sum(r)
    if z <= 0:
        return 0.0
    return -sum((v / z) * math.log(v / z) for v in r if v > 0) * s


def variance_oracle(st, s, beta):
    v = statistics.variance(st) if len(st) >= 2 else 0.0
    return s - beta * v


def brute_force_split(X, g, h, task, n_tasks, lam, gamma, regularizer, beta, min_child_weight=0.0):
    """Every (feature, midpoint) candidate scored from scratch.

    Returns (feature, threshold, s, per_task_s, score) for the winner, or None.
    """
    n, D = X.shape
    cands = []
    for d in range(D):
        vals = sorted(set(float(v) for v in X[:, d]))
        for lo, hi in zip(vals[:-1], vals[1:]):
            thr = 0.5 * lo + 0.5 * hi
            if not lo < thr <= hi:
                thr = hi
            left = [i for i in range(n) if X[i, d] < thr]
            right = [i for i in range(n) if not X[i, d] < thr]
            GL = math.fsum(g[i] for i in left)
            HL = math.fsum(h[i] for i in left)
            GR = math.fsum(g[i] for i in right)
            HR = math.fsum(h[i] for i in right)
            if HL < min_child_weight or HR < min_child_weight:
                continue
            s = half_gain(GL, HL, GR, HR, lam) - gamma
            st = []
            for t in range(n_tasks):
                st.append(half_gain(
                    math.fsum(g[i] for i in left if task[i] == t),
                    math.fsum(h[i] for i in left if task[i] == t),
                    math.fsum(g[i] for i in right if task[i] == t),
                    math.fsum(h[i] for i in right if task[i] == t),
                    lam,
                ))
            if regularizer == "none":
                score = s
            elif regularizer == "entropy":
                score = entropy_oracle(st, s)
            else:
                score = variance_oracle(st, s, beta)
            cands.append((d, thr, s, st, score))
    if not cands:
        return None
    best = max(c[4] for c in cands)
    if not best > 0:
        return None
    tol = TIE_RTOL * max(1.0, abs(best))
    winners = sorted((c for c in cands if c[4] >= best - tol), key=lambda c: (c[0], c[1]))
    return winners[0]


def pairwise_auc(labels, scores):
    pos = [s for l, s in zip(labels, scores) if l == 1]
    neg = [s for l, s in zip(labels, scores) if l == 0]
    won = sum(1.0 if p > q else 0.5 if p == q else 0.0 for p in pos for q in neg)
    return won / (len(pos) * len(neg))


mpmath.mp.dps = 40


def _mp_loss(objective, y, z):
    if objective == "regression":
        return (y - z) ** 2 / 2
    return mpmath.log(1 + mpmath.exp(z)) - y * z


def fd_grad_hess(objective, y, margin, step="1e-12"):
    """Central finite differences of the loss in 40-digit arithmetic."""
    y, m, e = mpmath.mpf(y), mpmath.mpf(margin), mpmath.mpf(step)
    fp, f0, fm = (_mp_loss(objective, y, m + e), _mp_loss(objective, y, m), _mp_loss(objective, y, m - e))
    return float((fp - fm) / (2 * e)), float((fp - 2 * f0 + fm) / (e * e))


def random_node(rng, max_rows=64, max_features=4, max_tasks=3, integer_features=None):
    n = int(rng.integers(2, max_rows + 1))
    D = int(rng.integers(1, max_features + 1))
    T = int(rng.integers(1, max_tasks + 1))
    if integer_features is None:
        integer_features = rng.random() < 0.5
    X = rng.integers(0, 5, size=(n, D)).astype(float) if integer_features else rng.normal(size=(n, D))
    g = rng.normal(size=n)
    h = rng.uniform(0.05, 1.0, size=n)
    task = rng.integers(0, T, size=n)
    return X, g, h, task, T
