import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oracles import brute_force_split, entropy_oracle, half_gain, random_node, variance_oracle
from mtbt.split import entropy_score, find_best_split, gain, regularized_score, variance_score

finite = st.floats(-1e3, 1e3, allow_nan=False)


def test_entropy_examples():
    assert entropy_score([1.0, 1.0], 2.0) == pytest.approx(2 * math.log(2))
    assert entropy_score([3.0, 0.0], 3.0) == 0.0
    assert entropy_score([-1.0, -2.0], 1.0) == 0.0
    assert entropy_score([2.0, -5.0], 2.0) == 0.0


def test_variance_examples():
    assert variance_score([1.0, 1.0], 2.0, 1.0) == 2.0
    assert variance_score([0.0, 2.0], 2.0, 1.0) == 0.0
    assert variance_score([4.0], 4.0, 9.0) == 4.0


@settings(max_examples=300)
@given(st.lists(finite, min_size=1, max_size=6), finite)
def test_entropy_matches_oracle_and_bound(per_task, s):
    got = entropy_score(per_task, s)
    assert got == pytest.approx(entropy_oracle(per_task, s), rel=1e-12, abs=1e-12)
    if s >= 0:
        assert -1e-12 <= got <= math.log(len(per_task)) * s + 1e-9


@settings(max_examples=300)
@given(st.lists(finite, min_size=1, max_size=6), finite, st.floats(0, 100))
def test_variance_matches_oracle_and_bound(per_task, s, beta):
    got = variance_score(per_task, s, beta)
    assert got == pytest.approx(variance_oracle(per_task, s, beta), rel=1e-9, abs=1e-9)
    assert got <= s + 1e-12


@settings(max_examples=200)
@given(st.lists(st.floats(0.01, 1e3), min_size=2, max_size=6), st.floats(0.1, 1e3), st.floats(0.1, 10))
def test_rescaling_identities(per_task, s, c):
    # entropy scales linearly in c, the variance penalty quadratically
    scaled = [c * v for v in per_task]
    assert entropy_score(scaled, c * s) == pytest.approx(c * entropy_score(per_task, s), rel=1e-9)
    pen = s - variance_score(per_task, s, 1.0)
    pen_c = c * s - variance_score(scaled, c * s, 1.0)
    assert pen_c == pytest.approx(c * c * pen, rel=1e-9, abs=1e-9)


def test_balanced_split_beats_dominated_split_under_entropy():
    # same pooled gain, shares (0.5, 0.5) versus (1, 0)
    assert entropy_score([1.0, 1.0], 2.0) > entropy_score([2.0, 0.0], 2.0)
    assert variance_score([1.0, 1.0], 2.0, 1.0) > variance_score([2.0, 0.0], 2.0, 1.0)


def test_regularized_score_dispatch():
    assert regularized_score("none", [5.0, 0.0], 1.5, 0.3) == 1.5
    with pytest.raises(ValueError):
        regularized_score("bogus", [1.0], 1.0, 0.0)


def test_gain_vectorized_matches_scalar():
    GL, HL = np.array([-2.0, 0.5]), np.array([1.0, 2.0])
    got = gain(GL, HL, 0.0, 2.0 + 2.0, 0.5, 0.0)
    exp = [half_gain(gl, hl, -gl, 4.0 - hl, 0.5) for gl, hl in zip(GL, HL)]
    np.testing.assert_allclose(got, exp, rtol=1e-14)


def _compare(X, g, h, task, T, reg, beta, lam, gamma, mcw=0.0):
    got = find_best_split(X, g, h, task, T, lam, gamma, reg, beta, mcw)
    ref = brute_force_split(X, g, h, task, T, lam, gamma, reg, beta, mcw)
    return got, ref


@pytest.mark.parametrize("reg", ["none", "entropy", "variance"])
@pytest.mark.parametrize("seed", range(30))
def test_matches_brute_force(reg, seed):
    rng = np.random.default_rng(seed * 7 + len(reg))
    X, g, h, task, T = random_node(rng)
    lam, gamma, beta = float(rng.uniform(0, 2)), float(rng.choice([0.0, 0.05])), float(rng.uniform(0, 3))
    got, ref = _compare(X, g, h, task, T, reg, beta, lam, gamma)
    if ref is None:
        assert got is None
        return
    assert (got.feature_index, got.threshold) == (ref[0], ref[1])
    assert abs(got.score - ref[4]) <= 1e-9
    assert abs(got.s - ref[2]) <= 1e-9
    np.testing.assert_allclose(got.per_task_s, ref[3], atol=1e-9)


@pytest.mark.parametrize("seed", range(20))
def test_task_statistics_decompose(seed):
    rng = np.random.default_rng(1000 + seed)
    X, g, h, task, T = random_node(rng, max_tasks=4)
    best = find_best_split(X, g, h, task, T, 1.0, 0.0, "variance", 0.5)
    if best is None:
        return
    L = X[:, best.feature_index] < best.threshold
    GtL = [g[L & (task == t)].sum() for t in range(T)]
    HtL = [h[L & (task == t)].sum() for t in range(T)]
    assert abs(sum(GtL) - best.G_L) <= 1e-12 * max(1.0, np.abs(g).sum())
    assert abs(sum(HtL) - best.H_L) <= 1e-12 * max(1.0, h.sum())
    assert best.G_L + best.G_R == pytest.approx(g.sum(), abs=1e-12 * max(1.0, np.abs(g).sum()))


def test_min_child_weight_respected():
    rng = np.random.default_rng(3)
    for _ in range(30):
        X, g, h, task, T = random_node(rng)
        got, ref = _compare(X, g, h, task, T, "none", 0.0, 1.0, 0.0, mcw=2.0)
        assert (got is None) == (ref is None)
        if got is not None:
            assert got.H_L >= 2.0 and got.H_R >= 2.0
            assert (got.feature_index, got.threshold) == (ref[0], ref[1])


def test_single_task_variance_equals_plain():
    rng = np.random.default_rng(5)
    for _ in range(30):
        X, g, h, _, _ = random_node(rng, max_tasks=1)
        task = np.zeros(len(g), int)
        a = find_best_split(X, g, h, task, 1, 1.0, 0.0, "variance", 7.0)
        b = find_best_split(X, g, h, task, 1, 1.0, 0.0, "none", 0.0)
        assert (a is None) == (b is None)
        if a is not None:
            assert (a.feature_index, a.threshold, a.score) == (b.feature_index, b.threshold, b.score)


def test_single_task_entropy_never_splits():
    rng = np.random.default_rng(6)
    X, g, h, _, _ = random_node(rng, max_tasks=1)
    assert find_best_split(X, g, h, np.zeros(len(g), int), 1, 1.0, 0.0, "entropy", 0.0) is None


def test_ties_resolve_to_lowest_feature_then_threshold():
    X = np.array([[1.0, 1.0], [2.0, 2.0], [3.0, 3.0], [4.0, 4.0]])
    g, h = np.array([-1.0, -1.0, 1.0, 1.0]), np.ones(4)
    best = find_best_split(X, g, h, np.zeros(4, int), 1, 0.0, 0.0)
    assert (best.feature_index, best.threshold) == (0, 2.5)
    # symmetric gradients: thresholds 1.5 and 3.5 tie, the lower wins
    g2 = np.array([-1.0, 0.0, 0.0, 1.0])
    best2 = find_best_split(X[:, :1], g2, h, np.zeros(4, int), 1, 0.0, 0.0)
    assert best2.threshold == 1.5


def test_adjacent_float_midpoint_falls_back_to_upper_value():
    lo = 1.0
    hi = np.nextafter(lo, 2.0)
    X = np.array([[lo], [hi]])
    best = find_best_split(X, np.array([-1.0, 1.0]), np.ones(2), np.zeros(2, int), 1, 0.0, 0.0)
    assert lo < best.threshold <= hi
    assert (X[:, 0] < best.threshold).tolist() == [True, False]


def test_rows_subset_matches_sliced_problem():
    rng = np.random.default_rng(9)
    X, g, h, task, T = random_node(rng, max_rows=40)
    rows = np.sort(rng.choice(len(g), size=len(g) // 2 + 1, replace=False))
    a = find_best_split(X, g, h, task, T, 1.0, 0.0, "variance", 1.0, rows=rows)
    b = find_best_split(X[rows], g[rows], h[rows], task[rows], T, 1.0, 0.0, "variance", 1.0)
    assert (a is None) == (b is None)
    if a is not None:
        assert (a.feature_index, a.threshold) == (b.feature_index, b.threshold)
        assert a.score == pytest.approx(b.score, abs=1e-12)
