import io
import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from firerisk.analysis import (VIF_CAP, JointHistogram, entropy, equal_frequency_codes, mutual_information,
                               nmi_feature_scores, ols_r_squared, pearson_matrix, vif_scores, write_matrix_csv)
from firerisk.errors import EmptyHistogram, TooFewSamples


def brute_mi(counts):
    """Direct double sum over the joint table with exact rational marginals."""
    rows = [[Fraction(c) for c in r] for r in counts]
    n = sum(sum(r) for r in rows)
    px = [sum(r) / n for r in rows]
    py = [sum(rows[i][j] for i in range(len(rows))) / n for j in range(len(rows[0]))]
    total = 0.0
    for i, r in enumerate(rows):
        for j, c in enumerate(r):
            if c:
                p = c / n
                total += float(p) * math.log(float(p / (px[i] * py[j])))
    return total


def test_mi_examples():
    assert mutual_information(JointHistogram(np.outer([1, 3], [2, 5]))) <= 1e-12
    assert mutual_information(JointHistogram([[0.5, 0], [0, 0.5]])) == pytest.approx(math.log(2), abs=1e-15)
    joint = [[0.5, 0], [0.25, 0.25]]
    assert mutual_information(JointHistogram(joint)) == pytest.approx(brute_mi([[2, 0], [1, 1]]), abs=1e-15)
    with pytest.raises(EmptyHistogram):
        mutual_information(JointHistogram(np.zeros((2, 2))))


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31))
def test_mi_symmetry_and_self_information(seed):
    rng = np.random.default_rng(seed)
    c = rng.integers(0, 9, size=(rng.integers(1, 7), rng.integers(1, 7))).astype(float)
    c[0, 0] += 1
    h = JointHistogram(c)
    assert mutual_information(h) == mutual_information(JointHistogram(c.T))
    x = rng.integers(0, 5, size=40)
    assert mutual_information(JointHistogram.from_codes(x, x)) == pytest.approx(
        entropy(np.bincount(x)), abs=1e-12)


def test_entropy():
    assert entropy([1, 1]) == pytest.approx(math.log(2))
    assert entropy([5, 0]) == 0


def test_joint_histogram_marginals():
    h = JointHistogram.from_codes(np.array([0, 0, 1, 2]), np.array([1, 0, 1, 1]))
    assert h.total == 4
    assert h.marginal_x.tolist() == [2, 1, 1] and h.marginal_y.tolist() == [1, 3]


def test_pearson_examples():
    x = np.array([1.0, 2, 3, 4])
    r, names = pearson_matrix(np.column_stack([x, 2 * x + 3, [2, 1, 4, 3]]))
    assert names == ["f0", "f1", "f2"]
    assert r[0, 0] == 1 and r[0, 1] == pytest.approx(1.0, abs=1e-15)
    assert r[0, 2] == pytest.approx(0.6, abs=1e-15)
    assert np.array_equal(r, r.T)
    with pytest.raises(TooFewSamples):
        pearson_matrix(np.ones((1, 2)))


def test_pearson_constant_column_warns():
    with pytest.warns(RuntimeWarning):
        r, _ = pearson_matrix(np.column_stack([[1.0, 2, 3], [4.0, 4, 4]]))
    assert r[0, 1] == 0 and r[1, 1] == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**31), st.floats(0.01, 100), st.floats(-100, 100))
def test_pearson_affine_invariance(seed, a, b):
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(30, 3))
    r1, _ = pearson_matrix(X)
    Y = X.copy()
    Y[:, 1] = a * Y[:, 1] + b
    r2, _ = pearson_matrix(Y)
    assert np.abs(r1 - r2).max() <= 1e-12


def test_matrix_csv():
    buf = io.StringIO()
    write_matrix_csv(np.eye(2), ["a", "b"], buf, "hash=1")
    assert buf.getvalue().splitlines() == ["# hash=1", ",a,b", "a,1.0,0.0", "b,0.0,1.0"]


class _Samples:
    def __init__(self, X, y, names):
        self.X, self.labels, self.feature_names = X, y, names

    def feature_matrix(self):
        return self.X


def test_nmi_examples():
    rng = np.random.default_rng(1)
    y = rng.integers(0, 2, 200)
    X = np.column_stack([y, np.full(200, 3.0), rng.normal(size=200) + y])
    s = nmi_feature_scores(_Samples(X, y, ["copy", "const", "noisy"]), bins=8)
    assert s.metadata["raw"]["copy"] == pytest.approx(1.0, abs=1e-12)
    assert s.metadata["raw"]["const"] == 0 and s.scores["const"] == 0
    assert s.scores["copy"] == 1.0
    assert 0 < s.scores["noisy"] < 1
    assert s.ranked()[0] == ("copy", 1.0)
    with pytest.raises(TooFewSamples):
        nmi_feature_scores(_Samples(X[:5], y[:5], ["a", "b", "c"]), bins=8)


def test_nmi_categorical_uses_native_codes():
    y = np.array([0, 1] * 20)
    cat = np.array([1.0, 7.0] * 20)
    s = nmi_feature_scores(_Samples(cat[:, None], y, ["lc"]), bins=16, categorical=["lc"])
    assert s.metadata["raw"]["lc"] == pytest.approx(1.0)


def test_equal_frequency_codes():
    codes = equal_frequency_codes(np.arange(100.0), 4)
    assert np.bincount(codes).tolist() == [25, 25, 25, 25]
    assert len(set(equal_frequency_codes(np.ones(10), 4))) == 1


def oracle_r2(y, X):
    """Centered normal equations solved by Cholesky, a different algebraic route."""
    Xc = X - X.mean(axis=0)
    yc = y - y.mean()
    L = np.linalg.cholesky(Xc.T @ Xc)
    beta = np.linalg.solve(L.T, np.linalg.solve(L, Xc.T @ yc))
    resid = yc - Xc @ beta
    return 1 - (resid @ resid) / (yc @ yc)


def test_vif_matches_oracle_on_random_fixtures():
    for seed in range(25):
        rng = np.random.default_rng(seed)
        X = rng.normal(size=(20, 5))
        X[:, 4] += 0.5 * X[:, 0]
        v = vif_scores(X).scores
        for j in range(5):
            expect = 1 / (1 - oracle_r2(X[:, j], np.delete(X, j, axis=1)))
            assert v[f"f{j}"] == pytest.approx(expect, rel=1e-6)
            assert v[f"f{j}"] >= 1 - 1e-9


def test_vif_orthogonal_duplicated_and_near_collinear():
    H = np.array([[1, 1, 1, 1], [1, -1, 1, -1], [1, 1, -1, -1], [1, -1, -1, 1]], dtype=float)
    X = np.vstack([H[:, 1:], -H[:, 1:]])  # zero-mean mutually orthogonal columns
    for v in vif_scores(X).scores.values():
        assert abs(v - 1) <= 1e-9
    rng = np.random.default_rng(0)
    a = rng.normal(size=(20, 2))
    dup = vif_scores(np.column_stack([a, a[:, 0]])).scores
    assert dup["f0"] == VIF_CAP and dup["f2"] == VIF_CAP
    x3 = a[:, 0] + a[:, 1] + 0.01 * rng.normal(size=20)
    near = vif_scores(np.column_stack([a, x3])).scores
    assert near["f2"] == pytest.approx(1 / (1 - oracle_r2(x3, a)), rel=1e-6)
    with pytest.raises(TooFewSamples):
        vif_scores(np.ones((3, 3)))


def test_ols_r_squared_bounds():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(30, 2))
    coef, r2 = ols_r_squared(X @ [2.0, -1.0] + 4, X)
    assert r2 == pytest.approx(1.0) and coef == pytest.approx([4, 2, -1], abs=1e-6)
    _, r2 = ols_r_squared(rng.normal(size=30), X)
    assert 0 <= r2 <= 1


def test_diagnostics_deterministic():
    rng = np.random.default_rng(9)
    X = rng.normal(size=(50, 4))
    y = rng.integers(0, 2, 50)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        assert pearson_matrix(X)[0].tobytes() == pearson_matrix(X)[0].tobytes()
    a = nmi_feature_scores(_Samples(X, y, list("abcd")))
    b = nmi_feature_scores(_Samples(X, y, list("abcd")))
    assert a.scores == b.scores
