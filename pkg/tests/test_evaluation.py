import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from firerisk.errors import EmptySeason, InputError, LengthMismatch, SingleClass
from firerisk.evaluation import confusion, mann_whitney_auc, metrics, roc_auc, seasonal_eval, seasonal_eval_sets
from firerisk.models import train
from firerisk.sampling import SampleSet, SplitSpec


def test_confusion_examples():
    c = confusion([1, 0], [0.9, 0.1])
    assert (c.tp, c.tn, c.fp, c.fn) == (1, 1, 0, 0)
    assert confusion([1], [0.5]).tp == 1
    assert confusion([1], [0.2]).fn == 1
    with pytest.raises(LengthMismatch):
        confusion([1, 0], [0.3])
    with pytest.raises(InputError):
        confusion([], [])
    with pytest.raises(InputError):
        confusion([2], [0.3])


def test_metrics_examples():
    r = metrics([1, 0, 1, 0], [0.9, 0.1, 0.7, 0.2])
    assert (r.accuracy, r.precision, r.recall, r.f1, r.auc) == (1.0, 1.0, 1.0, 1.0, 1.0)
    r = metrics([1, 1, 0, 0], [0.9, 0.4, 0.6, 0.1])
    # each class: one of two predicted right, one of two predictions right
    assert r.accuracy == 0.5 and r.recall == 0.5
    assert r.per_class["fire"] == {"precision": 0.5, "recall": 0.5, "f1": 0.5, "support": 2}
    assert r.precision == pytest.approx(0.5) and r.f1 == pytest.approx(0.5)


def test_metrics_hand_weighted_average():
    y = [1, 1, 1, 0]
    p = [0.9, 0.8, 0.1, 0.7]
    r = metrics(y, p)
    # fire: tp 2, pred 3, support 3; nonfire: tn 0, pred 1, support 1
    prec_fire, prec_non = 2 / 3, 0.0
    f1_fire = 2 * prec_fire * (2 / 3) / (prec_fire + 2 / 3)
    assert r.precision == pytest.approx(0.75 * prec_fire + 0.25 * prec_non)
    assert r.f1 == pytest.approx(0.75 * f1_fire)
    assert r.recall == r.accuracy == 0.5


def test_undefined_precision_warns():
    r = metrics([1, 0, 1], [0.9, 0.8, 0.7])
    assert r.per_class["nonfire"]["precision"] == 0.0
    assert any("nonfire" in w for w in r.warnings)
    assert metrics([1, 1], [0.9, 0.8]).auc is None


def test_weighted_recall_equals_accuracy_exactly():
    rng = np.random.default_rng(0)
    for _ in range(1000):
        n = int(rng.integers(1, 40))
        y = rng.integers(0, 2, n)
        p = rng.random(n)
        r = metrics(y, p)
        assert r.recall == r.accuracy


def test_auc_examples():
    assert roc_auc([0, 0, 1, 1], [0.1, 0.4, 0.35, 0.8]).auc == 0.75
    assert roc_auc([0, 0, 1, 1], [0.1, 0.2, 0.3, 0.4]).auc == 1.0
    assert roc_auc([1, 1, 0, 0], [0.1, 0.2, 0.3, 0.4]).auc == 0.0
    assert roc_auc([0, 1], [0.5, 0.5]).auc == 0.5
    with pytest.raises(SingleClass):
        roc_auc([1, 1], [0.1, 0.2])


def test_roc_curve_shape():
    c = roc_auc([0, 0, 1, 1, 1], [0.1, 0.5, 0.5, 0.8, 0.9])
    assert c.fpr[0] == 0 and c.tpr[0] == 0 and c.fpr[-1] == 1 and c.tpr[-1] == 1
    assert (np.diff(c.fpr) >= 0).all() and (np.diff(c.tpr) >= 0).all()
    assert len(c.fpr) == 5  # origin plus four distinct scores
    assert c.to_csv().startswith("fpr,tpr\n")
    assert "<svg" in c.to_svg(title="rf")


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 50), st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_auc_matches_mann_whitney(n, seed, levels):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    y[0], y[1] = 0, 1
    s = rng.integers(0, levels, n) / levels  # ties on purpose
    assert abs(roc_auc(y, s).auc - mann_whitney_auc(y, s)) <= 1e-12


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 40), st.integers(0, 2**32 - 1))
def test_label_flip_symmetry(n, seed):
    rng = np.random.default_rng(seed)
    y = rng.integers(0, 2, n)
    y[0], y[1] = 0, 1
    s = rng.integers(0, 8, n) / 8
    a = metrics(y, s)
    # flipping classes and scores swaps >= for <=, so compare at a threshold off the grid
    b = metrics(1 - y, 1 - s, threshold=1 - 0.5625)
    c = metrics(y, s, threshold=0.5625)
    assert b.accuracy == c.accuracy
    assert abs(b.auc - a.auc) <= 1e-12


def _seasonal_set(seed=0, cold_sep=3.0, warm_sep=0.5, all_july=False):
    rng = np.random.default_rng(seed)
    n = 400
    year = rng.choice(np.arange(2015, 2023), n)
    label = rng.integers(0, 2, n)
    month = np.full(n, 7) if all_july else rng.choice([1, 2, 7, 8], n)
    cold = np.isin(month, [1, 2])
    sep = np.where(cold, cold_sep, warm_sep)
    X = rng.normal(size=(n, 2))
    X[:, 0] += sep * (2 * label - 1) / 2
    return SampleSet(rng.random(n), rng.random(n), year, label, month=month, feature_names=["a", "b"],
                     features=X)


def _rf(s):
    return train("rf", s, {"n_estimators": 20}, seed=1)


def test_seasonal_eval_direction_and_errors():
    rep = seasonal_eval(_seasonal_set(), _rf, SplitSpec())
    assert set(rep) == {"cold", "warm"}
    assert rep["cold"].accuracy > rep["warm"].accuracy
    with pytest.raises(EmptySeason):
        seasonal_eval(_seasonal_set(all_july=True), _rf)


def test_seasonal_identical_data_identical_reports():
    s = _seasonal_set(1, cold_sep=2, warm_sep=2)
    months = s.month.copy()
    s.month = np.where(np.isin(months, [1, 2]), 1, 7)
    cold = s.subset(np.flatnonzero(s.month == 1))
    twin = SampleSet(np.r_[cold.x, cold.x], np.r_[cold.y, cold.y], np.r_[cold.year, cold.year],
                     np.r_[cold.label, cold.label], month=np.r_[np.full(len(cold), 1), np.full(len(cold), 7)],
                     feature_names=cold.feature_names, features=np.vstack([cold.features, cold.features]))
    rep = seasonal_eval(twin, _rf)
    assert rep["cold"].to_dict() == rep["warm"].to_dict()


def test_seasonal_needs_months():
    s = _seasonal_set()
    s.month = None
    with pytest.raises(InputError):
        seasonal_eval_sets(s, s, _rf)
