"""Gradient-boosted trees on the logistic loss: first-order (GBT) and second-order (XGB-style)."""

from __future__ import annotations

import numpy as np

from .base import TrainedModel, normalized, xy
from .params import GBTParams, XGBParams
from .tree import Tree, grow, newton_gain, squared_error_gain

PRIOR_CLAMP = 1e-6


def sigmoid(z):
    z = np.asarray(z, dtype=float)
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def logit(p: float) -> float:
    return float(np.log(p / (1.0 - p)))


def base_score(y: np.ndarray) -> float:
    """Log-odds of the class prior, clamped away from 0 and 1."""
    prior = float(np.clip(y.mean(), PRIOR_CLAMP, 1.0 - PRIOR_CLAMP))
    return logit(prior)


def logistic_loss(y: np.ndarray, f: np.ndarray) -> np.ndarray:
    """Per-sample log-loss as a function of the raw score ``f``."""
    return np.logaddexp(0.0, f) - y * f


def gradients(y: np.ndarray, f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second derivative of :func:`logistic_loss` with respect to ``f``."""
    p = sigmoid(f)
    return p - y, p * (1.0 - p)


class BoostedModel(TrainedModel):
    def __init__(self, trees: list[Tree], base: float, feature_names, params, seed=None):
        super().__init__(feature_names, params, seed)
        self.trees = trees
        self.base_score = base

    def decision_function(self, X) -> np.ndarray:
        X = self._check(X)
        f = np.full(len(X), self.base_score)
        lr = self.params.learning_rate
        for t in self.trees:
            f += lr * t.predict(X)
        return f

    def _proba(self, X):
        return sigmoid(self.decision_function(X))

    def feature_importance(self):
        p = len(self.feature_names)
        imp = np.mean([t.importance(p, weighted=False) for t in self.trees], axis=0) if self.trees else np.zeros(p)
        return normalized(imp, self.feature_names)

    def _payload(self):
        return {"base_score": self.base_score, "trees": [t.to_dict() for t in self.trees]}


class GbtModel(BoostedModel):
    kind = "gbt"


class XgbModel(BoostedModel):
    kind = "xgb"

    @property
    def reg_lambda(self) -> float:
        return self.params.reg_lambda


def _newton_leaf(lam: float):
    def leaf(sums):
        g, h = sums[1], sums[2]
        d = h + lam
        return float(-g / d) if abs(d) > 1e-150 else 0.0
    return leaf


def train_gbt(data, hp: GBTParams | None = None, seed: int = 0) -> GbtModel:
    """Friedman-style boosting: least-squares trees on residuals, Newton-step leaves."""
    hp = hp or GBTParams()
    X, y, names = xy(data)
    base = base_score(y)
    f = np.full(len(y), base)
    idx = np.arange(len(y))
    leaf = _newton_leaf(0.0)
    trees = []
    for _ in range(hp.n_estimators):
        g, h = gradients(y, f)
        stats = np.column_stack([np.ones(len(y)), g, h])
        tree = grow(X, idx, stats, squared_error_gain, leaf, max_depth=hp.max_depth)
        trees.append(tree)
        f += hp.learning_rate * tree.predict(X)
    return GbtModel(trees, base, names, hp, seed)


def train_xgb(data, hp: XGBParams | None = None, seed: int = 0) -> XgbModel:
    """Second-order boosting with L2 leaf penalty and per-tree row/column subsampling."""
    hp = hp or XGBParams()
    X, y, names = xy(data)
    n, p = X.shape
    rng = np.random.default_rng(seed)
    base = base_score(y)
    f = np.full(n, base)
    gain = newton_gain(hp.reg_lambda)
    leaf = _newton_leaf(hp.reg_lambda)
    n_rows = max(1, int(np.floor(hp.subsample * n)))
    n_cols = max(1, int(np.floor(hp.colsample_bytree * p)))
    trees = []
    for _ in range(hp.n_estimators):
        rows = np.sort(rng.choice(n, size=n_rows, replace=False)) if n_rows < n else np.arange(n)
        cols = np.sort(rng.choice(p, size=n_cols, replace=False)) if n_cols < p else None
        g, h = gradients(y, f)
        # hessian first so min_child_weight applies to it
        stats = np.column_stack([h, g, h, np.ones(n)])
        tree = grow(X, rows, stats, gain, leaf, max_depth=hp.max_depth, min_samples_split=0,
                    min_samples_leaf=hp.min_child_weight,
                    feature_sampler=None if cols is None else (lambda c=cols: c), weight_col=0)
        trees.append(tree)
        f += hp.learning_rate * tree.predict(X)
    return XgbModel(trees, base, names, hp, seed)
