"""CART decision tree (Gini) and random forest classifiers."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from ..errors import EmptyData
from .base import TrainedModel, normalized, xy
from .params import DTParams, RFParams
from .tree import Tree, gini_gain, grow


def _leaf_prob(sums: np.ndarray) -> float:
    return float(sums[1] / sums[0]) if sums[0] > 0 else 0.0


def _pure(sums: np.ndarray) -> bool:
    return sums[1] == 0 or sums[1] == sums[0]


def fit_cart(X: np.ndarray, y: np.ndarray, idx: np.ndarray | None = None, *, min_samples_split=2,
             min_samples_leaf=1, max_depth=None, feature_sampler=None) -> Tree:
    """Grow a Gini tree on rows ``idx`` (repeats allowed, as in a bootstrap sample)."""
    if idx is None:
        idx = np.arange(len(y))
    stats = np.column_stack([np.ones(len(y)), y])
    return grow(X, idx, stats, gini_gain, _leaf_prob, max_depth=max_depth,
                min_samples_split=min_samples_split, min_samples_leaf=min_samples_leaf,
                feature_sampler=feature_sampler, stop_fn=_pure)


class DecisionTreeModel(TrainedModel):
    kind = "dt"

    def __init__(self, tree: Tree, feature_names, params: DTParams, seed=None):
        super().__init__(feature_names, params, seed)
        self.tree = tree

    def _proba(self, X):
        return self.tree.predict(X)

    def feature_importance(self):
        return normalized(self.tree.importance(len(self.feature_names), weighted=True), self.feature_names)

    def _payload(self):
        return {"tree": self.tree.to_dict()}


class RandomForestModel(TrainedModel):
    kind = "rf"

    def __init__(self, trees: list[Tree], feature_names, params: RFParams, seed=None, oob: dict | None = None):
        super().__init__(feature_names, params, seed)
        self.trees = trees
        self.oob = oob or {}

    def tree_probas(self, X) -> np.ndarray:
        X = self._check(X)
        return np.stack([t.predict(X) for t in self.trees])

    def _proba(self, X):
        return self.tree_probas(X).mean(axis=0)

    def feature_importance(self):
        p = len(self.feature_names)
        imp = np.mean([t.importance(p, weighted=True) for t in self.trees], axis=0)
        return normalized(imp, self.feature_names)

    def _payload(self):
        return {"trees": [t.to_dict() for t in self.trees], "oob": self.oob}


def train_decision_tree(data, hp: DTParams | None = None) -> DecisionTreeModel:
    hp = hp or DTParams()
    X, y, names = xy(data)
    if len(y) < 1:
        raise EmptyData("decision tree needs samples")
    tree = fit_cart(X, y, min_samples_split=hp.min_samples_split, min_samples_leaf=hp.min_samples_leaf,
                    max_depth=hp.max_depth)
    return DecisionTreeModel(tree, names, hp)


def _fit_member(X, y, hp: RFParams, mtry: int, seed: int):
    rng = np.random.default_rng(seed)
    n, p = X.shape
    idx = rng.integers(0, n, size=n) if hp.bootstrap else np.arange(n)
    if mtry >= p:
        sampler = None
    else:
        def sampler():
            return np.sort(rng.choice(p, size=mtry, replace=False))
    tree = fit_cart(X, y, idx, min_samples_split=hp.min_samples_split,
                    min_samples_leaf=hp.min_samples_leaf, max_depth=hp.max_depth, feature_sampler=sampler)
    in_bag = np.zeros(n, dtype=bool)
    in_bag[idx] = True
    return tree, ~in_bag


def train_random_forest(data, hp: RFParams | None = None, seed: int = 0, threads: int = 1) -> RandomForestModel:
    """Bagged Gini trees with per-split feature subsampling; probability is the tree mean.

    Each tree draws from its own child seed, so ``threads`` never changes the result.
    """
    hp = hp or RFParams()
    X, y, names = xy(data)
    p = X.shape[1]
    mtry = hp.max_features or max(1, int(math.floor(math.sqrt(p))))
    mtry = min(mtry, p)
    seeds = [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(hp.n_estimators)]
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            fitted = list(pool.map(lambda s: _fit_member(X, y, hp, mtry, s), seeds))
    else:
        fitted = [_fit_member(X, y, hp, mtry, s) for s in seeds]
    trees = [t for t, _ in fitted]
    oob = {}
    if hp.bootstrap:
        votes = np.zeros(len(y))
        counts = np.zeros(len(y))
        for tree, out in fitted:
            if out.any():
                votes[out] += tree.predict(X[out])
                counts[out] += 1
        seen = counts > 0
        if seen.any():
            pred = (votes[seen] / counts[seen]) >= 0.5
            oob = {"accuracy": float((pred == (y[seen] == 1)).mean()), "n_scored": int(seen.sum())}
    return RandomForestModel(trees, names, hp, seed, oob)
