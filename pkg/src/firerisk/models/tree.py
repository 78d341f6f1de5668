"""Array-backed binary trees and the exhaustive split search shared by every tree learner.

A split on feature ``f`` at threshold ``t`` sends ``x[f] <= t`` left. Candidate
thresholds are midpoints between consecutive distinct sorted values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

# gains at or below this are treated as "no improvement" (float noise)
MIN_GAIN = 1e-12


@dataclass
class Tree:
    feature: np.ndarray    # -1 at leaves
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray      # leaf output
    weight: np.ndarray     # samples reaching the node (bootstrap multiplicity counted)
    gain: np.ndarray       # criterion improvement of the split, 0 at leaves

    @property
    def n_nodes(self) -> int:
        return len(self.feature)

    @property
    def n_splits(self) -> int:
        return int((self.feature >= 0).sum())

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by every row of ``X``."""
        node = np.zeros(len(X), dtype=np.int64)
        rows = np.arange(len(X))
        while True:
            f = self.feature[node]
            inner = f >= 0
            if not inner.any():
                return node
            r = rows[inner]
            n = node[inner]
            go_left = X[r, f[inner]] <= self.threshold[n]
            node[inner] = np.where(go_left, self.left[n], self.right[n])

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.value[self.apply(X)]

    def structure(self) -> list[tuple]:
        """Preorder ``(feature, threshold)`` list; leaves appear as ``(-1, None)``."""
        out = []

        def walk(i):
            if self.feature[i] < 0:
                out.append((-1, None))
                return
            out.append((int(self.feature[i]), float(self.threshold[i])))
            walk(self.left[i])
            walk(self.right[i])

        walk(0)
        return out

    def importance(self, n_features: int, weighted: bool) -> np.ndarray:
        """Per-feature sum of split gains, optionally weighted by node sample fraction."""
        imp = np.zeros(n_features)
        inner = self.feature >= 0
        g = self.gain[inner]
        if weighted:
            g = g * self.weight[inner] / self.weight[0]
        np.add.at(imp, self.feature[inner], g)
        return imp

    def to_dict(self, i: int = 0) -> dict:
        if self.feature[i] < 0:
            return {"value": float(self.value[i]), "weight": float(self.weight[i])}
        return {"feature": int(self.feature[i]), "threshold": float(self.threshold[i]),
                "gain": float(self.gain[i]), "weight": float(self.weight[i]),
                "value": float(self.value[i]),
                "left": self.to_dict(int(self.left[i])), "right": self.to_dict(int(self.right[i]))}

    @classmethod
    def from_dict(cls, d: dict) -> Tree:
        b = _Builder()

        def walk(node):
            i = b.add(node.get("value", 0.0), node.get("weight", 0.0))
            if "feature" in node:
                left = walk(node["left"])
                right = walk(node["right"])
                b.set_split(i, node["feature"], node["threshold"], left, right, node.get("gain", 0.0))
            return i

        walk(d)
        return b.build()


class _Builder:
    def __init__(self):
        self.feature, self.threshold, self.left, self.right = [], [], [], []
        self.value, self.weight, self.gain = [], [], []

    def add(self, value: float, weight: float) -> int:
        self.feature.append(-1)
        self.threshold.append(0.0)
        self.left.append(-1)
        self.right.append(-1)
        self.value.append(float(value))
        self.weight.append(float(weight))
        self.gain.append(0.0)
        return len(self.feature) - 1

    def set_split(self, i, feature, threshold, left, right, gain):
        self.feature[i] = int(feature)
        self.threshold[i] = float(threshold)
        self.left[i] = int(left)
        self.right[i] = int(right)
        self.gain[i] = float(gain)

    def build(self) -> Tree:
        return Tree(np.array(self.feature, dtype=np.int64), np.array(self.threshold, dtype=float),
                    np.array(self.left, dtype=np.int64), np.array(self.right, dtype=np.int64),
                    np.array(self.value, dtype=float), np.array(self.weight, dtype=float),
                    np.array(self.gain, dtype=float))


# gain_fn(left_sums, totals) -> gains, where sums are cumulative stat columns
GainFn = Callable[[np.ndarray, np.ndarray], np.ndarray]


def gini_gain(left: np.ndarray, total: np.ndarray) -> np.ndarray:
    """Decrease in Gini impurity; stats columns are (count, positives)."""
    n, pos = total[0], total[1]
    nl, pl = left[:, 0], left[:, 1]
    nr, pr = n - nl, pos - pl
    parent = 1.0 - (pos * pos + (n - pos) ** 2) / (n * n)
    child = (nl - (pl * pl + (nl - pl) ** 2) / nl + nr - (pr * pr + (nr - pr) ** 2) / nr) / n
    return parent - child


def squared_error_gain(left: np.ndarray, total: np.ndarray) -> np.ndarray:
    """Reduction in squared error of a least-squares fit to residuals.

    Stats columns are (count, sum of gradients); residuals are negative gradients.
    """
    n, g = total[0], total[1]
    nl, gl = left[:, 0], left[:, 1]
    nr, gr = n - nl, g - gl
    return gl * gl / nl + gr * gr / nr - g * g / n


def newton_gain(lam: float) -> GainFn:
    """Second-order gain ``1/2 [GL^2/(HL+l) + GR^2/(HR+l) - G^2/(H+l)]``; stats (count, G, H)."""
    def gain(left: np.ndarray, total: np.ndarray) -> np.ndarray:
        g, h = total[1], total[2]
        gl, hl = left[:, 1], left[:, 2]
        gr, hr = g - gl, h - hl
        with np.errstate(divide="ignore", invalid="ignore"):
            out = 0.5 * (gl * gl / (hl + lam) + gr * gr / (hr + lam) - g * g / (h + lam))
        return np.where(np.isfinite(out), out, -np.inf)
    return gain


def best_split(X: np.ndarray, idx: np.ndarray, stats: np.ndarray, features, gain_fn: GainFn,
               min_leaf: float = 1.0, weight_col: int = 0):
    """Exhaustive best split of the rows ``idx`` over ``features``.

    Returns ``(gain, feature, threshold, left_mask)`` or None when no split
    improves by more than :data:`MIN_GAIN`. Ties keep the first feature in
    ``features`` order and the lowest threshold. Both children must carry at
    least ``min_leaf`` in stat column ``weight_col``.
    """
    node_stats = stats[idx]
    total = node_stats.sum(axis=0)
    best = None
    best_gain = MIN_GAIN
    for f in features:
        xs = X[idx, f]
        order = np.argsort(xs, kind="stable")
        xs_s = xs[order]
        cum = np.cumsum(node_stats[order], axis=0)
        pos = np.flatnonzero(xs_s[:-1] < xs_s[1:])
        if len(pos) == 0:
            continue
        wl = cum[pos, weight_col]
        pos = pos[(wl >= min_leaf) & (total[weight_col] - wl >= min_leaf)]
        if len(pos) == 0:
            continue
        gains = gain_fn(cum[pos], total)
        j = int(np.argmax(gains))
        if gains[j] > best_gain:
            best_gain = float(gains[j])
            lo, hi = xs_s[pos[j]], xs_s[pos[j] + 1]
            thr = lo + (hi - lo) / 2.0
            if not lo <= thr < hi:
                thr = lo
            best = (f, thr)
    if best is None:
        return None
    f, thr = best
    return best_gain, f, thr, X[idx, f] <= thr


def grow(X: np.ndarray, idx: np.ndarray, stats: np.ndarray, gain_fn: GainFn, leaf_fn,
         *, max_depth: int | None = None, min_samples_split: float = 2, min_samples_leaf: float = 1,
         feature_sampler=None, stop_fn=None, weight_col: int = 0) -> Tree:
    """Depth-first tree growth.

    ``leaf_fn(node_stat_sums)`` gives a node's output value; ``feature_sampler()``
    returns the candidate features for each split; ``stop_fn(node_stat_sums)``
    may declare a node terminal (e.g. pure).
    """
    b = _Builder()
    all_features = np.arange(X.shape[1])
    root = b.add(leaf_fn(stats[idx].sum(axis=0)), stats[idx, 0].sum())
    todo = [(root, idx, 0)]
    while todo:
        node, rows, depth = todo.pop()
        sums = stats[rows].sum(axis=0)
        if (max_depth is not None and depth >= max_depth) or sums[0] < min_samples_split:
            continue
        if stop_fn is not None and stop_fn(sums):
            continue
        feats = all_features if feature_sampler is None else feature_sampler()
        found = best_split(X, rows, stats, feats, gain_fn, min_samples_leaf, weight_col)
        if found is None:
            continue
        gain, f, thr, mask = found
        lrows, rrows = rows[mask], rows[~mask]
        left = b.add(leaf_fn(stats[lrows].sum(axis=0)), stats[lrows, 0].sum())
        right = b.add(leaf_fn(stats[rrows].sum(axis=0)), stats[rrows, 0].sum())
        b.set_split(node, f, thr, left, right, gain)
        # right pushed first so the left subtree is expanded first
        todo.append((right, rrows, depth + 1))
        todo.append((left, lrows, depth + 1))
    return b.build()
