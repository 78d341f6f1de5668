"""Distance-weighted k-nearest-neighbour classifier on z-scored features."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from ..errors import TooFewSamples
from .base import Scaler, TrainedModel, fit_scaler, xy
from .params import KNNParams


class KnnModel(TrainedModel):
    kind = "knn"

    def __init__(self, X_scaled, y, scaler: Scaler, feature_names, params: KNNParams, seed=None):
        super().__init__(feature_names, params, seed)
        self.X = np.asarray(X_scaled, dtype=float)
        self.y = np.asarray(y, dtype=float)
        self.scaler = scaler
        self._index = cKDTree(self.X)

    def neighbours(self, X) -> tuple[np.ndarray, np.ndarray]:
        k = self.params.n_neighbors
        d, i = self._index.query(self.scaler.transform(X), k=k)
        return d.reshape(len(X), k), i.reshape(len(X), k)

    def _proba(self, X):
        d, i = self.neighbours(X)
        return vote(d, self.y[i], self.params.weights)

    def _payload(self):
        return {"scaler": self.scaler.to_dict(), "X": self.X.tolist(), "y": self.y.tolist()}


def vote(dist: np.ndarray, labels: np.ndarray, weights: str = "distance") -> np.ndarray:
    """Neighbour vote per row.

    With distance weights each neighbour counts ``1/d``; rows with an exact
    match (``d == 0``) use only the exact matches, equally weighted.
    """
    if weights == "uniform":
        return labels.mean(axis=1)
    exact = dist == 0
    with np.errstate(divide="ignore"):
        w = np.where(exact.any(axis=1, keepdims=True), exact.astype(float), 1.0 / dist)
    return (w * labels).sum(axis=1) / w.sum(axis=1)


def train_knn(data, hp: KNNParams | None = None) -> KnnModel:
    hp = hp or KNNParams()
    X, y, names = xy(data)
    if len(y) < hp.n_neighbors:
        raise TooFewSamples(f"{len(y)} samples for k={hp.n_neighbors}")
    scaler = fit_scaler(X)
    return KnnModel(scaler.transform(X), y, scaler, names, hp)
