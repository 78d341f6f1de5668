from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyData, FeatureMismatch, InputError, NotSupported, TooFewSamples

FORMAT = "firerisk-model"
VERSION = 1


def xy(data) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Unpack a SampleSet or an ``(X, y)`` pair."""
    if hasattr(data, "feature_matrix"):
        X, y, names = data.feature_matrix(), data.labels, list(data.feature_names)
    else:
        X, y = data
        X = np.asarray(X, dtype=float)
        names = [f"f{i}" for i in range(X.shape[1])]
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or len(X) != len(y):
        raise InputError("features must be (n, p) with one label per row")
    if len(X) == 0 or X.shape[1] == 0:
        raise EmptyData("no samples or no features")
    if not np.isin(y, (0.0, 1.0)).all():
        raise InputError("labels must be 0 or 1")
    return X, y, names


@dataclass
class Scaler:
    """Z-score with population standard deviation; constant columns map to 0."""

    mean: np.ndarray
    scale: np.ndarray

    def transform(self, X: np.ndarray) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = (X - self.mean) / np.where(self.scale > 0, self.scale, 1.0)
        out[:, self.scale == 0] = 0.0
        return out

    def to_dict(self) -> dict:
        return {"mean": self.mean.tolist(), "scale": self.scale.tolist()}

    @classmethod
    def from_dict(cls, d: dict) -> Scaler:
        return cls(np.array(d["mean"], dtype=float), np.array(d["scale"], dtype=float))


def fit_scaler(train) -> Scaler:
    X = train.feature_matrix() if hasattr(train, "feature_matrix") else np.asarray(train, dtype=float)
    if len(X) < 2:
        raise TooFewSamples("scaler needs at least 2 samples")
    return Scaler(X.mean(axis=0), X.std(axis=0))


def apply_scaler(scaler: Scaler, features) -> np.ndarray:
    return scaler.transform(features)


class TrainedModel:
    """Common surface of every fitted classifier."""

    kind: str = ""

    def __init__(self, feature_names, params, seed: int | None = None):
        self.feature_names = list(feature_names)
        self.params = params
        self.seed = seed

    def _check(self, X) -> np.ndarray:
        if hasattr(X, "feature_matrix"):
            if list(X.feature_names) != self.feature_names:
                raise FeatureMismatch(f"expected features {self.feature_names}, got {list(X.feature_names)}")
            X = X.feature_matrix()
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.shape[1] != len(self.feature_names):
            raise FeatureMismatch(f"expected {len(self.feature_names)} features, got {X.shape[1]}")
        return X

    def predict_proba(self, X) -> np.ndarray:
        """Fire probability for each row, always within [0, 1]."""
        return np.clip(self._proba(self._check(X)), 0.0, 1.0)

    def predict(self, X, threshold: float = 0.5) -> np.ndarray:
        return (self.predict_proba(X) >= threshold).astype(np.int64)

    def feature_importance(self) -> dict[str, float]:
        raise NotSupported(f"{self.kind} has no split-based feature importance")

    def _proba(self, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def _payload(self) -> dict:
        raise NotImplementedError

    def to_dict(self) -> dict:
        return {"format": FORMAT, "version": VERSION, "kind": self.kind, "seed": self.seed,
                "feature_names": self.feature_names, "params": self.params.to_dict(),
                **self._payload()}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)


def normalized(imp: np.ndarray, names) -> dict[str, float]:
    total = imp.sum()
    if total > 0:
        imp = imp / total
    return {n: float(v) for n, v in zip(names, imp)}
