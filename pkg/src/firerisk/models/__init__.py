"""The six classifier families, their serialisation and a uniform training entry point."""

from __future__ import annotations

import json

import numpy as np

from ..errors import InputError
from .base import FORMAT, VERSION, Scaler, TrainedModel, apply_scaler, fit_scaler
from .boosting import GbtModel, XgbModel, train_gbt, train_xgb
from .forest import DecisionTreeModel, RandomForestModel, train_decision_tree, train_random_forest
from .knn import KnnModel, train_knn
from .params import PARAMS_BY_KIND, DTParams, GBTParams, KNNParams, RFParams, SVMParams, XGBParams
from .svm import SvmModel, train_svm_rbf
from .tree import Tree

MODEL_KINDS = ("dt", "rf", "gbt", "xgb", "knn", "svm")

__all__ = [
    "MODEL_KINDS", "TrainedModel", "Scaler", "fit_scaler", "apply_scaler",
    "DTParams", "RFParams", "GBTParams", "XGBParams", "KNNParams", "SVMParams",
    "train_decision_tree", "train_random_forest", "train_gbt", "train_xgb", "train_knn", "train_svm_rbf",
    "train", "predict_proba", "feature_importance", "model_from_dict", "model_from_json",
]


def train(kind: str, data, params=None, seed: int = 0, threads: int = 1) -> TrainedModel:
    """Fit one model family; ``params`` may be a params record or a dict of overrides."""
    if kind not in PARAMS_BY_KIND:
        raise InputError(f"unknown model kind {kind!r}")
    cls = PARAMS_BY_KIND[kind]
    hp = params if isinstance(params, cls) else cls.from_dict(params)
    if kind == "dt":
        m = train_decision_tree(data, hp)
    elif kind == "rf":
        m = train_random_forest(data, hp, seed, threads)
    elif kind == "gbt":
        m = train_gbt(data, hp, seed)
    elif kind == "xgb":
        m = train_xgb(data, hp, seed)
    elif kind == "knn":
        m = train_knn(data, hp)
    else:
        m = train_svm_rbf(data, hp, seed)
    m.seed = seed
    return m


def predict_proba(model: TrainedModel, features) -> np.ndarray:
    return model.predict_proba(features)


def feature_importance(model: TrainedModel) -> dict[str, float]:
    return model.feature_importance()


def model_from_dict(d: dict) -> TrainedModel:
    if d.get("format") != FORMAT or d.get("version") != VERSION:
        raise InputError(f"not a {FORMAT} v{VERSION} document")
    kind = d["kind"]
    hp = PARAMS_BY_KIND[kind].from_dict(d["params"])
    names, seed = d["feature_names"], d.get("seed")
    if kind == "dt":
        return DecisionTreeModel(Tree.from_dict(d["tree"]), names, hp, seed)
    if kind == "rf":
        return RandomForestModel([Tree.from_dict(t) for t in d["trees"]], names, hp, seed, d.get("oob"))
    if kind in ("gbt", "xgb"):
        cls = GbtModel if kind == "gbt" else XgbModel
        return cls([Tree.from_dict(t) for t in d["trees"]], d["base_score"], names, hp, seed)
    if kind == "knn":
        return KnnModel(np.array(d["X"], dtype=float).reshape(-1, len(names)), np.array(d["y"], dtype=float),
                        Scaler.from_dict(d["scaler"]), names, hp, seed)
    return SvmModel(np.array(d["support_vectors"], dtype=float).reshape(-1, len(names)), d["dual_coef"],
                    d["rho"], d["gamma"], Scaler.from_dict(d["scaler"]), d["platt"], names, hp, seed,
                    converged=d.get("converged", True), iterations=d.get("iterations", 0))


def model_from_json(text: str) -> TrainedModel:
    return model_from_dict(json.loads(text))
