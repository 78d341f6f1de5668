"""Hyperparameter records. Defaults are the tuned values used for wildfire mapping."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from ..errors import ConfigError


@dataclass(frozen=True)
class _Params:
    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict | None):
        d = dict(d or {})
        names = {f.name for f in fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
        return cls(**d)

    def _check_counts(self, *names):
        for n in names:
            v = getattr(self, n)
            if v is not None and v < 1:
                raise ConfigError(f"{type(self).__name__}.{n} must be >= 1, got {v}")

    def _check_rates(self, *names):
        for n in names:
            v = getattr(self, n)
            if not 0 < v <= 1:
                raise ConfigError(f"{type(self).__name__}.{n} must be in (0, 1], got {v}")


@dataclass(frozen=True)
class DTParams(_Params):
    splitter: str = "best"
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_depth: int | None = None

    def __post_init__(self):
        if self.splitter != "best":
            raise ConfigError("only splitter='best' is supported")
        self._check_counts("min_samples_split", "min_samples_leaf", "max_depth")


@dataclass(frozen=True)
class RFParams(_Params):
    n_estimators: int = 100
    min_samples_split: int = 2
    min_samples_leaf: int = 1
    max_depth: int | None = None
    bootstrap: bool = True
    max_features: int | None = None  # None -> floor(sqrt(p))

    def __post_init__(self):
        self._check_counts("n_estimators", "min_samples_split", "min_samples_leaf", "max_depth", "max_features")


@dataclass(frozen=True)
class GBTParams(_Params):
    n_estimators: int = 200
    max_depth: int = 5
    learning_rate: float = 0.2

    def __post_init__(self):
        self._check_counts("n_estimators", "max_depth")
        # a zero rate is allowed: the model then stays at the class prior
        if not 0 <= self.learning_rate <= 1:
            raise ConfigError(f"GBTParams.learning_rate must be in [0, 1], got {self.learning_rate}")


@dataclass(frozen=True)
class XGBParams(_Params):
    n_estimators: int = 200
    max_depth: int = 5
    colsample_bytree: float = 0.9
    learning_rate: float = 0.2
    subsample: float = 0.8
    reg_lambda: float = 1.0
    min_child_weight: float = 0.0

    def __post_init__(self):
        self._check_counts("n_estimators", "max_depth")
        self._check_rates("colsample_bytree", "subsample")
        if not 0 <= self.learning_rate <= 1:
            raise ConfigError(f"XGBParams.learning_rate must be in [0, 1], got {self.learning_rate}")
        if self.reg_lambda < 0 or self.min_child_weight < 0:
            raise ConfigError("reg_lambda and min_child_weight must be nonnegative")


@dataclass(frozen=True)
class KNNParams(_Params):
    n_neighbors: int = 5
    weights: str = "distance"

    def __post_init__(self):
        self._check_counts("n_neighbors")
        if self.weights not in ("distance", "uniform"):
            raise ConfigError("weights must be 'distance' or 'uniform'")


@dataclass(frozen=True)
class SVMParams(_Params):
    c: float = 1000.0
    gamma: str | float = "auto"
    kernel: str = "rbf"
    probability: bool = True
    tol: float = 1e-3
    max_iter: int = 200_000

    def __post_init__(self):
        if not self.c > 0:
            raise ConfigError("SVM c must be positive")
        if self.kernel != "rbf":
            raise ConfigError("only the rbf kernel is supported")
        if self.gamma != "auto" and not (isinstance(self.gamma, (int, float)) and self.gamma > 0):
            raise ConfigError("gamma must be 'auto' or a positive number")


PARAMS_BY_KIND = {
    "dt": DTParams,
    "rf": RFParams,
    "gbt": GBTParams,
    "xgb": XGBParams,
    "knn": KNNParams,
    "svm": SVMParams,
}
