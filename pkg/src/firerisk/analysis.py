"""Feature diagnostics: Pearson correlation, mutual information / NMI and VIF."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import IO, Sequence

import numpy as np

from .errors import EmptyHistogram, InputError, TooFewSamples

VIF_CAP = 1e6
DEFAULT_BINS = 16


@dataclass(frozen=True)
class JointHistogram:
    """Contingency table of counts (or probabilities) ``n[x, y]``."""

    counts: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.counts, dtype=float)
        if c.ndim != 2:
            raise InputError("joint histogram must be 2-D")
        if (c < 0).any():
            raise InputError("negative histogram count")
        object.__setattr__(self, "counts", c)

    @classmethod
    def from_codes(cls, x: np.ndarray, y: np.ndarray) -> JointHistogram:
        xs, xi = np.unique(x, return_inverse=True)
        ys, yi = np.unique(y, return_inverse=True)
        counts = np.zeros((len(xs), len(ys)))
        np.add.at(counts, (xi.ravel(), yi.ravel()), 1.0)
        return cls(counts)

    @property
    def total(self) -> float:
        return float(self.counts.sum())

    @property
    def marginal_x(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def marginal_y(self) -> np.ndarray:
        return self.counts.sum(axis=0)


def entropy(counts) -> float:
    """Shannon entropy in nats of a count vector."""
    c = np.asarray(counts, dtype=float).ravel()
    n = c.sum()
    if n <= 0:
        raise EmptyHistogram("entropy of an empty histogram")
    p = c[c > 0] / n
    return float(-(p * np.log(p)).sum())


def mutual_information(h: JointHistogram) -> float:
    """MI in nats, with ``0 * log(0 / q)`` taken as 0. Never negative."""
    n = h.total
    if n <= 0:
        raise EmptyHistogram("mutual information of an empty histogram")
    pxy = h.counts / n
    px = pxy.sum(axis=1, keepdims=True)
    py = pxy.sum(axis=0, keepdims=True)
    nz = pxy > 0
    outer = (px * py)[nz]
    # fsum is exactly rounded, so the result does not depend on term order (MI(X,Y) == MI(Y,X))
    mi = math.fsum((pxy[nz] * np.log(pxy[nz] / outer)).tolist())
    return max(mi, 0.0)


def equal_frequency_codes(x: np.ndarray, bins: int) -> np.ndarray:
    """Bin codes with roughly equal counts per bin; equal values share a bin."""
    x = np.asarray(x, dtype=float)
    edges = np.unique(np.quantile(x, np.linspace(0, 1, bins + 1)[1:-1]))
    return np.searchsorted(edges, x, side="right")


def discretize(x: np.ndarray, bins: int, categorical: bool = False) -> np.ndarray:
    if categorical:
        return np.unique(x, return_inverse=True)[1].ravel()
    return equal_frequency_codes(x, bins)


@dataclass
class FeatureScores:
    scores: dict[str, float]
    method: str
    metadata: dict = field(default_factory=dict)

    def ranked(self) -> list[tuple[str, float]]:
        return sorted(self.scores.items(), key=lambda kv: (-kv[1], kv[0]))

    def write_csv(self, stream: IO[str], header_comment: str | None = None) -> None:
        if header_comment:
            stream.write(f"# {header_comment}\n")
        w = csv.writer(stream, lineterminator="\n")
        w.writerow(["feature", "score"])
        for name, score in self.ranked():
            w.writerow([name, repr(float(score))])


def _matrix(samples) -> tuple[np.ndarray, list[str]]:
    if hasattr(samples, "feature_matrix"):
        return samples.feature_matrix(), list(samples.feature_names)
    X = np.asarray(samples, dtype=float)
    return X, [f"f{i}" for i in range(X.shape[1])]


def pearson_matrix(samples) -> tuple[np.ndarray, list[str]]:
    """Correlation matrix of the feature columns.

    A constant column has correlation 0 with everything else (with a warning);
    the diagonal is always 1.
    """
    X, names = _matrix(samples)
    if X.shape[0] < 2:
        raise TooFewSamples("pearson needs at least 2 samples")
    Xc = X - X.mean(axis=0)
    norms = np.sqrt((Xc * Xc).sum(axis=0))
    const = norms == 0
    if const.any():
        warnings.warn(f"constant features {[n for n, c in zip(names, const) if c]}: correlation set to 0",
                      RuntimeWarning, stacklevel=2)
    safe = np.where(const, 1.0, norms)
    Z = Xc / safe
    r = np.clip(Z.T @ Z, -1.0, 1.0)
    r[const, :] = 0.0
    r[:, const] = 0.0
    r = (r + r.T) / 2
    np.fill_diagonal(r, 1.0)
    return r, names


def write_matrix_csv(matrix: np.ndarray, names: Sequence[str], stream: IO[str],
                     header_comment: str | None = None) -> None:
    if header_comment:
        stream.write(f"# {header_comment}\n")
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["", *names])
    for name, row in zip(names, matrix):
        w.writerow([name, *(repr(float(v)) for v in row)])


def nmi_feature_scores(samples, target=None, bins: int = DEFAULT_BINS,
                       categorical: Sequence[str] = ()) -> FeatureScores:
    """Normalised MI of each feature with the label, min-max rescaled to [0, 1].

    Raw score is ``MI(f, y) / sqrt(H(f) H(y))``; a constant feature scores 0.
    """
    X, names = _matrix(samples)
    y = np.asarray(samples.labels if target is None else target)
    if bins < 2:
        raise InputError("bins must be >= 2")
    if X.shape[0] < bins:
        raise TooFewSamples(f"{X.shape[0]} samples for {bins} bins")
    y_codes = np.unique(y, return_inverse=True)[1].ravel()
    hy = entropy(np.bincount(y_codes))
    raw = {}
    for j, name in enumerate(names):
        codes = discretize(X[:, j], bins, name in set(categorical))
        hf = entropy(np.bincount(codes))
        if hf == 0 or hy == 0:
            raw[name] = 0.0
            continue
        mi = mutual_information(JointHistogram.from_codes(codes, y_codes))
        raw[name] = min(1.0, mi / math.sqrt(hf * hy))
    lo, hi = min(raw.values()), max(raw.values())
    if hi > lo:
        scores = {k: (v - lo) / (hi - lo) for k, v in raw.items()}
    else:
        scores = {k: 0.0 for k in raw}
    return FeatureScores(scores, "nmi", {"binning": "equal-frequency", "bins": bins,
                                         "normalization": "sqrt(H(f)H(y)), min-max", "raw": raw})


def ols_r_squared(y: np.ndarray, X: np.ndarray, jitter: float = 1e-10) -> tuple[np.ndarray, float]:
    """Least squares with intercept via ridge-jittered normal equations."""
    A = np.column_stack([np.ones(len(y)), X])
    G = A.T @ A
    G[np.diag_indices_from(G)] += jitter
    coef = np.linalg.solve(G, A.T @ y)
    resid = y - A @ coef
    sst = float(((y - y.mean()) ** 2).sum())
    if sst == 0:
        return coef, 1.0
    r2 = 1.0 - float(resid @ resid) / sst
    return coef, min(max(r2, 0.0), 1.0)


def vif_scores(samples) -> FeatureScores:
    """Variance inflation factor ``1 / (1 - R^2)`` for every feature.

    ``R^2 >= 1 - 1e-6`` reports the cap of 1e6.
    """
    X, names = _matrix(samples)
    n, p = X.shape
    if n < p + 2:
        raise TooFewSamples(f"VIF needs at least {p + 2} samples, got {n}")
    scores = {}
    for j, name in enumerate(names):
        others = np.delete(X, j, axis=1)
        _, r2 = ols_r_squared(X[:, j], others)
        scores[name] = VIF_CAP if r2 >= 1 - 1e-6 else 1.0 / (1.0 - r2)
    return FeatureScores(scores, "vif", {"cap": VIF_CAP, "jitter": 1e-10})
