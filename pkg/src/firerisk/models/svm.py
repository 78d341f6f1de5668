"""Soft-margin RBF support vector machine trained by SMO, with Platt-scaled probabilities."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from ..errors import ConvergenceWarning, SingleClass
from .base import Scaler, TrainedModel, fit_scaler, xy
from .params import SVMParams

TAU = 1e-12


def rbf_kernel(A: np.ndarray, B: np.ndarray, gamma: float) -> np.ndarray:
    d2 = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(d2, 0.0))


@dataclass
class SmoResult:
    alpha: np.ndarray
    rho: float
    iterations: int
    converged: bool
    gap: float


def smo(K: np.ndarray, y: np.ndarray, c: float, tol: float = 1e-3, max_iter: int = 200_000) -> SmoResult:
    """Solve the C-SVC dual with maximal-violating-pair SMO and second-order working-set choice.

    ``y`` holds +1/-1. Stops when the KKT gap ``max_up(-yG) - min_low(-yG)`` is
    below ``tol`` or after ``max_iter`` pair updates.
    """
    n = len(y)
    alpha = np.zeros(n)
    grad = -np.ones(n)
    kd = np.diag(K).copy()
    pos = y > 0
    it = 0
    gap = math.inf
    converged = False
    while it < max_iter:
        yg = -y * grad
        up = np.where(pos, alpha < c, alpha > 0)
        low = np.where(pos, alpha > 0, alpha < c)
        yg_up = np.where(up, yg, -np.inf)
        i = int(np.argmax(yg_up))
        gmax = yg_up[i]
        gmin = np.where(low, yg, np.inf).min()
        gap = gmax - gmin
        if gap < tol:
            converged = True
            break
        ki = K[i]
        b = gmax - yg
        a = kd[i] + kd - 2.0 * ki
        a = np.where(a > 0, a, TAU)
        cand = low & (yg < gmax)
        score = np.where(cand, -(b * b) / a, np.inf)
        j = int(np.argmin(score))
        kj = K[j]
        ai_old, aj_old = alpha[i], alpha[j]
        if y[i] != y[j]:
            quad = kd[i] + kd[j] - 2.0 * ki[j]
            quad = quad if quad > 0 else TAU
            delta = (-grad[i] - grad[j]) / quad
            diff = ai_old - aj_old
            ai, aj = ai_old + delta, aj_old + delta
            if diff > 0:
                if aj < 0:
                    aj, ai = 0.0, diff
            elif ai < 0:
                ai, aj = 0.0, -diff
            if diff > 0:
                if ai > c:
                    ai, aj = c, c - diff
            elif aj > c:
                aj, ai = c, c + diff
        else:
            quad = kd[i] + kd[j] - 2.0 * ki[j]
            quad = quad if quad > 0 else TAU
            delta = (grad[i] - grad[j]) / quad
            total = ai_old + aj_old
            ai, aj = ai_old - delta, aj_old + delta
            if total > c:
                if ai > c:
                    ai, aj = c, total - c
            elif aj < 0:
                aj, ai = 0.0, total
            if total > c:
                if aj > c:
                    aj, ai = c, total - c
            elif ai < 0:
                ai, aj = 0.0, total
        alpha[i], alpha[j] = ai, aj
        # Q_it = y_i y_t K_it
        grad += y * (y[i] * (ai - ai_old) * ki + y[j] * (aj - aj_old) * kj)
        it += 1
    return SmoResult(alpha, _rho(alpha, grad, y, c), it, converged, float(gap))


def _rho(alpha, grad, y, c) -> float:
    yg = y * grad
    free = (alpha > 0) & (alpha < c)
    if free.any():
        return float(yg[free].mean())
    at_upper = alpha >= c
    ub_mask = np.where(y < 0, at_upper, ~at_upper)
    lb_mask = ~ub_mask
    ub = yg[ub_mask].min() if ub_mask.any() else math.inf
    lb = yg[lb_mask].max() if lb_mask.any() else -math.inf
    return float((ub + lb) / 2)


def platt(dec: np.ndarray, y01: np.ndarray, max_iter: int = 100) -> tuple[float, float]:
    """Fit ``P(y=1|f) = sigmoid(a f + b)`` by regularised maximum likelihood.

    Newton's method with backtracking on smoothed targets
    ``(N+ + 1)/(N+ + 2)`` and ``1/(N- + 2)``.
    """
    prior1 = float(y01.sum())
    prior0 = float(len(y01) - prior1)
    hi, lo = (prior1 + 1) / (prior1 + 2), 1 / (prior0 + 2)
    t = np.where(y01 > 0, hi, lo)
    A, B = 0.0, math.log((prior0 + 1) / (prior1 + 1))

    def objective(A, B):
        z = dec * A + B
        return float(np.where(z >= 0, t * z + np.log1p(np.exp(-np.abs(z))),
                              (t - 1) * z + np.log1p(np.exp(-np.abs(z)))).sum())

    fval = objective(A, B)
    for _ in range(max_iter):
        z = dec * A + B
        p = np.where(z >= 0, np.exp(-np.abs(z)) / (1 + np.exp(-np.abs(z))), 1 / (1 + np.exp(-np.abs(z))))
        q = 1 - p
        d2 = p * q
        h11 = 1e-12 + (dec * dec * d2).sum()
        h22 = 1e-12 + d2.sum()
        h21 = (dec * d2).sum()
        d1 = t - p
        g1 = (dec * d1).sum()
        g2 = d1.sum()
        if abs(g1) < 1e-5 and abs(g2) < 1e-5:
            break
        det = h11 * h22 - h21 * h21
        dA = -(h22 * g1 - h21 * g2) / det
        dB = -(-h21 * g1 + h11 * g2) / det
        gd = g1 * dA + g2 * dB
        step = 1.0
        while step >= 1e-10:
            nA, nB = A + step * dA, B + step * dB
            nf = objective(nA, nB)
            if nf < fval + 1e-4 * step * gd:
                A, B, fval = nA, nB, nf
                break
            step /= 2
        else:
            break
    return -A, -B


class SvmModel(TrainedModel):
    kind = "svm"

    def __init__(self, support, coef, rho, gamma, scaler: Scaler, platt_ab, feature_names, params: SVMParams,
                 seed=None, alpha=None, converged=True, iterations=0):
        super().__init__(feature_names, params, seed)
        self.support = np.asarray(support, dtype=float)   # scaled support vectors
        self.coef = np.asarray(coef, dtype=float)         # alpha_i * y_i
        self.rho = float(rho)
        self.gamma = float(gamma)
        self.scaler = scaler
        self.platt_a, self.platt_b = (float(v) for v in platt_ab)
        self.alpha = None if alpha is None else np.asarray(alpha, dtype=float)
        self.converged = converged
        self.iterations = iterations

    def decision_function(self, X) -> np.ndarray:
        Z = self.scaler.transform(self._check(X))
        out = np.empty(len(Z))
        step = max(1, 2_000_000 // max(len(self.support), 1))
        for lo in range(0, len(Z), step):
            out[lo:lo + step] = rbf_kernel(Z[lo:lo + step], self.support, self.gamma) @ self.coef - self.rho
        return out

    def _proba(self, X):
        z = self.platt_a * self.decision_function(X) + self.platt_b
        return np.where(z >= 0, 1 / (1 + np.exp(-np.abs(z))), np.exp(-np.abs(z)) / (1 + np.exp(-np.abs(z))))

    def _payload(self):
        return {"support_vectors": self.support.tolist(), "dual_coef": self.coef.tolist(), "rho": self.rho,
                "gamma": self.gamma, "scaler": self.scaler.to_dict(), "platt": [self.platt_a, self.platt_b],
                "converged": self.converged, "iterations": self.iterations}


def train_svm_rbf(data, hp: SVMParams | None = None, seed: int = 0) -> SvmModel:
    """RBF C-SVC on z-scored features; ``gamma='auto'`` means ``1 / n_features``."""
    hp = hp or SVMParams()
    X, y01, names = xy(data)
    if len(np.unique(y01)) < 2:
        raise SingleClass("SVM needs both classes")
    scaler = fit_scaler(X)
    Z = scaler.transform(X)
    gamma = 1.0 / X.shape[1] if hp.gamma == "auto" else float(hp.gamma)
    y = np.where(y01 > 0, 1.0, -1.0)
    K = rbf_kernel(Z, Z, gamma)
    res = smo(K, y, hp.c, hp.tol, hp.max_iter)
    if not res.converged:
        warnings.warn(f"SMO stopped after {res.iterations} iterations with KKT gap {res.gap:.3g}",
                      ConvergenceWarning, stacklevel=2)
    sv = res.alpha > 0
    dec = K[:, sv] @ (res.alpha[sv] * y[sv]) - res.rho
    ab = platt(dec, y01) if hp.probability else (1.0, 0.0)
    return SvmModel(Z[sv], res.alpha[sv] * y[sv], res.rho, gamma, scaler, ab, names, hp, seed,
                    alpha=res.alpha, converged=res.converged, iterations=res.iterations)
