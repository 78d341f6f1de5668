"""Classification metrics, ROC/AUC and the seasonal retrain-evaluate harness."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field
from typing import Callable

import numpy as np

from .errors import EmptySeason, InputError, LengthMismatch, SingleClass
from .sampling import SplitSpec
from .temporal import Season, season_of


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def _check(labels, probabilities) -> tuple[np.ndarray, np.ndarray]:
    y = np.asarray(labels)
    p = np.asarray(probabilities, dtype=float)
    if y.shape != p.shape:
        raise LengthMismatch(f"{y.size} labels vs {p.size} probabilities")
    if y.size == 0:
        raise InputError("empty label vector")
    if not np.isin(y, (0, 1)).all():
        raise InputError("labels must be 0 or 1")
    return y.astype(np.int64), p


def confusion(labels, probabilities, threshold: float = 0.5) -> Confusion:
    """Counts at ``threshold``; a probability equal to the threshold predicts fire."""
    y, p = _check(labels, probabilities)
    pred = p >= threshold
    pos = y == 1
    return Confusion(int((pred & pos).sum()), int((pred & ~pos).sum()),
                     int((~pred & ~pos).sum()), int((~pred & pos).sum()))


@dataclass
class MetricsReport:
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    threshold: float
    per_class: dict
    support: int
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    CSV_FIELDS = ("accuracy", "precision", "recall", "f1", "auc", "threshold", "support")

    def csv_row(self, name: str = "") -> str:
        out = io.StringIO()
        csv.writer(out, lineterminator="\n").writerow([name, *(getattr(self, k) for k in self.CSV_FIELDS)])
        return out.getvalue()


def _safe_div(a: float, b: float) -> tuple[float, bool]:
    return (a / b, False) if b else (0.0, True)


def metrics(labels, probabilities, threshold: float = 0.5) -> MetricsReport:
    """Per-class precision/recall/F1 and their support-weighted averages.

    Weighted recall is the accuracy by algebra, and is computed that way. AUC is
    included when both classes are present.
    """
    y, p = _check(labels, probabilities)
    cm = confusion(y, p, threshold)
    n = cm.n
    per_class = {}
    notes = []
    # (true positives, predicted positives, support) per class
    for cls, tp, pred, sup in (("fire", cm.tp, cm.tp + cm.fp, cm.tp + cm.fn),
                               ("nonfire", cm.tn, cm.tn + cm.fn, cm.tn + cm.fp)):
        prec, z1 = _safe_div(tp, pred)
        rec, _ = _safe_div(tp, sup)
        f1, _ = _safe_div(2 * prec * rec, prec + rec)
        if z1:
            notes.append(f"precision of class {cls!r} undefined (no predictions); set to 0")
        per_class[cls] = {"precision": prec, "recall": rec, "f1": f1, "support": sup}
    w = {c: per_class[c]["support"] / n for c in per_class}
    precision = sum(w[c] * per_class[c]["precision"] for c in per_class)
    f1 = sum(w[c] * per_class[c]["f1"] for c in per_class)
    accuracy = (cm.tp + cm.tn) / n
    auc = None
    if 0 < (y == 1).sum() < n:
        auc = roc_auc(y, p).auc
    per_class["confusion"] = asdict(cm)
    return MetricsReport(accuracy, precision, accuracy, f1, auc, threshold, per_class, n, notes)


@dataclass
class RocCurve:
    fpr: np.ndarray
    tpr: np.ndarray
    thresholds: np.ndarray
    auc: float

    def to_csv(self) -> str:
        out = io.StringIO()
        w = csv.writer(out, lineterminator="\n")
        w.writerow(["fpr", "tpr"])
        for a, b in zip(self.fpr, self.tpr):
            w.writerow([repr(float(a)), repr(float(b))])
        return out.getvalue()

    def to_svg(self, size: int = 320, title: str = "") -> str:
        pad = 30
        span = size - 2 * pad
        pts = " ".join(f"{pad + a * span:.2f},{size - pad - b * span:.2f}" for a, b in zip(self.fpr, self.tpr))
        return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}">'
                f'<rect x="{pad}" y="{pad}" width="{span}" height="{span}" fill="none" stroke="#444"/>'
                f'<line x1="{pad}" y1="{size - pad}" x2="{size - pad}" y2="{pad}" stroke="#aaa" stroke-dasharray="4"/>'
                f'<polyline points="{pts}" fill="none" stroke="#c0392b" stroke-width="2"/>'
                f'<text x="{pad}" y="{pad - 8}" font-size="12">{title} AUC={self.auc:.3f}</text>'
                f'<text x="{size / 2 - 10}" y="{size - 8}" font-size="11">FPR</text>'
                f'<text x="4" y="{size / 2}" font-size="11">TPR</text></svg>\n')


def roc_auc(labels, scores) -> RocCurve:
    """ROC from a sweep over distinct scores (ties form a single step); trapezoid AUC.

    The area is accumulated in integer units and divided once, so it equals the
    Mann-Whitney statistic up to one rounding.
    """
    y, s = _check(labels, scores)
    n_pos = int((y == 1).sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise SingleClass("ROC needs both classes")
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    last = np.r_[np.flatnonzero(np.diff(s_sorted) != 0), len(s_sorted) - 1]
    tp = np.r_[0, np.cumsum(y_sorted)[last]]
    fp = np.r_[0, (last + 1) - tp[1:]]
    area2 = int(((fp[1:] - fp[:-1]) * (tp[1:] + tp[:-1])).sum())  # twice the area in count units
    auc = area2 / (2 * n_pos * n_neg)
    return RocCurve(fp / n_neg, tp / n_pos, np.r_[np.inf, s_sorted[last]], auc)


def mann_whitney_auc(labels, scores) -> float:
    """P(score_fire > score_nonfire) + 0.5 P(tie) by direct pair comparison."""
    y, s = _check(labels, scores)
    pos, neg = s[y == 1], s[y == 0]
    if len(pos) == 0 or len(neg) == 0:
        raise SingleClass("AUC needs both classes")
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() * 2 + (diff == 0).sum()) / (2 * len(pos) * len(neg)))


Trainer = Callable[[object], object]


def seasonal_eval(samples, trainer: Trainer, split=None, threshold: float = 0.5) -> dict[str, MetricsReport]:
    """Train and evaluate separately on cold (Nov-Apr) and warm (May-Oct) samples.

    ``samples`` is a feature-attached sample set with months, split into train
    and test by year according to ``split``; ``trainer(sample_set)`` returns a
    fitted model.
    """
    split = split or SplitSpec()
    train = samples.subset(np.flatnonzero(np.isin(samples.year, split.train_years)))
    test = samples.subset(np.flatnonzero(np.isin(samples.year, split.test_years)))
    return seasonal_eval_sets(train, test, trainer, threshold)


def seasonal_eval_sets(train, test, trainer: Trainer, threshold: float = 0.5) -> dict[str, MetricsReport]:
    """As :func:`seasonal_eval` for an already split train/test pair."""
    reports = {}
    for season in (Season.COLD, Season.WARM):
        parts = []
        for s in (train, test):
            if s.month is None:
                raise InputError("seasonal evaluation needs sample months")
            sel = np.flatnonzero([season_of(int(m)) is season for m in s.month])
            parts.append(s.subset(sel))
        tr, te = parts
        if len(tr) == 0 or len(te) == 0:
            raise EmptySeason(f"{season.value} season has no {'training' if len(tr) == 0 else 'test'} samples")
        model = trainer(tr)
        reports[season.value] = metrics(te.labels, model.predict_proba(te), threshold)
    return reports
