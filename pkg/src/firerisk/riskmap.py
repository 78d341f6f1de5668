"""Wall-to-wall probability prediction, five-class risk quantisation and map rendering."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .errors import FeatureMismatch, InputError, InvalidClassValue, TooFewCells
from .raster import Grid
from .temporal import FeatureResolver, YearMode

CLASS_NAMES = ("very low", "low", "moderate", "high", "very high")
# blue -> cyan -> yellow -> orange -> red
DEFAULT_PALETTE = ((0, 0, 255), (0, 255, 255), (255, 255, 0), (255, 165, 0), (255, 0, 0))
NODATA_RGB = (255, 255, 255)
CLASS_NODATA = 0.0


@dataclass
class RiskMap:
    probability: Grid
    classes: Grid
    breaks: list[float]
    palette: tuple = DEFAULT_PALETTE

    def histogram(self) -> dict[str, int]:
        v = self.classes.values[self.classes.valid]
        return {name: int((v == i + 1).sum()) for i, name in enumerate(CLASS_NAMES)}

    def sidecar_json(self, **extra) -> str:
        return json.dumps({"breaks": self.breaks, "histogram": self.histogram(),
                           "class_names": list(CLASS_NAMES), **extra}, indent=2, sort_keys=True)


def predict_grid(model, stack, year_mode: YearMode | str = YearMode.PER_YEAR_ANOMALY, year: int | None = None,
                 chunk: int = 50_000) -> Grid:
    """Fire probability for every cell; cells with any nodata feature are nodata.

    ``stack`` may also be a prepared :class:`FeatureResolver`.
    """
    resolver = stack if isinstance(stack, FeatureResolver) else FeatureResolver(stack, year_mode)
    stack = resolver.stack
    if list(stack.names) != list(model.feature_names):
        raise FeatureMismatch(f"stack bands {stack.names} do not match model features {model.feature_names}")
    grids = resolver.year_grids(year)
    h, w = stack.shape
    X = np.stack([g.values.ravel() for g in grids], axis=1)
    ok = np.ones(h * w, dtype=bool)
    for j, g in enumerate(grids):
        ok &= X[:, j] != g.nodata
    out = np.full(h * w, np.nan)
    rows = np.flatnonzero(ok)
    for lo in range(0, len(rows), chunk):
        sel = rows[lo:lo + chunk]
        out[sel] = model.predict_proba(X[sel])
    return grids[0].with_values(out.reshape(h, w))


def quantile_breaks(values: np.ndarray, n_classes: int = 5) -> list[float]:
    qs = np.quantile(values, np.arange(1, n_classes) / n_classes)
    # duplicates collapse upward via the (lo, hi] interval rule; keep monotone
    return [float(v) for v in np.maximum.accumulate(qs)]


def jenks_breaks(values: np.ndarray, n_classes: int = 5, max_points: int = 2000) -> list[float]:
    """Fisher-Jenks natural breaks (exact dynamic programme) on an evenly ranked subsample."""
    v = np.sort(np.asarray(values, dtype=float))
    if len(v) > max_points:
        v = v[np.linspace(0, len(v) - 1, max_points).round().astype(int)]
    n = len(v)
    cs = np.r_[0.0, np.cumsum(v)]
    cs2 = np.r_[0.0, np.cumsum(v * v)]

    def ssd(i, j):  # squared deviation of v[i:j]
        s = cs[j] - cs[i]
        return cs2[j] - cs2[i] - s * s / (j - i)

    cost = np.full((n_classes + 1, n + 1), np.inf)
    arg = np.zeros((n_classes + 1, n + 1), dtype=np.int64)
    cost[0, 0] = 0.0
    for k in range(1, n_classes + 1):
        for j in range(k, n + 1):
            i = np.arange(k - 1, j)
            s = cs[j] - cs[i]
            c = cost[k - 1, i] + (cs2[j] - cs2[i] - s * s / (j - i))
            b = int(np.argmin(c))
            cost[k, j] = c[b]
            arg[k, j] = i[b]
    cuts = []
    j = n
    for k in range(n_classes, 0, -1):
        i = arg[k, j]
        cuts.append(i)
        j = i
    cuts = sorted(cuts)[1:]
    breaks = [float(v[c - 1]) if c > 0 else float(v[0]) for c in cuts]
    return [float(b) for b in np.maximum.accumulate(breaks)]


def classify_risk(prob: Grid, n_classes: int = 5, method: str = "quantile") -> tuple[Grid, list[float]]:
    """Classes 1..n with class ``c`` covering ``(break[c-1], break[c]]``.

    Quantile breaks sit at the 20/40/60/80 percentiles (linear interpolation) of
    valid probabilities. Nodata cells get class 0, which is also the nodata value.
    """
    valid = prob.valid
    v = prob.values[valid]
    if v.size < n_classes:
        raise TooFewCells(f"{v.size} valid cells for {n_classes} classes")
    if method == "quantile":
        breaks = quantile_breaks(v, n_classes)
    elif method == "jenks":
        breaks = jenks_breaks(v, n_classes)
    else:
        raise InputError(f"unknown classification method {method!r}")
    out = np.full(prob.shape, CLASS_NODATA)
    out[valid] = np.searchsorted(np.asarray(breaks), v, side="left") + 1
    return Grid(out, prob.transform, CLASS_NODATA), breaks


def build_risk_map(prob: Grid, n_classes: int = 5, method: str = "quantile") -> RiskMap:
    classes, breaks = classify_risk(prob, n_classes, method)
    return RiskMap(prob, classes, breaks)


def _rgb(classes: Grid, palette) -> tuple[np.ndarray, np.ndarray]:
    valid = classes.valid
    v = classes.values
    bad = valid & ~np.isin(v, np.arange(1, len(palette) + 1))
    if bad.any():
        raise InvalidClassValue(f"class value {v[bad][0]!r} outside 1..{len(palette)}")
    lut = np.array([NODATA_RGB, *palette], dtype=np.uint8)
    idx = np.where(valid, v, 0).astype(np.int64)
    return lut[idx], valid


def render_ppm(classes: Grid, palette=DEFAULT_PALETTE) -> bytes:
    """Binary PPM (P6, maxval 255), one pixel per cell; nodata is white."""
    rgb, _ = _rgb(classes, palette)
    h, w = classes.shape
    return f"P6\n{w} {h}\n255\n".encode("ascii") + rgb.tobytes()


def render_png(classes: Grid, palette=DEFAULT_PALETTE) -> bytes:
    """RGBA PNG, one pixel per cell; nodata is transparent."""
    from PIL import Image

    rgb, valid = _rgb(classes, palette)
    rgba = np.dstack([rgb, np.where(valid, 255, 0).astype(np.uint8)])
    buf = io.BytesIO()
    Image.fromarray(rgba, "RGBA").save(buf, format="PNG")
    return buf.getvalue()


def render_map(classes: Grid, palette=DEFAULT_PALETTE) -> dict[str, bytes]:
    return {"ppm": render_ppm(classes, palette), "png": render_png(classes, palette)}
