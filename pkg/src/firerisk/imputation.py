"""Gap filling for nodata raster cells: KNN averaging and K-means cluster means."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidK, InvalidRadius, TooFewValidCells
from .raster import Grid


@dataclass(frozen=True)
class ImputeReport:
    method: str
    filled: int
    unfilled: int
    parameters: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"method": self.method, "filled": self.filled, "unfilled": self.unfilled,
                "parameters": dict(self.parameters)}


def _neighbour_offsets(max_radius: float) -> np.ndarray:
    """Offsets within ``max_radius`` ordered by distance, then row, then column."""
    r = int(np.floor(max_radius))
    dr, dc = np.mgrid[-r:r + 1, -r:r + 1]
    dr, dc = dr.ravel(), dc.ravel()
    d2 = dr * dr + dc * dc
    keep = (d2 > 0) & (d2 <= max_radius * max_radius)
    dr, dc, d2 = dr[keep], dc[keep], d2[keep]
    order = np.lexsort((dc, dr, d2))
    return np.stack([dr[order], dc[order]], axis=1)


def knn_impute(g: Grid, k: int = 8, max_radius: float = 10) -> tuple[Grid, ImputeReport]:
    """Fill each nodata cell with the mean of its ``k`` nearest valid cells.

    Only cells within ``max_radius`` (cell units) count. Distance ties are broken
    by (row, col) order. Neighbours are taken from the original grid, so fills
    never cascade; cells with no valid neighbour stay nodata.
    """
    if int(k) != k or k < 1:
        raise InvalidK(f"k must be a positive integer, got {k}")
    if not max_radius >= 1:
        raise InvalidRadius(f"max_radius must be >= 1, got {max_radius}")
    params = {"k": int(k), "max_radius": float(max_radius)}
    valid = g.valid
    holes = np.argwhere(~valid)
    if len(holes) == 0:
        return g, ImputeReport("knn", 0, 0, params)
    offs = _neighbour_offsets(max_radius)
    h, w = g.shape
    out = g.values.copy()
    filled = 0
    step = max(1, 4_000_000 // max(len(offs), 1))
    for lo in range(0, len(holes), step):
        hs = holes[lo:lo + step]
        rr = hs[:, 0:1] + offs[None, :, 0]
        cc = hs[:, 1:2] + offs[None, :, 1]
        inside = (rr >= 0) & (rr < h) & (cc >= 0) & (cc < w)
        rr_c = np.clip(rr, 0, h - 1)
        cc_c = np.clip(cc, 0, w - 1)
        ok = inside & valid[rr_c, cc_c]
        take = ok & (np.cumsum(ok, axis=1) <= k)
        n = take.sum(axis=1)
        picked = g.values[rr_c, cc_c]
        sums = np.where(take, picked, 0.0).sum(axis=1)
        got = n > 0
        # rounding in sum/n must not leave the neighbour range
        lo_v = np.where(take, picked, np.inf).min(axis=1)
        hi_v = np.where(take, picked, -np.inf).max(axis=1)
        out[hs[got, 0], hs[got, 1]] = np.clip(sums[got] / n[got], lo_v[got], hi_v[got])
        filled += int(got.sum())
    return g.with_values(out), ImputeReport("knn", filled, len(holes) - filled, params)


def _kmeans_pp(x: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    centers = [x[rng.integers(len(x))]]
    d2 = ((x - centers[0]) ** 2).sum(axis=1)
    for _ in range(1, k):
        total = d2.sum()
        if total <= 0:
            idx = rng.integers(len(x))
        else:
            idx = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            idx = min(idx, len(x) - 1)
        centers.append(x[idx])
        d2 = np.minimum(d2, ((x - x[idx]) ** 2).sum(axis=1))
    return np.array(centers)


def lloyd(x: np.ndarray, k: int, seed: int, max_iter: int = 100, tol: float = 1e-6):
    """Plain Lloyd iterations from a k-means++ start; returns ``(centers, labels)``.

    An empty cluster is reseeded at the point farthest from its current center.
    """
    rng = np.random.default_rng(seed)
    centers = _kmeans_pp(x, k, rng)
    labels = np.zeros(len(x), dtype=np.int64)
    for _ in range(max_iter):
        d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        labels = d2.argmin(axis=1)
        new = centers.copy()
        for j in range(k):
            members = x[labels == j]
            if len(members):
                new[j] = members.mean(axis=0)
            else:
                far = int(d2[np.arange(len(x)), labels].argmax())
                new[j] = x[far]
                labels[far] = j
        shift = np.sqrt(((new - centers) ** 2).sum(axis=1)).max()
        centers = new
        if shift <= tol:
            break
    d2 = ((x[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
    return centers, d2.argmin(axis=1)


def kmeans_impute(g: Grid, k_clusters: int = 8, seed: int = 0, max_iter: int = 100,
                  tol: float = 1e-6) -> tuple[Grid, ImputeReport]:
    """Cluster valid cells on z-scored (row, col, value) and fill holes with cluster means.

    A hole joins the cluster whose centroid is nearest in the normalised
    (row, col) plane.
    """
    if int(k_clusters) != k_clusters or k_clusters < 1:
        raise InvalidK(f"k_clusters must be a positive integer, got {k_clusters}")
    params = {"k_clusters": int(k_clusters), "seed": int(seed), "max_iter": int(max_iter), "tol": tol}
    valid = g.valid
    cells = np.argwhere(valid)
    if len(cells) < k_clusters:
        raise TooFewValidCells(f"{len(cells)} valid cells for {k_clusters} clusters")
    holes = np.argwhere(~valid)
    if len(holes) == 0:
        return g, ImputeReport("kmeans", 0, 0, params)
    vals = g.values[valid]
    feats = np.column_stack([cells[:, 0], cells[:, 1], vals]).astype(float)
    mu = feats.mean(axis=0)
    sd = feats.std(axis=0)
    sd[sd == 0] = 1.0
    z = (feats - mu) / sd
    centers, labels = lloyd(z, int(k_clusters), seed, max_iter, tol)
    sums = np.bincount(labels, weights=vals, minlength=k_clusters)
    counts = np.bincount(labels, minlength=k_clusters)
    populated = counts > 0
    means = np.divide(sums, counts, out=np.zeros(k_clusters), where=populated)
    lo_v = np.full(k_clusters, np.inf)
    hi_v = np.full(k_clusters, -np.inf)
    np.minimum.at(lo_v, labels, vals)
    np.maximum.at(hi_v, labels, vals)
    means = np.where(populated, np.clip(means, lo_v, hi_v), 0.0)
    hz = (holes.astype(float) - mu[:2]) / sd[:2]
    cz = centers[populated, :2]
    nearest = ((hz[:, None, :] - cz[None, :, :]) ** 2).sum(axis=2).argmin(axis=1)
    out = g.values.copy()
    out[holes[:, 0], holes[:, 1]] = means[populated][nearest]
    return g.with_values(out), ImputeReport("kmeans", len(holes), 0, params)
