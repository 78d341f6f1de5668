"""File ingestion and derived anthropogenic rasters.

Reads ESRI ASCII grids, GeoJSON point/line layers and CSV point tables, and
turns vector layers into distance-to-nearest-feature and point-density grids.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import IO, Mapping, Sequence

import numpy as np

from .errors import (
    CellCountMismatch,
    EmptyLayer,
    InputError,
    MalformedHeader,
    MalformedJson,
    NonNumericToken,
    NonPointGeometry,
    NonPositiveRadius,
    UnknownCategory,
    UnsupportedGeometry,
)
from .raster import DEFAULT_NODATA, CrsKind, GeoTransform, Grid, cell_centers

EARTH_RADIUS_M = 6371.0088e3

_REQUIRED = ("ncols", "nrows", "cellsize")


# --------------------------------------------------------------------------
# ESRI ASCII grid
# --------------------------------------------------------------------------

def read_ascii_grid(stream: IO[str] | str, crs_kind: CrsKind = CrsKind.PLANAR) -> Grid:
    """Parse an ESRI ASCII grid.

    ``stream`` may be a text stream or the file contents. The header must give
    ``ncols``, ``nrows``, ``xllcorner``, ``yllcorner`` (or the ``*center``
    variants) and ``cellsize``; ``NODATA_value`` is optional.
    """
    text = stream if isinstance(stream, str) else stream.read()
    lines = text.splitlines()
    header: dict[str, str] = {}
    i = 0
    while i < len(lines):
        parts = lines[i].split()
        if not parts:
            i += 1
            continue
        key = parts[0].lower()
        if key[0].isalpha() and key not in ("nan", "inf", "-inf", "infinity"):
            if len(parts) != 2:
                raise MalformedHeader(f"bad header line: {lines[i]!r}")
            header[key] = parts[1]
            i += 1
        else:
            break
    for key in _REQUIRED:
        if key not in header:
            raise MalformedHeader(f"missing header key {key!r}")
    try:
        ncols = int(header["ncols"])
        nrows = int(header["nrows"])
        cellsize = float(header["cellsize"])
        nodata = float(header.get("nodata_value", DEFAULT_NODATA))
    except ValueError as exc:
        raise MalformedHeader(str(exc)) from None
    if ncols <= 0 or nrows <= 0 or not cellsize > 0:
        raise MalformedHeader("ncols, nrows and cellsize must be positive")
    try:
        if "xllcorner" in header:
            xll = float(header["xllcorner"])
        elif "xllcenter" in header:
            xll = float(header["xllcenter"]) - cellsize / 2
        else:
            raise MalformedHeader("missing header key 'xllcorner'")
        if "yllcorner" in header:
            yll = float(header["yllcorner"])
        elif "yllcenter" in header:
            yll = float(header["yllcenter"]) - cellsize / 2
        else:
            raise MalformedHeader("missing header key 'yllcorner'")
    except ValueError as exc:
        raise MalformedHeader(str(exc)) from None

    tokens = " ".join(lines[i:]).split()
    if len(tokens) != ncols * nrows:
        raise CellCountMismatch(f"expected {ncols * nrows} cells, found {len(tokens)}")
    try:
        values = np.array([float(tok) for tok in tokens], dtype=np.float64)
    except ValueError:
        bad = next(t for t in tokens if not _is_float(t))
        raise NonNumericToken(f"non-numeric token {bad!r}") from None
    transform = GeoTransform(xll, yll + nrows * cellsize, cellsize, crs_kind)
    return Grid(values.reshape(nrows, ncols), transform, nodata)


def _is_float(tok: str) -> bool:
    try:
        float(tok)
        return True
    except ValueError:
        return False


def _lower_left_y(origin_y: float, nrows: int, cellsize: float) -> float:
    # pick a yllcorner that reproduces origin_y when re-read; when the float
    # spacing of yll is coarser than origin_y's, settle for the nearest one
    span = nrows * cellsize
    yll = origin_y - span
    cands = [yll]
    for direction in (np.inf, -np.inf):
        cand = yll
        for _ in range(4):
            cand = float(np.nextafter(cand, direction))
            cands.append(cand)
    return min(cands, key=lambda c: (abs((c + span) - origin_y), abs(c - yll)))


def format_value(v: float) -> str:
    return f"{v:.6g}"


def write_ascii_grid(g: Grid, stream: IO[str] | None = None) -> str | None:
    """Serialise ``g`` as an ESRI ASCII grid with 6 significant digits.

    Returns the text when ``stream`` is None.
    """
    if g.width == 0 or g.height == 0:
        raise MalformedHeader("refusing to write an empty grid")
    t = g.transform
    nod = format_value(g.nodata)
    if float(nod) != g.nodata:
        nod = repr(g.nodata)
    out = io.StringIO()
    out.write(f"ncols {g.width}\nnrows {g.height}\n")
    yll = _lower_left_y(float(t.origin_y), g.height, float(t.cell_size))
    out.write(f"xllcorner {float(t.origin_x)!r}\nyllcorner {float(yll)!r}\n")
    out.write(f"cellsize {float(t.cell_size)!r}\nNODATA_value {nod}\n")
    valid = g.valid
    for r in range(g.height):
        row = g.values[r]
        out.write(" ".join(format_value(v) if ok else nod for v, ok in zip(row, valid[r])))
        out.write("\n")
    text = out.getvalue()
    if stream is None:
        return text
    try:
        stream.write(text)
    except OSError as exc:
        raise InputError(f"write failed: {exc}") from exc
    return None


def load_ascii_grid(path, crs_kind: CrsKind = CrsKind.PLANAR) -> Grid:
    with open(path, encoding="utf-8") as fh:
        return read_ascii_grid(fh, crs_kind)


def save_ascii_grid(g: Grid, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        write_ascii_grid(g, fh)


# --------------------------------------------------------------------------
# Vector layers
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class VectorLayer:
    """Flat list of geometries: points as ``(x, y)``, polylines as vertex arrays."""

    points: list[tuple[float, float]] = field(default_factory=list)
    polylines: list[np.ndarray] = field(default_factory=list)
    crs_kind: CrsKind = CrsKind.PLANAR

    def __post_init__(self):
        lines = []
        for line in self.polylines:
            arr = np.asarray(line, dtype=float).reshape(-1, 2)
            if len(arr) < 2:
                raise InputError("polyline needs at least two vertices")
            if not np.isfinite(arr).all():
                raise InputError("non-finite polyline coordinate")
            lines.append(arr)
        pts = [(float(x), float(y)) for x, y in self.points]
        if not all(math.isfinite(x) and math.isfinite(y) for x, y in pts):
            raise InputError("non-finite point coordinate")
        object.__setattr__(self, "polylines", lines)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "crs_kind", CrsKind(self.crs_kind))

    def __len__(self) -> int:
        return len(self.points) + len(self.polylines)

    def segments(self) -> np.ndarray:
        """All geometries as ``(n, 4)`` segments; a point is a zero-length segment."""
        parts = [np.array([[x, y, x, y] for x, y in self.points], dtype=float).reshape(-1, 4)]
        for line in self.polylines:
            parts.append(np.hstack([line[:-1], line[1:]]))
        return np.vstack(parts) if parts else np.empty((0, 4))


def read_vector_geojson(stream: IO[str] | str, crs_kind: CrsKind = CrsKind.GEOGRAPHIC) -> VectorLayer:
    """Flatten a GeoJSON FeatureCollection of Point/LineString/MultiLineString."""
    text = stream if isinstance(stream, str) else stream.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise MalformedJson(str(exc)) from None
    if not isinstance(doc, dict):
        raise MalformedJson("top-level GeoJSON value must be an object")
    if doc.get("type") == "FeatureCollection":
        features = doc.get("features")
        if not isinstance(features, list):
            raise MalformedJson("FeatureCollection without a features list")
        geoms = [f.get("geometry") if isinstance(f, dict) else None for f in features]
    elif doc.get("type") == "Feature":
        geoms = [doc.get("geometry")]
    else:
        geoms = [doc]
    points, lines = [], []
    for geom in geoms:
        if not isinstance(geom, dict) or "type" not in geom:
            raise MalformedJson("feature without a geometry object")
        kind, coords = geom["type"], geom.get("coordinates")
        try:
            if kind == "Point":
                points.append((float(coords[0]), float(coords[1])))
            elif kind == "LineString":
                lines.append([(float(c[0]), float(c[1])) for c in coords])
            elif kind == "MultiLineString":
                lines.extend([(float(c[0]), float(c[1])) for c in part] for part in coords)
            else:
                raise UnsupportedGeometry(f"unsupported geometry type {kind!r}")
        except (TypeError, IndexError, ValueError):
            raise MalformedJson(f"bad coordinates in {kind} geometry") from None
    return VectorLayer(points, lines, crs_kind)


def load_vector_geojson(path, crs_kind: CrsKind = CrsKind.GEOGRAPHIC) -> VectorLayer:
    with open(path, encoding="utf-8") as fh:
        return read_vector_geojson(fh, crs_kind)


# --------------------------------------------------------------------------
# Point tables
# --------------------------------------------------------------------------

@dataclass
class PointTable:
    x: np.ndarray
    y: np.ndarray
    year: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.x)


def read_point_table(stream: IO[str] | str, study_years: Sequence[int] | None = None) -> PointTable:
    """Read a ``x,y,year,<columns...>`` CSV table."""
    fh = io.StringIO(stream) if isinstance(stream, str) else stream
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise MalformedHeader("empty point table") from None
    header = [h.strip() for h in header]
    if header[:3] != ["x", "y", "year"]:
        raise MalformedHeader("point table header must start with x,y,year")
    rows = [r for r in reader if r]
    for r in rows:
        if len(r) != len(header):
            raise CellCountMismatch(f"row has {len(r)} fields, header has {len(header)}")
    try:
        data = np.array([[float(v) for v in r] for r in rows], dtype=float).reshape(-1, len(header))
    except ValueError as exc:
        raise NonNumericToken(str(exc)) from None
    if not np.isfinite(data[:, :2]).all():
        raise InputError("non-finite point coordinates")
    years = data[:, 2].astype(int)
    if study_years is not None and not np.isin(years, list(study_years)).all():
        raise InputError("point year outside the study period")
    cols = {name: data[:, 3 + j] for j, name in enumerate(header[3:])}
    return PointTable(data[:, 0], data[:, 1], years, cols)


def write_point_table(t: PointTable, stream: IO[str]) -> None:
    w = csv.writer(stream, lineterminator="\n")
    w.writerow(["x", "y", "year", *t.columns])
    for i in range(len(t)):
        w.writerow([repr(float(t.x[i])), repr(float(t.y[i])), int(t.year[i]),
                    *(repr(float(c[i])) for c in t.columns.values())])


# --------------------------------------------------------------------------
# Distance and density rasters
# --------------------------------------------------------------------------

def _planar_seg_dist(px, py, seg):
    """Distances from points ``(px, py)`` (shape (m,)) to segments (k, 4) -> (m, k)."""
    ax, ay, bx, by = (seg[:, i][None, :] for i in range(4))
    dx, dy = bx - ax, by - ay
    ll = dx * dx + dy * dy
    px = px[:, None]
    py = py[:, None]
    with np.errstate(invalid="ignore", divide="ignore"):
        t = ((px - ax) * dx + (py - ay) * dy) / ll
    t = np.where(ll > 0, np.clip(t, 0.0, 1.0), 0.0)
    return np.hypot(px - (ax + t * dx), py - (ay + t * dy))


def _unit_vectors(lon, lat):
    lon = np.radians(lon)
    lat = np.radians(lat)
    return np.stack([np.cos(lat) * np.cos(lon), np.cos(lat) * np.sin(lon), np.sin(lat)], axis=-1)


def haversine_m(lon1, lat1, lon2, lat2):
    """Great-circle distance in metres on a sphere of radius 6371.0088 km."""
    lon1, lat1, lon2, lat2 = (np.radians(np.asarray(a, dtype=float)) for a in (lon1, lat1, lon2, lat2))
    s = np.sin((lat2 - lat1) / 2) ** 2 + np.cos(lat1) * np.cos(lat2) * np.sin((lon2 - lon1) / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arcsin(np.sqrt(np.clip(s, 0.0, 1.0)))


def _sphere_seg_dist(px, py, seg):
    """Point-to-great-circle-arc distances in metres, (m,) x (k, 4) -> (m, k)."""
    d_a = haversine_m(px[:, None], py[:, None], seg[None, :, 0], seg[None, :, 1])
    d_b = haversine_m(px[:, None], py[:, None], seg[None, :, 2], seg[None, :, 3])
    best = np.minimum(d_a, d_b)
    a = _unit_vectors(seg[:, 0], seg[:, 1])
    b = _unit_vectors(seg[:, 2], seg[:, 3])
    n = np.cross(a, b)
    norm = np.linalg.norm(n, axis=1)
    ok = norm > 1e-15
    if not ok.any():
        return best
    n = n[ok] / norm[ok][:, None]
    p = _unit_vectors(px, py)
    s = p @ n.T  # sine of the cross-track angle
    proj = p[:, None, :] - s[:, :, None] * n[None, :, :]
    # foot of the perpendicular lies on the arc iff it is between a and b
    within = (np.einsum("mkj,kj->mk", np.cross(a[ok][None, :, :], proj), n) >= 0) & \
             (np.einsum("mkj,kj->mk", np.cross(proj, b[ok][None, :, :]), n) >= 0)
    cross = EARTH_RADIUS_M * np.arcsin(np.clip(np.abs(s), 0.0, 1.0))
    sub = best[:, ok]
    best[:, ok] = np.where(within, np.minimum(sub, cross), sub)
    return best


def _chunks(m: int, k: int, budget: int = 2_000_000):
    step = max(1, budget // max(k, 1))
    for lo in range(0, m, step):
        yield lo, min(m, lo + step)


def euclidean_distance_raster(layer: VectorLayer, frame: GeoTransform, w: int, h: int,
                              use_index: bool = False, block: int = 16) -> Grid:
    """Distance from each cell center to the nearest geometry.

    Planar frames give map units; geographic frames give great-circle metres.
    ``use_index`` enables block-wise candidate pruning (planar only); both paths
    return identical values.
    """
    if len(layer) == 0:
        raise EmptyLayer("distance raster needs at least one geometry")
    seg = layer.segments()
    xs, ys = cell_centers(frame, w, h)
    px, py = xs.ravel(), ys.ravel()
    geographic = frame.crs_kind is CrsKind.GEOGRAPHIC
    dist_fn = _sphere_seg_dist if geographic else _planar_seg_dist
    out = np.empty(px.size)
    if use_index and not geographic:
        out = _indexed_planar_distance(xs, ys, seg, block).ravel()
    else:
        for lo, hi in _chunks(px.size, len(seg), 500_000 if geographic else 2_000_000):
            out[lo:hi] = dist_fn(px[lo:hi], py[lo:hi], seg).min(axis=1)
    return Grid(out.reshape(h, w), frame)


def _indexed_planar_distance(xs, ys, seg, block):
    h, w = xs.shape
    out = np.empty((h, w))
    sx0 = np.minimum(seg[:, 0], seg[:, 2])
    sx1 = np.maximum(seg[:, 0], seg[:, 2])
    sy0 = np.minimum(seg[:, 1], seg[:, 3])
    sy1 = np.maximum(seg[:, 1], seg[:, 3])
    for r0 in range(0, h, block):
        for c0 in range(0, w, block):
            bx = xs[r0:r0 + block, c0:c0 + block]
            by = ys[r0:r0 + block, c0:c0 + block]
            x0, x1, y0, y1 = bx.min(), bx.max(), by.min(), by.max()
            corners_x = np.array([x0, x0, x1, x1])
            corners_y = np.array([y0, y1, y0, y1])
            # distance to a segment is convex, so its max over the block is at a corner
            upper = _planar_seg_dist(corners_x, corners_y, seg).max(axis=0).min()
            gap_x = np.maximum(0.0, np.maximum(sx0 - x1, x0 - sx1))
            gap_y = np.maximum(0.0, np.maximum(sy0 - y1, y0 - sy1))
            cand = seg[np.hypot(gap_x, gap_y) <= upper]
            d = _planar_seg_dist(bx.ravel(), by.ravel(), cand).min(axis=1)
            out[r0:r0 + block, c0:c0 + block] = d.reshape(bx.shape)
    return out


def density_raster(points: VectorLayer, frame: GeoTransform, w: int, h: int, radius: float) -> Grid:
    """Points within ``radius`` of each cell center divided by the disc area.

    ``radius`` is in map units for planar frames and metres for geographic ones.
    """
    if points.polylines:
        raise NonPointGeometry("density raster accepts point layers only")
    if not radius > 0:
        raise NonPositiveRadius(f"radius must be positive, got {radius}")
    xs, ys = cell_centers(frame, w, h)
    px, py = xs.ravel(), ys.ravel()
    counts = np.zeros(px.size)
    if points.points:
        pts = np.asarray(points.points, dtype=float)
        for lo, hi in _chunks(px.size, len(pts)):
            if frame.crs_kind is CrsKind.GEOGRAPHIC:
                d = haversine_m(px[lo:hi, None], py[lo:hi, None], pts[None, :, 0], pts[None, :, 1])
            else:
                d = np.hypot(px[lo:hi, None] - pts[None, :, 0], py[lo:hi, None] - pts[None, :, 1])
            counts[lo:hi] = (d <= radius).sum(axis=1)
    return Grid((counts / (math.pi * radius * radius)).reshape(h, w), frame)


def label_encode(g: Grid, ordering: Mapping[float, int]) -> Grid:
    """Replace categorical codes with priority integers from ``ordering``."""
    valid = g.valid
    codes = g.values[valid]
    keys = np.array(sorted(ordering), dtype=float)
    unknown = ~np.isin(codes, keys)
    if unknown.any():
        raise UnknownCategory(f"category {codes[unknown][0]!r} not in ordering")
    lut = np.array([ordering[k] for k in sorted(ordering)], dtype=float)
    out = np.full(g.shape, g.nodata)
    out[valid] = lut[np.searchsorted(keys, codes)]
    return g.with_values(out)
