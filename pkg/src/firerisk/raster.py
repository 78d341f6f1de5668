"""Georeferenced grids, coordinate math, alignment and band stacking.

Grids use an upper-left origin with rows running top to bottom (y decreasing
downward), the same layout as ESRI ASCII grids.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping

import numpy as np

from .errors import DimensionMismatch, DuplicateName, EmptyBand, InputError, NoOverlap, OutOfBounds

DEFAULT_NODATA = -9999.0


class CrsKind(str, enum.Enum):
    GEOGRAPHIC = "geographic"
    PLANAR = "planar"


class Aggregation(str, enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"


class BandRole(str, enum.Enum):
    TOPOGRAPHIC = "topographic"
    VEGETATION = "vegetation"
    CLIMATIC = "climatic"
    ANTHROPOGENIC = "anthropogenic"
    TARGET = "target"


@dataclass(frozen=True)
class GeoTransform:
    """Axis-aligned frame: upper-left corner plus a square cell size."""

    origin_x: float
    origin_y: float
    cell_size: float
    crs_kind: CrsKind = CrsKind.PLANAR

    def __post_init__(self):
        if not (self.cell_size > 0 and math.isfinite(self.cell_size)):
            raise InputError(f"cell_size must be positive, got {self.cell_size}")
        object.__setattr__(self, "crs_kind", CrsKind(self.crs_kind))
        if self.crs_kind is CrsKind.GEOGRAPHIC:
            if not (-180.0 <= self.origin_x <= 180.0 and -90.0 <= self.origin_y <= 90.0):
                raise InputError("geographic origin outside [-180,180]x[-90,90]")


def cell_of(t: GeoTransform, x: float, y: float, w: int, h: int) -> tuple[int, int]:
    """Return ``(row, col)`` of the cell whose footprint contains ``(x, y)``."""
    col = math.floor((x - t.origin_x) / t.cell_size)
    row = math.floor((t.origin_y - y) / t.cell_size)
    if not (0 <= row < h and 0 <= col < w):
        raise OutOfBounds(f"point ({x}, {y}) outside {w}x{h} grid")
    return row, col


def center_of(t: GeoTransform, row: int, col: int, w: int | None = None, h: int | None = None) -> tuple[float, float]:
    if row < 0 or col < 0 or (h is not None and row >= h) or (w is not None and col >= w):
        raise OutOfBounds(f"cell ({row}, {col}) outside grid")
    return t.origin_x + (col + 0.5) * t.cell_size, t.origin_y - (row + 0.5) * t.cell_size


def cells_of(t: GeoTransform, xs, ys, w: int, h: int) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised :func:`cell_of`; raises if any point is outside."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    cols = np.floor((xs - t.origin_x) / t.cell_size).astype(np.int64)
    rows = np.floor((t.origin_y - ys) / t.cell_size).astype(np.int64)
    bad = (rows < 0) | (rows >= h) | (cols < 0) | (cols >= w)
    if bad.any():
        i = int(np.flatnonzero(bad)[0])
        raise OutOfBounds(f"point ({xs[i]}, {ys[i]}) outside {w}x{h} grid")
    return rows, cols


def cell_centers(t: GeoTransform, w: int, h: int) -> tuple[np.ndarray, np.ndarray]:
    """Center coordinate arrays of shape ``(h, w)``."""
    xs = t.origin_x + (np.arange(w) + 0.5) * t.cell_size
    ys = t.origin_y - (np.arange(h) + 0.5) * t.cell_size
    return np.meshgrid(xs, ys)


@dataclass(frozen=True, eq=False)
class Grid:
    """Single-band raster. ``values`` has shape ``(height, width)``.

    Missing cells hold the ``nodata`` sentinel; NaN is also treated as missing.
    """

    values: np.ndarray
    transform: GeoTransform
    nodata: float = DEFAULT_NODATA

    def __post_init__(self):
        v = np.array(self.values, dtype=np.float64)
        if v.ndim != 2:
            raise DimensionMismatch(f"grid values must be 2-D, got shape {v.shape}")
        v = np.where(np.isnan(v), self.nodata, v)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "nodata", float(self.nodata))

    @classmethod
    def from_flat(cls, values: Iterable[float], width: int, height: int, transform: GeoTransform,
                  nodata: float = DEFAULT_NODATA) -> Grid:
        flat = np.asarray(list(values) if not isinstance(values, np.ndarray) else values, dtype=float)
        if flat.size != width * height:
            raise DimensionMismatch(f"{flat.size} values for a {width}x{height} grid")
        return cls(flat.reshape(height, width), transform, nodata)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def valid(self) -> np.ndarray:
        return self.values != self.nodata

    def masked(self) -> np.ndarray:
        """Float copy with missing cells as NaN."""
        out = self.values.copy()
        out[~self.valid] = np.nan
        return out

    def with_values(self, values: np.ndarray) -> Grid:
        """New grid in the same frame; NaN in ``values`` becomes nodata."""
        return Grid(values, self.transform, self.nodata)

    def same_frame(self, other: Grid) -> bool:
        return self.shape == other.shape and self.transform == other.transform

    def value_at(self, x: float, y: float) -> float:
        r, c = cell_of(self.transform, x, y, self.width, self.height)
        return float(self.values[r, c])

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (self.same_frame(other) and self.nodata == other.nodata
                and np.array_equal(self.values, other.values))

    __hash__ = None


def align(g: Grid, target: GeoTransform, w: int, h: int) -> Grid:
    """Nearest-neighbour resample of ``g`` onto a target frame.

    Target cells whose center falls outside the source extent become nodata.
    """
    src = g.transform
    xs, ys = cell_centers(target, w, h)
    cols = np.floor((xs - src.origin_x) / src.cell_size).astype(np.int64)
    rows = np.floor((src.origin_y - ys) / src.cell_size).astype(np.int64)
    inside = (rows >= 0) & (rows < g.height) & (cols >= 0) & (cols < g.width)
    if not inside.any():
        raise NoOverlap("target frame does not overlap the source grid")
    out = np.full((h, w), g.nodata)
    out[inside] = g.values[rows[inside], cols[inside]]
    return Grid(out, target, g.nodata)


@dataclass(frozen=True)
class BandData:
    """A band is either one static grid or a mapping ``year -> grid``."""

    static: Grid | None = None
    layers: Mapping[int, Grid] | None = None
    aggregation: Aggregation = Aggregation.MEAN
    role: BandRole = BandRole.TOPOGRAPHIC
    categorical: bool = False

    def __post_init__(self):
        if (self.static is None) == (self.layers is None):
            raise InputError("band must be exactly one of static or dynamic")
        if self.layers is not None:
            if len(self.layers) == 0:
                raise EmptyBand("dynamic band needs at least one year layer")
            object.__setattr__(self, "layers", {int(k): v for k, v in sorted(self.layers.items())})
        object.__setattr__(self, "aggregation", Aggregation(self.aggregation))
        object.__setattr__(self, "role", BandRole(self.role))

    @classmethod
    def of_static(cls, grid: Grid, role=BandRole.TOPOGRAPHIC, categorical=False) -> BandData:
        return cls(static=grid, role=role, categorical=categorical)

    @classmethod
    def of_dynamic(cls, layers: Mapping[int, Grid], aggregation=Aggregation.MEAN,
                   role=BandRole.CLIMATIC, categorical=False) -> BandData:
        return cls(layers=dict(layers), aggregation=aggregation, role=role, categorical=categorical)

    @property
    def is_dynamic(self) -> bool:
        return self.layers is not None

    @property
    def years(self) -> list[int]:
        return list(self.layers) if self.layers is not None else []

    def grids(self) -> list[Grid]:
        return [self.static] if self.static is not None else list(self.layers.values())

    def reference(self) -> Grid:
        return self.grids()[0]


@dataclass(frozen=True)
class FeatureStack:
    bands: dict[str, BandData] = field(default_factory=dict)

    @property
    def names(self) -> list[str]:
        return list(self.bands)

    @property
    def reference(self) -> Grid:
        return next(iter(self.bands.values())).reference()

    @property
    def transform(self) -> GeoTransform:
        return self.reference.transform

    @property
    def shape(self) -> tuple[int, int]:
        return self.reference.shape

    def __getitem__(self, name: str) -> BandData:
        return self.bands[name]

    def __len__(self) -> int:
        return len(self.bands)


def stack(bands: list[tuple[str, BandData]]) -> FeatureStack:
    """Assemble bands into a stack, checking that every grid shares one frame."""
    if not bands:
        raise InputError("cannot stack zero bands")
    out: dict[str, BandData] = {}
    ref = bands[0][1].reference()
    for name, band in bands:
        if name in out:
            raise DuplicateName(f"duplicate band name {name!r}")
        for g in band.grids():
            if not g.same_frame(ref):
                raise DimensionMismatch(
                    f"band {name!r} frame {g.shape}/{g.transform} differs from {ref.shape}/{ref.transform}")
        out[name] = band
    return FeatureStack(out)
