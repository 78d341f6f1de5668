"""Temporal aggregation of per-year bands, anomalies and seasons."""

from __future__ import annotations

import enum
import warnings

import numpy as np

from .errors import EmptyBand, InputError, InvalidMonth, UnknownYear
from .raster import Aggregation, BandData, Grid


class Season(str, enum.Enum):
    COLD = "cold"
    WARM = "warm"


COLD_MONTHS = frozenset({11, 12, 1, 2, 3, 4})


def season_of(month: int) -> Season:
    """November to April is the cold season, May to October the warm one."""
    if isinstance(month, bool) or int(month) != month or not 1 <= month <= 12:
        raise InvalidMonth(f"month must be 1..12, got {month!r}")
    return Season.COLD if int(month) in COLD_MONTHS else Season.WARM


def _cube(band: BandData) -> tuple[np.ndarray, Grid]:
    if not band.is_dynamic:
        raise InputError("temporal operations need a dynamic band")
    if not band.layers:
        raise EmptyBand("dynamic band has no year layers")
    grids = list(band.layers.values())
    return np.stack([g.masked() for g in grids]), grids[0]


def aggregate(band: BandData, policy: Aggregation | str | None = None) -> Grid:
    """Per-cell mean or median over years, skipping nodata.

    Cells missing in every year stay nodata. Even counts take the midpoint of
    the two central values for the median.
    """
    policy = Aggregation(policy or band.aggregation)
    cube, ref = _cube(band)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)  # all-NaN cells
        if policy is Aggregation.MEAN:
            out = np.nanmean(cube, axis=0)
        else:
            out = np.nanmedian(cube, axis=0)
    return ref.with_values(out)


def temporal_mean(band: BandData) -> Grid:
    return aggregate(band, Aggregation.MEAN)


def anomaly(band: BandData, year: int) -> Grid:
    """Value in ``year`` minus the per-cell mean over every year of the band."""
    if not band.is_dynamic:
        raise InputError("anomaly needs a dynamic band")
    if year not in band.layers:
        raise UnknownYear(f"year {year} not in band years {band.years}")
    mean = temporal_mean(band).masked()
    return band.layers[year].with_values(band.layers[year].masked() - mean)


class YearMode(str, enum.Enum):
    """How dynamic bands become feature values.

    ``AGGREGATED_STATIC`` uses each band's temporal aggregate regardless of year;
    ``PER_YEAR_ANOMALY`` uses the anomaly of the sample's year. Categorical
    dynamic bands (land cover) take their raw value for the year in that mode.
    """

    AGGREGATED_STATIC = "aggregated_static"
    PER_YEAR_ANOMALY = "per_year_anomaly"


class FeatureResolver:
    """Caches the per-band grid used for a given year under a :class:`YearMode`."""

    def __init__(self, stack, year_mode: YearMode | str = YearMode.PER_YEAR_ANOMALY):
        self.stack = stack
        self.year_mode = YearMode(year_mode)
        self._cache: dict[tuple[str, int | None], Grid] = {}

    def grid(self, name: str, year: int | None) -> Grid:
        band = self.stack[name]
        if not band.is_dynamic:
            return band.static
        key = (name, None if self.year_mode is YearMode.AGGREGATED_STATIC else year)
        if key not in self._cache:
            if self.year_mode is YearMode.AGGREGATED_STATIC:
                self._cache[key] = aggregate(band)
            elif band.categorical:
                if year not in band.layers:
                    raise UnknownYear(f"year {year} not in band {name!r}")
                self._cache[key] = band.layers[year]
            else:
                self._cache[key] = anomaly(band, year)
        return self._cache[key]

    def preload(self, grids: dict[tuple[str, int | None], Grid]) -> FeatureResolver:
        """Seed the cache with already resolved grids keyed by ``(name, year)``."""
        self._cache.update(grids)
        return self

    def keys_for(self, years) -> list[tuple[str, int | None]]:
        """Cache keys that :meth:`grid` consults for ``years`` (static bands excluded)."""
        out = []
        for name in self.stack.names:
            if not self.stack[name].is_dynamic:
                continue
            if self.year_mode is YearMode.AGGREGATED_STATIC:
                out.append((name, None))
            else:
                out.extend((name, int(y)) for y in years)
        return out

    def year_grids(self, year: int | None) -> list[Grid]:
        return [self.grid(name, year) for name in self.stack.names]
