import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from firerisk.errors import InvalidMonth, UnknownYear
from firerisk.raster import Aggregation, BandData, GeoTransform, Grid, stack
from firerisk.temporal import FeatureResolver, Season, YearMode, aggregate, anomaly, season_of

T = GeoTransform(0, 10, 10)


def band(series, agg=Aggregation.MEAN, categorical=False):
    return BandData.of_dynamic({2015 + i: Grid([[v]], T) for i, v in enumerate(series)}, agg,
                               categorical=categorical)


def test_aggregate_examples():
    assert aggregate(band([1, 2, 3])).values[0, 0] == 2
    assert aggregate(band([1, 2, 100], Aggregation.MEDIAN)).values[0, 0] == 2
    assert aggregate(band([-9999, 4])).values[0, 0] == 4
    assert aggregate(band([1, 2, 3, 10], Aggregation.MEDIAN)).values[0, 0] == 2.5


def test_aggregate_all_missing_cell_stays_missing():
    g = aggregate(band([-9999, -9999]))
    assert not g.valid.any()


def test_anomaly_examples():
    assert anomaly(band([5, 5, 5]), 2016).values[0, 0] == 0
    b = band([10, 20, 30])
    assert anomaly(b, 2016).values[0, 0] == 0
    assert anomaly(b, 2017).values[0, 0] == 10
    with pytest.raises(UnknownYear):
        anomaly(b, 2030)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 8), st.integers(0, 2**31))
def test_anomalies_sum_to_zero(n_years, seed):
    rng = np.random.default_rng(seed)
    b = BandData.of_dynamic({2010 + i: Grid(rng.normal(size=(3, 4)) * 50, T) for i in range(n_years)})
    total = sum(anomaly(b, y).values for y in b.years)
    assert np.abs(total).max() <= 1e-9


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**31), st.floats(-10, 10))
def test_mean_aggregate_linear_and_single_year_identity(seed, a):
    rng = np.random.default_rng(seed)
    layers = {2015 + i: rng.normal(size=(2, 3)) for i in range(3)}
    b = BandData.of_dynamic({y: Grid(v, T) for y, v in layers.items()})
    scaled = BandData.of_dynamic({y: Grid(a * v, T) for y, v in layers.items()})
    assert np.allclose(aggregate(scaled).values, a * aggregate(b).values, atol=1e-12)
    one = BandData.of_dynamic({2015: Grid(layers[2015], T)})
    assert aggregate(one) == Grid(layers[2015], T)


def test_season_of():
    assert season_of(11) is Season.COLD
    assert season_of(7) is Season.WARM
    with pytest.raises(InvalidMonth):
        season_of(0)
    with pytest.raises(InvalidMonth):
        season_of(13)
    seasons = [season_of(m) for m in range(1, 13)]
    assert seasons.count(Season.COLD) == 6 and seasons.count(Season.WARM) == 6
    assert {m for m in range(1, 13) if season_of(m) is Season.COLD} == {11, 12, 1, 2, 3, 4}


def test_resolver_modes():
    dem = BandData.of_static(Grid([[100.0]], T))
    fs = stack([("dem", dem), ("t", band([10, 20, 30])), ("lc", band([1, 2, 2], categorical=True))])
    per_year = FeatureResolver(fs, YearMode.PER_YEAR_ANOMALY)
    assert [g.values[0, 0] for g in per_year.year_grids(2017)] == [100, 10, 2]
    agg = FeatureResolver(fs, "aggregated_static")
    assert [g.values[0, 0] for g in agg.year_grids(2017)] == [100, 20, 5 / 3]
    assert per_year.keys_for([2015]) == [("t", 2015), ("lc", 2015)]
    assert agg.keys_for([2015, 2016]) == [("t", None), ("lc", None)]
