import io

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from firerisk.errors import EmptyTestAfterBuffer, FrameMismatch, InputError, InsufficientCandidates, TooFewSamples
from firerisk.ingest import haversine_m
from firerisk.raster import BandData, CrsKind, GeoTransform, Grid, stack
from firerisk.sampling import (FIRE, NONFIRE, FireMask, Points, SampleSet, SplitSpec, attach_features,
                               audit_buffer, build_scenario, extract_fire_points, kfold, min_distance_to,
                               pairwise_distance_m, sample_nonfire)
from firerisk.temporal import anomaly

N = np.nan


def mask_of(arrays, t):
    return FireMask({y: Grid(a, t) for y, a in arrays.items()})


def test_extract_examples():
    t = GeoTransform(0, 20, 10)
    m = mask_of({2015: np.full((2, 2), 9.0)}, t)
    p = extract_fire_points(m)
    assert sorted(p) == sorted([(5.0, 15.0, 2015), (15.0, 15.0, 2015), (5.0, 5.0, 2015), (15.0, 5.0, 2015)])
    m8 = mask_of({2015: np.array([[8.0, 9.0], [N, N]])}, t)
    assert list(extract_fire_points(m8)) == [(15.0, 15.0, 2015)]
    assert len(extract_fire_points(mask_of({2015: np.full((2, 2), N)}, t))) == 0


def test_fire_mask_validates_classes():
    t = GeoTransform(0, 10, 10)
    with pytest.raises(InputError):
        mask_of({2015: np.array([[10.0]])}, t)
    with pytest.raises(InputError):
        mask_of({2015: np.array([[0.0]])}, t)


def test_sample_nonfire_examples():
    t = GeoTransform(0, 30, 10)
    cand = Grid(np.ones((3, 3)), t)
    fires = Points(np.array([15.0]), np.array([15.0]), np.array([2015]), np.array([1]), np.array([1]))
    all_ = sample_nonfire(cand, fires, 8, seed=1, years=[2015])
    assert len(all_) == 8 and (1, 1) not in set(zip(all_.row.tolist(), all_.col.tolist()))
    with pytest.raises(InsufficientCandidates):
        sample_nonfire(cand, fires, 9, seed=1, years=[2015])
    one = Grid(np.ones((1, 1)), t)
    empty = Points.empty()
    got = sample_nonfire(one, empty, 1, seed=0, years=range(2015, 2022))
    assert len(got) == 1
    with pytest.raises(InsufficientCandidates):
        sample_nonfire(one, empty, 2, seed=0, years=range(2015, 2022))
    assert len(sample_nonfire(one, empty, 7, seed=0, years=range(2015, 2022), unique_across_years=False)) == 7
    a = sample_nonfire(cand, fires, 5, seed=42, years=[2015, 2016])
    b = sample_nonfire(cand, fires, 5, seed=42, years=[2015, 2016])
    assert list(a) == list(b) and np.array_equal(a.month, b.month)


def _synthetic_masks(seed, crs=CrsKind.PLANAR, size=60, rate=0.01):
    rng = np.random.default_rng(seed)
    if crs is CrsKind.PLANAR:
        t = GeoTransform(0, size * 5_000, 5_000)
    else:
        t = GeoTransform(50.0, 36.0, 0.05, CrsKind.GEOGRAPHIC)
    h = w = size
    forest = Grid((rng.random((h, w)) < 0.6).astype(float), t)
    classes = {}
    for y in range(2015, 2023):
        c = np.full((h, w), np.nan)
        hit = rng.random((h, w)) < rate
        c[hit] = rng.choice([7, 8, 9, 9, 9], size=hit.sum())
        classes[y] = Grid(c, t)
    return FireMask(classes), forest


def _assert_scenario_invariants(scn, train, test, mask, forest):
    for s in (train, test):
        if scn in (1, 2):
            assert (forest.values[s.row, s.col] == 1).all()
        keys = set()
        for r, c, y, lab in zip(s.row.tolist(), s.col.tolist(), s.year.tolist(), s.label.tolist()):
            assert (r, c, y) not in keys
            keys.add((r, c, y))
            if lab == NONFIRE:
                assert not mask.classes[y].valid[r, c]
            else:
                assert mask.classes[y].values[r, c] == 9
    assert set(train.year.tolist()) <= set(range(2015, 2022)) and set(test.year.tolist()) == {2022}


@pytest.mark.parametrize("crs", [CrsKind.PLANAR, CrsKind.GEOGRAPHIC])
def test_scenario2_buffer_audit(crs):
    for seed in range(6):
        mask, forest = _synthetic_masks(seed, crs, size=200, rate=0.0005)
        train, test = build_scenario(2, mask, forest, SplitSpec(buffer_km=25), seed=seed)
        d = pairwise_distance_m(test.x, test.y, train.x, train.y, crs)
        assert d.min() >= 25_000
        assert audit_buffer(train, test, crs) >= 25
        _assert_scenario_invariants(2, train, test, mask, forest)


def test_scenario_1_and_3_invariants_and_balance():
    mask, forest = _synthetic_masks(3)
    for scn in (1, 3):
        train, test = build_scenario(scn, mask, forest, SplitSpec(), ratio=1.5, seed=9)
        _assert_scenario_invariants(scn, train, test, mask, forest)
        for s in (train, test):
            n_fire = (s.label == FIRE).sum()
            assert abs((s.label == NONFIRE).sum() - 1.5 * n_fire) <= 1.5
    train3, _ = build_scenario(3, mask, forest, SplitSpec(), seed=9)
    assert (forest.values[train3.row, train3.col] == 0).any()


def test_scenario2_single_point_examples():
    t = GeoTransform(0, 100_000, 1_000)
    classes = {y: np.full((100, 100), np.nan) for y in (2021, 2022)}
    classes[2021][50, 10] = 9
    classes[2022][50, 20] = 9  # 10 km from the training fire
    forest = Grid(np.zeros((100, 100)), t)
    forest_vals = np.zeros((100, 100))
    forest_vals[50, [10, 20, 40]] = 1
    forest = Grid(forest_vals, t)
    split = SplitSpec((2021,), (2022,), 25)
    with pytest.raises((EmptyTestAfterBuffer, InsufficientCandidates)):
        build_scenario(2, FireMask({y: Grid(v, t) for y, v in classes.items()}), forest, split, ratio=0.0)
    classes[2022][50, 20] = np.nan
    classes[2022][50, 40] = 9  # 30 km away
    train, test = build_scenario(2, FireMask({y: Grid(v, t) for y, v in classes.items()}), forest, split,
                                 ratio=0.0)
    assert len(test) == 1 and test.x[0] == 40_500


def test_frame_mismatch():
    mask, forest = _synthetic_masks(1)
    other = Grid(np.ones((10, 10)), GeoTransform(0, 10, 1))
    with pytest.raises(FrameMismatch):
        build_scenario(1, mask, other, SplitSpec())


def test_sample_csv_byte_identical_for_fixed_seed():
    mask, forest = _synthetic_masks(4)
    texts = []
    for _ in range(2):
        train, test = build_scenario(1, mask, forest, SplitSpec(), seed=77)
        texts.append(train.to_csv() + test.to_csv())
    assert texts[0] == texts[1]
    other, _ = build_scenario(1, mask, forest, SplitSpec(), seed=78)
    assert other.to_csv() != texts[0][:len(other.to_csv())]


def test_sample_csv_round_trip():
    mask, forest = _synthetic_masks(5)
    train, _ = build_scenario(1, mask, forest, SplitSpec(), seed=1)
    t = forest.transform
    fs = stack([("dem", BandData.of_static(Grid(np.arange(3600.0).reshape(60, 60), t)))])
    s = attach_features(train, fs)
    text = s.to_csv(header_comment="config_hash=abc")
    back = SampleSet.from_csv(text)
    assert text.startswith("# config_hash=abc\nx,y,year,label,dem\n")
    assert np.array_equal(back.x, s.x) and np.array_equal(back.features, s.features)
    assert np.array_equal(back.labels, s.labels)


def test_attach_features_examples():
    t = GeoTransform(0, 20, 10)
    dem = Grid([[1.0, -9999.0], [3.0, 4.0]], t)
    layers = {2015: Grid([[10.0, 0, ], [0, 0]], t), 2016: Grid([[30.0, 0], [0, 0]], t)}
    band = BandData.of_dynamic(layers)
    fs = stack([("dem", BandData.of_static(dem)), ("t", band)])
    s = SampleSet(np.array([5.0, 15.0, 5.0]), np.array([15.0, 15.0, 5.0]), np.array([2016, 2016, 2015]),
                  np.array([1, 0, 0]), provenance={})
    out = attach_features(s, fs)
    assert out.feature_names == ["dem", "t"] and len(out) == 2
    assert out.provenance["dropped_nodata"] == 1
    assert out.features[0].tolist() == [1.0, anomaly(band, 2016).values[0, 0]] == [1.0, 10.0]
    assert out.features[1].tolist() == [3.0, 0.0]
    far = SampleSet(np.array([500.0]), np.array([5.0]), np.array([2015]), np.array([1]), provenance={})
    with pytest.raises(FrameMismatch):
        attach_features(far, fs)


def test_kfold():
    folds = kfold(10, 5, seed=3)
    assert [len(f) for f in folds] == [2] * 5
    assert sorted(np.concatenate(folds).tolist()) == list(range(10))
    assert all(np.array_equal(a, b) for a, b in zip(folds, kfold(10, 5, seed=3)))
    with pytest.raises(TooFewSamples):
        kfold(3, 5)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 200), st.integers(1, 10), st.integers(0, 1000))
def test_kfold_partition(n, k, seed):
    if n < k:
        return
    folds = kfold(n, k, seed)
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 1
    assert np.array_equal(np.sort(np.concatenate(folds)), np.arange(n))


def test_distances():
    assert pairwise_distance_m(np.array([0.0]), np.array([0.0]), np.array([3.0]), np.array([4.0]),
                               CrsKind.PLANAR)[0, 0] == 5
    d = min_distance_to(np.array([0.0, 10.0]), np.array([0.0, 0.0]), np.array([1.0, 0.0]),
                        np.array([0.0, 0.5]), CrsKind.GEOGRAPHIC)
    assert d[0] == pytest.approx(haversine_m(0, 0, 0, 0.5))
    assert d[1] == pytest.approx(haversine_m(10, 0, 1, 0))


def test_split_spec_validation():
    with pytest.raises(InputError):
        SplitSpec((2015,), (2015,))
    with pytest.raises(InputError):
        SplitSpec(buffer_km=-1)
