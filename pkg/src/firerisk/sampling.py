"""Fire / non-fire sample construction, sampling scenarios, temporal splits and K-fold."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field, replace
from typing import IO, Iterable, Mapping, Sequence

import numpy as np

from .errors import (
    EmptyTestAfterBuffer,
    FrameMismatch,
    InputError,
    InsufficientCandidates,
    OutOfBounds,
    TooFewSamples,
)
from .ingest import haversine_m
from .raster import CrsKind, GeoTransform, Grid, cell_centers, cells_of
from .temporal import FeatureResolver, YearMode

FIRE, NONFIRE = 1, 0
DEFAULT_TRAIN_YEARS = tuple(range(2015, 2022))
DEFAULT_TEST_YEARS = (2022,)


@dataclass
class FireMask:
    """Per-year confidence-class grids (1..9 or nodata), optionally with detection months."""

    classes: dict[int, Grid]
    months: dict[int, Grid] = field(default_factory=dict)

    def __post_init__(self):
        self.classes = {int(y): g for y, g in sorted(self.classes.items())}
        self.months = {int(y): g for y, g in sorted((self.months or {}).items())}
        for year, g in self.classes.items():
            v = g.values[g.valid]
            if v.size and (np.any(v < 1) or np.any(v > 9) or np.any(v != np.round(v))):
                raise InputError(f"fire mask {year} has classes outside 1..9")

    @property
    def years(self) -> list[int]:
        return list(self.classes)

    @property
    def reference(self) -> Grid:
        return next(iter(self.classes.values()))


@dataclass
class Points:
    """Column arrays of located, dated points (cell indices included)."""

    x: np.ndarray
    y: np.ndarray
    year: np.ndarray
    row: np.ndarray
    col: np.ndarray
    month: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.x)

    def __iter__(self):
        return iter(zip(self.x.tolist(), self.y.tolist(), self.year.tolist()))

    def subset(self, idx) -> Points:
        return Points(self.x[idx], self.y[idx], self.year[idx], self.row[idx], self.col[idx],
                      None if self.month is None else self.month[idx])

    @staticmethod
    def concat(parts: Sequence[Points]) -> Points:
        months = None
        if all(p.month is not None for p in parts):
            months = np.concatenate([p.month for p in parts])
        return Points(*(np.concatenate([getattr(p, a) for p in parts]) for a in ("x", "y", "year", "row", "col")),
                      month=months)

    @classmethod
    def empty(cls) -> Points:
        z = np.empty(0)
        zi = np.empty(0, dtype=np.int64)
        return cls(z, z.copy(), zi, zi.copy(), zi.copy())


def extract_fire_points(mask: FireMask, min_class: int = 9, years: Iterable[int] | None = None) -> Points:
    """Cell centers of every cell with confidence class >= ``min_class``, per year."""
    wanted = mask.years if years is None else [y for y in mask.years if y in set(years)]
    parts = []
    for year in wanted:
        g = mask.classes[year]
        hit = g.valid & (g.values >= min_class)
        rows, cols = np.nonzero(hit)
        xs, ys = cell_centers(g.transform, g.width, g.height)
        month = None
        if year in mask.months:
            month = mask.months[year].values[rows, cols].astype(np.int64)
        parts.append(Points(xs[rows, cols], ys[rows, cols], np.full(len(rows), year, dtype=np.int64),
                            rows.astype(np.int64), cols.astype(np.int64), month))
    return Points.concat(parts) if parts else Points.empty()


def sample_nonfire(candidate_mask: Grid, fire_points: Points, n: int, seed: int,
                   unique_across_years: bool = True, years: Sequence[int] | None = None,
                   exclude: Mapping[int, np.ndarray] | None = None,
                   used_cells: np.ndarray | None = None) -> Points:
    """Uniform draw without replacement over eligible (cell, year) pairs.

    A cell is eligible in a year when ``candidate_mask == 1`` there and it is
    neither a fire point nor flagged in ``exclude[year]`` for that year. With
    ``unique_across_years`` a cell is used at most once over all years (and
    never if listed in ``used_cells``).
    """
    if years is None:
        years = sorted(set(fire_points.year.tolist()))
    years = sorted(int(y) for y in years)
    h, w = candidate_mask.shape
    base = candidate_mask.valid & (candidate_mask.values == 1)
    cell_ids, year_ids = [], []
    for year in years:
        ok = base.copy()
        sel = fire_points.year == year
        ok[fire_points.row[sel], fire_points.col[sel]] = False
        if exclude is not None and year in exclude:
            ok &= ~exclude[year]
        ids = np.flatnonzero(ok)
        cell_ids.append(ids)
        year_ids.append(np.full(len(ids), year, dtype=np.int64))
    cells = np.concatenate(cell_ids) if cell_ids else np.empty(0, dtype=np.int64)
    yrs = np.concatenate(year_ids) if year_ids else np.empty(0, dtype=np.int64)
    if unique_across_years and used_cells is not None and len(used_cells):
        keep = ~np.isin(cells, used_cells)
        cells, yrs = cells[keep], yrs[keep]
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(cells))
    if unique_across_years:
        # first appearance of each cell in the shuffled order
        _, first = np.unique(cells[order], return_index=True)
        order = order[np.sort(first)]
    if len(order) < n:
        raise InsufficientCandidates(f"{len(order)} eligible candidates for {n} non-fire samples")
    pick = order[:n]
    rows, cols = np.divmod(cells[pick], w)
    xs, ys = cell_centers(candidate_mask.transform, w, h)
    months = rng.integers(1, 13, size=n)
    return Points(xs[rows, cols], ys[rows, cols], yrs[pick], rows, cols, months)


@dataclass(frozen=True)
class SplitSpec:
    train_years: tuple[int, ...] = DEFAULT_TRAIN_YEARS
    test_years: tuple[int, ...] = DEFAULT_TEST_YEARS
    buffer_km: float = 25.0

    def __post_init__(self):
        object.__setattr__(self, "train_years", tuple(sorted(int(y) for y in self.train_years)))
        object.__setattr__(self, "test_years", tuple(sorted(int(y) for y in self.test_years)))
        if set(self.train_years) & set(self.test_years):
            raise InputError("train and test years overlap")
        if not self.buffer_km >= 0:
            raise InputError("buffer_km must be nonnegative")


@dataclass
class SampleSet:
    """Labelled point table; ``features`` is ``(n, len(feature_names))`` once attached."""

    x: np.ndarray
    y: np.ndarray
    year: np.ndarray
    label: np.ndarray
    month: np.ndarray | None = None
    row: np.ndarray | None = None
    col: np.ndarray | None = None
    feature_names: list[str] = field(default_factory=list)
    features: np.ndarray | None = None
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        self.year = np.asarray(self.year, dtype=np.int64)
        self.label = np.asarray(self.label, dtype=np.int64)
        if not np.isin(self.label, (0, 1)).all():
            raise InputError("labels must be 0 or 1")
        if self.features is None:
            self.features = np.empty((len(self.x), len(self.feature_names)))

    def __len__(self) -> int:
        return len(self.x)

    @property
    def labels(self) -> np.ndarray:
        return self.label

    def feature_matrix(self) -> np.ndarray:
        return self.features

    @classmethod
    def from_points(cls, fire: Points, nonfire: Points, provenance: dict | None = None) -> SampleSet:
        pts = Points.concat([fire, nonfire])
        labels = np.concatenate([np.ones(len(fire), dtype=np.int64), np.zeros(len(nonfire), dtype=np.int64)])
        return cls(pts.x, pts.y, pts.year, labels, pts.month, pts.row, pts.col,
                   provenance=dict(provenance or {}))

    def subset(self, idx) -> SampleSet:
        idx = np.asarray(idx)
        pick = lambda a: None if a is None else a[idx]  # noqa: E731
        return replace(self, x=self.x[idx], y=self.y[idx], year=self.year[idx], label=self.label[idx],
                       month=pick(self.month), row=pick(self.row), col=pick(self.col),
                       features=self.features[idx], provenance=dict(self.provenance))

    def to_csv(self, stream: IO[str] | None = None, header_comment: str | None = None) -> str | None:
        """``x,y,year,label[,month],<features...>``; returns text if no stream."""
        out = io.StringIO() if stream is None else stream
        if header_comment:
            out.write(f"# {header_comment}\n")
        w = csv.writer(out, lineterminator="\n")
        has_month = self.month is not None
        w.writerow(["x", "y", "year", "label", *(["month"] if has_month else []), *self.feature_names])
        for i in range(len(self)):
            row = [repr(float(self.x[i])), repr(float(self.y[i])), int(self.year[i]), int(self.label[i])]
            if has_month:
                row.append(int(self.month[i]))
            row.extend(repr(float(v)) for v in self.features[i])
            w.writerow(row)
        return out.getvalue() if stream is None else None

    @classmethod
    def from_csv(cls, stream: IO[str] | str, provenance: dict | None = None) -> SampleSet:
        fh = io.StringIO(stream) if isinstance(stream, str) else stream
        lines = [ln for ln in fh.read().splitlines() if ln and not ln.startswith("#")]
        reader = csv.reader(lines)
        header = next(reader)
        if header[:4] != ["x", "y", "year", "label"]:
            raise InputError("sample CSV header must start with x,y,year,label")
        has_month = len(header) > 4 and header[4] == "month"
        start = 5 if has_month else 4
        data = np.array([[float(v) for v in r] for r in reader], dtype=float).reshape(-1, len(header))
        return cls(data[:, 0], data[:, 1], data[:, 2].astype(np.int64), data[:, 3].astype(np.int64),
                   data[:, 4].astype(np.int64) if has_month else None,
                   feature_names=header[start:], features=data[:, start:].copy(),
                   provenance=dict(provenance or {}))

    def provenance_json(self) -> str:
        return json.dumps(self.provenance, indent=2, sort_keys=True, default=_json_default)


def _json_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def pairwise_distance_m(ax, ay, bx, by, crs_kind: CrsKind) -> np.ndarray:
    """All-pairs distances in metres; planar frames are taken to be in metres."""
    if crs_kind is CrsKind.GEOGRAPHIC:
        return haversine_m(np.asarray(ax)[:, None], np.asarray(ay)[:, None],
                           np.asarray(bx)[None, :], np.asarray(by)[None, :])
    return np.hypot(np.asarray(ax)[:, None] - np.asarray(bx)[None, :],
                    np.asarray(ay)[:, None] - np.asarray(by)[None, :])


def min_distance_to(ax, ay, bx, by, crs_kind: CrsKind, chunk: int = 2048) -> np.ndarray:
    """For each point ``a``, the exact minimum distance to any point ``b`` (metres)."""
    ax, ay = np.asarray(ax, dtype=float), np.asarray(ay, dtype=float)
    out = np.full(len(ax), np.inf)
    if len(bx) == 0:
        return out
    for lo in range(0, len(ax), chunk):
        out[lo:lo + chunk] = pairwise_distance_m(ax[lo:lo + chunk], ay[lo:lo + chunk], bx, by, crs_kind).min(axis=1)
    return out


def _split_seeds(seed: int, n: int) -> list[int]:
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(seed).spawn(n)]


def build_scenario(scenario: int, fire_mask: FireMask, forest_mask: Grid | None, split: SplitSpec,
                   ratio: float = 1.0, seed: int = 0, min_class: int = 9,
                   unique_across_years: bool = True) -> tuple[SampleSet, SampleSet]:
    """Train/test sample sets for one of the three sampling scenarios.

    1: fire and non-fire samples from forest cells only.
    2: as 1, then every test sample within ``split.buffer_km`` of any training
       sample is discarded.
    3: forest mask ignored.
    """
    if scenario not in (1, 2, 3):
        raise InputError(f"scenario must be 1, 2 or 3, got {scenario}")
    ref = fire_mask.reference
    for year, g in fire_mask.classes.items():
        if not g.same_frame(ref):
            raise FrameMismatch(f"fire mask {year} frame differs")
    if scenario in (1, 2):
        if forest_mask is None:
            raise InputError(f"scenario {scenario} needs a forest mask")
        if not forest_mask.same_frame(ref):
            raise FrameMismatch("forest mask and fire mask frames differ")
        candidate = forest_mask
    else:
        candidate = ref.with_values(np.ones(ref.shape))
    eligible = candidate.valid & (candidate.values == 1)

    # any detection, at whatever confidence, disqualifies a cell as non-fire that year
    detected = {y: g.valid for y, g in fire_mask.classes.items()}

    def fires(years):
        pts = extract_fire_points(fire_mask, min_class, years)
        return pts.subset(eligible[pts.row, pts.col])

    s_train, s_test = _split_seeds(seed, 2)
    train_years = [y for y in split.train_years if y in fire_mask.classes]
    test_years = [y for y in split.test_years if y in fire_mask.classes]
    fire_tr, fire_te = fires(train_years), fires(test_years)
    n_tr = int(round(ratio * len(fire_tr)))
    n_te = int(round(ratio * len(fire_te)))
    non_tr = sample_nonfire(candidate, fire_tr, n_tr, s_train, unique_across_years, train_years, detected)
    used = non_tr.row * ref.width + non_tr.col
    non_te = sample_nonfire(candidate, fire_te, n_te, s_test, unique_across_years, test_years, detected,
                            used_cells=used)
    prov = {"scenario": scenario, "seed": seed, "min_class": min_class, "ratio": ratio,
            "train_years": list(split.train_years), "test_years": list(split.test_years),
            "buffer_km": split.buffer_km if scenario == 2 else 0.0,
            "unique_across_years": unique_across_years}
    train = SampleSet.from_points(fire_tr, non_tr, {**prov, "role": "train"})
    test = SampleSet.from_points(fire_te, non_te, {**prov, "role": "test"})
    if scenario == 2 and split.buffer_km > 0:
        d = min_distance_to(test.x, test.y, train.x, train.y, ref.transform.crs_kind)
        keep = d >= split.buffer_km * 1000.0
        discarded = int((~keep).sum())
        test = test.subset(np.flatnonzero(keep))
        test.provenance["buffer_discarded"] = discarded
        if len(test) == 0:
            raise EmptyTestAfterBuffer(f"all {discarded} test samples lie within {split.buffer_km} km of training")
    for s in (train, test):
        s.provenance["n_fire"] = int((s.label == FIRE).sum())
        s.provenance["n_nonfire"] = int((s.label == NONFIRE).sum())
    return train, test


def audit_buffer(train: SampleSet, test: SampleSet, crs_kind: CrsKind) -> float:
    """Exact minimum train-test distance in km over all pairs."""
    if len(train) == 0 or len(test) == 0:
        return float("inf")
    return float(min_distance_to(test.x, test.y, train.x, train.y, crs_kind).min() / 1000.0)


def attach_features(samples: SampleSet, stack, year_mode: YearMode | str = YearMode.PER_YEAR_ANOMALY) -> SampleSet:
    """Read every band at each sample's cell; samples with any nodata feature are dropped.

    ``stack`` may also be a prepared :class:`FeatureResolver`, whose mode then wins.
    """
    resolver = stack if isinstance(stack, FeatureResolver) else FeatureResolver(stack, year_mode)
    stack, year_mode = resolver.stack, resolver.year_mode
    h, w = stack.shape
    try:
        rows, cols = cells_of(stack.transform, samples.x, samples.y, w, h)
    except OutOfBounds as exc:
        raise FrameMismatch(f"sample outside the feature stack: {exc}") from None
    names = stack.names
    feats = np.empty((len(samples), len(names)))
    ok = np.ones(len(samples), dtype=bool)
    years = samples.year
    for year in np.unique(years):
        sel = np.flatnonzero(years == year)
        for j, name in enumerate(names):
            g = resolver.grid(name, int(year))
            vals = g.values[rows[sel], cols[sel]]
            ok[sel] &= vals != g.nodata
            feats[sel, j] = vals
    keep = np.flatnonzero(ok)
    out = samples.subset(keep)
    out.feature_names = list(names)
    out.features = feats[keep]
    out.provenance["year_mode"] = YearMode(year_mode).value
    out.provenance["dropped_nodata"] = int(len(samples) - len(keep)) + int(samples.provenance.get("dropped_nodata", 0))
    return out


def kfold(n: int, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Shuffled partition of ``range(n)`` into ``k`` folds whose sizes differ by at most one."""
    if k < 1:
        raise InputError("k must be positive")
    if n < k:
        raise TooFewSamples(f"{n} samples for {k} folds")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(f) for f in np.array_split(perm, k)]
