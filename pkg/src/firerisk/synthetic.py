"""Synthetic landscapes with a known fire-probability surface.

The generated stack has eight bands. True fire probability per cell and year is
a logistic function of population density, elevation and the soil-moisture
anomaly, plus unobserved noise: a smooth latent field shared by all years and
independent per-cell Gaussian noise. Fire masks are drawn from it.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.ndimage import gaussian_filter

from .ingest import VectorLayer, density_raster, euclidean_distance_raster, save_ascii_grid
from .raster import Aggregation, BandData, BandRole, CrsKind, GeoTransform, Grid, stack
from .sampling import FireMask
from .temporal import anomaly

YEARS = tuple(range(2015, 2023))
TRUE_COEFS = {"population_density": 1.0, "dem": 0.8, "soil_moisture": -3.0}
FIRE_MONTH_WEIGHTS = np.array([2, 2, 3, 4, 6, 9, 12, 12, 9, 5, 3, 2], dtype=float)


@dataclass
class Landscape:
    stack: object
    fire_mask: FireMask
    forest_mask: Grid
    settlements: VectorLayer
    roads: VectorLayer
    truth: dict[int, np.ndarray] = field(default_factory=dict)
    intercept: dict[int, float] = field(default_factory=dict)


def _field(rng, shape, sigma, lo=0.0, hi=1.0):
    f = gaussian_filter(rng.normal(size=shape), sigma, mode="reflect")
    f = (f - f.min()) / (f.max() - f.min())
    return lo + (hi - lo) * f


def _z(a):
    return (a - a.mean()) / a.std()


def make_landscape(seed: int = 7, size: int = 200, cell_size: float = 15_000.0,
                   fires_per_year: float = 40.0, noise_sd: float = 0.3, cloud_fraction: float = 0.01,
                   coefs: dict | None = None, latent_sd: float = 1.0, latent_sigma: float = 3.0) -> Landscape:
    coefs = {**TRUE_COEFS, **(coefs or {})}
    rng = np.random.default_rng(seed)
    shape = (size, size)
    frame = GeoTransform(0.0, size * cell_size, cell_size, CrsKind.PLANAR)

    dem = _field(rng, shape, 12, 0.0, 3500.0)
    gy, gx = np.gradient(dem, cell_size)
    slope = np.degrees(np.arctan(np.hypot(gx, gy) * 50))
    forest = (_field(rng, shape, 10) > 0.45).astype(float)
    land_cover = np.digitize(_field(rng, shape, 6), [0.25, 0.5, 0.75]).astype(float) + 1

    # settlements cluster around a few towns; roads join random town pairs
    towns = rng.uniform(0.1, 0.9, size=(12, 2)) * size * cell_size
    pts = towns[rng.integers(0, len(towns), 600)] + rng.normal(scale=4 * cell_size, size=(600, 2))
    pts = np.clip(pts, 0, size * cell_size - 1)
    settlements = VectorLayer([tuple(p) for p in pts], [], CrsKind.PLANAR)
    lines = [np.array([towns[a], towns[b]]) for a, b in rng.integers(0, len(towns), size=(10, 2)) if a != b]
    roads = VectorLayer([], lines, CrsKind.PLANAR)
    pop = density_raster(settlements, frame, size, size, 3 * cell_size).values * 1e6  # people per km^2 proxy
    road_dist = euclidean_distance_raster(roads, frame, size, size, use_index=True).values

    def dynamic(base, amp, sigma):
        return {y: base + amp * _field(rng, shape, sigma, -1, 1) for y in YEARS}

    ndvi = dynamic(_field(rng, shape, 8, 0.1, 0.7), 0.1, 6)
    temp = dynamic(_field(rng, shape, 15, 12.0, 32.0), 3.0, 10)
    soil = dynamic(_field(rng, shape, 10, 0.05, 0.45), 0.08, 5)

    def grids(layers, holes=True):
        out = {}
        for y, v in layers.items():
            v = v.copy()
            if holes and cloud_fraction > 0:
                v[gaussian_filter(rng.random(shape), 1.5) > np.quantile(gaussian_filter(rng.random(shape), 1.5),
                                                                          1 - cloud_fraction)] = np.nan
            out[y] = Grid(v, frame)
        return out

    fs = stack([
        ("dem", BandData.of_static(Grid(dem, frame), BandRole.TOPOGRAPHIC)),
        ("slope", BandData.of_static(Grid(slope, frame), BandRole.TOPOGRAPHIC)),
        ("population_density", BandData.of_static(Grid(pop, frame), BandRole.ANTHROPOGENIC)),
        ("road_distance", BandData.of_static(Grid(road_dist, frame), BandRole.ANTHROPOGENIC)),
        ("land_cover", BandData.of_static(Grid(land_cover, frame), BandRole.VEGETATION, categorical=True)),
        ("ndvi", BandData.of_dynamic(grids(ndvi), Aggregation.MEAN, BandRole.VEGETATION)),
        ("temperature", BandData.of_dynamic(grids(temp), Aggregation.MEAN, BandRole.CLIMATIC)),
        ("soil_moisture", BandData.of_dynamic(grids(soil), Aggregation.MEDIAN, BandRole.CLIMATIC)),
    ])

    clean_soil = BandData.of_dynamic({y: Grid(v, frame) for y, v in soil.items()})
    z_pop, z_dem = _z(np.log1p(pop)), _z(dem)
    # unobserved, spatially smooth ignition propensity shared by all years
    latent = latent_sd * _z(gaussian_filter(rng.normal(size=shape), latent_sigma, mode="reflect"))
    lin = {}
    for y in YEARS:
        sm = anomaly(clean_soil, y).values
        lin[y] = (coefs["population_density"] * z_pop + coefs["dem"] * z_dem
                  + coefs["soil_moisture"] * _z(sm) + latent + rng.normal(scale=noise_sd, size=shape))
    # per-year intercept so that each year expects fires_per_year forest fires
    truth, classes, months, b0 = {}, {}, {}, {}
    mw = FIRE_MONTH_WEIGHTS / FIRE_MONTH_WEIGHTS.sum()
    for y in YEARS:
        lo, hi = -40.0, 10.0
        for _ in range(60):
            mid = (lo + hi) / 2
            expected = (1 / (1 + np.exp(-(lin[y] + mid))))[forest == 1].sum()
            lo, hi = (mid, hi) if expected < fires_per_year else (lo, mid)
        b0[y] = (lo + hi) / 2
        p = 1 / (1 + np.exp(-(lin[y] + b0[y])))
        truth[y] = p
        fire = rng.random(shape) < p
        conf = np.where(rng.random(shape) < 0.85, 9, rng.integers(7, 9, size=shape))
        classes[y] = Grid(np.where(fire, conf, np.nan), frame)
        months[y] = Grid(np.where(fire, rng.choice(np.arange(1, 13), size=shape, p=mw), np.nan), frame)
    return Landscape(fs, FireMask(classes, months), Grid(forest, frame), settlements, roads, truth, b0)


def _geojson(layer: VectorLayer) -> dict:
    feats = [{"type": "Feature", "properties": {}, "geometry": {"type": "Point", "coordinates": list(p)}}
             for p in layer.points]
    feats += [{"type": "Feature", "properties": {},
               "geometry": {"type": "LineString", "coordinates": line.tolist()}} for line in layer.polylines]
    return {"type": "FeatureCollection", "features": feats}


def write_fixture(out_dir, seed: int = 7, **kwargs) -> Path:
    """Write a landscape as ASCII grids and GeoJSON plus a ready-to-run ``config.toml``.

    Population density and road distance are left for the ingest stage to derive
    from the vector layers.
    """
    out = Path(out_dir)
    (out / "grids").mkdir(parents=True, exist_ok=True)
    land = make_landscape(seed, **kwargs)
    fs = land.stack
    lines = ["# synthetic wildfire landscape", f"seed = {seed}", 'output_dir = "out"', "",
             "[inputs]", 'crs = "planar"', 'frame = "dem"',
             'fire_mask = { ' + ", ".join(f'"{y}" = "grids/fire_{y}.asc"' for y in land.fire_mask.years) + " }",
             'fire_months = { ' + ", ".join(f'"{y}" = "grids/fire_month_{y}.asc"' for y in land.fire_mask.years)
             + " }",
             'forest_mask = "grids/forest.asc"', ""]
    for name in fs.names:
        band = fs[name]
        if name in ("population_density", "road_distance"):
            continue
        lines.append("[[bands]]")
        lines.append(f'name = "{name}"')
        lines.append(f'role = "{band.role.value}"')
        if band.categorical:
            lines.append("categorical = true")
        if band.is_dynamic:
            lines.append(f'aggregation = "{band.aggregation.value}"')
            paths = {}
            for y, g in band.layers.items():
                paths[y] = f"grids/{name}_{y}.asc"
                save_ascii_grid(g, out / paths[y])
            lines.append("paths = { " + ", ".join(f'"{y}" = "{p}"' for y, p in paths.items()) + " }")
        else:
            save_ascii_grid(band.static, out / f"grids/{name}.asc")
            lines.append(f'path = "grids/{name}.asc"')
        lines.append("")
    (out / "settlements.geojson").write_text(json.dumps(_geojson(land.settlements)))
    (out / "roads.geojson").write_text(json.dumps(_geojson(land.roads)))
    lines += ["[[derived]]", 'name = "population_density"', 'kind = "density"', 'source = "settlements.geojson"',
              f"radius = {3 * fs.transform.cell_size!r}", 'role = "anthropogenic"', "",
              "[[derived]]", 'name = "road_distance"', 'kind = "distance"', 'source = "roads.geojson"',
              'role = "anthropogenic"', ""]
    for y in land.fire_mask.years:
        save_ascii_grid(land.fire_mask.classes[y], out / f"grids/fire_{y}.asc")
        save_ascii_grid(land.fire_mask.months[y], out / f"grids/fire_month_{y}.asc")
    save_ascii_grid(land.forest_mask, out / "grids/forest.asc")
    lines += ["[impute]", 'method = "knn"', "k = 8", "max_radius = 10", "",
              "[sampling]", "scenario = 1", "ratio = 1.0", "buffer_km = 25.0",
              "train_years = [2015, 2016, 2017, 2018, 2019, 2020, 2021]", "test_years = [2022]", "",
              "[features]", 'year_mode = "per_year_anomaly"', "",
              "[models]", 'train = ["dt", "rf", "gbt", "xgb", "knn", "svm"]', 'maps = ["gbt", "knn", "xgb", "rf"]',
              "map_year = 2022", ""]
    (out / "config.toml").write_text("\n".join(lines))
    return out
