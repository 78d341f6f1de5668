"""Declarative pipeline configuration (TOML) and labeled seed derivation."""

from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

import tomli

from .errors import ConfigError, InputError
from .models import MODEL_KINDS
from .models.params import PARAMS_BY_KIND
from .raster import Aggregation, BandRole, CrsKind
from .sampling import DEFAULT_TEST_YEARS, DEFAULT_TRAIN_YEARS
from .temporal import YearMode


def derive_seed(seed: int, label: str) -> int:
    """Stage seed from the run seed and a fixed label, independent of other stages."""
    digest = hashlib.sha256(f"{int(seed)}/{label}".encode()).digest()
    return int.from_bytes(digest[:8], "big") >> 1


@dataclass
class BandSpec:
    name: str
    role: str = BandRole.TOPOGRAPHIC.value
    categorical: bool = False
    aggregation: str = Aggregation.MEAN.value
    path: str | None = None
    paths: dict[int, str] | None = None
    categories: list[float] | None = None

    @property
    def kind(self) -> str:
        return "static" if self.paths is None else "dynamic"


@dataclass
class DerivedSpec:
    name: str
    kind: str
    source: str
    radius: float | None = None
    role: str = BandRole.ANTHROPOGENIC.value


@dataclass
class ImputeSpec:
    method: str = "knn"
    k: int = 8
    max_radius: float = 10
    clusters: int = 8


@dataclass
class SamplingSpec:
    scenario: int = 1
    ratio: float = 1.0
    buffer_km: float = 25.0
    train_years: list[int] = field(default_factory=lambda: list(DEFAULT_TRAIN_YEARS))
    test_years: list[int] = field(default_factory=lambda: list(DEFAULT_TEST_YEARS))
    min_class: int = 9


@dataclass
class ModelsSpec:
    train: list[str] = field(default_factory=lambda: list(MODEL_KINDS))
    maps: list[str] = field(default_factory=lambda: ["gbt", "knn", "xgb", "rf"])
    map_year: int | None = None
    params: dict[str, dict] = field(default_factory=dict)


@dataclass
class EvaluateSpec:
    threshold: float = 0.5
    cv_folds: int = 5
    seasonal: bool = True


@dataclass
class PipelineConfig:
    seed: int
    base_dir: Path
    output_dir: Path
    crs: str
    frame: str
    fire_mask: dict[int, str]
    forest_mask: str | None
    bands: list[BandSpec]
    fire_months: dict[int, str] | None = None
    derived: list[DerivedSpec] = field(default_factory=list)
    impute: ImputeSpec = field(default_factory=ImputeSpec)
    sampling: SamplingSpec = field(default_factory=SamplingSpec)
    year_mode: str = YearMode.PER_YEAR_ANOMALY.value
    bins: int = 16
    models: ModelsSpec = field(default_factory=ModelsSpec)
    evaluate: EvaluateSpec = field(default_factory=EvaluateSpec)
    map_method: str = "quantile"

    def resolve(self, rel: str) -> Path:
        return self.base_dir / rel

    @property
    def crs_kind(self) -> CrsKind:
        return CrsKind(self.crs)

    def canonical(self) -> dict:
        """Everything that affects results; paths stay as written, the output directory is left out."""
        d = asdict(self)
        d.pop("base_dir")
        d.pop("output_dir")
        return d

    def config_hash(self) -> str:
        text = json.dumps(self.canonical(), sort_keys=True, default=str)
        return hashlib.sha256(text.encode()).hexdigest()

    def input_files(self) -> dict[str, str]:
        """Config key -> relative path of every referenced input file."""
        out = {f"inputs.fire_mask.{y}": p for y, p in self.fire_mask.items()}
        if self.fire_months:
            out.update({f"inputs.fire_months.{y}": p for y, p in self.fire_months.items()})
        if self.forest_mask:
            out["inputs.forest_mask"] = self.forest_mask
        for b in self.bands:
            if b.path is not None:
                out[f"bands.{b.name}.path"] = b.path
            for y, p in (b.paths or {}).items():
                out[f"bands.{b.name}.paths.{y}"] = p
        for d in self.derived:
            out[f"derived.{d.name}.source"] = d.source
        return out


def _take(table: dict, where: str, allowed: set[str]) -> dict:
    if not isinstance(table, dict):
        raise ConfigError(f"{where} must be a table")
    unknown = sorted(set(table) - allowed)
    if unknown:
        raise ConfigError(f"unknown key {where}.{unknown[0]}")
    return table


def _years_map(d, where: str) -> dict[int, str]:
    if not isinstance(d, dict) or not d:
        raise ConfigError(f"{where} must be a non-empty table of year = path")
    try:
        return {int(k): str(v) for k, v in sorted(d.items(), key=lambda kv: int(kv[0]))}
    except ValueError:
        raise ConfigError(f"{where} keys must be years") from None


def _enum(value, enum_cls, where):
    try:
        return enum_cls(value).value
    except ValueError:
        raise ConfigError(f"{where} = {value!r} is not one of {[e.value for e in enum_cls]}") from None


def parse_config(doc: dict, base_dir: Path, check_files: bool = True) -> PipelineConfig:
    _take(doc, "config", {"seed", "output_dir", "inputs", "bands", "derived", "impute", "sampling", "features",
                          "analysis", "models", "evaluate", "map"})
    if "seed" not in doc:
        raise ConfigError("missing key seed")
    if not isinstance(doc["seed"], int) or isinstance(doc["seed"], bool):
        raise ConfigError("seed must be an integer")
    inputs = _take(doc.get("inputs", {}), "inputs", {"crs", "frame", "fire_mask", "fire_months", "forest_mask"})
    if "fire_mask" not in inputs:
        raise ConfigError("missing key inputs.fire_mask")
    crs = _enum(inputs.get("crs", "planar"), CrsKind, "inputs.crs")

    bands = []
    for i, b in enumerate(doc.get("bands", [])):
        where = f"bands[{i}]"
        _take(b, where, {"name", "kind", "role", "categorical", "aggregation", "path", "paths", "categories"})
        if "name" not in b:
            raise ConfigError(f"missing key {where}.name")
        if ("path" in b) == ("paths" in b):
            raise ConfigError(f"{where} needs exactly one of path or paths")
        spec = BandSpec(name=str(b["name"]), role=_enum(b.get("role", "topographic"), BandRole, f"{where}.role"),
                        categorical=bool(b.get("categorical", False)),
                        aggregation=_enum(b.get("aggregation", "mean"), Aggregation, f"{where}.aggregation"),
                        path=b.get("path"), paths=_years_map(b["paths"], f"{where}.paths") if "paths" in b else None,
                        categories=[float(c) for c in b["categories"]] if "categories" in b else None)
        if "kind" in b and b["kind"] != spec.kind:
            raise ConfigError(f"{where}.kind = {b['kind']!r} contradicts its path declaration")
        bands.append(spec)
    derived = []
    for i, d in enumerate(doc.get("derived", [])):
        where = f"derived[{i}]"
        _take(d, where, {"name", "kind", "source", "radius", "role"})
        for key in ("name", "kind", "source"):
            if key not in d:
                raise ConfigError(f"missing key {where}.{key}")
        if d["kind"] not in ("distance", "density"):
            raise ConfigError(f"{where}.kind must be distance or density")
        if d["kind"] == "density" and "radius" not in d:
            raise ConfigError(f"missing key {where}.radius")
        derived.append(DerivedSpec(str(d["name"]), d["kind"], str(d["source"]),
                                   float(d["radius"]) if "radius" in d else None,
                                   _enum(d.get("role", "anthropogenic"), BandRole, f"{where}.role")))
    if not bands:
        raise ConfigError("at least one [[bands]] entry is required")
    names = [b.name for b in bands] + [d.name for d in derived]
    if len(set(names)) != len(names):
        raise ConfigError("band names must be unique")
    frame = inputs.get("frame", bands[0].name)
    if frame not in [b.name for b in bands]:
        raise ConfigError(f"inputs.frame = {frame!r} names no declared band")

    imp = _take(doc.get("impute", {}), "impute", {"method", "k", "max_radius", "clusters"})
    impute = ImputeSpec(**imp)
    if impute.method not in ("knn", "kmeans", "none"):
        raise ConfigError("impute.method must be knn, kmeans or none")

    smp = _take(doc.get("sampling", {}), "sampling",
                {"scenario", "ratio", "buffer_km", "train_years", "test_years", "min_class"})
    sampling = SamplingSpec(**smp)
    if sampling.scenario not in (1, 2, 3):
        raise ConfigError(f"sampling.scenario must be 1, 2 or 3, got {sampling.scenario!r}")
    if sampling.ratio <= 0 or sampling.buffer_km < 0:
        raise ConfigError("sampling.ratio must be positive and sampling.buffer_km nonnegative")
    if set(sampling.train_years) & set(sampling.test_years):
        raise ConfigError("sampling.train_years and sampling.test_years overlap")
    forest = inputs.get("forest_mask")
    if sampling.scenario in (1, 2) and forest is None:
        raise ConfigError(f"scenario {sampling.scenario} needs inputs.forest_mask")

    feats = _take(doc.get("features", {}), "features", {"year_mode"})
    year_mode = _enum(feats.get("year_mode", YearMode.PER_YEAR_ANOMALY.value), YearMode, "features.year_mode")
    bins = int(_take(doc.get("analysis", {}), "analysis", {"bins"}).get("bins", 16))

    mdl = _take(doc.get("models", {}), "models", {"train", "maps", "map_year", "params"})
    models = ModelsSpec(**{k: v for k, v in mdl.items() if k != "params"})
    for kind in [*models.train, *models.maps]:
        if kind not in MODEL_KINDS:
            raise ConfigError(f"unknown model kind {kind!r}")
    missing = sorted(set(models.maps) - set(models.train))
    if missing:
        raise ConfigError(f"models.maps lists {missing[0]!r}, which is not trained")
    params = _take(mdl.get("params", {}), "models.params", set(MODEL_KINDS))
    for kind, over in params.items():
        PARAMS_BY_KIND[kind].from_dict(over)  # validates keys and values
    models.params = {k: dict(v) for k, v in params.items()}
    if models.map_year is None:
        models.map_year = max(sampling.test_years)

    ev = _take(doc.get("evaluate", {}), "evaluate", {"threshold", "cv_folds", "seasonal"})
    evaluate = EvaluateSpec(**ev)
    mp = _take(doc.get("map", {}), "map", {"method"})
    if mp.get("method", "quantile") not in ("quantile", "jenks"):
        raise ConfigError("map.method must be quantile or jenks")

    cfg = PipelineConfig(
        seed=doc["seed"], base_dir=base_dir, output_dir=base_dir / doc.get("output_dir", "out"), crs=crs,
        frame=frame, fire_mask=_years_map(inputs["fire_mask"], "inputs.fire_mask"),
        fire_months=_years_map(inputs["fire_months"], "inputs.fire_months") if "fire_months" in inputs else None,
        forest_mask=forest, bands=bands, derived=derived, impute=impute, sampling=sampling, year_mode=year_mode,
        bins=bins, models=models, evaluate=evaluate, map_method=mp.get("method", "quantile"))
    if check_files:
        for key, rel in cfg.input_files().items():
            if not cfg.resolve(rel).is_file():
                raise InputError(f"{key}: file not found: {rel}")
    return cfg


def load_config(path, seed: int | None = None, out: str | None = None, check_files: bool = True) -> PipelineConfig:
    path = Path(path)
    try:
        doc = tomli.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    if seed is not None:
        doc["seed"] = seed
    try:
        cfg = parse_config(doc, path.resolve().parent, check_files)
    except TypeError as exc:  # wrong value types inside sub-tables
        raise ConfigError(str(exc)) from None
    if out is not None:
        cfg.output_dir = Path(out).resolve()
    return cfg
