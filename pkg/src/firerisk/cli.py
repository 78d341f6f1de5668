"""Command-line pipeline: ingest, impute, features, sample, analyze, train, evaluate, map.

Each stage reads the previous stages' artifacts from the output directory and
writes its own, so ``pipeline`` is exactly the stages run one after another.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import os
import sys
import time
import warnings
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import nmi_feature_scores, pearson_matrix, vif_scores, write_matrix_csv
from .config import PipelineConfig, derive_seed, load_config
from .errors import ConfigError, ConvergenceWarning, EmptySeason, FireRiskError, InputError, NotSupported, \
    NumericError, SingleClass, TooFewSamples
from .evaluation import metrics, roc_auc, seasonal_eval_sets
from .imputation import kmeans_impute, knn_impute
from .ingest import density_raster, euclidean_distance_raster, label_encode, load_ascii_grid, \
    load_vector_geojson, save_ascii_grid
from .models import feature_importance, model_from_json, train
from .raster import BandData, CrsKind, GeoTransform, Grid, align, stack
from .riskmap import build_risk_map, predict_grid, render_map
from .sampling import FireMask, SampleSet, SplitSpec, attach_features, audit_buffer, build_scenario, kfold
from .temporal import FeatureResolver

STAGES = ("ingest", "impute", "features", "sample", "analyze", "train", "evaluate", "map")
EXIT_CONFIG, EXIT_INPUT, EXIT_NUMERIC = 2, 3, 4


# --------------------------------------------------------------------------
# Artifact storage
# --------------------------------------------------------------------------

def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _dump_json(path: Path, obj) -> Path:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    return path


def _load_json(path: Path) -> dict:
    try:
        return json.loads(path.read_text())
    except FileNotFoundError:
        raise InputError(f"missing stage artifact {path}; run the earlier stages first") from None


def _grid_key(name: str, year) -> str:
    return name if year is None else f"{name}@{year}"


def _save_grids(folder: Path, grids: dict[str, Grid]) -> dict:
    """One ``.npy`` per grid (bit exact, no timestamps) and their frames for the descriptor."""
    folder.mkdir(parents=True, exist_ok=True)
    meta = {}
    for key, g in grids.items():
        np.save(folder / f"{key}.npy", g.values, allow_pickle=False)
        t = g.transform
        meta[key] = {"origin_x": t.origin_x, "origin_y": t.origin_y, "cell_size": t.cell_size,
                     "crs_kind": t.crs_kind.value, "nodata": g.nodata}
    return meta


def _load_grid(folder: Path, key: str, meta: dict) -> Grid:
    m = meta[key]
    try:
        values = np.load(folder / f"{key}.npy", allow_pickle=False)
    except FileNotFoundError:
        raise InputError(f"missing stage artifact {folder / key}.npy") from None
    t = GeoTransform(m["origin_x"], m["origin_y"], m["cell_size"], CrsKind(m["crs_kind"]))
    return Grid(values, t, m["nodata"])


def _save_stack(folder: Path, fs, cfg_hash: str, extra: dict | None = None) -> None:
    grids, bands = {}, []
    for name in fs.names:
        band = fs[name]
        info = {"name": name, "role": band.role.value, "categorical": band.categorical,
                "aggregation": band.aggregation.value, "years": band.years}
        if band.is_dynamic:
            grids.update({_grid_key(name, y): g for y, g in band.layers.items()})
        else:
            grids[name] = band.static
        bands.append(info)
    meta = _save_grids(folder / "grids", grids)
    _dump_json(folder / "stack.json", {"config_hash": cfg_hash, "bands": bands, "grids": meta, **(extra or {})})


def _load_stack(folder: Path):
    desc = _load_json(folder / "stack.json")
    meta = desc["grids"]
    bands = []
    for b in desc["bands"]:
        if b["years"]:
            layers = {y: _load_grid(folder / "grids", _grid_key(b["name"], y), meta) for y in b["years"]}
            band = BandData.of_dynamic(layers, b["aggregation"], b["role"], b["categorical"])
        else:
            band = BandData.of_static(_load_grid(folder / "grids", b["name"], meta), b["role"], b["categorical"])
        bands.append((b["name"], band))
    return stack(bands), desc


def _load_masks(out: Path) -> tuple[FireMask, Grid | None]:
    desc = _load_json(out / "ingest" / "masks.json")
    folder, meta = out / "ingest" / "masks", desc["grids"]
    classes = {int(y): _load_grid(folder, f"fire@{y}", meta) for y in desc["years"]}
    months = {int(y): _load_grid(folder, f"month@{y}", meta) for y in desc["years"]} if desc["months"] else None
    forest = _load_grid(folder, "forest", meta) if "forest" in meta else None
    return FireMask(classes, months), forest


def _load_resolver(cfg: PipelineConfig) -> FeatureResolver:
    out = cfg.output_dir
    fs, _ = _load_stack(out / "impute")
    desc = _load_json(out / "features" / "features.json")
    folder = out / "features" / "grids"
    cache = {}
    for entry in desc["entries"]:
        cache[(entry["name"], entry["year"])] = _load_grid(folder, _grid_key(entry["name"], entry["year"]),
                                                             desc["grids"])
    return FeatureResolver(fs, desc["year_mode"]).preload(cache)


def _load_samples(cfg: PipelineConfig, role: str) -> SampleSet:
    path = cfg.output_dir / "sample" / f"{role}.csv"
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise InputError(f"missing stage artifact {path}; run the sample stage first") from None
    return SampleSet.from_csv(text)


def _comment(cfg_hash: str) -> str:
    return f"config_hash={cfg_hash}"


# --------------------------------------------------------------------------
# Stages
# --------------------------------------------------------------------------

def _read_grid(cfg: PipelineConfig, key: str, rel: str, frame: Grid | None) -> Grid:
    try:
        g = load_ascii_grid(cfg.resolve(rel), cfg.crs_kind)
    except FireRiskError as exc:
        raise type(exc)(f"{key}: {exc}") from None
    except FileNotFoundError:
        raise InputError(f"{key}: file not found: {rel}") from None
    if frame is not None and not g.same_frame(frame):
        g = align(g, frame.transform, frame.width, frame.height)
    return g


def stage_ingest(cfg: PipelineConfig, ctx: dict) -> list[Path]:
    """Read every declared grid and vector layer, align onto the frame band, derive distance/density bands."""
    out = cfg.output_dir / "ingest"
    frame_spec = next(b for b in cfg.bands if b.name == cfg.frame)
    first = frame_spec.path if frame_spec.path is not None else next(iter(frame_spec.paths.values()))
    frame = _read_grid(cfg, f"bands.{cfg.frame}", first, None)
    h, w = frame.shape
    bands = []
    for b in cfg.bands:
        enc = {c: i + 1 for i, c in enumerate(b.categories)} if b.categories else None

        def prep(g, enc=enc, name=b.name):
            try:
                return label_encode(g, enc) if enc else g
            except FireRiskError as exc:
                raise type(exc)(f"bands.{name}: {exc}") from None

        if b.paths is None:
            band = BandData.of_static(prep(_read_grid(cfg, f"bands.{b.name}.path", b.path, frame)), b.role,
                                      b.categorical)
        else:
            layers = {y: prep(_read_grid(cfg, f"bands.{b.name}.paths.{y}", p, frame)) for y, p in b.paths.items()}
            band = BandData.of_dynamic(layers, b.aggregation, b.role, b.categorical)
        bands.append((b.name, band))
    for d in cfg.derived:
        key = f"derived.{d.name}.source"
        try:
            layer = load_vector_geojson(cfg.resolve(d.source), cfg.crs_kind)
            if d.kind == "distance":
                g = euclidean_distance_raster(layer, frame.transform, w, h, use_index=True)
            else:
                g = density_raster(layer, frame.transform, w, h, d.radius)
        except FireRiskError as exc:
            raise type(exc)(f"{key}: {exc}") from None
        except FileNotFoundError:
            raise InputError(f"{key}: file not found: {d.source}") from None
        bands.append((d.name, BandData.of_static(g, d.role)))
    fs = stack(bands)
    _save_stack(out, fs, ctx["hash"], {"frame": cfg.frame})

    masks = {f"fire@{y}": _read_grid(cfg, f"inputs.fire_mask.{y}", p, frame) for y, p in cfg.fire_mask.items()}
    if cfg.fire_months:
        if set(cfg.fire_months) != set(cfg.fire_mask):
            raise InputError("inputs.fire_months: years differ from inputs.fire_mask")
        masks.update({f"month@{y}": _read_grid(cfg, f"inputs.fire_months.{y}", p, frame)
                      for y, p in cfg.fire_months.items()})
    if cfg.forest_mask:
        masks["forest"] = _read_grid(cfg, "inputs.forest_mask", cfg.forest_mask, frame)
    try:
        FireMask({y: masks[f"fire@{y}"] for y in cfg.fire_mask},
                 {y: masks[f"month@{y}"] for y in cfg.fire_mask} if cfg.fire_months else None)
    except FireRiskError as exc:
        raise type(exc)(f"inputs.fire_mask: {exc}") from None
    meta = _save_grids(out / "masks", masks)
    _dump_json(out / "masks.json", {"config_hash": ctx["hash"], "years": list(cfg.fire_mask),
                                    "months": bool(cfg.fire_months), "grids": meta})
    return [out / "stack.json", out / "masks.json"]


def stage_impute(cfg: PipelineConfig, ctx: dict) -> list[Path]:
    """Fill nodata holes in every continuous band layer; categorical bands are left as read."""
    fs, desc = _load_stack(cfg.output_dir / "ingest")
    spec = cfg.impute
    reports = {}
    bands = []
    for name in fs.names:
        band = fs[name]

        def fill(g, key):
            if spec.method == "none" or band.categorical or g.valid.all():
                return g
            if spec.method == "knn":
                filled, rep = knn_impute(g, spec.k, spec.max_radius)
            else:
                filled, rep = kmeans_impute(g, spec.clusters, derive_seed(cfg.seed, f"impute/{key}"))
            reports[key] = rep.to_dict()
            return filled

        if band.is_dynamic:
            layers = {y: fill(g, _grid_key(name, y)) for y, g in band.layers.items()}
            band = BandData.of_dynamic(layers, band.aggregation, band.role, band.categorical)
        else:
            band = BandData.of_static(fill(band.static, name), band.role, band.categorical)
        bands.append((name, band))
    out = cfg.output_dir / "impute"
    _save_stack(out, stack(bands), ctx["hash"], {"frame": desc.get("frame")})
    report = _dump_json(out / "report.json", {"config_hash": ctx["hash"], "method": spec.method,
                                              "grids": reports})
    return [out / "stack.json", report]


def _needed_years(cfg: PipelineConfig) -> list[int]:
    s = cfg.sampling
    return sorted(set(s.train_years) | set(s.test_years) | {cfg.models.map_year})


def stage_features(cfg: PipelineConfig, ctx: dict) -> list[Path]:
    """Resolve dynamic bands to the grids each year uses (temporal aggregate or yearly anomaly)."""
    fs, _ = _load_stack(cfg.output_dir / "impute")
    resolver = FeatureResolver(fs, cfg.year_mode)
    dynamic_years = {y for n in fs.names for y in fs[n].years}
    years = [y for y in _needed_years(cfg) if y in dynamic_years] if dynamic_years else []
    missing = sorted(set(_needed_years(cfg)) - dynamic_years) if dynamic_years else []
    if missing and cfg.year_mode == "per_year_anomaly":
        raise InputError(f"sampling/map year {missing[0]} has no dynamic band layer")
    grids, entries = {}, []
    for name, year in resolver.keys_for(years):
        grids[_grid_key(name, year)] = resolver.grid(name, year)
        entries.append({"name": name, "year": year})
    out = cfg.output_dir / "features"
    meta = _save_grids(out / "grids", grids)
    path = _dump_json(out / "features.json", {"config_hash": ctx["hash"], "year_mode": cfg.year_mode,
                                              "names": fs.names, "entries": entries, "grids": meta})
    return [path]


def stage_sample(cfg: PipelineConfig, ctx: dict) -> list[Path]:
    """Label fire/non-fire points for the configured scenario and read their features."""
    mask, forest = _load_masks(cfg.output_dir)
    s = cfg.sampling
    split = SplitSpec(tuple(s.train_years), tuple(s.test_years), s.buffer_km)
    train_set, test_set = build_scenario(s.scenario, mask, forest, split, s.ratio,
                                         derive_seed(cfg.seed, "sample"), s.min_class)
    resolver = _load_resolver(cfg)
    train_set = attach_features(train_set, resolver)
    test_set = attach_features(test_set, resolver)
    for name, part in (("train", train_set), ("test", test_set)):
        if len(part) == 0 or len(np.unique(part.labels)) < 2:
            raise InputError(f"{name} samples need both classes after nodata removal")
    out = cfg.output_dir / "sample"
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, part in (("train", train_set), ("test", test_set)):
        p = out / f"{name}.csv"
        p.write_text(part.to_csv(header_comment=_comment(ctx["hash"])))
        paths.append(p)
    prov = {"config_hash": ctx["hash"], "train": train_set.provenance, "test": test_set.provenance}
    if s.scenario == 2:
        prov["min_train_test_km"] = audit_buffer(train_set, test_set, cfg.crs_kind)
    paths.append(_dump_json(out / "provenance.json", json.loads(json.dumps(prov, default=_np_default))))
    return paths


def _np_default(o):
    if isinstance(o, np.integer):
        return int(o)
    if isinstance(o, np.floating):
        return float(o)
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(type(o))


def stage_analyze(cfg: PipelineConfig, ctx: dict) -> list[Path]:
    """Pearson matrix, normalised mutual information and VIF of the training features."""
    samples = _load_samples(cfg, "train")
    out = cfg.output_dir / "analyze"
    out.mkdir(parents=True, exist_ok=True)
    comment = _comment(ctx["hash"])
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        r, names = pearson_matrix(samples)
    buf = io.StringIO()
    write_matrix_csv(r, names, buf, comment)
    (out / "pearson.csv").write_text(buf.getvalue())
    categorical = [b.name for b in cfg.bands if b.categorical]
    nmi = nmi_feature_scores(samples, bins=cfg.bins, categorical=categorical)
    vif = vif_scores(samples)
    for name, scores in (("nmi", nmi), ("vif", vif)):
        buf = io.StringIO()
        scores.write_csv(buf, comment)
        (out / f"{name}.csv").write_text(buf.getvalue())
    summary = _dump_json(out / "analysis.json", {
        "config_hash": ctx["hash"], "nmi": nmi.scores, "nmi_metadata": nmi.metadata, "vif": vif.scores,
        "vif_metadata": vif.metadata, "warnings": sorted({str(w.message) for w in caught})})
    return [out / "pearson.csv", out / "nmi.csv", out / "vif.csv", summary]


def _fit(cfg: PipelineConfig, kind: str, data, label: str, threads: int):
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", ConvergenceWarning)
        model = train(kind, data, cfg.models.params.get(kind), derive_seed(cfg.seed, label), threads)
    notes = [str(w.message) for w in caught if issubclass(w.category, ConvergenceWarning)]
    return model, notes


def stage_train(cfg: PipelineConfig, ctx: dict) -> list[Path]:
    """Fit every configured model family on the training samples."""
    samples = _load_samples(cfg, "train")
    out = cfg.output_dir / "models"
    out.mkdir(parents=True, exist_ok=True)
    paths, importance, notes = [], {}, {}
    for kind in cfg.models.train:
        model, warn = _fit(cfg, kind, samples, f"train/{kind}", ctx["threads"])
        if warn:
            notes[kind] = warn
        doc = model.to_dict()
        doc["config_hash"] = ctx["hash"]
        p = out / f"{kind}.json"
        p.write_text(json.dumps(doc, sort_keys=True))
        paths.append(p)
        try:
            importance[kind] = feature_importance(model)
        except NotSupported:
            pass
    paths.append(_dump_json(out / "importance.json", {"config_hash": ctx["hash"], "importance": importance,
                                                     "warnings": notes}))
    return paths


def _load_model(cfg: PipelineConfig, kind: str):
    path = cfg.output_dir / "models" / f"{kind}.json"
    try:
        return model_from_json(path.read_text())
    except FileNotFoundError:
        raise InputError(f"missing stage artifact {path}; run the train stage first") from None


def _cross_validate(cfg: PipelineConfig, kind: str, samples: SampleSet, threads: int) -> dict:
    k = cfg.evaluate.cv_folds
    folds = kfold(len(samples), k, derive_seed(cfg.seed, f"cv/{kind}/folds"))
    accs, aucs = [], []
    for i, test_idx in enumerate(folds):
        train_idx = np.setdiff1d(np.arange(len(samples)), test_idx)
        tr, te = samples.subset(train_idx), samples.subset(test_idx)
        model, _ = _fit(cfg, kind, tr, f"cv/{kind}/{i}", threads)
        rep = metrics(te.labels, model.predict_proba(te), cfg.evaluate.threshold)
        accs.append(rep.accuracy)
        if rep.auc is not None:
            aucs.append(rep.auc)
    return {"folds": k, "accuracy_mean": float(np.mean(accs)), "accuracy_folds": accs,
            "auc_mean": float(np.mean(aucs)) if aucs else None, "auc_folds": aucs}


def stage_evaluate(cfg: PipelineConfig, ctx: dict) -> list[Path]:
    """Held-out metrics and ROC curves, K-fold cross-validation and the cold/warm seasonal split."""
    train_set, test_set = _load_samples(cfg, "train"), _load_samples(cfg, "test")
    out = cfg.output_dir / "evaluate"
    out.mkdir(parents=True, exist_ok=True)
    thr = cfg.evaluate.threshold
    report = {"config_hash": ctx["hash"], "scenario": cfg.sampling.scenario, "n_train": len(train_set),
              "n_test": len(test_set), "models": {}}
    rows = ["model,accuracy,precision,recall,f1,auc,threshold,support\n"]
    paths = []
    for kind in cfg.models.train:
        model = _load_model(cfg, kind)
        probs = model.predict_proba(test_set)
        rep = metrics(test_set.labels, probs, thr)
        entry = {"test": rep.to_dict()}
        rows.append(rep.csv_row(kind))
        if rep.auc is not None:
            roc = roc_auc(test_set.labels, probs)
            (out / f"roc_{kind}.csv").write_text(f"# {_comment(ctx['hash'])}\n" + roc.to_csv())
            (out / f"roc_{kind}.svg").write_text(roc.to_svg(title=kind.upper()))
            paths += [out / f"roc_{kind}.csv", out / f"roc_{kind}.svg"]
        if cfg.evaluate.cv_folds > 1:
            try:
                entry["cv"] = _cross_validate(cfg, kind, train_set, ctx["threads"])
            except TooFewSamples as exc:
                entry["cv"] = {"error": str(exc)}
        if cfg.evaluate.seasonal and train_set.month is not None:
            try:
                trainer = lambda data, kind=kind: _fit(cfg, kind, data, f"seasonal/{kind}", ctx["threads"])[0]  # noqa: E731
                seasons = seasonal_eval_sets(train_set, test_set, trainer, thr)
                entry["seasonal"] = {k: v.to_dict() for k, v in seasons.items()}
            except (EmptySeason, SingleClass) as exc:
                entry["seasonal"] = {"error": str(exc)}
        report["models"][kind] = entry
    paths.insert(0, _dump_json(out / "metrics.json", report))
    (out / "metrics.csv").write_text(f"# {_comment(ctx['hash'])}\n" + "".join(rows))
    paths.insert(1, out / "metrics.csv")
    return paths


def stage_map(cfg: PipelineConfig, ctx: dict) -> list[Path]:
    """Probability grid, five risk classes and PPM/PNG renderings per mapped model."""
    resolver = _load_resolver(cfg)
    out = cfg.output_dir / "maps"
    out.mkdir(parents=True, exist_ok=True)
    year = cfg.models.map_year
    paths = []
    for kind in cfg.models.maps:
        model = _load_model(cfg, kind)
        prob = predict_grid(model, resolver, year=year)
        rm = build_risk_map(prob, method=cfg.map_method)
        images = render_map(rm.classes)
        stem = out / f"{kind}_risk"
        save_ascii_grid(prob, out / f"{kind}_probability.asc")
        save_ascii_grid(rm.classes, out / f"{kind}_classes.asc")
        Path(f"{stem}.ppm").write_bytes(images["ppm"])
        Path(f"{stem}.png").write_bytes(images["png"])
        Path(f"{stem}.json").write_text(rm.sidecar_json(config_hash=ctx["hash"], model=kind, year=year,
                                                        method=cfg.map_method) + "\n")
        paths += [out / f"{kind}_probability.asc", out / f"{kind}_classes.asc", Path(f"{stem}.ppm"),
                  Path(f"{stem}.png"), Path(f"{stem}.json")]
    return paths


STAGE_FUNCS = {"ingest": stage_ingest, "impute": stage_impute, "features": stage_features,
               "sample": stage_sample, "analyze": stage_analyze, "train": stage_train,
               "evaluate": stage_evaluate, "map": stage_map}


# --------------------------------------------------------------------------
# Manifest and entry point
# --------------------------------------------------------------------------

def _update_manifest(cfg: PipelineConfig, ctx: dict, stage: str, seconds: float, paths: list[Path]) -> Path:
    out = cfg.output_dir
    path = out / "manifest.json"
    man = json.loads(path.read_text()) if path.is_file() else {}
    if man.get("config_hash") != ctx["hash"]:
        man = {}
    man.update({"config_hash": ctx["hash"], "tool": "firerisk", "tool_version": __version__, "seed": cfg.seed})
    man.setdefault("inputs", {key: {"path": rel, "sha256": _sha256(cfg.resolve(rel))}
                              for key, rel in cfg.input_files().items()})
    man.setdefault("stages", {})[stage] = {
        "seconds": round(seconds, 4), "threads": ctx["threads"],
        "artifacts": {str(p.relative_to(out)): _sha256(p) for p in paths}}
    if stage == "train":
        man["models"] = {str(p.relative_to(out)): _sha256(p) for p in paths if p.suffix == ".json"}
    if stage == "evaluate":
        report = json.loads((out / "evaluate" / "metrics.json").read_text())
        man["metrics"] = {k: v["test"] for k, v in report["models"].items()}
    return _dump_json(path, man)


def run_stage(cfg: PipelineConfig, stage: str, threads: int | None = None) -> list[Path]:
    ctx = {"hash": cfg.config_hash(), "threads": threads or os.cpu_count() or 1}
    cfg.output_dir.mkdir(parents=True, exist_ok=True)
    t0 = time.perf_counter()
    paths = STAGE_FUNCS[stage](cfg, ctx)
    _update_manifest(cfg, ctx, stage, time.perf_counter() - t0, paths)
    return paths


def run_pipeline(cfg: PipelineConfig, threads: int | None = None, stages=STAGES) -> None:
    for stage in stages:
        run_stage(cfg, stage, threads)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="firerisk", description="Wildfire susceptibility pipeline.")
    sub = p.add_subparsers(dest="command", required=True)
    for name in (*STAGES, "pipeline"):
        sp = sub.add_parser(name, help=(STAGE_FUNCS[name].__doc__ or "").strip().splitlines()[0]
                            if name in STAGE_FUNCS else "run every stage in order")
        sp.add_argument("--config", required=True, help="pipeline TOML file")
        sp.add_argument("--threads", type=int, default=None, help="worker cap (default: all cores)")
        sp.add_argument("--seed", type=int, default=None, help="overrides the config seed")
        sp.add_argument("--out", default=None, help="output directory (overrides the config)")
    fx = sub.add_parser("fixture", help="write the bundled synthetic landscape and its config")
    fx.add_argument("dest")
    fx.add_argument("--seed", type=int, default=7)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "fixture":
            from .synthetic import write_fixture

            path = write_fixture(args.dest, args.seed)
            print(path / "config.toml")
            return 0
        if args.threads is not None and args.threads < 1:
            raise ConfigError("--threads must be positive")
        cfg = load_config(args.config, args.seed, args.out)
        if args.command == "pipeline":
            run_pipeline(cfg, args.threads)
        else:
            run_stage(cfg, args.command, args.threads)
        print(cfg.output_dir)
        return 0
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (NumericError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except FireRiskError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
