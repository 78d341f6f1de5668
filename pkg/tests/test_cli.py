import json
import re
import shutil
import subprocess
import sys

import numpy as np
import pytest

from firerisk.cli import STAGES, main, run_pipeline, run_stage
from firerisk.config import derive_seed, load_config
from firerisk.synthetic import write_fixture

SMALL_PARAMS = """
[models.params.rf]
n_estimators = 15

[models.params.gbt]
n_estimators = 20

[models.params.xgb]
n_estimators = 20
"""


@pytest.fixture(scope="module")
def fixture_dir(tmp_path_factory):
    d = write_fixture(tmp_path_factory.mktemp("small"), seed=3, size=40, fires_per_year=25.0)
    cfg = d / "config.toml"
    cfg.write_text(cfg.read_text() + SMALL_PARAMS)
    return d


@pytest.fixture(scope="module")
def pipeline_out(fixture_dir):
    assert main(["pipeline", "--config", str(fixture_dir / "config.toml"), "--out", str(fixture_dir / "run1")]) == 0
    return fixture_dir / "run1"


def _copy(src, tmp_path):
    dst = tmp_path / "fx"
    shutil.copytree(src, dst, ignore=shutil.ignore_patterns("run*", "out"))
    return dst


def test_derive_seed_stable_and_labelled():
    assert derive_seed(7, "sample") == derive_seed(7, "sample")
    assert derive_seed(7, "sample") != derive_seed(7, "train/rf")
    assert derive_seed(7, "sample") != derive_seed(8, "sample")
    assert 0 <= derive_seed(123, "x") < 2 ** 63


def test_pipeline_artifacts(pipeline_out, fixture_dir):
    cfg = load_config(fixture_dir / "config.toml")
    h = cfg.config_hash()
    manifest = json.loads((pipeline_out / "manifest.json").read_text())
    assert manifest["config_hash"] == h
    assert set(manifest["stages"]) == set(STAGES)
    assert "inputs.fire_mask.2015" in manifest["inputs"]
    for kind in ("dt", "rf", "gbt", "xgb", "knn", "svm"):
        m = json.loads((pipeline_out / "models" / f"{kind}.json").read_text())
        assert m["config_hash"] == h
    for kind in ("gbt", "knn", "xgb", "rf"):
        side = json.loads((pipeline_out / "maps" / f"{kind}_risk.json").read_text())
        assert side["config_hash"] == h
        assert (pipeline_out / "maps" / f"{kind}_risk.png").read_bytes().startswith(b"\x89PNG")
        assert (pipeline_out / "maps" / f"{kind}_classes.asc").is_file()
    for name in ("train.csv", "test.csv"):
        assert (pipeline_out / "sample" / name).read_text().startswith(f"# config_hash={h}")
    metrics = json.loads((pipeline_out / "evaluate" / "metrics.json").read_text())
    assert metrics["config_hash"] == h
    for kind in ("dt", "rf", "gbt", "xgb", "knn", "svm"):
        rep = metrics["models"][kind]
        assert 0 <= rep["test"]["accuracy"] <= 1
        assert rep["test"]["recall"] == rep["test"]["accuracy"]
        assert set(rep["seasonal"]) == {"cold", "warm"}
    assert (pipeline_out / "analyze" / "vif.csv").is_file()


def test_stages_individually_equal_pipeline(pipeline_out, fixture_dir, tmp_path):
    out2 = tmp_path / "run2"
    cfg = load_config(fixture_dir / "config.toml", out=str(out2))
    for stage in STAGES:
        assert main([stage, "--config", str(fixture_dir / "config.toml"), "--out", str(out2)]) == 0
    assert (out2 / "evaluate" / "metrics.json").read_bytes() == (pipeline_out / "evaluate" / "metrics.json").read_bytes()
    for kind in ("gbt", "rf"):
        assert (out2 / "maps" / f"{kind}_classes.asc").read_bytes() == \
            (pipeline_out / "maps" / f"{kind}_classes.asc").read_bytes()
        assert (out2 / "models" / f"{kind}.json").read_bytes() == (pipeline_out / "models" / f"{kind}.json").read_bytes()


def test_stage_without_predecessor_fails(fixture_dir, tmp_path, capsys):
    code = main(["train", "--config", str(fixture_dir / "config.toml"), "--out", str(tmp_path / "empty")])
    assert code == 3
    assert capsys.readouterr().err.strip()


def test_seed_override_changes_hash(fixture_dir):
    a = load_config(fixture_dir / "config.toml")
    b = load_config(fixture_dir / "config.toml", seed=99)
    assert a.config_hash() != b.config_hash()
    c = load_config(fixture_dir / "config.toml", out="/tmp/elsewhere")
    assert a.config_hash() == c.config_hash()


def test_missing_fire_mask_exit_3(fixture_dir, tmp_path, capsys):
    d = _copy(fixture_dir, tmp_path)
    (d / "grids" / "fire_2017.asc").unlink()
    code = main(["pipeline", "--config", str(d / "config.toml")])
    assert code == 3
    assert "inputs.fire_mask.2017" in capsys.readouterr().err


def test_bad_config_exit_2(fixture_dir, tmp_path, capsys):
    d = _copy(fixture_dir, tmp_path)
    text = (d / "config.toml").read_text()
    (d / "config.toml").write_text(re.sub(r"(?m)^seed = \d+\n", "", text))
    assert main(["ingest", "--config", str(d / "config.toml")]) == 2
    assert "seed" in capsys.readouterr().err
    (d / "config.toml").write_text(text.replace("scenario = 1", "scenario = 4"))
    assert main(["ingest", "--config", str(d / "config.toml")]) == 2
    (d / "config.toml").write_text(text + "\n[bogus]\nx = 1\n")
    assert main(["ingest", "--config", str(d / "config.toml")]) == 2
    (d / "config.toml").write_text("seed = [")
    assert main(["ingest", "--config", str(d / "config.toml")]) == 2
    assert main(["ingest", "--config", str(d / "nope.toml")]) == 2


def test_unreadable_grid_exit_3(fixture_dir, tmp_path, capsys):
    d = _copy(fixture_dir, tmp_path)
    (d / "grids" / "dem.asc").write_text("ncols 2\nnrows\n")
    assert main(["ingest", "--config", str(d / "config.toml")]) == 3
    assert "dem" in capsys.readouterr().err


def test_fixture_subcommand(tmp_path):
    assert main(["fixture", str(tmp_path / "fx"), "--seed", "2"]) == 0
    cfg = load_config(tmp_path / "fx" / "config.toml")
    assert cfg.seed == 2 and len(cfg.bands) == 6 and len(cfg.derived) == 2


def test_console_entry_point_runs():
    r = subprocess.run([sys.executable, "-m", "firerisk", "--help"], capture_output=True, text=True)
    assert r.returncode == 0 and "pipeline" in r.stdout


def test_every_table_artifact_embeds_config_hash(pipeline_out):
    h = json.loads((pipeline_out / "manifest.json").read_text())["config_hash"]
    files = [p for p in pipeline_out.rglob("*") if p.suffix in (".csv", ".json")]
    assert len(files) > 20
    assert [p.name for p in files if h not in p.read_text()] == []
