import numpy as np
import pytest

from firerisk.raster import CrsKind, GeoTransform, Grid

ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def frame():
    return GeoTransform(0.0, 100.0, 10.0, CrsKind.PLANAR)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def make_grid(values, cell=10.0, nodata=-9999.0, crs=CrsKind.PLANAR):
    v = np.asarray(values, dtype=float)
    return Grid(v, GeoTransform(0.0, v.shape[0] * cell, cell, crs), nodata)


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_RESULTS):
        ok, detail = ACCEPTANCE_RESULTS[n]
        terminalreporter.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  {detail}")
