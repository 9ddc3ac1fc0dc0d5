import json

import pytest

from discgen.core_data import DiscontinuitySet, load_catalog
from discgen.fixtures import bundled_catalog_path


def write_rows(path, rows, header=("dip_direction", "dip_angle", "trace_length")):
    lines = [",".join(header)] + [",".join(str(v) for v in r) for r in rows]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path


@pytest.fixture
def catalog():
    return load_catalog(bundled_catalog_path())


@pytest.fixture
def oernlia(catalog):
    return catalog.load("oernlia_g1")


@pytest.fixture
def small_set():
    return DiscontinuitySet("small", [[120.0, 45.0, 2.5], [130.0, 50.0, 3.1], [140.0, 40.0, 1.2],
                                      [110.0, 55.0, 4.0], [125.0, 48.0, 2.0]])


def write_manifest(path, entries):
    path.write_text(json.dumps(entries), encoding="utf-8")
    return path


def pytest_terminal_summary(terminalreporter):
    import sys
    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.RESULTS[k])
