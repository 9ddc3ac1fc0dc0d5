"""Synthetic stand-ins for the ten field datasets used in the scenario harness.

Each table has normally distributed dip direction and dip angle, lognormal
trace length, and a dip-direction/dip-angle Pearson correlation fixed
exactly (before rounding to field precision: 0.1 degree, 0.01 m). Record
counts and scenario grouping follow the published dataset summary; the
means, spreads and the unquoted correlations are invented, plausible values.

Regenerate the bundled files with ``python -m discgen.fixtures [DIR]``.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .core_data import DiscontinuitySet, write_csv
from .rng import Prng

FIXTURE_SEED = 20240601


@dataclass(frozen=True)
class FixtureSpec:
    name: str
    location: str
    group: int
    count: int
    scenario: str
    r: float  # dip direction vs dip angle
    dip_direction: tuple  # (mean, sd)
    dip_angle: tuple  # (mean, sd)
    log_trace: tuple  # (mean, sd) of ln(trace length)


TABLE1 = (
    FixtureSpec("oernlia_g1", "Oernlia, Norway", 1, 766, "I", -0.69, (135.0, 18.0), (52.0, 8.0), (0.6, 0.55)),
    FixtureSpec("laerdal_g1", "Laerdal, Norway", 1, 562, "I", -0.60, (210.0, 20.0), (50.0, 9.0), (0.9, 0.50)),
    FixtureSpec("thundovd_g2", "Thundovd, Norway", 2, 325, "I", -0.45, (290.0, 15.0), (55.0, 8.0), (0.4, 0.60)),
    FixtureSpec("valle_g2", "Valle, Norway", 2, 253, "II", -0.22, (110.0, 25.0), (45.0, 10.0), (1.1, 0.70)),
    FixtureSpec("thundovd_g1", "Thundovd, Norway", 1, 157, "III", 0.40, (75.0, 14.0), (54.0, 8.0), (0.7, 0.50)),
    FixtureSpec("oernlia_g3", "Oernlia, Norway", 3, 68, "III", 0.12, (250.0, 16.0), (58.0, 7.0), (0.5, 0.50)),
    FixtureSpec("valle_g3", "Valle, Norway", 3, 40, "IV", -0.37, (170.0, 22.0), (48.0, 10.0), (0.8, 0.65)),
    FixtureSpec("chenjiazhuang_g1", "Chenjiazhuang, China", 1, 104, "IV", 0.35, (150.0, 20.0), (50.0, 9.0), (1.3, 0.60)),
    FixtureSpec("chenjiazhuang_g2", "Chenjiazhuang, China", 2, 115, "IV", 0.00, (200.0, 18.0), (46.0, 10.0), (1.2, 0.55)),
    FixtureSpec("chenjiazhuang_g3", "Chenjiazhuang, China", 3, 119, "IV", 0.00, (230.0, 17.0), (52.0, 9.0), (1.0, 0.60)),
)


def correlated_normals(n: int, corr: np.ndarray, prng: Prng) -> np.ndarray:
    """``n`` rows whose sample mean is 0 and sample correlation is exactly ``corr``."""
    k = corr.shape[0]
    z = prng.normal((n, k))
    z -= z.mean(axis=0)
    white = np.linalg.cholesky(np.cov(z, rowvar=False, bias=True))
    z = z @ np.linalg.inv(white).T
    return z @ np.linalg.cholesky(corr).T


def build_fixture(spec: FixtureSpec, seed: int = FIXTURE_SEED, decimals=(1, 1, 2)) -> DiscontinuitySet:
    corr = np.eye(3)
    corr[0, 1] = corr[1, 0] = spec.r
    z = correlated_normals(spec.count, corr, Prng(seed).spawn(spec.name))
    dd = spec.dip_direction[0] + spec.dip_direction[1] * z[:, 0]
    da = spec.dip_angle[0] + spec.dip_angle[1] * z[:, 1]
    tl = np.exp(spec.log_trace[0] + spec.log_trace[1] * z[:, 2])
    data = np.column_stack([np.round(dd, decimals[0]), np.round(da, decimals[1]),
                            np.maximum(np.round(tl, decimals[2]), 10.0 ** -decimals[2])])
    return DiscontinuitySet(spec.name, data, location=spec.location, group_id=spec.group)


def correlated_table(n: int, r: float, seed: int, exact: bool = False) -> DiscontinuitySet:
    """Generic test table: dip direction N(120, 15), dip angle N(50, 10) with
    correlation ``r``, trace length lognormal(0.5, 0.6)."""
    prng = Prng(seed)
    if exact:
        corr = np.eye(3)
        corr[0, 1] = corr[1, 0] = r
        z = correlated_normals(n, corr, prng)
    else:
        z = prng.normal((n, 3))
        z[:, 1] = r * z[:, 0] + np.sqrt(1.0 - r * r) * z[:, 1]
    data = np.column_stack([120.0 + 15.0 * z[:, 0], 50.0 + 10.0 * z[:, 1],
                            np.exp(0.5 + 0.6 * z[:, 2])])
    return DiscontinuitySet(f"correlated_r{r:+.2f}_n{n}", data)


def write_catalog(directory, specs=TABLE1, seed: int = FIXTURE_SEED) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = []
    for spec in specs:
        dset = build_fixture(spec, seed)
        write_csv(dset, directory / f"{spec.name}.csv")
        manifest.append({"name": spec.name, "location": spec.location, "group": spec.group,
                         "path": f"{spec.name}.csv", "count": dset.n, "scenario": spec.scenario})
    path = directory / "catalog.json"
    path.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    return path


def bundled_catalog_path() -> Path:
    return Path(str(resources.files("discgen") / "data" / "catalog.json"))


if __name__ == "__main__":
    target = sys.argv[1] if len(sys.argv) > 1 else Path(__file__).parent / "data"
    print(write_catalog(target))
