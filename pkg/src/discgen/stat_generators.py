"""Independent Monte Carlo sampling, smoothed bootstrap, and external samples.

Range handling is shared by every engine in the package:

* dip direction is reduced modulo 360;
* dip angle outside [0, 90] is redrawn (rejection, never clamped);
* trace length must be positive and finite, otherwise redrawn.

A cell rejected more than :data:`MAX_REJECTIONS` times in a row raises
:class:`RejectionOverflow`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

from .core_data import (
    PARAMETERS,
    DiscontinuitySet,
    Source,
    normalize_dip_direction,
    parse_csv,
)
from .errors import RejectionOverflow
from .marginal_fit import LOGNORMAL, NORMAL, MarginalFit, fit_family, select_family
from .rng import Prng

MAX_REJECTIONS = 10_000
TABLE1_FAMILIES = {"dip_direction": NORMAL, "dip_angle": NORMAL, "trace_length": LOGNORMAL}


def dip_angle_ok(x):
    return (x >= 0.0) & (x <= 90.0)


def trace_ok(x):
    return np.isfinite(x) & (x > 0.0)


def fill_with_rejection(draw: Callable[[np.ndarray], np.ndarray], ok, n: int) -> np.ndarray:
    """Draw ``n`` values, redrawing only the cells that fail ``ok``.

    ``draw(idx)`` must return one value per index in ``idx``. Redraws happen
    in vectorised rounds over the still-rejected cells, so the output is a
    deterministic function of the underlying stream.
    """
    idx = np.arange(n)
    out = np.asarray(draw(idx), dtype=float).copy()
    pending = idx[~ok(out)]
    rounds = 0
    while pending.size:
        rounds += 1
        if rounds > MAX_REJECTIONS:
            raise RejectionOverflow(
                f"{pending.size} cell(s) rejected {MAX_REJECTIONS} times in a row"
            )
        out[pending] = draw(pending)
        pending = pending[~ok(out[pending])]
    return out


def fill_rows_with_rejection(draw_rows: Callable[[int], np.ndarray], n: int) -> np.ndarray:
    """Row-level variant for joint engines: keep valid rows until ``n`` are collected.

    ``draw_rows(k)`` returns a ``(k, 3)`` array in natural units with dip
    direction already reduced modulo 360.
    """
    kept, have, misses = [], 0, 0
    while have < n:
        rows = draw_rows(n - have)
        good = dip_angle_ok(rows[:, 1]) & trace_ok(rows[:, 2]) & np.isfinite(rows[:, 0])
        if good.any():
            misses = 0
            kept.append(rows[good])
            have += int(good.sum())
        else:
            misses += 1
            if misses > MAX_REJECTIONS:
                raise RejectionOverflow(f"no valid row in {MAX_REJECTIONS} consecutive rounds")
    return np.concatenate(kept)[:n]


# --- Monte Carlo ------------------------------------------------------------

@dataclass(frozen=True)
class MonteCarloModel:
    fits: dict  # parameter name -> MarginalFit
    seed: int = 0

    def __post_init__(self):
        if set(self.fits) != set(PARAMETERS):
            raise ValueError(f"need exactly one fit for each of {PARAMETERS}")

    @classmethod
    def fit(cls, dset: DiscontinuitySet, families: dict | None = None, seed: int = 0,
            candidates=None) -> "MonteCarloModel":
        """Fit one marginal per parameter.

        ``families`` forces a family for some parameters; the rest are chosen
        by maximum likelihood among ``candidates`` (all families by default).
        """
        families = families or {}
        fits = {}
        for p in PARAMETERS:
            x = dset.column(p)
            if p in families:
                fits[p] = fit_family(families[p], x)
            elif candidates is not None:
                fits[p] = select_family(x, candidates)
            else:
                fits[p] = select_family(x)
        return cls(fits, seed)

    def to_dict(self) -> dict:
        return {"engine": "monte_carlo", "seed": self.seed,
                "fits": {p: self.fits[p].to_dict() for p in PARAMETERS}}

    @classmethod
    def from_dict(cls, d: dict) -> "MonteCarloModel":
        return cls({p: MarginalFit.from_dict(d["fits"][p]) for p in PARAMETERS},
                   int(d.get("seed", 0)))


def mc_generate(model: MonteCarloModel, n: int, seed: int | None = None,
                name: str = "monte_carlo") -> DiscontinuitySet:
    """Sample each parameter independently from its fitted marginal."""
    if n < 1:
        raise ValueError("n must be >= 1")
    seed = model.seed if seed is None else seed
    prng = Prng(seed)
    f = model.fits
    dd = normalize_dip_direction(f["dip_direction"].sample(prng, n))
    da = fill_with_rejection(lambda i: f["dip_angle"].sample(prng, i.size), dip_angle_ok, n)
    tl = fill_with_rejection(lambda i: f["trace_length"].sample(prng, i.size), trace_ok, n)
    return DiscontinuitySet(name, np.column_stack([dd, da, tl]),
                            source=Source.generated("monte_carlo", seed))


# --- smoothed bootstrap -------------------------------------------------------

def silverman_bandwidth(x) -> float:
    """Silverman's rule of thumb, ``1.06 * sigma * n**(-1/5)`` (population sigma)."""
    x = np.asarray(x, dtype=float)
    return 1.06 * float(np.std(x)) * x.size ** (-0.2)


@dataclass(frozen=True)
class SmoothedBootstrapModel:
    """Resample observed records and add Gaussian kernel jitter.

    Equivalent to sampling from a product-kernel density estimate centred on
    the reference records, so joint structure is kept up to kernel blur.
    Trace length is jittered in log space; ``bandwidth["trace_length"]`` is
    therefore a log-scale width.
    """

    reference: DiscontinuitySet
    bandwidth: dict
    seed: int = 0

    MIN_BANDWIDTH = 1e-9

    def __post_init__(self):
        if set(self.bandwidth) != set(PARAMETERS):
            raise ValueError(f"need one bandwidth for each of {PARAMETERS}")
        if not all(h > 0 and math.isfinite(h) for h in self.bandwidth.values()):
            raise ValueError("bandwidths must be positive and finite")

    @classmethod
    def fit(cls, dset: DiscontinuitySet, seed: int = 0, overrides: dict | None = None):
        feats = dset.features()
        bw = {p: max(silverman_bandwidth(feats[:, j]), cls.MIN_BANDWIDTH)
              for j, p in enumerate(PARAMETERS)}
        bw.update(overrides or {})
        return cls(dset, bw, seed)

    def to_dict(self) -> dict:
        return {
            "engine": "bootstrap",
            "seed": self.seed,
            "bandwidth": {p: float(self.bandwidth[p]) for p in PARAMETERS},
            "reference": {"name": self.reference.name, "data": self.reference.data.tolist()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "SmoothedBootstrapModel":
        ref = DiscontinuitySet(d["reference"]["name"], d["reference"]["data"])
        return cls(ref, {p: float(d["bandwidth"][p]) for p in PARAMETERS}, int(d.get("seed", 0)))


def bootstrap_generate(model: SmoothedBootstrapModel, n: int, seed: int | None = None,
                       name: str = "bootstrap") -> DiscontinuitySet:
    if n < 1:
        raise ValueError("n must be >= 1")
    seed = model.seed if seed is None else seed
    prng = Prng(seed)
    h = model.bandwidth
    base = model.reference.data[prng.integers(model.reference.n, n)]
    dd = normalize_dip_direction(base[:, 0] + prng.normal(n, 0.0, h["dip_direction"]))
    da = fill_with_rejection(
        lambda i: base[i, 1] + prng.normal(i.size, 0.0, h["dip_angle"]), dip_angle_ok, n)
    log_tl = np.log(base[:, 2])
    tl = fill_with_rejection(
        lambda i: np.exp(log_tl[i] + prng.normal(i.size, 0.0, h["trace_length"])), trace_ok, n)
    return DiscontinuitySet(name, np.column_stack([dd, da, tl]),
                            source=Source.generated("bootstrap", seed))


# --- external samples -------------------------------------------------------

@dataclass(frozen=True)
class ExternalSampleSource:
    """Samples produced outside this package (e.g. by a pretrained tabular model)."""

    path: Path
    declared_engine: str = "external"
    column_map: dict | None = None


def load_external(source: ExternalSampleSource) -> DiscontinuitySet:
    path = Path(source.path)
    return parse_csv(path, source.column_map, name=path.stem,
                     source=Source.generated(source.declared_engine, 0))
