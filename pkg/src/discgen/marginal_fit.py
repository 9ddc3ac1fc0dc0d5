"""Maximum-likelihood fits of univariate families and family selection."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from scipy.special import ndtr

from .errors import DegenerateSample, NonPositiveSample, NoViableCandidate
from .rng import Prng

NORMAL = "normal"
LOGNORMAL = "lognormal"
EXPONENTIAL = "exponential"
FAMILIES = (NORMAL, LOGNORMAL, EXPONENTIAL)  # also the tie-break order

_PARAM_NAMES = {NORMAL: ("mu", "sigma"), LOGNORMAL: ("mu_log", "sigma_log"), EXPONENTIAL: ("rate",)}
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class MarginalFit:
    family: str
    params: dict
    n: int
    log_likelihood: float
    diagnostics: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        if set(self.params) != set(_PARAM_NAMES[self.family]):
            raise ValueError(f"{self.family} expects parameters {_PARAM_NAMES[self.family]}")
        scale = self.params.get("sigma", self.params.get("sigma_log", self.params.get("rate")))
        if not self.diagnostics.get("degenerate") and not (scale > 0 and math.isfinite(scale)):
            raise ValueError(f"{self.family} scale parameter must be positive, got {scale}")
        if not math.isfinite(self.log_likelihood):
            raise ValueError("log_likelihood must be finite")

    @classmethod
    def degenerate_normal(cls, mu: float) -> "MarginalFit":
        """A point mass at ``mu`` expressed as Normal(mu, 0); test fixtures only."""
        return cls(NORMAL, {"mu": float(mu), "sigma": 0.0}, 0, 0.0, {"degenerate": True})

    # -- distribution functions --------------------------------------------

    def sample(self, prng: Prng, size: int) -> np.ndarray:
        p = self.params
        if self.family == NORMAL:
            return prng.normal(size, p["mu"], p["sigma"])
        if self.family == LOGNORMAL:
            return np.exp(prng.normal(size, p["mu_log"], p["sigma_log"]))
        return prng.exponential(p["rate"], size)

    def cdf(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        p = self.params
        if self.family == NORMAL:
            return ndtr((x - p["mu"]) / p["sigma"])
        if self.family == LOGNORMAL:
            with np.errstate(divide="ignore"):
                lx = np.where(x > 0, np.log(np.maximum(x, 1e-300)), -np.inf)
            return ndtr((lx - p["mu_log"]) / p["sigma_log"])
        return np.where(x > 0, -np.expm1(-p["rate"] * np.maximum(x, 0.0)), 0.0)

    def mean(self) -> float:
        p = self.params
        if self.family == NORMAL:
            return p["mu"]
        if self.family == LOGNORMAL:
            return math.exp(p["mu_log"] + 0.5 * p["sigma_log"] ** 2)
        return 1.0 / p["rate"]

    def std(self) -> float:
        p = self.params
        if self.family == NORMAL:
            return p["sigma"]
        if self.family == LOGNORMAL:
            s2 = p["sigma_log"] ** 2
            return math.sqrt(math.expm1(s2)) * self.mean()
        return 1.0 / p["rate"]

    def to_dict(self) -> dict:
        return {
            "family": self.family,
            "params": {k: float(self.params[k]) for k in _PARAM_NAMES[self.family]},
            "n": int(self.n),
            "log_likelihood": float(self.log_likelihood),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "MarginalFit":
        return cls(d["family"], {k: float(v) for k, v in d["params"].items()},
                   int(d["n"]), float(d["log_likelihood"]))


def log_likelihood(family: str, params: dict, samples) -> float:
    """Exact log-likelihood of ``samples`` under ``family(params)``."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if family == NORMAL:
        mu, s = params["mu"], params["sigma"]
        return -0.5 * n * (_LOG_2PI + 2.0 * math.log(s)) - math.fsum((x - mu) ** 2) / (2.0 * s * s)
    if family == LOGNORMAL:
        lx = np.log(x)
        return log_likelihood(NORMAL, {"mu": params["mu_log"], "sigma": params["sigma_log"]}, lx) \
            - math.fsum(lx)
    if family == EXPONENTIAL:
        lam = params["rate"]
        return n * math.log(lam) - lam * math.fsum(x)
    raise ValueError(f"unknown family {family!r}")


def _mean_std(x: np.ndarray) -> tuple[float, float]:
    if x.size < 2:
        raise DegenerateSample(f"need at least 2 samples, got {x.size}")
    mu = math.fsum(x) / x.size
    sigma = math.sqrt(math.fsum((x - mu) ** 2) / x.size)
    if sigma == 0.0 or np.all(x == x[0]):
        raise DegenerateSample("all samples are equal")
    return mu, sigma


def _check_positive(x: np.ndarray) -> None:
    bad = np.flatnonzero(~(x > 0))
    if bad.size:
        raise NonPositiveSample(int(bad[0]))


def fit_normal(samples) -> MarginalFit:
    """MLE normal fit: sample mean and population standard deviation."""
    x = np.asarray(samples, dtype=float).ravel()
    mu, sigma = _mean_std(x)
    params = {"mu": mu, "sigma": sigma}
    return MarginalFit(NORMAL, params, x.size, log_likelihood(NORMAL, params, x))


def fit_lognormal(samples) -> MarginalFit:
    x = np.asarray(samples, dtype=float).ravel()
    _check_positive(x)
    base = fit_normal(np.log(x))
    params = {"mu_log": base.params["mu"], "sigma_log": base.params["sigma"]}
    return MarginalFit(LOGNORMAL, params, x.size, log_likelihood(LOGNORMAL, params, x))


def fit_exponential(samples) -> MarginalFit:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size == 0:
        raise DegenerateSample("no samples")
    _check_positive(x)
    params = {"rate": x.size / math.fsum(x)}
    return MarginalFit(EXPONENTIAL, params, x.size, log_likelihood(EXPONENTIAL, params, x))


FITTERS = {NORMAL: fit_normal, LOGNORMAL: fit_lognormal, EXPONENTIAL: fit_exponential}


def fit_family(family: str, samples) -> MarginalFit:
    try:
        return FITTERS[family](samples)
    except KeyError:
        raise ValueError(f"unknown family {family!r}") from None


def select_family(samples, candidates: Iterable[str] = FAMILIES) -> MarginalFit:
    """Fit every viable candidate and keep the one with the highest likelihood.

    Candidates whose preconditions fail are skipped. Ties go to the earlier
    family in :data:`FAMILIES`. Every candidate's log-likelihood (``None`` if
    skipped) is kept in ``diagnostics["candidates"]``.
    """
    wanted = set(candidates)
    unknown = wanted - set(FAMILIES)
    if unknown:
        raise ValueError(f"unknown families {sorted(unknown)}")
    if not wanted:
        raise NoViableCandidate("no candidate families given")
    best, table = None, {}
    for fam in FAMILIES:
        if fam not in wanted:
            continue
        try:
            fit = FITTERS[fam](samples)
        except (DegenerateSample, NonPositiveSample):
            table[fam] = None
            continue
        table[fam] = fit.log_likelihood
        if best is None or fit.log_likelihood > best.log_likelihood:
            best = fit
    if best is None:
        raise NoViableCandidate(f"no viable family among {sorted(wanted)}")
    return MarginalFit(best.family, best.params, best.n, best.log_likelihood,
                       {"candidates": table})
