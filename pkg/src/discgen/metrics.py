"""Univariate and multivariate fidelity metrics: generated vs observed sets.

Conventions fixed here:

* KS p-values use the asymptotic Kolmogorov distribution with effective
  size ``n_a n_b / (n_a + n_b)``;
* chi-square bins are equiprobable type-7 quantiles of the observed sample,
  right-closed, with adjacent bins merged left to right until each expected
  count is at least 5;
* correlation RMSE/MAE run over the three upper off-diagonal entries;
* PERMANOVA and the sliced Wasserstein distance work on jointly z-scored
  ``(dip_direction, dip_angle, log trace_length)``; PERMANOVA uses Euclidean
  distances.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.spatial.distance import pdist, squareform
from scipy.special import gammaincc

from .core_data import PARAMETERS, DiscontinuitySet, summary_stats
from .errors import ConstantInput, EmptySample, TooFewBins
from .marginal_fit import MarginalFit
from .rng import Prng

SCHEMA_VERSION = "1.0"
REL_EPS = 1e-9
MIN_EXPECTED = 5.0
_EXHAUSTIVE_MAX_N = 8


def _sample(x, name="sample") -> np.ndarray:
    x = np.asarray(x, dtype=float).ravel()
    if x.size == 0:
        raise EmptySample(f"{name} is empty")
    return x


# --- Kolmogorov-Smirnov ------------------------------------------------------

def kolmogorov_sf(lam: float) -> float:
    """``P(K > lam)`` for the limiting Kolmogorov distribution."""
    if lam <= 0.0:
        return 1.0
    if lam < 1.18:
        # Jacobi-theta form converges fast for small lam
        c = -(math.pi ** 2) / (8.0 * lam * lam)
        s = sum(math.exp(c * (2 * k - 1) ** 2) for k in range(1, 12))
        cdf = math.sqrt(2.0 * math.pi) / lam * s
        return min(1.0, max(0.0, 1.0 - cdf))
    s, k = 0.0, 1
    while True:
        term = math.exp(-2.0 * k * k * lam * lam)
        s += term if k % 2 else -term
        if term < 1e-17:
            break
        k += 1
    return min(1.0, max(0.0, 2.0 * s))


def ks_statistic(a, b) -> float:
    a, b = np.sort(_sample(a, "a")), np.sort(_sample(b, "b"))
    pooled = np.concatenate([a, b])
    fa = np.searchsorted(a, pooled, side="right") / a.size
    fb = np.searchsorted(b, pooled, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample(a, b) -> tuple[float, float]:
    """Two-sample KS statistic ``D`` and asymptotic p-value."""
    a, b = _sample(a, "a"), _sample(b, "b")
    d = ks_statistic(a, b)
    en = a.size * b.size / (a.size + b.size)
    return d, kolmogorov_sf(math.sqrt(en) * d)


def ks_one_sample(a, fit: MarginalFit) -> tuple[float, float]:
    """KS test of a sample against a fitted marginal (asymptotic p)."""
    x = np.sort(_sample(a))
    n = x.size
    cdf = fit.cdf(x)
    i = np.arange(1, n + 1)
    d = float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    return d, kolmogorov_sf(math.sqrt(n) * d)


# --- Wasserstein ------------------------------------------------------------

def wasserstein_1d(a, b) -> float:
    """Exact 1-D earth mover's distance, ``integral |F_a - F_b| dx``."""
    a, b = np.sort(_sample(a, "a")), np.sort(_sample(b, "b"))
    grid = np.unique(np.concatenate([a, b]))
    if grid.size < 2:
        return 0.0
    fa = np.searchsorted(a, grid[:-1], side="right") / a.size
    fb = np.searchsorted(b, grid[:-1], side="right") / b.size
    return float(np.sum(np.abs(fa - fb) * np.diff(grid)))


def _joint_zscore(*arrays) -> list[np.ndarray]:
    pooled = np.vstack(arrays)
    mu = pooled.mean(axis=0)
    sd = pooled.std(axis=0)
    sd = np.where(sd > 0.0, sd, 1.0)
    return [(x - mu) / sd for x in arrays]


def sliced_wasserstein(x, y, projections: int = 64, seed: int = 0) -> float:
    """Mean 1-D W1 over seeded random unit directions of the jointly z-scored data."""
    x, y = _joint_zscore(np.asarray(x, float), np.asarray(y, float))
    dirs = Prng(seed).normal((projections, x.shape[1]))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return float(np.mean([wasserstein_1d(x @ u, y @ u) for u in dirs]))


# --- chi-square -------------------------------------------------------------

def quantile_edges(a, bins: int) -> np.ndarray:
    """Interior edges at the ``k / bins`` type-7 quantiles of ``a``, de-duplicated."""
    qs = np.quantile(np.asarray(a, float), np.arange(1, bins) / bins, method="linear")
    return np.unique(qs)


def merge_small_bins(observed, expected, min_expected=MIN_EXPECTED):
    """Merge adjacent bins left to right until every expected count reaches the floor.

    A short tail left over at the end joins the last completed bin.
    """
    obs_out, exp_out = [], []
    o_acc = e_acc = 0.0
    for o, e in zip(observed, expected):
        o_acc += o
        e_acc += e
        if e_acc >= min_expected:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
            o_acc = e_acc = 0.0
    if e_acc > 0.0 or o_acc > 0.0:
        if exp_out:
            obs_out[-1] += o_acc
            exp_out[-1] += e_acc
        else:
            obs_out.append(o_acc)
            exp_out.append(e_acc)
    return np.array(obs_out), np.array(exp_out)


def chi_square_gof(a, b, bins: int = 10) -> tuple[float, int, float]:
    """Chi-square test of ``b``'s frequencies against bins built from ``a``.

    Returns ``(statistic, degrees_of_freedom, p_value)``.
    """
    a, b = _sample(a, "a"), _sample(b, "b")
    if bins < 2:
        raise TooFewBins("need at least 2 bins")
    edges = quantile_edges(a, bins)
    k = edges.size + 1
    count_a = np.bincount(np.searchsorted(edges, a, side="left"), minlength=k)
    count_b = np.bincount(np.searchsorted(edges, b, side="left"), minlength=k)
    expected = count_a / a.size * b.size
    obs, exp = merge_small_bins(count_b.astype(float), expected)
    if obs.size < 2:
        raise TooFewBins(f"only {obs.size} bin(s) left after merging")
    stat = float(np.sum((obs - exp) ** 2 / exp))
    df = int(obs.size - 1)
    return stat, df, float(gammaincc(df / 2.0, stat / 2.0))


# --- correlation ------------------------------------------------------------

def pearson(x, y) -> float:
    x, y = np.asarray(x, float).ravel(), np.asarray(y, float).ravel()
    if x.size != y.size:
        raise ValueError("x and y differ in length")
    if x.size < 2:
        raise ConstantInput("need at least 2 points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = math.fsum(dx * dx), math.fsum(dy * dy)
    if sxx == 0.0 or syy == 0.0:
        raise ConstantInput("constant input has no correlation")
    r = math.fsum(dx * dy) / math.sqrt(sxx * syy)
    return max(-1.0, min(1.0, r))


def correlation_matrix(dset) -> np.ndarray:
    """Pearson matrix of the raw three columns (trace length not logged)."""
    data = dset.data if isinstance(dset, DiscontinuitySet) else np.asarray(dset, float)
    m = np.eye(3)
    for i, j in ((0, 1), (0, 2), (1, 2)):
        m[i, j] = m[j, i] = pearson(data[:, i], data[:, j])
    return m


def frobenius_diff(m1, m2) -> float:
    return float(np.linalg.norm(np.asarray(m1) - np.asarray(m2), "fro"))


def corr_rmse_mae(m1, m2) -> tuple[float, float]:
    iu = np.triu_indices(3, k=1)
    d = (np.asarray(m1) - np.asarray(m2))[iu]
    return float(np.sqrt(np.mean(d * d))), float(np.mean(np.abs(d)))


# --- PERMANOVA ------------------------------------------------------------

def _pseudo_f(d2: np.ndarray, member: np.ndarray, n: int, n0: int) -> np.ndarray:
    """Two-group pseudo-F for each 0/1 membership column of ``member``."""
    n1 = n - n0
    total = d2.sum()
    dm = d2 @ member
    q0 = np.einsum("ij,ij->j", member, dm)
    q1 = total - 2.0 * dm.sum(axis=0) + q0
    ss_t = total / (2.0 * n)
    ss_w = q0 / (2.0 * n0) + q1 / (2.0 * n1)
    ss_a = ss_t - ss_w
    with np.errstate(divide="ignore", invalid="ignore"):
        f = ss_a / (ss_w / (n - 2))
    f = np.where(ss_w > 0.0, f, np.where(ss_a > 0.0, np.inf, 0.0))
    return np.maximum(f, 0.0)


def _canonical_groups(x: np.ndarray, y: np.ndarray):
    key_x = (x.shape[0], np.ascontiguousarray(x).tobytes())
    key_y = (y.shape[0], np.ascontiguousarray(y).tobytes())
    return (x, y) if key_x <= key_y else (y, x)


def permanova(observed, generated, permutations: int = 999, seed: int = 0) -> tuple[float, float]:
    """One-way, two-group PERMANOVA on Euclidean distances.

    ``p = (#{permuted F >= observed F} + 1) / (permutations + 1)``. When
    ``permutations`` covers every relabelling of a tiny pooled sample
    (``N <= 8`` and ``permutations >= N! - 1``) the permutations are
    enumerated exhaustively instead of drawn. Groups are put in a canonical
    order first, so swapping the arguments changes nothing.
    """
    x = observed.features() if isinstance(observed, DiscontinuitySet) else np.asarray(observed, float)
    y = generated.features() if isinstance(generated, DiscontinuitySet) else np.asarray(generated, float)
    if x.shape[0] < 2 or y.shape[0] < 2:
        raise EmptySample("each group needs at least 2 records")
    if permutations < 1:
        raise ValueError("permutations must be positive")
    x, y = _canonical_groups(x, y)
    x, y = _joint_zscore(x, y)
    pooled = np.vstack([x, y])
    n, n0 = pooled.shape[0], x.shape[0]
    d2 = squareform(pdist(pooled, "sqeuclidean"))
    ident = np.zeros((n, 1))
    ident[:n0] = 1.0
    f_obs = float(_pseudo_f(d2, ident, n, n0)[0])
    tol = 1e-10 * max(1.0, abs(f_obs))

    if n <= _EXHAUSTIVE_MAX_N and permutations >= math.factorial(n) - 1:
        perms = np.array(list(itertools.permutations(range(n)))[1:])
    else:
        perms = Prng(seed).permutations(n, permutations)
    hits = 0
    for start in range(0, perms.shape[0], 128):
        chunk = perms[start:start + 128]
        member = np.zeros((n, chunk.shape[0]))
        cols = np.repeat(np.arange(chunk.shape[0]), n0)
        member[chunk[:, :n0].ravel(), cols] = 1.0
        hits += int(np.sum(_pseudo_f(d2, member, n, n0) >= f_obs - tol))
    return f_obs, (hits + 1) / (perms.shape[0] + 1)


# --- full report -------------------------------------------------------------

@dataclass
class EvaluationConfig:
    bins: int = 10
    permutations: int = 999
    projections: int = 64
    seed: int = 0


@dataclass
class UnivariateComparison:
    parameter: str
    observed_mean: float
    generated_mean: float
    observed_std: float
    generated_std: float
    mean_rel_error: float
    std_rel_error: float
    ks_stat: float
    ks_p: float
    wasserstein_1: float
    chi2_stat: float
    chi2_df: int
    chi2_p: float


@dataclass
class MultivariateComparison:
    corr_observed: list
    corr_generated: list
    frobenius_diff: float
    corr_rmse: float
    corr_mae: float
    permanova_F: float
    permanova_p: float
    pearson_dipdir_dipangle_observed: float
    pearson_dipdir_dipangle_generated: float
    sliced_wasserstein: float


@dataclass
class EvaluationReport:
    engine: str
    observed_name: str
    n_observed: int
    n_generated: int
    generated_seed: int | None
    config: EvaluationConfig
    univariate: dict = field(default_factory=dict)
    multivariate: MultivariateComparison | None = None

    def to_dict(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "engine": self.engine,
            "observed_name": self.observed_name,
            "n_observed": self.n_observed,
            "n_generated": self.n_generated,
            "generated_seed": self.generated_seed,
            "config": asdict(self.config),
            "univariate": {p: asdict(self.univariate[p]) for p in PARAMETERS},
            "multivariate": asdict(self.multivariate),
        }


def relative_error(generated: float, observed: float) -> float:
    return abs(generated - observed) / max(abs(observed), REL_EPS)


def evaluate(observed: DiscontinuitySet, generated: DiscontinuitySet,
             cfg: EvaluationConfig | None = None, engine: str | None = None) -> EvaluationReport:
    cfg = cfg or EvaluationConfig()
    so, sg = summary_stats(observed), summary_stats(generated)
    uni = {}
    for p in PARAMETERS:
        a, b = observed.column(p), generated.column(p)
        d, ks_p = ks_two_sample(a, b)
        chi, df, chi_p = chi_square_gof(a, b, cfg.bins)
        uni[p] = UnivariateComparison(
            parameter=p,
            observed_mean=so[p].mean, generated_mean=sg[p].mean,
            observed_std=so[p].std, generated_std=sg[p].std,
            mean_rel_error=relative_error(sg[p].mean, so[p].mean),
            std_rel_error=relative_error(sg[p].std, so[p].std),
            ks_stat=d, ks_p=ks_p,
            wasserstein_1=wasserstein_1d(a, b),
            chi2_stat=chi, chi2_df=df, chi2_p=chi_p,
        )
    co, cg = correlation_matrix(observed), correlation_matrix(generated)
    rmse, mae = corr_rmse_mae(co, cg)
    f, pval = permanova(observed, generated, cfg.permutations, cfg.seed)
    multi = MultivariateComparison(
        corr_observed=co.tolist(), corr_generated=cg.tolist(),
        frobenius_diff=frobenius_diff(co, cg), corr_rmse=rmse, corr_mae=mae,
        permanova_F=f, permanova_p=pval,
        pearson_dipdir_dipangle_observed=float(co[0, 1]),
        pearson_dipdir_dipangle_generated=float(cg[0, 1]),
        sliced_wasserstein=sliced_wasserstein(observed.features(), generated.features(),
                                              cfg.projections, cfg.seed),
    )
    return EvaluationReport(
        engine=engine or (generated.source.engine or "unknown"),
        observed_name=observed.name,
        n_observed=observed.n, n_generated=generated.n,
        generated_seed=generated.source.seed,
        config=cfg, univariate=uni, multivariate=multi,
    )
