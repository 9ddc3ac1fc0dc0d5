"""Acceptance criteria 1-10. Each test prints one PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v -s`` (the summary lines
are also repeated at the end of any pytest run), or as a script:
``python3 tests/test_acceptance.py``.
"""

import itertools
import math
import sys
import time
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import kstest

sys.path.insert(0, str(Path(__file__).parent))

from test_metrics import ks_grid_oracle, pseudo_f_oracle, w1_quantile_oracle, zscore_pooled  # noqa: E402
from test_nn import CONFIGS, gradient_check  # noqa: E402

from discgen.ddpm import DdpmTrainConfig, NoiseSchedule, compose_noise, ddpm_sample, forward_diffuse, train_ddpm  # noqa: E402
from discgen.fixtures import bundled_catalog_path, correlated_table  # noqa: E402
from discgen.gan import GanTrainConfig, gan_generate, train_gan  # noqa: E402
from discgen.harness import RunConfig, run_compare, scenario_means  # noqa: E402
from discgen.marginal_fit import MarginalFit, fit_family  # noqa: E402
from discgen.metrics import chi_square_gof, ks_statistic, ks_two_sample, pearson, permanova, wasserstein_1d  # noqa: E402
from discgen.rng import Prng  # noqa: E402
from discgen.stat_generators import (  # noqa: E402
    MonteCarloModel,
    SmoothedBootstrapModel,
    bootstrap_generate,
    mc_generate,
)

RESULTS: dict = {}


def record(number, ok, detail):
    line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
    RESULTS[number] = line
    print(line)
    return ok


@pytest.fixture(scope="module")
def table500():
    return correlated_table(500, -0.7, seed=20240607)


# 1 ---------------------------------------------------------------------------

def test_criterion_01_monte_carlo_independence():
    data = correlated_table(500, -0.7, seed=1, exact=True)
    t0 = time.perf_counter()
    mc = mc_generate(MonteCarloModel.fit(data, seed=11), 10_000)
    bs = bootstrap_generate(SmoothedBootstrapModel.fit(data, seed=12), 10_000)
    elapsed = time.perf_counter() - t0
    r_mc = pearson(mc.column("dip_direction"), mc.column("dip_angle"))
    r_bs = pearson(bs.column("dip_direction"), bs.column("dip_angle"))
    ok = abs(r_mc) < 0.1 and abs(r_bs + 0.7) < 0.1 and elapsed < 5.0
    assert record(1, ok, f"r_mc={r_mc:+.4f} r_bootstrap={r_bs:+.4f} time={elapsed:.2f}s")


# 2 ---------------------------------------------------------------------------

TRUE = {
    "normal": {"mu": 45.0, "sigma": 10.0},
    "lognormal": {"mu_log": 0.5, "sigma_log": 0.4},
    "exponential": {"rate": 0.5},
}


def _standard_errors(family, params, n):
    if family == "normal":
        return {"mu": params["sigma"] / math.sqrt(n), "sigma": params["sigma"] / math.sqrt(2 * n)}
    if family == "lognormal":
        s = params["sigma_log"]
        return {"mu_log": s / math.sqrt(n), "sigma_log": s / math.sqrt(2 * n)}
    return {"rate": params["rate"] / math.sqrt(n)}


def test_criterion_02_marginal_recovery():
    n, n_gen = 10_000, 100_000
    t0 = time.perf_counter()
    details, ok = [], True
    fits = {}
    for k, (family, params) in enumerate(TRUE.items()):
        x = MarginalFit(family, params, 0, 0.0).sample(Prng(200 + k), n)
        fit = fit_family(family, x)
        fits[family] = fit
        for name, se in _standard_errors(family, params, n).items():
            z = abs(fit.params[name] - params[name]) / se
            ok &= z < 3.0
            details.append(f"{family}.{name} z={z:.2f}")
    # every family goes through the generator: normal as dip angle, the
    # positive families as trace length
    direction = fit_family("normal", MarginalFit("normal", {"mu": 180.0, "sigma": 20.0}, 0, 0.0)
                           .sample(Prng(299), n))
    for tl_family in ("lognormal", "exponential"):
        model = MonteCarloModel({"dip_direction": direction, "dip_angle": fits["normal"],
                                 "trace_length": fits[tl_family]}, seed=300)
        g = mc_generate(model, n_gen)
        for p in ("dip_angle", "trace_length"):
            f = model.fits[p]
            dm = abs(g.column(p).mean() / f.mean() - 1)
            ds = abs(g.column(p).std() / f.std() - 1)
            ok &= dm < 0.02 and ds < 0.02
            details.append(f"{f.family}:mean{dm:.2%}/std{ds:.2%}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 5.0
    assert record(2, ok, " ".join(details) + f" time={elapsed:.2f}s")


# 3 ---------------------------------------------------------------------------

def test_criterion_03_ddpm_recovery(table500):
    t0 = time.perf_counter()
    model = train_ddpm(table500, DdpmTrainConfig(), seed=31)
    g = ddpm_sample(model, 10_000, seed=32)
    elapsed = time.perf_counter() - t0
    real, gen = table500.features(), g.features()  # trace length in log space: a 3-D Gaussian
    mu, sd = real.mean(axis=0), real.std(axis=0)
    mean_off = np.abs(gen.mean(axis=0) - mu) / sd
    std_ratio = gen.std(axis=0) / sd
    r = pearson(gen[:, 0], gen[:, 1])
    ok = (np.all(mean_off < 0.1) and np.all(np.abs(std_ratio - 1) < 0.15)
          and abs(r + 0.7) < 0.2 and elapsed < 180)
    assert record(3, ok, f"mean_offset/sigma={np.round(mean_off, 3).tolist()} "
                         f"std_ratio={np.round(std_ratio, 3).tolist()} r12={r:+.3f} time={elapsed:.1f}s")


# 4 ---------------------------------------------------------------------------

def test_criterion_04_gan_non_degenerate(table500):
    t0 = time.perf_counter()
    model = train_gan(table500, GanTrainConfig(), seed=41)
    g = gan_generate(model, 10_000, seed=42)
    elapsed = time.perf_counter() - t0
    ratio = g.features().std(axis=0) / table500.features().std(axis=0)
    d_real = model.log[-1]["d_real"]
    ok = np.all(ratio > 0.4) and 0.2 <= d_real <= 0.8 and elapsed < 180
    assert record(4, ok, f"std_ratio={np.round(ratio, 3).tolist()} final_D(real)={d_real:.3f} "
                         f"time={elapsed:.1f}s")


# 5 ---------------------------------------------------------------------------

def test_criterion_05_metric_oracles():
    p = Prng(50)
    a, b = p.normal(30).round(1), p.normal(40, 0.3).round(1)
    ks_err = abs(ks_statistic(a, b) - ks_grid_oracle(a.tolist(), b.tolist()))

    wa, wb = [0.3, 1.7, 2.2], [-0.5, 0.9, 1.1, 2.8, 3.6]
    w_err = abs(wasserstein_1d(wa, wb) - w1_quantile_oracle(wa, wb))

    counts = [3, 7, 5, 5, 4, 6, 5, 5, 8, 2]
    stat, _, _ = chi_square_gof(np.arange(100.0), np.repeat(np.arange(5.0, 100.0, 10.0), counts), 10)
    chi_err = abs(stat - 28.0 / 5.0)

    x, y = p.normal((3, 3)), p.normal((3, 3)) + 0.8
    _, pval = permanova(x, y, permutations=719)
    z = zscore_pooled(x, y).tolist()
    f_obs = pseudo_f_oracle(z, [0, 0, 0, 1, 1, 1])
    splits = list(itertools.combinations(range(6), 3))
    exact = sum(pseudo_f_oracle(z, [0 if i in s else 1 for i in range(6)]) >= f_obs - 1e-10
                for s in splits) / len(splits)
    perm_err = abs(pval - exact)

    ok = ks_err < 1e-12 and w_err < 1e-6 and chi_err < 1e-9 and perm_err <= 0.01
    assert record(5, ok, f"ks={ks_err:.1e} w1={w_err:.1e} chi2={chi_err:.1e} "
                         f"permanova |p-exact|={perm_err:.4f} (p={pval:.4f})")


# 6 ---------------------------------------------------------------------------

def _ks_null_pvalues(n, m, trials=500, seed=60):
    root = Prng(seed)
    out = []
    for i in range(trials):
        s = root.spawn("trial", i)
        out.append(ks_two_sample(s.normal(n), s.normal(m))[1])
    return np.array(out)


def test_criterion_06_ks_null_calibration():
    # like-for-like sizes of the largest bundled dataset (observed vs generated)
    n = 766
    d = kstest(_ks_null_pvalues(n, n), "uniform").statistic
    # diagnostic only: at small equal sizes the null D lives on a coarse
    # lattice and no p-value (asymptotic or exact) can be uniform
    d_small = kstest(_ks_null_pvalues(100, 100), "uniform").statistic
    print(f"   diagnostic: n=m=100 gives D={d_small:.4f} (lattice-limited, not asserted)")
    assert record(6, d < 0.08, f"500 trials n=m={n}: D(p-values vs U(0,1))={d:.4f}")


# 7 ---------------------------------------------------------------------------

def test_criterion_07_gradient_check():
    errs = {f"{h}/{o}": gradient_check(h, o, seed) for (h, o) in CONFIGS for seed in (0, 1)}
    worst = max(errs.values())
    assert record(7, worst < 1e-4, f"max relative error {worst:.2e} over {sorted(set(errs))}")


# 8 ---------------------------------------------------------------------------

def _iterate(x0, noises, s):
    x = x0
    for k, e in enumerate(noises, start=1):
        x = np.sqrt(1 - s.betas[k]) * x + np.sqrt(s.betas[k]) * e
    return x


def test_criterion_08_forward_diffusion():
    worst = 0.0
    p = Prng(80)
    for T in range(1, 6):
        s = NoiseSchedule.linear(T, 0.05, 0.3) if T > 1 else NoiseSchedule([0.1])
        x0 = p.normal((8, 3))
        noises = [p.normal((8, 3)) for _ in range(T)]
        for t in range(1, T + 1):
            closed = forward_diffuse(x0, t, compose_noise(noises[:t], t, s), s)
            worst = max(worst, float(np.max(np.abs(closed - _iterate(x0, noises[:t], s)))))
    s = NoiseSchedule.linear()
    n = 10_000
    zs = []
    for t in (1, 50, 100, 200):
        x = forward_diffuse(np.zeros((n, 1)), t, p.normal((n, 1)), s)[:, 0]
        target = 1 - s.alpha_bars[t]
        se = target * math.sqrt(2 / (n - 1))  # SE of a Gaussian sample variance
        zs.append(abs(x.var(ddof=1) - target) / se)
    ok = worst < 1e-12 and max(zs) < 3
    assert record(8, ok, f"max |closed-iterated|={worst:.1e} var z-scores={np.round(zs, 2).tolist()}")


# 9 ---------------------------------------------------------------------------

def test_criterion_09_scenario_ordering(tmp_path_factory):
    out = tmp_path_factory.mktemp("compare_full")
    t0 = time.perf_counter()
    results = run_compare(RunConfig(catalog=str(bundled_catalog_path()), seed=2024, out_dir=str(out)))
    elapsed = time.perf_counter() - t0
    means = scenario_means(results, "frobenius_diff", ["III", "IV"])
    neural = [means["gan"], means["ddpm"]]
    ok = (len(results) == 40 and all(r.status == "ok" for r in results)
          and means["bootstrap"] <= min(neural)
          and means["monte_carlo"] == max(means.values())
          and elapsed < 1800)
    detail = " ".join(f"{e}={v:.3f}" for e, v in sorted(means.items()))
    assert record(9, ok, f"mean frobenius over III-IV: {detail}; pairs ok="
                         f"{sum(r.status == 'ok' for r in results)}/40 time={elapsed:.0f}s")


# 10 --------------------------------------------------------------------------

def test_criterion_10_determinism(tmp_path_factory):
    dirs = []
    for k in range(2):
        out = tmp_path_factory.mktemp(f"repeat{k}")
        run_compare(RunConfig(catalog=str(bundled_catalog_path()), seed=77, out_dir=str(out),
                              datasets=["valle_g3", "oernlia_g3"]))
        dirs.append(out)
    files = sorted(f.relative_to(dirs[0]) for f in dirs[0].rglob("*") if f.suffix in (".json", ".svg"))
    same = [(dirs[0] / f).read_bytes() == (dirs[1] / f).read_bytes() for f in files]
    n_reports = sum(f.name == "report.json" for f in files)
    ok = all(same) and n_reports == 8 and any(f.suffix == ".svg" for f in files)
    assert record(10, ok, f"{sum(same)}/{len(files)} JSON/SVG files byte-identical ({n_reports} reports)")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q", "-s"]))
