import math

import numpy as np
import pytest

from discgen.errors import DegenerateSample, NonPositiveSample, NoViableCandidate
from discgen.marginal_fit import (
    MarginalFit,
    fit_exponential,
    fit_family,
    fit_lognormal,
    fit_normal,
    log_likelihood,
    select_family,
)
from discgen.rng import Prng


def test_normal_two_point():
    f = fit_normal([0.0, 2.0])
    assert f.params == {"mu": 1.0, "sigma": 1.0} and f.n == 2


def test_normal_degenerate():
    with pytest.raises(DegenerateSample):
        fit_normal([5.0, 5.0, 5.0])


def test_normal_large_sample():
    x = Prng(42).normal(10_000, 120.0, 15.0)
    f = fit_normal(x)
    assert abs(f.params["mu"] - 120.0) < 0.5 and abs(f.params["sigma"] - 15.0) < 0.5


def test_lognormal_cases():
    f = fit_lognormal([1.0, math.e ** 2])
    assert f.params["mu_log"] == pytest.approx(1.0, abs=1e-15)
    assert f.params["sigma_log"] == pytest.approx(1.0, abs=1e-15)
    with pytest.raises(DegenerateSample):
        fit_lognormal([math.e, math.e])
    with pytest.raises(NonPositiveSample) as ei:
        fit_lognormal([3.0, -1.0])
    assert ei.value.index == 1


def test_exponential_cases():
    assert fit_exponential([2.0, 2.0]).params["rate"] == 0.5
    assert fit_exponential([1.0]).params["rate"] == 1.0
    x = Prng(3).exponential(0.4, 10_000)
    assert abs(fit_exponential(x).params["rate"] - 0.4) < 0.02


def test_log_likelihood_matches_scalar_formula():
    x = [0.5, 1.5, 2.0]
    ll = log_likelihood("normal", {"mu": 1.0, "sigma": 2.0}, x)
    ref = sum(-0.5 * math.log(2 * math.pi * 4.0) - (v - 1.0) ** 2 / 8.0 for v in x)
    assert ll == pytest.approx(ref, abs=1e-12)
    ll = log_likelihood("lognormal", {"mu_log": 0.0, "sigma_log": 1.0}, x)
    ref = sum(-math.log(v) - 0.5 * math.log(2 * math.pi) - math.log(v) ** 2 / 2 for v in x)
    assert ll == pytest.approx(ref, abs=1e-12)
    assert log_likelihood("exponential", {"rate": 2.0}, x) == pytest.approx(3 * math.log(2) - 8.0)


def test_select_lognormal_over_normal():
    x = np.exp(Prng(11).normal(200))
    f = select_family(x, ["normal", "lognormal"])
    lls = {fam: fit_family(fam, x).log_likelihood for fam in ("normal", "lognormal")}
    assert lls["lognormal"] > lls["normal"]
    assert f.family == "lognormal"
    assert set(f.diagnostics["candidates"]) == {"normal", "lognormal"}


def test_select_single_candidate_and_filter():
    assert select_family([1.0, 2.0, 4.0], ["normal"]).family == "normal"
    with pytest.raises(NoViableCandidate):
        select_family([0.0, 1.0, 2.0], ["lognormal"])


def test_moments_and_roundtrip():
    f = fit_lognormal([1.0, math.e ** 2])
    assert f.mean() == pytest.approx(math.exp(1.5))
    assert f.std() == pytest.approx(math.sqrt(math.e - 1) * math.exp(1.5))
    g = MarginalFit.from_dict(f.to_dict())
    assert g == f


def test_degenerate_fixture_only_via_constructor():
    d = MarginalFit.degenerate_normal(45.0)
    assert np.all(d.sample(Prng(1), 5) == 45.0)
    with pytest.raises(ValueError):
        MarginalFit("normal", {"mu": 0.0, "sigma": 0.0}, 3, -1.0)


@pytest.mark.parametrize("family,params", [("normal", {"mu": 3.0, "sigma": 2.0}),
                                           ("lognormal", {"mu_log": 0.5, "sigma_log": 0.4}),
                                           ("exponential", {"rate": 1.5})])
def test_cdf_matches_scipy(family, params):
    from scipy import stats
    x = np.linspace(0.01, 8.0, 50)
    f = MarginalFit(family, params, 1, 0.0)
    ref = {"normal": stats.norm(params.get("mu"), params.get("sigma")) if family == "normal" else None,
           "lognormal": stats.lognorm(params.get("sigma_log", 1), scale=math.exp(params.get("mu_log", 0))),
           "exponential": stats.expon(scale=1 / params.get("rate", 1))}[family]
    np.testing.assert_allclose(f.cdf(x), ref.cdf(x), atol=1e-12)
