"""Engine registry and the dataset-by-engine comparison run.

Per-pair seeds are ``derive_seed(master, dataset, engine)``, so adding an
engine or dataset never shifts any other pair's random stream. Every output
of a run is a pure function of the catalog files, the configuration and the
master seed.
"""

from __future__ import annotations

import csv
import json
import logging
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

from .core_data import PARAMETERS, DiscontinuitySet, load_catalog, write_csv
from .ddpm import DdpmModel, DdpmTrainConfig, ddpm_sample, train_ddpm
from .gan import GanModel, GanTrainConfig, gan_generate, train_gan
from .metrics import EvaluationConfig, evaluate
from .report import figure_bundle
from .rng import derive_seed
from .stat_generators import (
    TABLE1_FAMILIES,
    ExternalSampleSource,
    MonteCarloModel,
    SmoothedBootstrapModel,
    bootstrap_generate,
    load_external,
    mc_generate,
)

log = logging.getLogger(__name__)

ENGINES = ("monte_carlo", "bootstrap", "gan", "ddpm", "external")
DEFAULT_ENGINES = ("monte_carlo", "bootstrap", "gan", "ddpm")


# --- engines ------------------------------------------------------------------

def train_engine(engine: str, data: DiscontinuitySet, seed: int, overrides: dict | None = None):
    """Fit or train one engine on ``data``; ``overrides`` are engine-specific settings."""
    ov = dict(overrides or {})
    if engine == "monte_carlo":
        families = ov.pop("families", TABLE1_FAMILIES)
        if families == "auto":
            families = None
        return MonteCarloModel.fit(data, families, seed)
    if engine == "bootstrap":
        return SmoothedBootstrapModel.fit(data, seed, ov.pop("bandwidth", None))
    if engine == "gan":
        return train_gan(data, GanTrainConfig(**ov), seed)
    if engine == "ddpm":
        return train_ddpm(data, DdpmTrainConfig(**ov), seed)
    raise ValueError(f"engine {engine!r} cannot be trained (known: {', '.join(ENGINES[:4])})")


def generate_with(model, n: int, seed: int | None = None, name: str | None = None) -> DiscontinuitySet:
    if isinstance(model, MonteCarloModel):
        return mc_generate(model, n, seed, name or "monte_carlo")
    if isinstance(model, SmoothedBootstrapModel):
        return bootstrap_generate(model, n, seed, name or "bootstrap")
    if isinstance(model, GanModel):
        return gan_generate(model, n, seed, name or "gan")
    if isinstance(model, DdpmModel):
        return ddpm_sample(model, n, seed, name or "ddpm")
    raise TypeError(f"not a generator model: {type(model).__name__}")


_LOADERS = {
    "monte_carlo": MonteCarloModel.from_dict,
    "bootstrap": SmoothedBootstrapModel.from_dict,
    "gan": GanModel.from_dict,
    "ddpm": DdpmModel.from_dict,
}


def model_from_dict(d: dict):
    try:
        return _LOADERS[d["engine"]](d)
    except KeyError as exc:
        raise ValueError(f"not a model checkpoint (missing or unknown {exc})") from None


def save_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n",
                          encoding="utf-8")


# --- compare ----------------------------------------------------------------

@dataclass
class RunConfig:
    catalog: str
    seed: int
    out_dir: str = "compare-out"
    engines: list = field(default_factory=lambda: list(DEFAULT_ENGINES))
    datasets: list | None = None
    overrides: dict = field(default_factory=dict)
    n: int | None = None  # None: match each observed count
    evaluation: dict = field(default_factory=dict)
    external: dict = field(default_factory=dict)  # dataset name -> CSV path
    figures: bool = True
    jobs: int = 1

    def __post_init__(self):
        if not self.engines:
            raise ValueError("at least one engine is required")
        unknown = set(self.engines) - set(ENGINES)
        if unknown:
            raise ValueError(f"unknown engines: {sorted(unknown)}")
        if self.n is not None and self.n < 1:
            raise ValueError("n must be positive")
        self.seed = int(self.seed)

    @classmethod
    def from_file(cls, path, **overrides) -> "RunConfig":
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
        raw.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**raw)


@dataclass
class PairResult:
    dataset: str
    scenario: str
    engine: str
    status: str
    error: str | None = None
    report: dict | None = None


def run_pair(observed: DiscontinuitySet, scenario: str, engine: str, cfg: RunConfig) -> PairResult:
    """Train, generate, evaluate and draw figures for one dataset/engine pair.

    Any exception is caught and recorded; it never escapes to other pairs.
    """
    out = Path(cfg.out_dir) / observed.name / engine
    seed = derive_seed(cfg.seed, observed.name, engine)
    try:
        out.mkdir(parents=True, exist_ok=True)
        n = cfg.n or observed.n
        if engine == "external":
            if observed.name not in cfg.external:
                raise ValueError(f"no external sample file configured for {observed.name!r}")
            src = ExternalSampleSource(Path(cfg.external[observed.name]), "external")
            generated = load_external(src)
            model_meta = {"engine": "external", "path": str(src.path)}
        else:
            model = train_engine(engine, observed, seed, cfg.overrides.get(engine))
            generated = generate_with(model, n, name=f"{observed.name}-{engine}")
            model_meta = model.to_dict()
            save_json(model_meta, out / "model.json")
        write_csv(generated, out / "generated.csv", sidecar={"engine": engine, "seed": seed})
        ev_cfg = EvaluationConfig(**{**cfg.evaluation,
                                     "seed": derive_seed(cfg.seed, observed.name, engine, "evaluate")})
        report = evaluate(observed, generated, ev_cfg, engine).to_dict()
        report["dataset"] = observed.name
        report["scenario"] = scenario
        save_json(report, out / "report.json")
        if cfg.figures:
            for fname, svg in figure_bundle(observed, generated, labels=("observed", engine)).items():
                (out / fname).write_text(svg, encoding="utf-8")
        return PairResult(observed.name, scenario, engine, "ok", report=report)
    except Exception as exc:  # crash containment: record and move on
        log.warning("pair %s/%s failed: %s", observed.name, engine, exc)
        log.debug("%s", traceback.format_exc())
        return PairResult(observed.name, scenario, engine, "failed",
                          error=f"{type(exc).__name__}: {exc}")


def _run_pair_job(args):
    observed, scenario, engine, cfg = args
    return run_pair(observed, scenario, engine, cfg)


SUMMARY_METRICS = [
    # (column, path into report, higher_is_better)
    ("frobenius_diff", ("multivariate", "frobenius_diff"), False),
    ("corr_rmse", ("multivariate", "corr_rmse"), False),
    ("corr_mae", ("multivariate", "corr_mae"), False),
    ("permanova_p", ("multivariate", "permanova_p"), True),
    ("sliced_wasserstein", ("multivariate", "sliced_wasserstein"), False),
] + [
    (f"{p}_{m}", ("univariate", p, m), hib)
    for p in PARAMETERS
    for m, hib in (("mean_rel_error", False), ("std_rel_error", False), ("ks_p", True),
                   ("wasserstein_1", False), ("chi2_p", True))
]


def _dig(d, path):
    for k in path:
        d = d[k]
    return d


def _rank(values: list, higher_is_better: bool) -> list:
    """Competition ranks (1 = best); failed pairs get no rank."""
    out = []
    for v in values:
        if v is None:
            out.append("")
            continue
        better = sum(1 for w in values if w is not None and (w > v if higher_is_better else w < v))
        out.append(better + 1)
    return out


def write_summary(results: list[PairResult], path) -> None:
    header = ["dataset", "scenario", "engine", "status",
              "pearson_observed", "pearson_generated"]
    header += [m for m, _, _ in SUMMARY_METRICS] + [f"rank_{m}" for m, _, _ in SUMMARY_METRICS]
    rows = []
    datasets = list(dict.fromkeys(r.dataset for r in results))
    for ds in datasets:
        group = [r for r in results if r.dataset == ds]
        values = {m: [None if r.report is None else _dig(r.report, p) for r in group]
                  for m, p, _ in SUMMARY_METRICS}
        ranks = {m: _rank(values[m], hib) for m, _, hib in SUMMARY_METRICS}
        for i, r in enumerate(group):
            mv = r.report["multivariate"] if r.report else {}
            row = [r.dataset, r.scenario, r.engine, r.status,
                   mv.get("pearson_dipdir_dipangle_observed", ""),
                   mv.get("pearson_dipdir_dipangle_generated", "")]
            row += ["" if values[m][i] is None else repr(values[m][i]) for m, _, _ in SUMMARY_METRICS]
            row += [ranks[m][i] for m, _, _ in SUMMARY_METRICS]
            rows.append(row)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def scenario_means(results: list[PairResult], metric: str = "frobenius_diff",
                   scenarios=None) -> dict[str, float]:
    """Mean of one summary metric per engine, over successful pairs in ``scenarios``."""
    path = dict((m, p) for m, p, _ in SUMMARY_METRICS)[metric]
    acc: dict[str, list] = {}
    for r in results:
        if r.report is None or (scenarios and r.scenario not in scenarios):
            continue
        acc.setdefault(r.engine, []).append(_dig(r.report, path))
    return {e: sum(v) / len(v) for e, v in acc.items()}


def run_compare(cfg: RunConfig) -> list[PairResult]:
    catalog = load_catalog(cfg.catalog)
    names = cfg.datasets or catalog.names()
    jobs = [(catalog.load(name), catalog.entry(name).scenario, engine, cfg)
            for name in names for engine in cfg.engines]
    Path(cfg.out_dir).mkdir(parents=True, exist_ok=True)
    if cfg.jobs > 1:
        with ProcessPoolExecutor(cfg.jobs) as pool:
            results = list(pool.map(_run_pair_job, jobs))
    else:
        results = [_run_pair_job(j) for j in jobs]

    write_summary(results, Path(cfg.out_dir) / "summary.csv")
    groups = {"I": ["I"], "II": ["II"], "III": ["III"], "IV": ["IV"], "III+IV": ["III", "IV"],
              "all": None}
    scen = {label: scenario_means(results, "frobenius_diff", tags) for label, tags in groups.items()}
    bundle = {
        "schema_version": "1.0",
        "config": {k: v for k, v in asdict(cfg).items() if k not in ("out_dir", "jobs")},
        "pairs": [{"dataset": r.dataset, "scenario": r.scenario, "engine": r.engine,
                   "status": r.status, "error": r.error} for r in results],
        "mean_frobenius_diff": scen,
    }
    save_json(bundle, Path(cfg.out_dir) / "bundle.json")
    return results
