"""Command-line entry point: ``discgen {fit,train,generate,evaluate,compare,report}``.

Exit codes: 0 success, 1 when every pair of a ``compare`` run failed,
2 for usage or validation errors (bad flags, unreadable input, invalid model).
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from .core_data import PARAMETERS, parse_csv, write_csv
from .errors import DiscgenError
from .harness import (
    DEFAULT_ENGINES,
    ENGINES,
    RunConfig,
    generate_with,
    model_from_dict,
    run_compare,
    save_json,
    train_engine,
)
from .marginal_fit import FAMILIES
from .metrics import EvaluationConfig, evaluate
from .report import build_histogram, build_scatter, figure_bundle
from .stat_generators import MonteCarloModel

log = logging.getLogger("discgen")


class UsageError(Exception):
    pass


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {v}")
    return v


def _key_value(text: str) -> tuple[str, str]:
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected KEY=VALUE, got {text!r}")
    k, v = text.split("=", 1)
    return k.strip(), v.strip()


def _literal(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def _overrides(pairs) -> dict:
    """``engine.key=value`` flags to ``{engine: {key: value}}``."""
    out: dict = {}
    for k, v in pairs or ():
        engine, _, key = k.partition(".")
        if not key:
            raise UsageError(f"override {k!r} must look like ENGINE.KEY=VALUE")
        out.setdefault(engine, {})[key] = _literal(v)
    return out


def _read_json(path) -> dict:
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"file not found: {p}")
    try:
        return json.loads(p.read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise UsageError(f"{p}: invalid JSON ({exc})") from None


def _read_csv(path, **kw):
    p = Path(path)
    if not p.is_file():
        raise UsageError(f"file not found: {p}")
    return parse_csv(p, **kw)


# --- subcommands ------------------------------------------------------------

def cmd_fit(args) -> int:
    data = _read_csv(args.input)
    families = dict(args.family or ())
    for p, fam in families.items():
        if p not in PARAMETERS:
            raise UsageError(f"unknown parameter {p!r} (expected one of {', '.join(PARAMETERS)})")
        if fam not in FAMILIES:
            raise UsageError(f"unknown family {fam!r} (expected one of {', '.join(FAMILIES)})")
    model = MonteCarloModel.fit(data, families, args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for p in PARAMETERS:
        save_json(model.fits[p].to_dict(), out / f"fit_{p}.json")
    save_json(model.to_dict(), out / "fits.json")
    for p in PARAMETERS:
        f = model.fits[p]
        print(f"{p}: {f.family} {json.dumps(f.params)}")
    return 0


def cmd_train(args) -> int:
    data = _read_csv(args.input)
    ov = _overrides(args.set).get(args.engine, {})
    model = train_engine(args.engine, data, args.seed, ov)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_json(model.to_dict(), args.out)
    print(f"wrote {args.out}")
    return 0


def cmd_generate(args) -> int:
    if args.model:
        model = model_from_dict(_read_json(args.model))
    elif args.engine == "monte_carlo" and args.fits:
        model = model_from_dict(_read_json(args.fits))
    elif args.engine and args.input:
        model = train_engine(args.engine, _read_csv(args.input), args.seed or 0,
                             _overrides(args.set).get(args.engine, {}))
    else:
        raise UsageError("give --model, --engine monte_carlo --fits, or --engine with --input")
    seed = model.seed if args.seed is None else args.seed
    dset = generate_with(model, args.n, seed, name=Path(args.out).stem)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    write_csv(dset, args.out, sidecar={"engine": dset.source.engine, "seed": seed})
    print(f"wrote {dset.n} rows to {args.out}")
    return 0


def cmd_evaluate(args) -> int:
    observed = _read_csv(args.observed)
    generated = _read_csv(args.generated)
    cfg = EvaluationConfig(bins=args.bins, permutations=args.permutations, seed=args.seed)
    report = evaluate(observed, generated, cfg, args.engine).to_dict()
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return 0


def cmd_report(args) -> int:
    observed = _read_csv(args.observed)
    generated = _read_csv(args.generated) if args.generated else None
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    labels = ("observed", args.label)
    for fname, svg in figure_bundle(observed, generated, args.bins, labels).items():
        (out / fname).write_text(svg, encoding="utf-8")
    for p in PARAMETERS:
        spec = build_histogram(observed, generated, p, args.bins, labels)
        save_json(spec.to_dict(), out / f"hist_{p}.json")
        (out / f"hist_{p}.csv").write_text(spec.to_csv(), encoding="utf-8")
    save_json(build_scatter(observed, generated, labels).to_dict(), out / "scatter_dipdir_dipangle.json")
    print(f"wrote figures to {out}")
    return 0


def cmd_compare(args) -> int:
    flags = {
        "catalog": args.catalog,
        "seed": args.seed,
        "out_dir": args.out,
        "engines": args.engines,
        "datasets": args.datasets,
        "n": args.n,
        "jobs": args.jobs,
        "figures": False if args.no_figures else None,
    }
    if args.config:
        raw = _read_json(args.config)
        raw.update({k: v for k, v in flags.items() if v is not None})
    else:
        raw = {k: v for k, v in flags.items() if v is not None}
    if raw.get("seed") is None:
        raise UsageError("compare needs a master seed (--seed or \"seed\" in the config)")
    if not raw.get("catalog"):
        raise UsageError("compare needs --catalog (or \"catalog\" in the config)")
    extra = _overrides(args.set)
    if extra:
        merged = dict(raw.get("overrides", {}))
        for engine, kv in extra.items():
            merged[engine] = {**merged.get(engine, {}), **kv}
        raw["overrides"] = merged
    try:
        cfg = RunConfig(**raw)
    except TypeError as exc:
        raise UsageError(f"invalid config: {exc}") from None
    results = run_compare(cfg)
    ok = sum(r.status == "ok" for r in results)
    for r in results:
        if r.status != "ok":
            print(f"FAILED {r.dataset}/{r.engine}: {r.error}", file=sys.stderr)
    print(f"{ok}/{len(results)} pairs succeeded; summary in {Path(cfg.out_dir) / 'summary.csv'}")
    return 0 if ok else 1


# --- parser -----------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="discgen", description="Synthetic rock-discontinuity generation")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit one marginal family per parameter")
    p.add_argument("--input", required=True)
    p.add_argument("--family", action="append", type=_key_value, metavar="PARAM=FAMILY",
                   help="force a family for one parameter")
    p.add_argument("--out", default=".")
    p.add_argument("--seed", type=int, default=0, help="seed stored with the fits")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("train", help="fit or train one engine and save a model JSON")
    p.add_argument("--engine", required=True, choices=ENGINES[:4])
    p.add_argument("--input", required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--set", action="append", type=_key_value, metavar="ENGINE.KEY=VALUE")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("generate", help="sample a synthetic set to CSV")
    p.add_argument("--model")
    p.add_argument("--engine", choices=ENGINES[:4])
    p.add_argument("--fits")
    p.add_argument("--input")
    p.add_argument("-n", "--n", type=_positive_int, required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", required=True)
    p.add_argument("--set", action="append", type=_key_value, metavar="ENGINE.KEY=VALUE")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("evaluate", help="score a generated set against observations")
    p.add_argument("--observed", required=True)
    p.add_argument("--generated", required=True)
    p.add_argument("--engine", default="unknown")
    p.add_argument("--bins", type=_positive_int, default=10)
    p.add_argument("--permutations", type=_positive_int, default=999)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("compare", help="run every engine on every catalog dataset")
    p.add_argument("--config")
    p.add_argument("--catalog")
    p.add_argument("--seed", type=int)
    p.add_argument("--out")
    p.add_argument("--engines", nargs="+", choices=ENGINES,
                   help=f"default: {' '.join(DEFAULT_ENGINES)}")
    p.add_argument("--datasets", nargs="+")
    p.add_argument("--n", type=_positive_int, help="fixed generation size (default: observed count)")
    p.add_argument("--jobs", type=_positive_int)
    p.add_argument("--no-figures", action="store_true")
    p.add_argument("--set", action="append", type=_key_value, metavar="ENGINE.KEY=VALUE")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("report", help="render comparison figures as SVG")
    p.add_argument("--observed", required=True)
    p.add_argument("--generated")
    p.add_argument("--label", default="generated")
    p.add_argument("--bins", type=_positive_int, default=20)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (UsageError, DiscgenError, ValueError, OSError) as exc:
        print(f"discgen {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
