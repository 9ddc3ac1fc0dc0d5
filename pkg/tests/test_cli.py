import csv
import json

import pytest

from discgen.cli import main
from discgen.fixtures import bundled_catalog_path

DATA = bundled_catalog_path().parent
FAST = ["--set", "gan.epochs=30", "--set", "ddpm.epochs=30", "--set", "ddpm.T=20"]


def read_rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_fit_writes_three_files(tmp_path):
    assert main(["fit", "--input", str(DATA / "oernlia_g1.csv"), "--out", str(tmp_path)]) == 0
    for p in ("dip_direction", "dip_angle", "trace_length"):
        assert json.loads((tmp_path / f"fit_{p}.json").read_text())["family"]
    assert json.loads((tmp_path / "fits.json").read_text())["engine"] == "monte_carlo"


def test_fit_forced_family(tmp_path):
    args = ["fit", "--input", str(DATA / "valle_g2.csv"), "--out", str(tmp_path)]
    assert main(args + ["--family", "trace_length=exponential"]) == 0
    assert json.loads((tmp_path / "fit_trace_length.json").read_text())["family"] == "exponential"
    assert main(args + ["--family", "trace_length=gamma"]) == 2


def test_missing_file_exit_2(tmp_path, capsys):
    missing = tmp_path / "nope.csv"
    assert main(["fit", "--input", str(missing)]) == 2
    assert str(missing) in capsys.readouterr().err


def test_generate_from_fits(tmp_path):
    main(["fit", "--input", str(DATA / "oernlia_g1.csv"), "--out", str(tmp_path)])
    out = tmp_path / "g.csv"
    args = ["generate", "--engine", "monte_carlo", "--fits", str(tmp_path / "fits.json"),
            "-n", "100", "--seed", "7", "--out", str(out)]
    assert main(args) == 0
    first = out.read_bytes()
    assert len(read_rows(out)) == 100
    assert json.loads((tmp_path / "g.csv.json").read_text())["seed"] == 7
    assert main(args) == 0
    assert out.read_bytes() == first


def test_generate_n_zero_is_usage_error(tmp_path):
    with pytest.raises(SystemExit) as ei:
        main(["generate", "--engine", "monte_carlo", "--fits", "x.json", "-n", "0", "--out", "g.csv"])
    assert ei.value.code == 2


def test_generate_invalid_model(tmp_path):
    bad = tmp_path / "m.json"
    bad.write_text(json.dumps({"engine": "nope"}))
    assert main(["generate", "--model", str(bad), "-n", "5", "--out", str(tmp_path / "g.csv")]) == 2


def test_train_generate_evaluate_report(tmp_path):
    obs = str(DATA / "valle_g3.csv")
    model = tmp_path / "gan.json"
    assert main(["train", "--engine", "gan", "--input", obs, "--seed", "3", "--out", str(model),
                 "--set", "gan.epochs=20"]) == 0
    gen = tmp_path / "gan.csv"
    assert main(["generate", "--model", str(model), "-n", "50", "--out", str(gen)]) == 0
    rep = tmp_path / "r.json"
    assert main(["evaluate", "--observed", obs, "--generated", str(gen), "--engine", "gan",
                 "--permutations", "99", "--out", str(rep)]) == 0
    assert json.loads(rep.read_text())["engine"] == "gan"
    assert main(["report", "--observed", obs, "--generated", str(gen), "--out", str(tmp_path / "f")]) == 0
    assert (tmp_path / "f" / "scatter_dipdir_dipangle.svg").exists()
    assert (tmp_path / "f" / "hist_trace_length.csv").exists()


def test_compare_requires_seed(tmp_path):
    assert main(["compare", "--catalog", str(DATA / "catalog.json"), "--out", str(tmp_path)]) == 2


def test_compare_single_engine_single_dataset(tmp_path):
    rc = main(["compare", "--catalog", str(DATA / "catalog.json"), "--seed", "1",
               "--out", str(tmp_path), "--engines", "monte_carlo", "--datasets", "valle_g3"])
    assert rc == 0
    rows = read_rows(tmp_path / "summary.csv")
    assert len(rows) == 1 and rows[0]["rank_frobenius_diff"] == "1"
    assert (tmp_path / "valle_g3" / "monte_carlo" / "report.json").exists()


def test_compare_config_file_and_flag_override(tmp_path):
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"catalog": str(DATA / "catalog.json"), "seed": 5,
                               "engines": ["bootstrap"], "datasets": ["oernlia_g3"],
                               "out_dir": str(tmp_path / "a"), "figures": False}))
    assert main(["compare", "--config", str(cfg), "--seed", "6"]) == 0
    bundle = json.loads((tmp_path / "a" / "bundle.json").read_text())
    assert bundle["config"]["seed"] == 6
    assert not list((tmp_path / "a" / "oernlia_g3" / "bootstrap").glob("*.svg"))


def test_compare_partial_and_total_failure(tmp_path):
    base = ["compare", "--catalog", str(DATA / "catalog.json"), "--seed", "1", "--datasets", "valle_g3"]
    # external engine without a configured file fails; monte_carlo still runs
    assert main(base + ["--out", str(tmp_path / "p"), "--engines", "monte_carlo", "external"]) == 0
    pairs = json.loads((tmp_path / "p" / "bundle.json").read_text())["pairs"]
    assert {p["engine"]: p["status"] for p in pairs} == {"monte_carlo": "ok", "external": "failed"}
    assert main(base + ["--out", str(tmp_path / "f"), "--engines", "external"]) == 1


def test_compare_crash_containment(tmp_path):
    # a learning rate that blows up the GAN must not stop the other engines
    rc = main(["compare", "--catalog", str(DATA / "catalog.json"), "--seed", "2",
               "--datasets", "oernlia_g3", "--out", str(tmp_path), "--no-figures",
               "--engines", "gan", "bootstrap", "--set", "gan.epochs=200", "--set", "gan.lr_g=1e6",
               "--set", "gan.lr_d=1e6"])
    assert rc == 0
    status = {p["engine"]: p["status"] for p in
              json.loads((tmp_path / "bundle.json").read_text())["pairs"]}
    assert status["bootstrap"] == "ok"


def test_compare_external_adapter(tmp_path):
    ext = DATA / "valle_g2.csv"
    cfg = tmp_path / "run.json"
    cfg.write_text(json.dumps({"catalog": str(DATA / "catalog.json"), "seed": 3,
                               "engines": ["external"], "datasets": ["valle_g3"],
                               "external": {"valle_g3": str(ext)}, "out_dir": str(tmp_path / "o")}))
    assert main(["compare", "--config", str(cfg)]) == 0
    rep = json.loads((tmp_path / "o" / "valle_g3" / "external" / "report.json").read_text())
    assert rep["n_generated"] == 253


def test_compare_parallel_matches_serial(tmp_path):
    base = ["compare", "--catalog", str(DATA / "catalog.json"), "--seed", "9",
            "--datasets", "valle_g3", "oernlia_g3", "--engines", "monte_carlo", "bootstrap", "gan",
            "--no-figures"] + FAST
    assert main(base + ["--out", str(tmp_path / "s")]) == 0
    assert main(base + ["--out", str(tmp_path / "p"), "--jobs", "2"]) == 0
    for f in sorted((tmp_path / "s").rglob("*.json")):
        rel = f.relative_to(tmp_path / "s")
        assert f.read_bytes() == (tmp_path / "p" / rel).read_bytes(), rel
