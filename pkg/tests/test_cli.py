import csv
import json

import pytest

from randfactor.cli import main

EXAMPLE = """
[experiment]
k_grid = 2, 5, 40
ensemble_size = 4
families = gaussian, sparse_achlioptas
pair_sample = 30
remove_market = true
universality = {universality}
base_seed = 5

[data]
source = synthetic
kind = one_factor
d = 30
n = 10
seed = 3
"""


@pytest.fixture
def exp_config(tmp_path):
    path = tmp_path / "exp.ini"
    path.write_text(EXAMPLE.format(universality="false"))
    return path


def test_experiment_outputs_and_determinism(tmp_path, exp_config):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["experiment", "--config", str(exp_config), "--out", str(a), "--workers", "1"]) == 0
    assert main(["experiment", "--config", str(exp_config), "--out", str(b), "--workers", "1"]) == 0
    for name in ("funnel.csv", "funnel_reduced.csv", "manifest.json"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    manifest = json.loads((a / "manifest.json").read_text())
    assert manifest["base_seed"] == 5 and len(manifest["config_sha256"]) == 64
    rows = list(csv.DictReader((a / "funnel.csv").open()))
    assert {r["family"] for r in rows} == {"gaussian", "sparse_achlioptas", "pca"}


def test_experiment_seed_override(tmp_path, exp_config):
    main(["experiment", "--config", str(exp_config), "--out", str(tmp_path / "a"), "--seed", "1"])
    main(["experiment", "--config", str(exp_config), "--out", str(tmp_path / "b"), "--seed", "2"])
    assert (tmp_path / "a/funnel.csv").read_bytes() != (tmp_path / "b/funnel.csv").read_bytes()


def test_universality_output(tmp_path):
    path = tmp_path / "u.ini"
    path.write_text(EXAMPLE.format(universality="true").replace("gaussian, sparse_achlioptas", "all"))
    assert main(["experiment", "--config", str(path), "--out", str(tmp_path)]) == 0
    rows = list(csv.DictReader((tmp_path / "universality.csv").open()))
    assert len(rows) == 3 * 6


def test_validate_theory_pass_and_fail(tmp_path):
    assert main(["validate-theory", "--d", "40", "--k", "5", "--trials", "20000", "--out", str(tmp_path / "ok")]) == 0
    text = (tmp_path / "ok/theory_report.csv").read_text()
    assert text.startswith("quantity,closed_form,estimate,std_error,z,verdict\n")
    assert main(["validate-theory", "--d", "500", "--trials", "10000", "--scale", "mean",
                 "--out", str(tmp_path / "bad")]) == 1
    rows = {r["quantity"]: r for r in csv.DictReader((tmp_path / "bad/theory_report.csv").open())}
    assert rows["cov_preservation"]["verdict"] == "FAIL"


def test_validate_theory_panel_vectors(tmp_path):
    assert main(["gen-data", "--kind", "one_factor", "--d", "30", "--n", "4", "--output", str(tmp_path / "p.panel")]) == 0
    cfg = tmp_path / "t.ini"
    cfg.write_text(f"[theory]\nvectors = panel\npanel = {tmp_path / 'p.panel'}\nu_column = s0\nv_column = 2\n"
                   "k = 4\ntrials = 10000\n")
    assert main(["validate-theory", "--config", str(cfg), "--out", str(tmp_path)]) == 0


@pytest.mark.parametrize("argv", [
    ["validate-theory", "--trials", "0"],
    ["validate-theory", "--scale", "huge"],
    ["validate-theory", "--family", "gaussian", "--d", "3"],
])
def test_config_errors(argv):
    assert main(argv) == 2


def test_usage_errors(exp_config):
    for argv in (["bogus"], ["experiment"], ["pca"], ["project", "--panel", "x", "--k", "2", "--seed", "-1"]):
        with pytest.raises(SystemExit) as info:
            main(argv)
        assert info.value.code == 2


def test_unknown_config_key(tmp_path):
    path = tmp_path / "x.ini"
    path.write_text("[experiment]\nk_grid = 2\ncolour = red\n")
    assert main(["experiment", "--config", str(path), "--out", str(tmp_path)]) == 2


def test_io_errors(tmp_path):
    assert main(["pca", "--panel", str(tmp_path / "missing.panel")]) == 3
    bad = tmp_path / "bad.panel"
    bad.write_text("not a panel\n")
    assert main(["project", "--panel", str(bad), "--k", "2"]) == 3
    csvp = tmp_path / "m.csv"
    csvp.write_text("date,A\n2021-01-01,1\n2021-01-02,\n")
    assert main(["ingest", "--input", str(csvp), "--output", str(tmp_path / "o.panel")]) == 3


def test_ingest_constant_is_validation_failure(tmp_path):
    csvp = tmp_path / "c.csv"
    csvp.write_text("date,A\n2021-01-01,5\n2021-01-02,5\n2021-01-03,5\n")
    assert main(["ingest", "--input", str(csvp), "--output", str(tmp_path / "o.panel")]) == 1


def test_pca_and_project(tmp_path):
    panel = tmp_path / "p.panel"
    assert main(["gen-data", "--kind", "iid_gaussian", "--d", "20", "--n", "5", "--seed", "3", "--output", str(panel)]) == 0
    assert main(["pca", "--panel", str(panel), "--k", "2", "--out", str(tmp_path / "pca")]) == 0
    sv = list(csv.reader((tmp_path / "pca/singular_values.csv").open()))
    assert len(sv) == 6
    assert main(["project", "--panel", str(panel), "--k", "3", "--family", "coin_flip", "--seed", "9",
                 "--out", str(tmp_path / "rfm")]) == 0
    for name in ("projected.csv", "rfm_factors.csv", "rfm_loadings.csv"):
        assert (tmp_path / "rfm" / name).exists()
