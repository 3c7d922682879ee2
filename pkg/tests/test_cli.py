import csv
import json
import os
import subprocess
import sys

import pytest

from omegaspec.cli import main
from omegaspec.mesh import flat_torus, save_mesh
from omegaspec.report import SCHEMA, canonical_json, stable_hash


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    report = json.loads(out) if code in (0, 1) and out else None
    return code, report, err


def test_catalog_sphere_example(capsys):
    code, rep, _ = run(capsys, "catalog", "sphere", "--dim", "2", "--radius", "1", "--top", "3")
    assert code == 0 and rep["schema"] == SCHEMA
    om = rep["stable"]["results"]["omega"]
    assert [(o["value"], o["multiplicity"]) for o in om] == [(0.5, 3), (pytest.approx(1 / 6), 5), (pytest.approx(1 / 12), 7)]
    assert rep["stable"]["margins"]["margin"] == 0.0
    assert rep["stable"]["config"]["dim"] == 2


def test_catalog_heisenberg_sup(capsys):
    code, rep, _ = run(capsys, "catalog", "heisenberg", "--n", "2", "--sup")
    assert code == 0 and rep["stable"]["results"]["sup"] == 0.03125
    assert rep["stable"]["results"]["omega"][0]["multiplicity"] == "unresolved"


def test_catalog_other_targets(capsys):
    code, rep, _ = run(capsys, "catalog", "unitary", "--n", "2", "--r", "1.4142135623730951")
    assert code == 0 and rep["stable"]["results"]["omega"][0]["value"] == pytest.approx(0.375)
    assert rep["stable"]["margins"]["bound"] == 0.75
    code, rep, _ = run(capsys, "catalog", "torus", "--periods", "1,1", "--top", "2")
    assert code == 0 and rep["stable"]["results"]["omega"] == []
    assert rep["stable"]["results"]["lambda_of_g"][0]["multiplicity"] == 4
    code, rep, _ = run(capsys, "catalog", "product", "--factor1", "sphere:2:1", "--factor2", "sphere:3:1", "--top", "2")
    assert code == 0 and rep["stable"]["results"]["omega"][0]["value"] == pytest.approx(2 / 3)


def test_catalog_product_errors(capsys, tmp_path):
    empty = tmp_path / "empty.csv"
    empty.write_text("")
    code, _, err = run(capsys, "catalog", "product", "--a1", "1", "--a2", "0", "--spectrum1", str(empty), "--spectrum2", str(empty))
    assert code == 2 and "empty" in err
    small = tmp_path / "s.csv"
    small.write_text("0,1\n2,3\n")
    code, _, err = run(capsys, "catalog", "product", "--a1", "1", "--a2", "1", "--spectrum1", str(small), "--spectrum2", str(small), "--top", "4")
    assert code == 3 and "insufficient" in err
    code, _, _ = run(capsys, "catalog", "product", "--a1", "0", "--a2", "1", "--spectrum1", str(small), "--spectrum2", str(small))
    assert code == 2
    code, _, _ = run(capsys, "catalog", "sphere", "--dim", "0")
    assert code == 2


def test_mesh_icosphere_example(capsys):
    code, rep, _ = run(capsys, "mesh", "--gen", "icosphere", "--subdiv", "4", "--eigs", "100", "--top", "5")
    assert code == 0
    res = rep["stable"]["results"]
    assert 0.48 <= rep["stable"]["margins"]["omega1"] <= 0.505
    assert {"converged", "gauss_bonnet_residual", "fallback_faces", "omega"} <= set(res)
    assert "eigensolve" in rep["envelope"]["timings"]


def test_mesh_flat_torus_input(capsys, tmp_path):
    p = tmp_path / "torus.off"
    save_mesh(flat_torus(24, 24), p)
    code, rep, _ = run(capsys, "mesh", "--input", str(p), "--eigs", "40", "--top", "5")
    assert code == 0 and abs(rep["stable"]["margins"]["omega1"]) <= 0.05


def test_mesh_validation_names_simplex(capsys, tmp_path):
    p = tmp_path / "open.off"
    p.write_text("OFF\n4 2 0\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 1 2\n3 0 1 3\n")
    code, _, err = run(capsys, "mesh", "--input", str(p))
    assert code == 2 and "edge (" in err


def test_mesh_blob_table(capsys):
    code, rep, _ = run(capsys, "mesh", "--gen", "blob", "--eps", "0.4,0.2,0.1", "--eigs", "60")
    assert code == 0
    table = rep["stable"]["results"]["blob"]
    assert [row["eps"] for row in table] == [0.4, 0.2, 0.1]
    assert rep["stable"]["results"]["monotone"] is True


def test_verify_and_probe(capsys):
    code, rep, _ = run(capsys, "verify", "--suite", "minmax", "--seed", "0", "--cases", "10")
    assert code == 0 and rep["stable"]["results"]["suites"][0]["passed"]
    code, _, err = run(capsys, "verify", "--suite", "bogus")
    assert code == 2 and "unknown suite" in err
    code, rep, _ = run(capsys, "probe", "--field", "identity", "--k", "3")
    assert code == 0 and rep["stable"]["results"]["K"] == 1 and rep["stable"]["results"]["passed"]
    code, _, err = run(capsys, "probe", "--field", "neg-identity", "--k", "1")
    assert code == 2 and "S <= 0" in err
    code, rep, _ = run(capsys, "probe", "--field", "cap", "--k", "4", "--fourier-max-freq", "8")
    assert code == 0 and rep["stable"]["results"]["fourier_positive_count"] >= 4


def test_stable_hash_is_deterministic(capsys):
    args = ("catalog", "product", "--factor1", "sphere:2:1", "--factor2", "sphere:2:1", "--top", "5")
    _, a, _ = run(capsys, *args)
    _, b, _ = run(capsys, *args)
    assert a["hash"] == b["hash"] == stable_hash(a["stable"])
    assert canonical_json(a["stable"]) == canonical_json(b["stable"])
    _, c, _ = run(capsys, "catalog", "product", "--factor1", "sphere:2:1", "--factor2", "sphere:2:1", "--top", "4")
    assert c["hash"] != a["hash"]


def test_config_file_and_overrides(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[omega]\ndim = 3\ntop = 2\n")
    code, rep, _ = run(capsys, "catalog", "sphere", "--config", str(cfg))
    assert code == 0 and rep["stable"]["config"]["dim"] == 3 and len(rep["stable"]["results"]["omega"]) == 2
    code, rep, _ = run(capsys, "catalog", "sphere", "--config", str(cfg), "--top", "1")
    assert rep["stable"]["config"]["top"] == 1
    bad = tmp_path / "bad.ini"
    bad.write_text("[omega]\nsubdivisions = 3\n")
    code, _, err = run(capsys, "mesh", "--config", str(bad))
    assert code == 2 and "unknown config key" in err
    nested = tmp_path / "nested.ini"
    nested.write_text("[omega]\ntop = 2\n[extra]\nx = 1\n")
    assert run(capsys, "catalog", "sphere", "--config", str(nested))[0] == 2


def test_output_and_csv(capsys, tmp_path):
    out, table = tmp_path / "r.json", tmp_path / "r.csv"
    code = main(["catalog", "sphere", "--top", "3", "-o", str(out), "--csv", str(table)])
    assert code == 0 and json.loads(out.read_text())["schema"] == SCHEMA
    rows = list(csv.reader(table.open()))
    assert rows[0] == ["k", "value", "multiplicity", "witness"]
    assert [r[0] for r in rows[1:]] == ["1", "4", "9"]


def test_threads_env_validated():
    env = dict(os.environ, OMEGA_THREADS="zero")
    p = subprocess.run([sys.executable, "-m", "omegaspec.cli", "catalog", "sphere"], env=env, capture_output=True, text=True)
    assert p.returncode == 2 and "OMEGA_THREADS" in p.stderr
    env["OMEGA_THREADS"] = "2"
    p = subprocess.run([sys.executable, "-m", "omegaspec.cli", "catalog", "sphere"], env=env, capture_output=True, text=True)
    assert p.returncode == 0 and json.loads(p.stdout)["schema"] == SCHEMA
