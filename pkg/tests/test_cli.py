import json
import math
import subprocess
import sys

import numpy as np
import pytest

from intrinsic_lab import cli
from intrinsic_lab import intrinsic_entropy as ie
from intrinsic_lab import verification as vf


def run(argv, capsys):
    code = cli.main(argv)
    out = capsys.readouterr()
    return code, out.out, out.err


def read_csv(text):
    rows = [ln for ln in text.splitlines() if ln and not ln.startswith("#")]
    header = rows[0].split(",")
    data = np.array([[float(x) for x in r.split(",")] for r in rows[1:]])
    return header, data


# --- iv ----------------------------------------------------------------------

def test_iv_cube(capsys):
    code, out, _ = run(["iv", "cube", "--n", "3", "--A", "2"], capsys)
    doc = json.loads(out)
    assert code == 0
    np.testing.assert_allclose(doc["values"], [1, 6, 12, 8], rtol=1e-14)
    assert doc["n"] == 3 and len(doc["log_v"]) == 4


def test_iv_ball_with_verify(capsys):
    code, out, _ = run(["iv", "ball", "--n", "2", "--r", "1", "--verify"], capsys)
    doc = json.loads(out)
    assert code == 0
    np.testing.assert_allclose(doc["values"], [1, math.pi, math.pi], rtol=1e-13)
    assert doc["alexandrov_fenchel"]["passed"]


def test_iv_crosspolytope(capsys):
    code, out, _ = run(["iv", "crosspolytope", "--n", "2", "--A", "1"], capsys)
    assert code == 0
    np.testing.assert_allclose(json.loads(out)["values"], [1, 4 * math.sqrt(2), 8], rtol=1e-9)


def test_iv_fit(capsys):
    code, out, _ = run(["iv", "fit", "--oracle", "cube2", "--samples", "2e5", "--seed", "7",
                        "--jobs", "2"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["within_3_sigma"]
    assert doc["meta"]["seed"] == 7


@pytest.mark.parametrize("argv", [
    ["iv", "cube"],                       # missing --n
    ["iv", "fit"],                        # missing --oracle
    ["iv", "ball", "--n", "2", "--r", "-1"],
    ["iv", "cube", "--n", "2.5"],
    ["h-theta", "laplace", "--closed-form"],
    ["h-theta", "gaussian", "--theta", "0:2:5"],
    ["h-theta", "file"],
    ["verify"],
    ["bogus"],
])
def test_usage_errors_exit_2(argv, capsys):
    try:
        code = cli.main(argv)
    except SystemExit as e:  # argparse rejects before dispatch
        code = e.code
    capsys.readouterr()
    assert code == 2


# --- h-theta -------------------------------------------------------------------

def test_h_theta_closed_form_gaussian(capsys):
    code, out, _ = run(["h-theta", "gaussian", "--nu", "1", "--closed-form",
                        "--theta", "0:1:11"], capsys)
    header, data = read_csv(out)
    assert code == 0 and header == ["theta", "h", "lo", "hi"]
    np.testing.assert_allclose(data[:, 1], ie.gaussian_h_theta(1.0, data[:, 0]), atol=1e-11)
    assert "# seed: 0" in out and "# config_hash:" in out


def test_h_theta_uniform_pipeline(capsys):
    code, out, _ = run(["h-theta", "uniform", "--A", "1", "--n-max", "100",
                        "--theta", "0,0.25,0.5,0.75,1"], capsys)
    _, data = read_csv(out)
    assert code == 0
    np.testing.assert_allclose(data[:, 1], ie.binary_entropy(data[:, 0]), atol=1e-8)


def test_h_theta_laplace_band_json(capsys):
    code, out, _ = run(["h-theta", "laplace", "--b", "1", "--n-max", "2", "--samples", "20000",
                        "--theta", "0:1:5", "--format", "json"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["mode"] == "band"
    assert all(v is None for v in doc["h"])
    assert all(lo <= hi for lo, hi in zip(doc["lo"], doc["hi"]))


def test_h_theta_nonconvergence_exit_3(capsys):
    code, out, err = run(["h-theta", "gaussian", "--eps", "0.4,0.1", "--n-max", "100",
                          "--theta", "0:1:11"], capsys)
    assert code == 3 and "did not converge" in err
    _, data = read_csv(out)
    assert np.all(data[:, 2] <= data[:, 3])  # the band is still reported


def test_h_theta_density_file(tmp_path, capsys):
    (tmp_path / "lap.cfg").write_text("family = laplace\nb = 1\n")
    code, out, _ = run(["h-theta", "file", "--density", str(tmp_path / "lap.cfg"),
                        "--n-max", "1", "--samples", "10000", "--theta", "0,1"], capsys)
    assert code == 0
    _, data = read_csv(out)
    assert data[1, 2] == pytest.approx(1 + math.log(2), abs=1e-12)


# --- verify ----------------------------------------------------------------------

def test_verify_superconv_cube(capsys):
    code, out, err = run(["verify", "--suite", "superconv", "--family", "cube"], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["all_passed"]
    assert "PASS superconv[cube]" in err


def test_verify_appendix(capsys):
    code, out, _ = run(["verify", "--suite", "appendix-example", "--alpha", "2",
                        "--delta", "0.25"], capsys)
    res = {r["name"]: r for r in json.loads(out)["results"]}
    assert code == 0
    assert res["appendix[lambda_star_at_1]"]["details"]["lambda_star_1"] == pytest.approx(
        -math.log(2), abs=1e-3)
    assert abs(res["appendix[top_coefficient_rate]"]["details"]["gn_star_at_1"]) <= 0.01


def test_verify_epi_is_evidence(capsys):
    code, out, err = run(["verify", "--suite", "epi", "--nu1", "1", "--nu2", "1"], capsys)
    res = {r["name"]: r for r in json.loads(out)["results"]}
    assert code == 0
    assert res["epi[grid]"]["evidence_only"]
    assert res["epi[grid]"]["details"]["label"] == "conjecture evidence"
    assert "INFO epi[grid]" in err


def test_verify_failure_exit_1(monkeypatch, capsys):
    failing = lambda: [vf.Outcome("sandwich[forced]", False, -1.0)]
    monkeypatch.setitem(vf.SUITES, "sandwich", failing)
    code, out, err = run(["verify", "--suite", "sandwich"], capsys)
    assert code == 1 and not json.loads(out)["all_passed"]
    assert "FAIL sandwich[forced] margin=-1.0" in err


# --- config, provenance, reproducibility -------------------------------------------

def test_config_file_and_override(tmp_path, capsys):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# cube run\nn = 3\nA = 2\nverify = true\n")
    code, out, _ = run(["iv", "cube", "--config", str(cfg)], capsys)
    doc = json.loads(out)
    assert code == 0 and doc["n"] == 3 and "alexandrov_fenchel" in doc
    code, out, _ = run(["iv", "cube", "--config", str(cfg), "--n", "4"], capsys)
    assert json.loads(out)["n"] == 4


def test_bad_config_is_usage_error(tmp_path, capsys):
    with pytest.raises(SystemExit) as e:
        cli.main(["iv", "cube", "--config", str(tmp_path / "missing.cfg")])
    capsys.readouterr()
    assert e.value.code == 2


def test_provenance_fields(capsys):
    _, out, _ = run(["iv", "cube", "--n", "2", "--seed", "5"], capsys)
    meta = json.loads(out)["meta"]
    assert meta["seed"] == 5 and meta["log_base"] == "e"
    assert len(meta["config_hash"]) == 64
    assert {"intrinsic_lab", "numpy", "scipy", "numba"} <= set(meta["versions"])
    assert meta["backend"] in ("numba", "numpy")


def test_byte_identical_reruns(tmp_path):
    files = []
    for k, jobs in enumerate((1, 3)):
        dest = tmp_path / f"fit{k}.json"
        cli.main(["iv", "fit", "--oracle", "disk", "--samples", "50000", "--seed", "3",
                  "--jobs", str(jobs), "-o", str(dest)])
        files.append(dest.read_bytes())
    assert files[0] == files[1]


def test_output_dir_env(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv(cli.OUTPUT_DIR_ENV, str(tmp_path))
    assert cli.main(["iv", "cube", "--n", "2"]) == 0
    capsys.readouterr()
    made = list(tmp_path.glob("iv-*.json"))
    assert len(made) == 1
    assert json.loads(made[0].read_text())["n"] == 2


def test_console_entry_point():
    out = subprocess.run([sys.executable, "-m", "intrinsic_lab.cli", "iv", "cube", "--n", "1"],
                         capture_output=True, text=True)
    assert out.returncode == 0 and json.loads(out.stdout)["values"] == [1.0, 1.0]
    assert "elapsed" in out.stderr
