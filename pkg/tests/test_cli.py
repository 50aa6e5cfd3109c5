import json
import os
import subprocess
import sys

import pytest

from mirrorchain.cli import main, rounded


def run(capsys, *args):
    code = main(list(args))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_mirror_example(capsys):
    code, out, _ = run(capsys, "mirror", "--d", "3", "--n", "4", "--input", "random", "--seed", "7")
    assert code == 0
    doc = json.loads(out)
    assert abs(doc["result"]["fidelity"] - 1) < 1e-10
    assert doc["config"]["seed"] == 7
    assert set(doc["result"]) >= {"d", "N", "sign", "input_spec", "fidelity", "global_phase", "max_deviation", "runtime_ms"}


def test_mirror_sweep_and_inputs(capsys):
    code, out, _ = run(capsys, "mirror", "--d", "2,3", "--n", "2,3", "--input", "figure2a", "--sign", "-2")
    assert code == 0
    assert len(json.loads(out)["result"]) == 4
    code, out, _ = run(capsys, "mirror", "--d", "2", "--n", "3", "--input", "basis", "--digits", "1,0,1")
    assert json.loads(out)["result"]["input_spec"]["digits"] == [1, 0, 1]


def test_track_trivial(capsys):
    code, out, _ = run(capsys, "track", "--n", "1", "--d", "2")
    doc = json.loads(out)["trajectory"]
    assert code == 0 and doc["rounds"] == 2 and len(doc["steps"]) == 3


def test_track_cv(capsys):
    code, out, _ = run(capsys, "track", "--mode", "cv", "--n", "5", "--site", "2", "--xexp", "0.3", "--zexp", "-0.8")
    flip = json.loads(out)["trajectory"]["after_final_flip"]["factors"]
    assert flip == [{"site": 4, "x_exp": 0.3, "z_exp": -0.8}]


def test_cv_state_file(capsys, tmp_path):
    from mirrorchain import cv

    f = tmp_path / "s.json"
    f.write_text(json.dumps(cv.two_mode_squeezed(3, (1, 2), 0.4).to_dict()))
    code, out, _ = run(capsys, "cv", "--state-file", str(f))
    assert code == 0
    doc = json.loads(out)
    assert doc["run"]["deviation"] < 1e-9 and doc["physical_after"]


def test_cqed_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "cqed", "--tmax", "4", "--nfock", "4", "--compare", "--outdir", str(tmp_path))
    assert code == 0
    names = sorted(p.name for p in tmp_path.iterdir())
    assert names == ["cqed_run.json", "distances.csv", "trajectory_eff.csv", "trajectory_full.csv", "trajectory_ham.csv"]
    header = json.loads((tmp_path / "trajectory_full.csv").read_text().splitlines()[0][2:])
    assert header["params"]["omega0"] == 15.0
    cols = (tmp_path / "distances.csv").read_text().splitlines()[1]
    assert cols == "t,tau,full_eff,full_ham,eff_ham"


def test_cqed_params_file(capsys, tmp_path):
    f = tmp_path / "dev.ini"
    f.write_text("[device]\nomega0 = 12\ngamma = 0.02\n")
    code, out, _ = run(capsys, "cqed", "--params-file", str(f), "--tmax", "1", "--nfock", "3", "--outdir", str(tmp_path))
    assert code == 0 and json.loads(out)["params"]["omega0"] == 12.0
    f.write_text("[device]\nomega7 = 12\n")
    assert run(capsys, "cqed", "--params-file", str(f), "--outdir", str(tmp_path))[0] == 2


def test_grape_outputs(capsys, tmp_path):
    code, out, _ = run(capsys, "grape", "--nfock", "8", "--slices", "40", "--cycles", "4", "--seeds", "1", "--maxiter", "5", "--outdir", str(tmp_path))
    assert code == 0
    rec = json.loads(out)
    assert {"n_fock", "n_slices", "duration", "epsilon", "seeds", "best_fidelity", "iterations"} <= set(rec)
    assert (tmp_path / "pulse.csv").read_text().startswith("slice,tau,c1,c2")


def test_config_file_and_override(capsys, tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[mirror]\nd = 2\nn = 5\ninput = basis\n")
    code, out, _ = run(capsys, "--config", str(cfg), "mirror")
    doc = json.loads(out)
    assert doc["config"]["d"] == [2] and doc["config"]["n"] == [5]
    code, out, _ = run(capsys, "--config", str(cfg), "mirror", "--n", "3")
    assert json.loads(out)["config"]["n"] == [3]


@pytest.mark.parametrize(
    "args",
    [
        ["mirror", "--sign", "3"],
        ["mirror", "--d", "9", "--n", "6"],
        ["track", "--site", "9"],
        ["track", "--xexp", "0.5"],
        ["nosuch"],
        ["mirror", "--bogus"],
    ],
)
def test_usage_errors(capsys, args):
    code, _, err = run(capsys, *args)
    assert code == 2
    assert "error" in err


def test_bad_config(capsys, tmp_path):
    cfg = tmp_path / "bad.ini"
    cfg.write_text("[mirror]\ncolour = blue\n")
    assert run(capsys, "--config", str(cfg), "mirror")[0] == 2
    cfg.write_text("[mirror]\nsign = two\n")
    assert run(capsys, "--config", str(cfg), "mirror")[0] == 2
    assert run(capsys, "--config", str(tmp_path / "missing.ini"), "mirror")[0] == 2


def test_jobs_env(capsys, monkeypatch):
    monkeypatch.setenv("MIRRORCHAIN_JOBS", "zero")
    assert run(capsys, "mirror")[0] == 2
    monkeypatch.setenv("MIRRORCHAIN_JOBS", "2")
    code, out, _ = run(capsys, "mirror", "--d", "2", "--n", "2,3")
    assert code == 0 and len(json.loads(out)["result"]) == 2


def test_module_error_exit_code(capsys, tmp_path):
    f = tmp_path / "s.json"
    f.write_text(json.dumps({"N": 2, "mean": [0, 0], "cov": [[1, 0], [0, 1]]}))
    assert run(capsys, "cv", "--state-file", str(f))[0] == 3


def test_rounding():
    assert rounded(1 / 3) == 0.333333333333
    assert rounded({"a": [2 / 3, 1]}) == {"a": [0.666666666667, 1]}


def test_module_entry_point(tmp_path):
    res = subprocess.run([sys.executable, "-m", "mirrorchain", "track", "--n", "2", "--d", "3"], capture_output=True, text=True, cwd=tmp_path)
    assert res.returncode == 0
    assert json.loads(res.stdout)["trajectory"]["N"] == 2
