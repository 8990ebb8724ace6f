import json
import os
import subprocess
import sys
from pathlib import Path

import pytest

CLI = os.environ.get("FLOODAID_CLI")
VALIDATOR = Path(__file__).resolve().parents[2] / "tools" / "validate_outputs.py"

pytestmark = pytest.mark.skipif(not CLI, reason="FLOODAID_CLI is not set")


def run(*args, cwd):
    return subprocess.run([CLI, *args], cwd=cwd, capture_output=True, text=True)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    d = tmp_path_factory.mktemp("cli")
    assert run("generate", "--seed", "2", "--out-dir", "o", cwd=d).returncode == 0
    r = run("train", "--seed", "2", "--data", "o/synthetic.csv", "--variant", "both", "--epochs", "10",
            "--out-dir", "o", cwd=d)
    assert r.returncode == 0, r.stderr
    return d


def test_success_outputs_validate(workdir):
    r = run("evaluate", "--data", "o/test.csv", "--checkpoint", "o/fair.ckpt.json", "--baseline",
            "o/baseline.ckpt.json", "--out-dir", "o", cwd=workdir)
    assert r.returncode == 0, r.stderr
    assert "SPD" in r.stdout
    doc = json.loads((workdir / "o" / "evaluation.json").read_text())
    assert doc["schema_version"] == 1 and doc["leakage"]["flag"] is False
    check = subprocess.run([sys.executable, str(VALIDATOR), str(workdir / "o")], capture_output=True, text=True)
    assert check.returncode == 0, check.stdout


def test_quiet_prints_nothing(workdir):
    r = run("rank", "--data", "o/test.csv", "--checkpoint", "o/fair.ckpt.json", "--quiet", "--out-dir", "o",
            cwd=workdir)
    assert r.returncode == 0
    assert r.stdout == ""


def test_leakage_warning(workdir):
    r = run("evaluate", "--data", "o/train.csv", "--checkpoint", "o/fair.ckpt.json", "--out-dir", "leak",
            cwd=workdir)
    assert r.returncode == 0
    assert "used to train" in r.stderr
    assert json.loads((workdir / "leak" / "evaluation.json").read_text())["leakage"]["flag"] is True


def test_usage_errors_exit_1(workdir):
    assert run(cwd=workdir).returncode == 1
    assert run("train", "--bogus", cwd=workdir).returncode == 1
    assert run("train", "--epochs", "5", "--out-dir", "o", cwd=workdir).returncode == 1  # no data
    (workdir / "bad.cfg").write_text("epochs = 5\nunknown_key = 1\n")
    r = run("train", "--config", "bad.cfg", "--data", "o/synthetic.csv", cwd=workdir)
    assert r.returncode == 1
    assert "unknown key" in r.stderr


def test_randomized_commands_need_a_seed(workdir):
    r = run("generate", "--out-dir", "noseed", cwd=workdir)
    assert r.returncode == 1
    assert "--seed" in r.stderr
    assert run("train", "--data", "o/synthetic.csv", "--out-dir", "noseed", cwd=workdir).returncode == 1
    assert run("ablate", "--seed", "1", "--out-dir", "noseed", cwd=workdir).returncode == 1
    (workdir / "seeded.cfg").write_text("seed = 3\n")
    assert run("generate", "--config", "seeded.cfg", "--out-dir", "seeded", cwd=workdir).returncode == 0


def test_data_errors_exit_2(workdir):
    text = (workdir / "o" / "synthetic.csv").read_text().splitlines()
    cells = text[1].split(",")
    cells[3] = "150"
    (workdir / "broken.csv").write_text("\n".join([text[0], ",".join(cells), *text[2:]]) + "\n")
    r = run("train", "--seed", "1", "--data", "broken.csv", "--epochs", "2", "--out-dir", "x", cwd=workdir)
    assert r.returncode == 2
    assert "line 2" in r.stderr and "poverty_rate" in r.stderr

    bin_path = workdir / "o" / "fair.ckpt.bin"
    blob = bytearray(bin_path.read_bytes())
    blob[100] ^= 0xFF
    (workdir / "o" / "corrupt.ckpt.bin").write_bytes(bytes(blob))
    manifest = json.loads((workdir / "o" / "fair.ckpt.json").read_text())
    manifest["binary"]["file"] = "corrupt.ckpt.bin"
    (workdir / "o" / "corrupt.ckpt.json").write_text(json.dumps(manifest))
    r = run("evaluate", "--data", "o/test.csv", "--checkpoint", "o/corrupt.ckpt.json", "--out-dir", "x",
            cwd=workdir)
    assert r.returncode == 2
    assert "integrity" in r.stderr


def test_numeric_failure_exit_3(workdir):
    (workdir / "diverge.cfg").write_text("seed = 4\ntarget_scale = 1e-300\n")
    r = run("train", "--config", "diverge.cfg", "--data", "o/synthetic.csv", "--epochs", "2", "--out-dir", "x",
            cwd=workdir)
    assert r.returncode == 3
    r = run("ablate", "--config", "diverge.cfg", "--seeds", "0", "--lambdas", "0,1", "--epochs", "2",
            "--out-dir", "ab", cwd=workdir)
    assert r.returncode == 3
    runs = (workdir / "ab" / "ablation_runs.csv").read_text().splitlines()
    assert len(runs) == 3 and all(",false," in line for line in runs[1:])


def test_flags_override_config(workdir):
    (workdir / "run.cfg").write_text("epochs = 50\nlambda = 0.5\n")
    r = run("train", "--config", "run.cfg", "--seed", "1", "--epochs", "3", "--data", "o/synthetic.csv",
            "--variant", "fair", "--out-dir", "ov", cwd=workdir)
    assert r.returncode == 0, r.stderr
    log = json.loads((workdir / "ov" / "fair_log.json").read_text())
    assert len(log["log"]["epochs"]) == 3
    assert log["lambda"] == 0.5
