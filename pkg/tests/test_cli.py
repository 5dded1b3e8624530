import hashlib
import json
import shutil
import subprocess
import sys

import pytest

from slitflow.cli import config_text, parse_config_text, resolve, run


def _run(capsys, *argv):
    code = run(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_pm_example(capsys):
    code, out, _ = _run(capsys, "pm", "--qs", "2,4,16,256")
    assert code == 0
    data = json.loads(out)
    assert data["config"]["qs"] == "2,4,16,256"
    assert "classification_hint" in json.dumps(data)


def test_unknown_subcommand(capsys):
    code, _, err = _run(capsys, "frobnicate")
    assert code == 2
    assert json.loads(err.strip().splitlines()[-1])["exit_code"] == 2


def test_missing_required_and_bad_values(capsys):
    assert _run(capsys, "contfrac")[0] == 2
    assert _run(capsys, "contfrac", "--theta", "sqrt(")[0] == 2
    assert _run(capsys, "contfrac", "--theta", "sqrt(2)", "--depth", "0")[0] == 2


def test_bestapprox_decimal_is_undecidable(capsys):
    code, _, err = _run(capsys, "bestapprox", "--x", "0.123456~1e-9,0.654321~1e-9", "--qmax", "100000")
    assert code == 3
    assert json.loads(err.strip())["exit_code"] == 3


def test_bestapprox_json_lines(capsys):
    code, out, _ = _run(capsys, "bestapprox", "--x=-1+sqrt(2),-1+sqrt(3)", "--qmax", "1000")
    assert code == 0
    lines = [json.loads(l) for l in out.splitlines()]
    qs = [l["q"] for l in lines if "q" in l]
    assert qs == [1, 3, 7, 22, 34, 41]


def test_contfrac_and_zexp(capsys):
    code, out, _ = _run(capsys, "contfrac", "--theta", "sqrt(2)", "--depth", "6")
    assert code == 0 and json.loads(out)["config"]["depth"] == "6"
    code, out, _ = _run(capsys, "zexp", "--lambda=-1+sqrt(2)", "--mu=-1+sqrt(3)", "--theta", "sqrt(2)", "--hmax", "100")
    assert code == 0


def test_determinism(capsys, tmp_path):
    digests = []
    for _ in range(2):
        code, out, _ = _run(capsys, "simulate", "--lambda", "1/2", "--mu", "1/3", "--theta", "sqrt(2)", "--T", "500", "--seed", "7")
        assert code == 0
        digests.append(hashlib.sha256(out.encode()).hexdigest())
    assert digests[0] == digests[1]


def test_config_file_and_flag_override(capsys, tmp_path):
    cfg = tmp_path / "run.cfg"
    cfg.write_text("# pm run\nqs = 2,4,16\neps-tail = 1/100\n")
    code, out, _ = _run(capsys, "pm", "--config", str(cfg), "--qs", "2,4,16,256")
    assert code == 0
    resolved = json.loads(out)["config"]
    assert resolved["qs"] == "2,4,16,256" and resolved["eps_tail"] == "1/100"
    cfg.write_text("bogus = 1\n")
    assert _run(capsys, "pm", "--config", str(cfg))[0] == 2


def test_config_round_trip():
    cfg = resolve("tree", {"lambda": "sqrt(2) - 1", "mu": "-1+sqrt(3)"}, {"depth": "3"})
    again = resolve("tree", parse_config_text(config_text(cfg)), {})
    assert again == cfg


def test_tree_audit_dimension_pipeline(capsys, tmp_path):
    dump = tmp_path / "tree.json"
    code, _, err = _run(
        capsys, "tree", "build", "--lambda=-1+sqrt(2)", "--mu", "1/3+1/5*sqrt(2)", "--depth", "2",
        "--plan", "diophantine:2:20", "--output", str(dump),
    )
    assert code == 0, err
    assert _run(capsys, "audit", str(dump))[0] == 0
    assert _run(capsys, "tree", "audit", "--dump", str(dump))[0] == 0
    code, out, _ = _run(capsys, "dimension", "--tree", str(dump), "--csv", str(tmp_path / "d.csv"))
    assert code == 0 and (tmp_path / "d.csv").read_text().startswith("j,")
    data = json.loads(dump.read_text())
    data["tree"]["nodes"][-1]["m"] += 2
    dump.write_text(json.dumps(data))
    assert _run(capsys, "audit", str(dump))[0] == 2


def test_report_directory(capsys, tmp_path):
    code, _, _ = _run(capsys, "simulate", "--lambda", "1/2", "--mu", "1/3", "--theta", "sqrt(2)", "--T", "200", "--report", str(tmp_path))
    assert code == 0
    for suffix in ("json", "csv", "png"):
        assert (tmp_path / f"simulate.{suffix}").stat().st_size > 0


def test_full_mode_reports_infeasibility(capsys):
    code, _, err = _run(capsys, "tree", "build", "--lambda=-1+sqrt(2)", "--mu=-1+sqrt(3)", "--mode", "full", "--epsilon", "1/10")
    assert code == 2
    assert json.loads(err.strip())["error"] in ("ScheduleInfeasible", "NotFoundAtCap")


@pytest.mark.skipif(shutil.which("slitflow") is None, reason="console script not installed")
def test_console_script():
    proc = subprocess.run(["slitflow", "pm", "--qs", "2,3,5,8"], capture_output=True, text=True, timeout=60)
    assert proc.returncode == 0 and json.loads(proc.stdout)["config"]["qs"] == "2,3,5,8"
    proc = subprocess.run([sys.executable, "-m", "slitflow.cli", "nope"], capture_output=True, text=True, timeout=60)
    assert proc.returncode == 2
