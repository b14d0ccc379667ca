import json
import subprocess
import sys

import pytest

from wigner_lr import cli
from wigner_lr.errors import NumericalFailure
from wigner_lr.inequalities import Inequality


def run_main(capsys, *argv):
    code = cli.main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def test_selftest(capsys):
    code, out, _ = run_main(capsys, "selftest")
    doc = json.loads(out)
    assert code == 0 and doc["ok"]
    assert len(doc["results"]) == 3 + 3 + 7 + 4


def test_list_round_trip(capsys):
    code, out, _ = run_main(capsys, "list-inequalities", "--n", "4")
    doc = json.loads(out)
    assert code == 0
    names = [Inequality.from_dict(d).name for d in doc["inequalities"]]
    assert names[0] == "WLR[1|234]" and len(names) == 7


def test_evaluate_from_file(tmp_path, capsys):
    angles = tmp_path / "angles.json"
    angles.write_text(json.dumps([[1.27, 0.29], [0.0, 0.785398], [0.0, 1.45]]))
    code, out, _ = run_main(capsys, "evaluate", "--state", "W3", "--angles", str(angles), "--ineq", "THM1:A|BC")
    assert code == 0
    assert json.loads(out)["value"] == pytest.approx(0.101, abs=2e-2)

    spec = tmp_path / "ineqs.json"
    run_main(capsys, "list-inequalities", "--family", "THM1", "-o", str(spec))
    code, out2, _ = run_main(capsys, "evaluate", "--state", "W3", "--angles", str(angles), "--ineq", f"@{spec}")
    assert json.loads(out2)["results"][0]["value"] == json.loads(out)["value"]


def test_optimize_is_byte_identical(capsys):
    argv = ("optimize", "--state", "W3", "--ineq", "WLR:A|BC", "--restarts", "3", "--seed", "4")
    _, a, _ = run_main(capsys, *argv)
    _, b, _ = run_main(capsys, *argv)
    assert a == b
    doc = json.loads(a)
    assert doc["metadata"]["rng_seed"] == 4
    assert doc["best_value"] == pytest.approx(0.138, abs=1e-3)


def test_scan_csv(capsys):
    code, out, _ = run_main(capsys, "scan", "--family", "GENW3", "--grid", "0:1.5707963267948966:2,1.5707963267948966:1.5707963267948966:1",
                            "--format", "csv", "--restarts", "2")
    lines = out.strip().splitlines()
    assert code == 0
    assert lines[0] == "theta,mu,min_violation,argmin_cut" and len(lines) == 3


def test_run_config(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "certify", "state": {"name": "GENW3", "params": [1.5707963267948966, 1.5707963267948966]},
                               "optimizer": {"restarts": 2, "rng_seed": 1}}))
    code, out, _ = run_main(capsys, "run", str(cfg))
    assert code == 0
    assert json.loads(out)["verdict"] is False


@pytest.mark.parametrize(
    "argv",
    [
        ("optimize", "--state", "NOPE", "--ineq", "WLR:A|BC"),
        ("optimize", "--state", "W3", "--ineq", "WLR:A|BCD"),
        ("certify", "--state", "W4", "--family", "THM1", "--restarts", "1"),
        ("bogus",),
        ("evaluate", "--state", "W3", "--angles", "/nonexistent.json", "--ineq", "GWI"),
    ],
)
def test_config_errors_exit_2(capsys, argv):
    code, out, err = run_main(capsys, *argv)
    assert code == 2 and out == ""
    assert json.loads(err)["exit_code"] == 2


def test_numerical_failure_exit_3(capsys, monkeypatch):
    def boom(cfg):
        raise NumericalFailure("LP did not converge", {"status": 4})

    monkeypatch.setitem(cli.HANDLERS, "selftest", boom)
    code, _, err = run_main(capsys, "selftest")
    assert code == 3
    assert json.loads(err)["diagnostics"] == {"status": 4}


def test_run_config_unknown_key(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"command": "selftest", "colour": "blue"}))
    code, _, err = run_main(capsys, "run", str(cfg))
    assert code == 2 and "colour" in err


def test_module_entry_point():
    proc = subprocess.run([sys.executable, "-m", "wigner_lr", "selftest"], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["ok"]
