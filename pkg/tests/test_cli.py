import csv
import io
import json
import subprocess
import sys

import pytest

from pairent import cli
from pairent.checks import SuiteResult
from pairent.errors import ConvergenceError
from pairent.qstate import random_mixed, state_to_dict


def run_json(*argv):
    code, text = cli.run([*argv, "--format", "json"])
    return code, json.loads(text)


def entries(report, probe):
    return {e["state"]: e for e in report["results"] if e["probe"] == probe}


def test_table_passes():
    code, rep = run_json("table")
    assert code == 0
    assert rep["summary"]["all_pass"] and rep["summary"]["passed"] == 42


def test_table_failure_exits_3(monkeypatch):
    monkeypatch.setitem(cli.TABLE_EXPECTED, ("psi4", "qc"), ({(1, 4): 1.0}, 1 / 3))
    code, rep = run_json("table")
    assert code == 3 and not rep["summary"]["all_pass"]


def test_measure_chi4_both():
    code, rep = run_json("measure", "--state", "chi4", "--probe", "both")
    assert code == 0
    assert entries(rep, "qc")["chi4"]["M"] == pytest.approx(1 / 3, abs=1e-14)
    assert entries(rep, "fr")["chi4"]["M"] == pytest.approx(1 / 3, abs=1e-14)
    pair = next(p for p in entries(rep, "qc")["chi4"]["pairs"] if p["label"] == [1, 4])
    assert pair["sites"] == [0, 3] and pair["value"] == 1.0


def test_measure_zero_state():
    _, rep = run_json("measure", "--state", "zero:4", "--probe", "fr")
    e = entries(rep, "fr")["zero:4"]
    assert e["M"] == 0 and e["classification"] == "separable"
    assert all(p["value"] == 0 for p in e["pairs"])


def test_measure_w3():
    _, rep = run_json("measure", "--state", "w:3", "--probe", "qc")
    assert entries(rep, "qc")["w:3"]["M"] == pytest.approx(2 / 3, abs=1e-14)


def test_measure_ket_and_warning(capsys):
    assert cli.main(["measure", "--state", "2(|00> + |11>)", "--probe", "fr"]) == 0
    assert "renormalized" in capsys.readouterr().err


def test_measure_qutrit_both_skips_qc():
    _, rep = run_json("measure", "--state", "ghz:3:3")
    assert [e["probe"] for e in rep["results"]] == ["fr"]


def test_measure_state_file(tmp_path):
    path = tmp_path / "rho.json"
    path.write_text(json.dumps(state_to_dict(random_mixed(2, 2, 2, 4))))
    code, rep = run_json("measure", "--state-file", str(path), "--probe", "qc", "--restarts", "4")
    assert code == 0 and rep["results"][0]["upper_bound"]


def test_profile_direct_on_mixed():
    _, rep = run_json("profile", "--state", "mems:0.8", "--probe", "fr", "--direct")
    e = rep["results"][0]
    assert not e["upper_bound"]
    assert e["M"] == pytest.approx(0.609986547010987, abs=1e-14)


def test_seed_is_always_echoed():
    _, rep = run_json("table")
    assert rep["config"]["seed"] == 0
    _, rep = run_json("locc", "--n", "2", "--trials", "2", "--seed", "9")
    assert rep["config"]["seed"] == 9


def test_parse_error_exit_2(capsys):
    assert cli.main(["measure", "--state", "(|00> + |11>"]) == 2
    err = capsys.readouterr().err
    assert "column 13" in err and "^" in err


def test_usage_errors_exit_2(capsys):
    assert cli.main(["measure", "--state", "bogus"]) == 2
    assert cli.main(["measure"]) == 2
    assert cli.main(["measure", "--state", "ghz:3:3", "--probe", "qc"]) == 2
    assert cli.main(["sweep-mems", "--grid", "0:2:3"]) == 2
    with pytest.raises(SystemExit) as info:
        cli.main(["measure", "--probe", "negativity"])
    assert info.value.code == 2


def test_numeric_failure_exit_3(monkeypatch, capsys):
    def boom(*args, **kwargs):
        raise ConvergenceError("eigensolver stalled", 1.0)

    monkeypatch.setattr(cli, "measure_m", boom)
    assert cli.main(["measure", "--state", "ghz:3"]) == 3
    assert "numeric failure" in capsys.readouterr().err


def test_sweep_mems_endpoints():
    _, rep = run_json("sweep-mems", "--grid", "0:1:11")
    rows = rep["rows"]
    assert len(rows) == 11
    first, last = rows[0], rows[-1]
    assert first["m_fr"] == 0 and first["fr_mems"] == 0
    assert last["fr_mems"] == pytest.approx(1) and last["fr_12_above_half"]
    for key in ("fr_13", "fr_14", "fr_23", "fr_24"):
        assert last[key] < 0.5
    assert last["m_fr"] < 1 and last["m_fr_below_ghz"]


def test_roof_mems_half():
    code, rep = run_json("roof", "--state", "mems:0.5", "--probe", "qc", "--restarts", "8")
    res = rep["results"][0]
    assert code == 0 and res["upper_bound"] and res["converged"]
    assert res["value"] == pytest.approx(res["reference"], abs=1e-6)
    assert res["reference_name"] == "concurrence"


def test_locc_small_register_passes():
    code, rep = run_json("locc", "--n", "3", "--trials", "100", "--seed", "7")
    assert code == 0 and rep["summary"]["violations"] == 0


def test_locc_violation_exit_4(tmp_path):
    archive = tmp_path / "violations.json"
    code, rep = run_json("locc", "--n", "4", "--trials", "20", "--seed", "7", "--probe", "fr",
                         "--archive", str(archive))
    assert code == 4
    v = rep["violations"][0]
    assert {"seed", "amplitudes", "margin"} <= set(v)
    saved = json.loads(archive.read_text())
    assert saved["violations"] == rep["violations"]


def test_randcheck_normalization():
    code, rep = run_json("randcheck", "--suite", "normalization", "--n", "4", "--trials", "1000")
    row = rep["rows"][0]
    assert code == 0 and row["passed"] == 1000 and row["worst_margin"] >= 0


def test_randcheck_violation_exit_4(monkeypatch):
    monkeypatch.setitem(cli.checks.SUITES, "ssa",
                        lambda **kw: SuiteResult("ssa", 3, 0, 1, 0, -1.0, 12345))
    code, rep = run_json("randcheck", "--suite", "ssa")
    assert code == 4 and rep["summary"]["failed_suites"] == ["ssa"]


def test_json_is_byte_identical():
    argv = ["locc", "--n", "3", "4", "--trials", "30", "--seed", "5", "--format", "json"]
    assert cli.run(argv) == cli.run(argv)
    argv = ["roof", "--state", "mems:0.3", "--restarts", "4", "--format", "json"]
    assert cli.run(argv) == cli.run(argv)


@pytest.mark.parametrize("argv", [["measure", "--state", "w:3", "--state", "mems:0.5",
                                   "--restarts", "4"],
                                  ["sweep-mems", "--grid", "0.2:0.9:4"],
                                  ["locc", "--n", "4", "--trials", "10"],
                                  ["randcheck", "--trials", "20"]])
def test_csv_matches_json(argv):
    _, text = cli.run([*argv, "--format", "json"])
    rows = json.loads(text)["rows"]
    _, text = cli.run([*argv, "--format", "csv"])
    parsed = list(csv.DictReader(io.StringIO(text)))
    assert len(parsed) == len(rows)
    for want, got in zip(rows, parsed):
        for key, value in want.items():
            if isinstance(value, float):
                assert float(got[key]) == value
            elif isinstance(value, bool):
                assert got[key] == str(value).lower()
            elif value is None:
                assert got[key] == ""
            else:
                assert got[key] == str(value)


def test_fifteen_significant_digits():
    assert cli.fmt(1 / 3) == 0.333333333333333
    assert cli.clean({"a": (float("inf"), 2)}) == {"a": [None, 2]}


def test_text_format_runs():
    code, text = cli.run(["measure", "--state", "psi4", "--format", "text"])
    assert code == 0 and "seed = 0" in text and "1,4" in text


def test_module_entry_point():
    out = subprocess.run([sys.executable, "-m", "pairent", "measure", "--state", "ghz:5",
                          "--probe", "qc", "--format", "csv"], capture_output=True, text=True)
    assert out.returncode == 0
    assert "ghz:5,qc,M,,,,1.0" in out.stdout
