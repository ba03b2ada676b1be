import csv
import json

import pytest

from hfgi.cli import main
from hfgi.schemes import catalog_checksum


def run(tmp_path, *argv):
    return main([*argv, "--out", str(tmp_path), "--quiet"])


def load(tmp_path, name):
    return json.loads((tmp_path / name).read_text())


def test_list_schemes_and_checksum(tmp_path):
    assert run(tmp_path, "list-schemes") == 0
    rows = list(csv.DictReader(open(tmp_path / "schemes.csv")))
    assert len(rows) == 43
    summary = load(tmp_path, "list_schemes.json")
    assert summary["catalog_checksum"] == catalog_checksum() and summary["passed"]
    assert {"command", "config", "seed", "wall_time_s", "files", "assertions"} <= set(summary)


def test_validate(tmp_path):
    assert run(tmp_path, "validate") == 0
    rows = list(csv.DictReader(open(tmp_path / "validate.csv")))
    assert len(rows) == 43 and all(r["passed"] == "1" for r in rows)


def test_converge_small(tmp_path):
    assert run(tmp_path, "converge", "--schemes", "BAB,BADAB", "--t-end", "400") == 0
    rows = list(csv.DictReader(open(tmp_path / "converge.csv")))
    assert {r["scheme"] for r in rows} == {"BAB", "BADAB"} and len(rows) == 6


def test_efficiency_is_byte_deterministic(tmp_path):
    args = ("efficiency", "--schemes", "BAB,BADAB", "--nsteps", "50,100,200", "--t-end", "2000")
    run(tmp_path / "a", *args)
    run(tmp_path / "b", *args)
    a = (tmp_path / "a" / "efficiency.csv").read_bytes()
    assert a == (tmp_path / "b" / "efficiency.csv").read_bytes()
    assert a.splitlines()[0] == b"scheme,total_force_evals,global_error"


def test_drift_and_reversibility(tmp_path):
    assert run(tmp_path, "drift", "--t-end", "20000", "--every", "10") == 0
    assert load(tmp_path, "drift.json")["assertions"]["drift_bounded"]
    assert run(tmp_path, "reversibility", "--schemes", "BAB,BADAB,ABADABADABA") == 0
    assert load(tmp_path, "reversibility.json")["details"]["model"] == "quartic"


def test_hmc_run_deterministic(tmp_path):
    args = ("hmc-run", "--L", "4", "--ntraj", "30", "--ntherm-start", "10", "--nsteps", "8", "--seed", "3")
    assert run(tmp_path / "a", *args) in (0, 1)
    run(tmp_path / "b", *args)

    def cols(p):
        return [r[:5] for r in csv.reader(open(p / "chain.csv"))]
    assert cols(tmp_path / "a") == cols(tmp_path / "b")
    assert len(cols(tmp_path / "a")) == 31


def test_hmc_scan_small(tmp_path):
    code = run(tmp_path, "hmc-scan", "--L", "4", "--ntraj", "30", "--ntherm-start", "10",
               "--schemes", "BAB", "--nsteps", "6,8,10")
    assert code in (0, 1)
    rows = list(csv.DictReader(open(tmp_path / "hmc_scan.csv")))
    assert [int(r["N"]) for r in rows] == [6, 8, 10]


def test_config_file_overrides_defaults(tmp_path):
    cfg = tmp_path / "run.ini"
    cfg.write_text("[efficiency]\nschemes = BAB\nnsteps = 20,40\nt-end = 400\n")
    run(tmp_path, "efficiency", "--config", str(cfg))
    summary = load(tmp_path, "efficiency.json")
    assert summary["config"]["schemes"] == "BAB" and summary["config"]["t_end"] == 400.0
    rows = list(csv.DictReader(open(tmp_path / "efficiency.csv")))
    assert len(rows) == 2
    bad = tmp_path / "bad.ini"
    bad.write_text("[efficiency]\nbogus = 1\n")
    with pytest.raises(SystemExit):
        run(tmp_path, "efficiency", "--config", str(bad))


def test_errors_exit_with_code_two(tmp_path):
    assert run(tmp_path, "converge", "--schemes", "NOPE") == 2
    blocker = tmp_path / "file"
    blocker.write_text("")
    assert main(["list-schemes", "--out", str(blocker / "sub"), "--quiet"]) == 2
