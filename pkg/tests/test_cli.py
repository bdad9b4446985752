import json
import subprocess
import sys

import pytest

from cardgas.cli import EXIT_BUDGET, EXIT_INVALID, EXIT_OK, parse_synth, run
from cardgas.errors import CardGasError
from cardgas.model import save_instance, synth_instance


def report(tmp_path, argv, name="r.json"):
    out = tmp_path / name
    code = run(argv + ["--out", str(out)])
    return code, json.loads(out.read_text())


def test_parse_synth():
    assert parse_synth(["n=8", "k=3", "lam=0.5"]) == {"n": 8, "k": 3, "lam": 0.5}
    for bad in (["n=8"], ["n=8", "k=x"], ["n=8", "k=3", "foo=1"], ["n8", "k=3"]):
        with pytest.raises(CardGasError):
            parse_synth(bad)


def test_resources_table_counts(tmp_path):
    code, rep = report(tmp_path, ["resources", "--n", "20", "--k", "2", "--m", "8"])
    assert code == EXIT_OK
    assert rep["results"]["oracle_gate_counts"] == {"1": 160, "2": 1520}
    assert set(rep) == {"config", "seed", "results", "warnings"}
    assert rep["config"]["m"] == 8


def test_dicke_check_passes(tmp_path):
    code, rep = report(tmp_path, ["dicke-check", "--n", "6", "--k", "3"])
    assert code == EXIT_OK
    row = rep["results"]["checks"][0]
    assert row["status"] == "PASS" and row["max_amplitude_deviation"] < 1e-10


def test_compare_reports_agreement(tmp_path):
    code, rep = report(tmp_path, ["compare", "--synth", "n=8", "k=3", "--repeats", "10",
                                  "--seed", "7"])
    assert code == EXIT_OK
    res = rep["results"]
    assert res["runs"] == 10 and res["agreement_rate"] >= 0.9
    assert [r["seed"] for r in res["per_run"]] == list(range(7, 17))
    assert res["mean_oracle_queries"] > 0


def test_gas_writes_deterministic_traces(tmp_path):
    argv = ["gas", "--synth", "n=6", "k=2", "--seed", "3", "--repeats", "3"]
    code_a, rep_a = report(tmp_path, argv, "a.json")
    code_b, rep_b = report(tmp_path, argv, "b.json")
    assert code_a == code_b == EXIT_OK
    for i in range(3):
        ta = (tmp_path / f"a.trace.{i}.csv").read_bytes()
        tb = (tmp_path / f"b.trace.{i}.csv").read_bytes()
        assert ta == tb and ta.startswith(b"iteration,r_max")
    assert rep_a["results"]["runs"] == rep_b["results"]["runs"]


def test_admm_from_instance_file(tmp_path):
    inst = tmp_path / "inst.json"
    save_instance(synth_instance(4, 2, seed=1, lam=0.5), inst)
    code, rep = report(tmp_path, ["admm", "--instance", str(inst), "--seed", "0"])
    assert code == EXIT_OK
    run0 = rep["results"]["runs"][0]
    assert run0["termination_reason"] == "converged"
    assert run0["identity_ok"] and run0["descent_ok"]
    trace = (tmp_path / "r.trace.csv").read_text().splitlines()
    assert trace[0] == ("t,L_beta,delta_dual,primal_residual,predicted_residual,"
                        "descent_lhs,descent_rhs,x1_bits,solver_queries")


def test_grover_command(tmp_path):
    code, rep = report(tmp_path, ["grover", "--synth", "n=5", "k=2", "--seed", "1"])
    assert code == EXIT_OK
    run0 = rep["results"]["runs"][0]
    assert run0["marked_probability"] > 0.5
    assert run0["sample"].count("1") == 2


def test_budget_exhausted_exit_code(tmp_path):
    code, rep = report(tmp_path, ["gas", "--synth", "n=8", "k=3", "--seed", "1",
                                  "--budget", "2"])
    assert code == EXIT_BUDGET
    assert rep["warnings"]


def test_validation_exit_codes(tmp_path, capsys):
    assert run(["gas", "--synth", "n=6", "k=2"]) == EXIT_INVALID
    assert run(["gas", "--synth", "n=6", "--seed", "1"]) == EXIT_INVALID
    assert run(["gas", "--instance", str(tmp_path / "missing.json"), "--seed", "1"]) == EXIT_INVALID
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps({"n": 2, "k": 1, "sigma": [1, 0.5, 0.1, 1], "mu": [0, 0]}))
    assert run(["gas", "--instance", str(bad), "--seed", "1"]) == EXIT_INVALID
    assert run(["resources", "--n", "4", "--m", "3", "--degree", "3"]) == EXIT_INVALID
    assert run(["gas", "--synth", "n=6", "k=2", "--seed", "1", "--xi", "0.5"]) == EXIT_INVALID


def test_module_entry_point(tmp_path):
    out = tmp_path / "r.json"
    proc = subprocess.run([sys.executable, "-m", "cardgas", "resources", "--n", "4", "--m", "3",
                           "--out", str(out)], capture_output=True, text=True)
    assert proc.returncode == 0
    assert json.loads(out.read_text())["results"]["oracle_gate_counts"] == {"1": 12, "2": 18}
