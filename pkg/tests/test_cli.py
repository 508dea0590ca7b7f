"""Command-line client: output discipline, exit codes, config handling."""

import dataclasses
import importlib
import json

import pytest

from kfplace.cli import entry
from kfplace.instances import load_instance
from kfplace.solvers import solve_gkfsp

service_app = importlib.import_module("kfplace.service.app")


@pytest.fixture
def ex1_path(ex1_payload, tmp_path):
    path = tmp_path / "ex1.json"
    path.write_text(json.dumps(ex1_payload))
    return str(path)


def run(capsys, *argv):
    code = entry(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def test_place_reports_winner(capsys, ex1_path):
    code, out, err = run(capsys, "place", ex1_path)
    assert code == 0
    payload = json.loads(out)
    assert payload["support"] == [1]
    assert payload["objective"] == pytest.approx(1.0, abs=1e-9)
    assert "placed [1]" in err


def test_repeat_runs_are_byte_identical(capsys, ex1_path):
    _, first, _ = run(capsys, "place", ex1_path)
    _, second, _ = run(capsys, "place", ex1_path)
    assert first == second
    _, g1, _ = run(capsys, "gen", "--kind", "stochastic", "--n", "5", "--seed", "9")
    _, g2, _ = run(capsys, "gen", "--kind", "stochastic", "--n", "5", "--seed", "9")
    assert g1 == g2


def test_reports_restate_tolerances(capsys, ex1_path):
    for argv in (
        ["place", ex1_path],
        ["attack", ex1_path, "--placement", "1111"],
        ["resilient", ex1_path],
        ["verify", ex1_path, "--problem", "gkfsp"],
        ["bound", ex1_path, "--placement", "0100"],
        ["reduce-subset-sum", "--sizes", "2,3", "--target", "4"],
        ["gen", "--n", "4", "--seed", "0"],
    ):
        _, out, _ = run(capsys, *argv)
        payload = json.loads(out)
        assert "tolerances" in payload, argv
        assert payload["tolerances"]["conv_tol"] == 1e-10


def test_attack_subcommand_accepts_both_bit_syntaxes(capsys, ex1_path):
    _, compact, _ = run(capsys, "attack", ex1_path, "--placement", "0111")
    _, commas, _ = run(capsys, "attack", ex1_path, "--placement", "0,1,1,1")
    assert compact == commas
    payload = json.loads(compact)
    assert payload["removed"] == [1, 2]


def test_verify_matching_instance_exits_zero(capsys, ex1_path):
    code, out, err = run(capsys, "verify", ex1_path)
    assert code == 0
    assert json.loads(out)["match"] is True
    assert "3/3 problems match" in err


def test_verify_mismatch_exits_three(capsys, ex1_path, monkeypatch):
    def shifted(sys, costs, dmap=None, objective="priori"):
        rep = solve_gkfsp(sys, costs, dmap, objective=objective)
        return dataclasses.replace(rep, objective=rep.objective + 1.0)

    monkeypatch.setattr(service_app, "solve_gkfsp", shifted)
    code, out, _ = run(capsys, "verify", ex1_path, "--problem", "gkfsp")
    assert code == 3
    assert json.loads(out)["match"] is False


def test_infeasible_exits_two(capsys, ex1_payload, tmp_path):
    ex1_payload["H"] = 0
    path = tmp_path / "tight.json"
    path.write_text(json.dumps(ex1_payload))
    code, out, err = run(capsys, "place", str(path))
    assert code == 2
    assert json.loads(out)["error"] == "infeasible"
    assert "error (409)" in err


def test_numerical_failure_exits_four(capsys, tmp_path):
    doc = {
        "n": 2,
        "A": [[1.1, 0.0], [0.0, 0.5]],
        "input_node": 0,
        "sigma_w2": 1.0,
        "V": {"iso": 0.1},
        "h": [1, 1],
        "H": 2,
        "f": [1, 1],
        "F": 0,
    }
    path = tmp_path / "diverging.json"
    path.write_text(json.dumps(doc))
    code, out, _ = run(capsys, "bound", str(path), "--placement", "01")
    assert code == 4
    assert json.loads(out)["error"] == "InstabilityError"


def test_usage_failures_exit_one(capsys, ex1_path, tmp_path):
    with pytest.raises(SystemExit) as exc:
        entry(["place", ex1_path, "--objective", "bogus"])
    assert exc.value.code == 1
    capsys.readouterr()

    assert run(capsys, "place", str(tmp_path / "missing.json"))[0] == 1
    assert run(capsys, "attack", ex1_path, "--placement", "01x1")[0] == 1

    broken = tmp_path / "broken.json"
    broken.write_text("{oops")
    assert run(capsys, "place", str(broken))[0] == 1

    # bad instance documents come back as HTTP 400 and also exit 1
    short = tmp_path / "short.json"
    short.write_text(json.dumps({"n": 2, "A": [[0.0]]}))
    code, out, _ = run(capsys, "place", str(short))
    assert code == 1


def test_unreachable_service_exits_one(capsys, ex1_path):
    code, _, err = run(capsys, "place", ex1_path, "--url", "http://127.0.0.1:1")
    assert code == 1
    assert "cannot reach service" in err


def test_config_supplies_defaults(capsys, ex1_path, tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"objective": "posteriori"}))
    _, out, _ = run(capsys, "place", ex1_path, "--config", str(cfg))
    assert json.loads(out)["objective_kind"] == "posteriori"
    # explicit flags beat config values
    _, out, _ = run(
        capsys, "place", ex1_path, "--config", str(cfg), "--objective", "priori"
    )
    assert json.loads(out)["objective_kind"] == "priori"


def test_config_errors_exit_one(capsys, ex1_path, tmp_path):
    code, _, err = run(capsys, "place", ex1_path, "--config", str(tmp_path / "no.json"))
    assert code == 1 and "config error" in err
    bad = tmp_path / "bad.json"
    bad.write_text("[1, 2]")
    code, _, err = run(capsys, "place", ex1_path, "--config", str(bad))
    assert code == 1 and "config error" in err


def test_experiment_writes_csv(capsys, tmp_path):
    out_path = tmp_path / "rows.csv"
    code, out, err = run(
        capsys,
        "experiment",
        "--problem", "gkfsp",
        "--realizations", "1",
        "--sigma-v2", "0.01",
        "--seed", "3",
        "--n", "5",
        "--edge-count", "8",
        "--brute-cap", "8",
        "--jobs", "1",
        "--out", str(out_path),
    )
    assert code == 0
    text = out_path.read_text()
    assert text.startswith("seed,problem,sigma_v2,opt,alg,bound,subopt\n")
    assert text == json.loads(out)["csv"]
    assert f"wrote {out_path}" in err


def test_gen_place_round_trip(capsys, tmp_path):
    inst_path = tmp_path / "gen.json"
    code, _, _ = run(
        capsys, "gen", "--kind", "stochastic", "--n", "5", "--seed", "4",
        "--out", str(inst_path),
    )
    assert code == 0
    inst = load_instance(inst_path)
    assert inst.system.n == 5
    code, out, _ = run(capsys, "place", str(inst_path))
    assert code == 0
    assert json.loads(out)["covariance"]["infinite"] is False


def test_reduce_writes_instance(capsys, tmp_path):
    out_path = tmp_path / "reduced.json"
    code, out, _ = run(
        capsys, "reduce-subset-sum", "--sizes", "3,5", "--target", "7",
        "--out", str(out_path),
    )
    assert code == 0
    inst = load_instance(out_path)
    assert inst.system.n == 5
    assert inst.costs.placement_budget == 7


def test_serve_invokes_uvicorn(capsys, monkeypatch):
    calls = {}

    def fake_run(app, host, port):
        calls["host"], calls["port"] = host, port

    import uvicorn

    monkeypatch.setattr(uvicorn, "run", fake_run)
    assert entry(["serve", "--host", "0.0.0.0", "--port", "9000"]) == 0
    assert calls == {"host": "0.0.0.0", "port": 9000}
