import json
import subprocess
import sys

import pytest

from relsim import experiments, lattice
from relsim.cli import main
from relsim.experiments import TrialSpec
from relsim.numtheory import Instance


def run(argv, capsys=None):
    code = main([str(a) for a in argv])
    out = capsys.readouterr() if capsys is not None else None
    return code, out


def test_cost(capsys):
    code, out = run(["cost", "--n", 2048, "--C", 2], capsys)
    assert code == 0
    data = json.loads(out.out)
    assert data["qubits"] == 22283
    code, out = run(["cost", "--n", 2048, "--C", 2, "--S", 17], capsys)
    assert json.loads(out.out)["qubits"] == 22283 + 17


def test_dlog_end_to_end(capsys):
    code, out = run(["dlog", "--kind", "synthetic", "--bits", 64, "--d", 8, "--C", 4, "--seed", 7], capsys)
    assert code == 0
    ans = json.loads(out.out)
    assert ans["verified"] and ans["referee_match"] and ans["method"] == "integrated"
    assert 0 <= int(ans["e"]) < int(ans["r"])


def test_dlog_methods(capsys):
    code, out = run(["dlog", "--bits", 40, "--d", 6, "--method", "precomputed", "--seed", 1], capsys)
    assert code == 0 and json.loads(out.out)["method"] == "precomputed"
    code, out = run(["dlog", "--bits", 40, "--d", 6, "--k", 2, "--seed", 1], capsys)
    assert code == 0 and len(json.loads(out.out)["answers"]) == 2


def test_order_phi_factor(capsys, tmp_path):
    for cmd in (["order"], ["phi"], ["factor", "--noise", "none"], ["factor", "--route", "via-order"]):
        code, out = run(cmd + ["--seed", 3, "--out", tmp_path / "a.json"], capsys)
        assert code == 0, out.err
        assert "wrote" in out.out
        data = json.loads((tmp_path / "a.json").read_text())
        assert data["referee_match"] is True


def test_post_empty_file_is_usage_error(tmp_path, capsys):
    runs = tmp_path / "runs.jsonl"
    runs.write_text("")
    inst = tmp_path / "inst.json"
    code, out = run(["instance", "--out", inst], capsys)
    code, out = run(["post", "--in", runs, "--instance", inst], capsys)
    assert code == 2 and "usage error" in out.err


def test_usage_errors(capsys, tmp_path):
    assert run(["frobnicate"], capsys)[0] == 2
    assert run(["cost", "--n", 10], capsys)[0] == 2
    assert run(["dlog", "--kind", "elliptic"], capsys)[0] == 2
    assert run(["dlog", "--workers", 0], capsys)[0] == 2
    assert run(["post", "--in", tmp_path / "missing", "--instance", tmp_path / "x"], capsys)[0] == 2
    bad = tmp_path / "bad.json"
    bad.write_text("[[1, 2], [3]]")
    assert run(["lattice", "det", "--in", bad], capsys)[0] != 0


def test_solver_failure_exit_code(capsys):
    # every run is bad, so nothing can be recovered
    code, out = run(["dlog", "--bits", 40, "--d", 6, "--m2", 10, "--seed", 2], capsys)
    assert code == 1 and "dlog failed" in out.err


def test_simulate_post_round_trip(tmp_path, capsys):
    runs, inst_path = tmp_path / "runs.jsonl", tmp_path / "inst.json"
    args = ["--kind", "synthetic", "--bits", 48, "--d", 6, "--C", 3, "--m2", 2, "--seed", 9, "--task", "dlog"]
    code, _ = run(["simulate", *args, "--out", runs, "--instance", inst_path, "--reveal-provenance"], capsys)
    assert code == 0
    assert "provenance" not in runs.read_text()
    side = tmp_path / "runs.jsonl.provenance.jsonl"
    assert side.read_text().count('"bad"') == 2
    code, out = run(["post", "--in", runs, "--instance", inst_path, "--task", "dlog"], capsys)
    assert code == 0
    from_cli = json.loads(out.out)

    spec = TrialSpec("synthetic-cyclic", 48, 6, "dlog", 3.0, 10, m2=2, seed=9)
    inst = experiments.task_instance(spec)
    assert Instance.from_json(json.loads(inst_path.read_text())).to_json() == inst.to_json()
    _, rec = experiments._recover(inst, experiments.task_elements(inst, "dlog", 6), spec)
    assert from_cli == json.loads(json.dumps(rec.report()))


def test_lattice_subcommand(tmp_path, capsys):
    m = tmp_path / "m.json"
    m.write_text(json.dumps([[2, 0], [1, 1]]))
    code, out = run(["lattice", "lll", "--in", m], capsys)
    red = [[int(x) for x in r] for r in json.loads(out.out)]
    assert code == 0 and lattice.norm2(red[0]) == 2
    code, out = run(["lattice", "hnf", "--in", m], capsys)
    assert json.loads(out.out) == [["1", "1"], ["0", "2"]]
    code, out = run(["lattice", "det", "--in", m], capsys)
    assert json.loads(out.out) == "2"
    code, out = run(["lattice", "short", "--in", m, "--T", 2], capsys)
    assert code == 0 and json.loads(out.out)


def test_robust_csv_and_workers(tmp_path, capsys):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"bits": 32, "d": 4, "C_values": [2.0], "m2_values": [0, 1], "trials": 4}))
    outs = []
    for w in (1, 2):
        path = tmp_path / f"r{w}.csv"
        code, _ = run(["robust", "--config", cfg, "--format", "csv", "--workers", w, "--out", path], capsys)
        assert code == 0
        outs.append(path.read_bytes())
    assert outs[0] == outs[1]
    assert outs[0].decode().splitlines()[0].startswith("cell_id,d,m,m2,C")


def test_demo_bad_gen(capsys):
    code, out = run(["demo-bad-gen", "--r", 101, "--d", 4, "--trials", 2], capsys)
    data = json.loads(out.out)
    assert code == 0 and data["bad_min_max_norm"] >= 101 / 8


def test_instance_command(capsys):
    code, out = run(["instance", "--kind", "rsa", "--bits", 20, "--d", 3, "--seed", 4], capsys)
    data = json.loads(out.out)
    assert code == 0 and data["kind"] == "rsa-semiprime" and len(data["generators"]) == 3


@pytest.mark.parametrize("argv", [["--help"], ["cost", "--help"]])
def test_module_entry_point(argv):
    res = subprocess.run([sys.executable, "-m", "relsim", *argv], capture_output=True, text=True)
    assert res.returncode == 0 and "usage" in res.stdout
