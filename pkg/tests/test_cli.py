import csv
import json

import pytest

from disguised_qbd.cli import fmt, main

EX1 = {"lambda_c": 1, "mu": 2, "lambda_s": 3, "mu_s": 4}
EX2 = {"lambda_c": 2, "mu": 1, "lambda_s": 1, "mu_s": 2}


def write(tmp_path, name, obj):
    path = tmp_path / name
    path.write_text(json.dumps(obj))
    return str(path)


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_stability_codes(tmp_path, capsys):
    assert main(["stability", "--config", write(tmp_path, "a.json", EX1)]) == 0
    out = capsys.readouterr().out
    assert "stable" in out and "threshold = 1.14857" in out
    assert main(["stability", "--config", write(tmp_path, "b.json", EX2)]) == 3
    out = capsys.readouterr().out
    assert "unstable" in out and "0.733333" in out


def test_missing_field(tmp_path, capsys):
    cfg = {k: v for k, v in EX1.items() if k != "mu"}
    assert main(["stability", "--config", write(tmp_path, "c.json", cfg)]) == 1
    assert "'mu'" in capsys.readouterr().err


@pytest.mark.parametrize("bad", [
    {**EX1, "mu": -1},
    {**EX1, "colour": 1},
    {**EX1, "r_tol": 0},
    {**EX1, "sweep": {"seed": [1, 2]}},
])
def test_bad_configs(tmp_path, bad):
    assert main(["solve", "--config", write(tmp_path, "d.json", bad)]) == 1


def test_unreadable_config(tmp_path):
    bad = tmp_path / "x.json"
    bad.write_text("{not json")
    assert main(["solve", "--config", str(bad)]) == 1


def test_solve_csv(tmp_path):
    out = tmp_path / "solve.csv"
    cfg = write(tmp_path, "e.json", {**EX1, "r_tol": 1e-12})
    assert main(["solve", "--config", cfg, "--out", str(out)]) == 0
    rows = {r["quantity"]: r for r in read_csv(out)}
    for q in ("E_L", "Pi_w", "E_Ln", "E_W"):
        assert abs(float(rows[q]["analytic"]) - float(rows[q]["oracle"])) <= 1e-8
    assert float(rows["max_abs_pi_gap"]["analytic"]) <= 1e-8
    assert float(rows["r_residual"]["analytic"]) <= 1e-10
    assert b"\r\n" not in out.read_bytes()


def test_solve_json(tmp_path):
    out = tmp_path / "solve.json"
    assert main(["solve", "--config", write(tmp_path, "f.json", EX1), "--format", "json", "--out", str(out)]) == 0
    data = json.loads(out.read_text())
    assert data["max_abs_pi_gap"] <= 1e-8
    assert len(data["R"]) == 4


def test_solve_unstable(tmp_path):
    assert main(["solve", "--config", write(tmp_path, "g.json", EX2)]) == 2


def test_simulate_outputs(tmp_path):
    out = tmp_path / "traj.csv"
    cfg = write(tmp_path, "h.json", {**EX1, "grid_step": 1.0})
    assert main(["simulate", "--config", cfg, "--horizon", "1e4", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert rows[0]["event_kind"] == "initial"
    assert {"time", "n_customers", "k_servers", "total"} <= set(rows[0])
    grid = read_csv(tmp_path / "traj.grid.csv")
    assert len(grid) == 10001
    est = json.loads((tmp_path / "traj.estimates.json").read_text())
    assert est["events"] == len(rows) - 1


def test_csv_round_trip(tmp_path):
    out = tmp_path / "traj.csv"
    main(["simulate", "--config", write(tmp_path, "i.json", EX1), "--horizon", "50", "--out", str(out)])
    from disguised_qbd import SimConfig, simulate
    from disguised_qbd.model import ModelParams

    traj = simulate(ModelParams.constant(1, 2, 3, 4), SimConfig(seed=1, horizon=50))
    times = [float(r["time"]) for r in read_csv(out)[1:]]
    assert times == traj.times.tolist()
    for x in (0.1, 1 / 3, 2.0 ** -40, 123456.789, float("inf")):
        assert float(fmt(x)) == x


def test_simulate_deterministic(tmp_path):
    cfg = write(tmp_path, "j.json", EX1)
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    for p in (a, b):
        assert main(["simulate", "--config", cfg, "--seed", "17", "--horizon", "2000", "--out", str(p)]) == 0
    assert a.read_bytes() == b.read_bytes()
    c = tmp_path / "c.csv"
    main(["simulate", "--config", cfg, "--seed", "18", "--horizon", "2000", "--out", str(c)])
    assert a.read_bytes() != c.read_bytes()


def test_simulate_unstable_grows(tmp_path):
    out = tmp_path / "u.csv"
    assert main(["simulate", "--config", write(tmp_path, "k.json", EX2), "--horizon", "1e4", "--out", str(out)]) == 0
    rows = read_csv(out)
    assert int(rows[-1]["total"]) > 100


def test_sweep_trends(tmp_path):
    cfg = {"lambda_c": 1, "lambda_s": 2, "horizon": 2e3, "sweep": {"mu_s": [1, 2, 3], "mu": [1, 2, 3]}}
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", write(tmp_path, "l.json", cfg), "--out", str(out)]) == 0
    rows = read_csv(out)
    assert len(rows) == 9
    for ms in ("1", "2", "3"):
        sub = [r for r in rows if r["mu_s"] == ms]
        eln = [float(r["E_Ln"]) for r in sub]
        pw = [float(r["Pi_w"]) for r in sub]
        assert eln == sorted(eln, reverse=True) and len(set(eln)) == 3
        assert pw == sorted(pw, reverse=True)


def test_sweep_unstable_rows(tmp_path):
    cfg = {"lambda_c": 2, "lambda_s": 1, "mu_s": 2, "horizon": 1e3, "sweep": {"mu": [1, 3]}}
    out = tmp_path / "sweep.csv"
    assert main(["sweep", "--config", write(tmp_path, "m.json", cfg), "--out", str(out)]) == 0
    unstable, stable = read_csv(out)
    assert unstable["stable"] == "false" and unstable["E_L"] == "" and unstable["sim_E_L"] != ""
    assert stable["stable"] == "true" and stable["E_L"] != ""


def test_sweep_parallel_same_order(tmp_path):
    base = {"lambda_c": 1, "lambda_s": 2, "mu_s": 2, "horizon": 500, "sweep": {"mu": [1, 2, 3]}}
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    main(["sweep", "--config", write(tmp_path, "n.json", base), "--out", str(a)])
    main(["sweep", "--config", write(tmp_path, "o.json", {**base, "jobs": 3}), "--out", str(b)])
    assert a.read_bytes() == b.read_bytes()


def test_validate_example(tmp_path):
    out = tmp_path / "v.json"
    assert main(["validate", "--config", write(tmp_path, "p.json", EX1), "--horizon", "2e5", "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    names = {c["check"]: c["passed"] for c in report["checks"]}
    assert names["pi matrix-geometric vs oracle <= 1e-8"]
    assert (tmp_path / "v.deviations.md").exists()


def test_validate_unstable(tmp_path):
    assert main(["validate", "--config", write(tmp_path, "q.json", EX2)]) == 2
