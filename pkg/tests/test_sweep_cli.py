import json
import math
import os

import numpy as np
import pytest

from fracsob.cli import run_command
from fracsob.sweep import (
    CSV_COLUMNS,
    ConfigError,
    ExperimentConfig,
    SweepError,
    audit_field,
    audit_inequalities,
    load_config,
    random_fields,
    read_csv,
    run_p_sweep,
    write_csv,
)
from fracsob.nonlocal_ops import SeminormParams, gagliardo_seminorm_log
from fracsob.weights import build_xi, log_geometric_mean

CONFIGS = os.path.join(os.path.dirname(__file__), "..", "configs")
TINY_LAMBDA = 7.305443749276035


@pytest.fixture(scope="module")
def demo_cfg():
    return load_config(os.path.join(CONFIGS, "demo.json"))


@pytest.fixture(scope="module")
def demo(demo_cfg):
    return run_p_sweep(demo_cfg)


def test_records_and_upper_bound(demo_cfg, demo):
    assert [r.p for r in demo.records] == [4.0, 8.0, 16.0, 32.0, 64.0]
    assert all(r.converged for r in demo.records)
    d, w = demo.domain, demo.weight
    xi = build_xi(w, d.delta, d).xi
    for r in demo.records:
        bound = math.exp(gagliardo_seminorm_log(xi, d, SeminormParams(demo_cfg.s, r.p)))
        assert r.lambda_root <= bound
    assert math.isnan(demo.records[0].sup_dist_to_prev)


def test_diagnostic_trends(demo):
    gaps = demo.gaps
    assert gaps[-1] < gaps[0]
    assert all(b < a for a, b in zip(gaps, gaps[1:]))
    dists = [r.sup_dist_to_prev for r in demo.records[-3:]]
    assert all(b < a for a, b in zip(dists, dists[1:]))
    assert demo.k_last >= 1 - 1e-10


def test_limit_proxy_distance(demo):
    # the remaining distance is of the order of the last Cauchy step
    last_step = demo.records[-1].sup_dist_to_prev
    assert demo.proxy_distance <= 2 * last_step


def test_csv_round_trip(demo, tmp_path):
    path = tmp_path / "s.csv"
    write_csv(demo.records, path)
    header = path.read_text().splitlines()[0]
    assert header == ",".join(CSV_COLUMNS)
    back = read_csv(path)
    for a, b in zip(demo.records, back):
        for col in CSV_COLUMNS:
            x, y = getattr(a, col), getattr(b, col)
            assert (math.isnan(x) and math.isnan(y)) or x == y


def test_config_validation():
    base = {"domain": {"type": "interval", "n": 11}}
    ExperimentConfig.from_dict(base)
    for bad in ({"p_list": [4, 4]}, {"p_list": [8, 4]}, {"p_list": [1.0, 2]}, {"s": 1.0},
                {"s": 0}, {"bogus": 1}, {"solver": {"tolerance": 1}}, {"p_list": []}):
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict({**base, **bad})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"s": 0.5})
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"domain": {"type": "disc"}}).build()
    with pytest.raises(ConfigError):
        ExperimentConfig.from_dict({"domain": {"type": "interval", "n": 2}}).build()


def test_warm_init_config():
    cfg = ExperimentConfig.from_dict({"domain": {"type": "interval", "n": 21}, "p_list": [2, 4],
                                      "solver": {"init": "warm"}})
    res = run_p_sweep(cfg)
    assert all(r.converged for r in res.records)


def test_missing_config_names_path(tmp_path):
    missing = str(tmp_path / "nowhere.json")
    with pytest.raises(ConfigError, match="nowhere.json"):
        load_config(missing)


def test_flagged_records_and_all_failed(monkeypatch):
    import fracsob.sweep as sweep_mod

    real = sweep_mod.solve_extremal
    cfg = ExperimentConfig.from_dict({"domain": {"type": "interval", "n": 21}, "p_list": [2, 4, 8]})

    def flaky(d, w, prm, opts):
        sol = real(d, w, prm, opts)
        sol.converged = prm.p != 4.0
        return sol

    monkeypatch.setattr(sweep_mod, "solve_extremal", flaky)
    res = run_p_sweep(cfg)
    assert [r.converged for r in res.records] == [True, False, True]

    def broken(d, w, prm, opts):
        sol = real(d, w, prm, opts)
        sol.converged = False
        return sol

    monkeypatch.setattr(sweep_mod, "solve_extremal", broken)
    with pytest.raises(SweepError):
        run_p_sweep(cfg)


def test_audit_report(demo_cfg, demo):
    rep = audit_inequalities(demo_cfg, demo, n_random=50)
    assert rep.passed
    names = set(rep.checks)
    assert {"jensen", "limit_chain_lower", "limit_chain_upper", "proxy_chain_lower", "proxy_chain_upper"} <= names
    assert sum(n.startswith("sobolev") for n in names) == 5
    assert all(c.count == 50 for c in rep.checks.values())


def test_audit_extremal_attains_constant(demo_cfg, demo):
    for sol in demo.solutions:
        viol = audit_field(sol.u_p, demo, demo_cfg.s)
        key = f"sobolev[p={sol.p:g}]"
        # equality: the log excess is zero up to rounding on both sides
        lhs = sol.log_lambda + sol.p * log_geometric_mean(sol.u_p, demo.weight)
        assert abs(lhs - sol.log_lambda) <= 1e-10
        assert viol[key] <= sol.el_residual + 1e-10


def test_audit_xi_and_sign_flip(demo_cfg, demo):
    d, w = demo.domain, demo.weight
    xi = build_xi(w, d.delta, d).xi
    tol = audit_inequalities(demo_cfg, demo, n_random=0, extra_fields=[xi])
    assert tol.passed
    u = random_fields(d, 1, 123, 0.5)[0]
    flipped = u * np.where(np.arange(d.n) % 3 == 0, -1.0, 1.0)
    assert audit_field(flipped, demo, 0.5) == audit_field(u, demo, 0.5)


def test_random_fields_reproducible(demo):
    a = random_fields(demo.domain, 5, 7, 0.5)
    b = random_fields(demo.domain, 5, 7, 0.5)
    for x, y in zip(a, b):
        np.testing.assert_array_equal(x, y)
        assert np.all(x > 0)


def _write_cfg(tmp_path, **over):
    cfg = json.load(open(os.path.join(CONFIGS, "demo.json")))
    cfg.update(over)
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(cfg))
    return str(path)


def test_cli_sweep_writes_five_rows(tmp_path, capsys):
    code = run_command(["sweep", "--config", os.path.join(CONFIGS, "demo.json"), "--out", str(tmp_path)])
    assert code == 0
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert len(rows) == 6
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert {"mu", "k_last", "residual_minus_sup", "sup_check_max"} <= set(summary)


def test_cli_solve_tiny(tmp_path, capsys):
    code = run_command(["solve", "--p", "2", "--config", os.path.join(CONFIGS, "tiny3.json"), "--out", str(tmp_path)])
    assert code == 0
    out = json.loads(capsys.readouterr().out)
    assert math.exp(out["log_lambda"]) == pytest.approx(TINY_LAMBDA, rel=1e-4)


def test_cli_xi_and_limit(tmp_path, capsys):
    cfg = os.path.join(CONFIGS, "demo.json")
    assert run_command(["xi", "--config", cfg, "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert abs(out["log_k_xi"]) <= 1e-10
    assert out["levels"][0] == pytest.approx(0.25, abs=0.01)
    assert (tmp_path / "xi.csv").exists()
    assert run_command(["limit", "--config", cfg, "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["mu"] >= out["mu_lower_bound"]


def test_cli_audit(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, n_random=20)
    assert run_command(["audit", "--config", cfg, "--out", str(tmp_path), "--seed", "5"]) == 0
    summary = json.loads((tmp_path / "summary.json").read_text())
    assert summary["audit_passed"]
    assert "jensen" in summary["violations"]


def test_cli_errors(tmp_path, capsys):
    missing = str(tmp_path / "absent.json")
    assert run_command(["sweep", "--config", missing]) == 1
    assert "absent.json" in capsys.readouterr().err
    assert run_command(["frobnicate"]) == 1
    assert run_command(["sweep", "--config", missing, "--bogus"]) == 1
    assert run_command(["sweep"]) == 1
    assert run_command([]) == 1
    bad = _write_cfg(tmp_path, p_list=[8, 4])
    assert run_command(["sweep", "--config", bad]) == 1
    bad_init = _write_cfg(tmp_path, solver={"init": "sideways"})
    assert run_command(["solve", "--p", "2", "--config", bad_init, "--out", str(tmp_path)]) == 1
    (tmp_path / "junk.json").write_text("{not json")
    assert run_command(["sweep", "--config", str(tmp_path / "junk.json")]) == 1


def test_cli_nonconvergence_exit(tmp_path, capsys):
    cfg = _write_cfg(tmp_path, solver={"max_iter": 1})
    assert run_command(["solve", "--p", "8", "--config", cfg, "--out", str(tmp_path)]) == 2
    assert run_command(["sweep", "--config", cfg, "--out", str(tmp_path)]) == 2


def test_cli_audit_violation_exit(tmp_path, capsys, monkeypatch):
    import fracsob.sweep as sweep_mod

    monkeypatch.setattr(sweep_mod, "AUDIT_TOL", -1.0)
    cfg = _write_cfg(tmp_path, n_random=3)
    assert run_command(["audit", "--config", cfg, "--out", str(tmp_path)]) == 3


def test_cli_deterministic_runs_identical(tmp_path):
    cfg = os.path.join(CONFIGS, "demo.json")
    outs = []
    for k in range(2):
        out = tmp_path / f"run{k}"
        assert run_command(["sweep", "--config", cfg, "--out", str(out), "--deterministic"]) == 0
        outs.append(((out / "sweep.csv").read_bytes(), (out / "summary.json").read_bytes()))
    assert outs[0] == outs[1]
