import json
from pathlib import Path

import pytest

import specaccess as sa
from specaccess.cli import main as cli_main
from specaccess.config import (
    CONFIG_SCHEMA,
    config_hash,
    load_config,
    load_graph,
    resolved_payoff_scale,
)

ROOT = Path(__file__).resolve().parents[1]
CONFIGS = ROOT / "configs"


def _write(tmp_path, doc, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(doc))
    return p


def _minimal_doc():
    return {
        "scenario": {
            "graph": {"n_users": 1, "edges": []},
            "channels": [{"kind": "bernoulli", "theta": 0.5}],
            "rates": {"kind": "fixed", "mean": [[4.0]]},
            "mechanism": {"kind": "backoff", "max_counter": 4},
        }
    }


def test_minimal_config_gets_defaults(tmp_path):
    cfg = load_config(_write(tmp_path, _minimal_doc()))
    assert cfg.scenario.t_max == 100
    assert cfg.scenario.periods == 500
    assert cfg.learning.mu == "1/T"
    assert cfg.learning.initial_perception == "1/M"
    assert cfg.solver.enumeration_cap == 10**7
    assert cfg.output.dir == "out"
    assert cfg.resolved["scenario"]["t_max"] == 100  # defaults echoed


def test_shipped_nine_user_config_loads_exactly():
    cfg = load_config(CONFIGS / "learning_9user.json")
    game = cfg.scenario.game
    assert game.n_users == 9 and game.n_channels == 5
    assert game.idle_prob == pytest.approx((0.5,) * 5)
    assert cfg.scenario.t_max == 100
    assert cfg.learning.gamma == 5.0
    assert isinstance(game.mechanism, sa.RandomBackoff) and game.mechanism.max_counter == 10
    # calibrated Rayleigh/Shannon models must reproduce the configured means
    assert game.mean_rate[0] == pytest.approx((2, 6, 16, 20, 30), rel=1e-9)
    assert game.mean_rate[8] == pytest.approx((10, 30, 80, 100, 150), rel=1e-9)
    assert cfg.sweep_gammas == [0.5, 1, 2, 5, 10, 50]
    assert cfg.rate_unit == "Mbps"
    # auto scale resolves to the mean expected throughput
    assert resolved_payoff_scale(cfg) == pytest.approx(game.mean_effective_value())


def test_shipped_aloha_config_loads():
    cfg = load_config(CONFIGS / "learning_9user_aloha.json")
    assert isinstance(cfg.scenario.game.mechanism, sa.SlottedAloha)
    assert set(cfg.scenario.game.mechanism.probs) == {0.3, 0.5, 0.7}


def test_negative_theta_rejected(tmp_path):
    doc = _minimal_doc()
    doc["scenario"]["channels"][0]["theta"] = -0.2
    with pytest.raises(ValueError, match="theta"):
        load_config(_write(tmp_path, doc))


def test_unknown_key_rejected(tmp_path):
    doc = _minimal_doc()
    doc["scenario"]["mystery"] = 1
    with pytest.raises(ValueError, match="mystery"):
        load_config(_write(tmp_path, doc))
    doc2 = _minimal_doc()
    doc2["extra_section"] = {}
    with pytest.raises(ValueError, match="extra_section"):
        load_config(_write(tmp_path, doc2))


def test_dimension_mismatch_rejected(tmp_path):
    doc = _minimal_doc()
    doc["scenario"]["rates"]["mean"] = [[4.0], [4.0]]  # two rows for one user
    with pytest.raises(ValueError, match="users x channels"):
        load_config(_write(tmp_path, doc))
    doc2 = _minimal_doc()
    doc2["scenario"]["mechanism"] = {"kind": "aloha", "probs": [0.5, 0.5]}
    with pytest.raises(ValueError, match="one probability per user"):
        load_config(_write(tmp_path, doc2))


def test_white_space_fractional_theta_rejected(tmp_path):
    doc = _minimal_doc()
    doc["scenario"]["channels"] = [{"kind": "white_space", "theta": 0.5}]
    with pytest.raises(ValueError, match="0 or 1"):
        load_config(_write(tmp_path, doc))


def test_resolved_config_round_trips(tmp_path):
    cfg = load_config(_write(tmp_path, _minimal_doc()))
    echoed = _write(tmp_path, cfg.resolved, name="echo.json")
    cfg2 = load_config(echoed)
    assert cfg2.sha256 == cfg.sha256
    assert cfg2.resolved == cfg.resolved


def test_config_hash_is_canonical():
    a = {"x": 1, "y": [1, 2]}
    b = {"y": [1, 2], "x": 1}
    assert config_hash(a) == config_hash(b)


def test_learning_settings_flow_into_policies(tmp_path):
    doc = _minimal_doc()
    doc["learning"] = {"gamma": 2.5, "mu": 0.2, "initial_perception": 3.0, "estimator": "exact"}
    doc["compare"] = {"policies": [{"kind": "learning"}], "replications": 1}
    cfg = load_config(_write(tmp_path, doc))
    policy = cfg.policies[0]
    assert policy.gamma == 2.5 and policy.mu == 0.2 and policy.initial_perception == 3.0
    assert policy.mu_schedule()(7) == 0.2
    p0 = policy.initial_matrix(cfg.scenario.game)
    assert p0.shape == (1, 1) and p0[0, 0] == 3.0
    from specaccess.simulator import run_policy

    res = run_policy(cfg.scenario, policy, (0, 0))
    assert res.learning is not None and res.welfare_trace.shape == (cfg.scenario.periods,)


def test_graph_file_variants(tmp_path):
    p1 = _write(tmp_path, {"n_users": 3, "edges": [[1, 2], [2, 3]]}, "g1.json")
    g1 = load_graph(p1)
    assert g1.edges == frozenset({(1, 2), (2, 3)})
    p2 = _write(tmp_path, {
        "placements": [
            {"tx": [0, 0], "rx": [100, 0], "interference_range": 5},
            {"tx": [50, 0], "rx": [3, 0], "interference_range": 5},
        ]
    }, "g2.json")
    g2 = load_graph(p2)
    assert g2.edges == frozenset({(1, 2)})
    p3 = _write(tmp_path, {"file": "g1.json"}, "g3.json")
    assert load_graph(p3).edges == g1.edges


def test_schema_file_matches_embedded():
    shipped = json.loads((ROOT / "config.schema.json").read_text())
    assert shipped == CONFIG_SCHEMA


# --- CLI ----------------------------------------------------------------------

def test_cli_classify_directed_cycle(tmp_path, capsys):
    rc = cli_main(["classify", str(CONFIGS / "graphs" / "directed_3cycle.json"),
                   "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "general_directed" in out
    assert "no structural pure-NE guarantee" in out
    data = json.loads((tmp_path / "classification.json").read_text())
    assert data["classes"] == ["general_directed"]


def test_cli_classify_star(tmp_path, capsys):
    rc = cli_main(["classify", str(CONFIGS / "graphs" / "star5.json"), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "directed_tree" in out and "complete_bipartite" in out


def test_cli_solve_dag_config(tmp_path, capsys):
    rc = cli_main(["solve", str(CONFIGS / "dag_chain.json"), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "routine: dag" in out
    assert "verified pure NE: True" in out
    sol = json.loads((tmp_path / "solution.json").read_text())
    assert sol["verified"] is True


def test_cli_solve_reports_no_ne(tmp_path, capsys):
    rc = cli_main(["solve", str(CONFIGS / "triangle_no_ne.json"), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "no pure Nash equilibrium" in out


def test_cli_poa_artifact(tmp_path, capsys):
    rc = cli_main(["poa", str(CONFIGS / "dag_chain.json"), "--out", str(tmp_path)])
    assert rc == 0
    data = json.loads((tmp_path / "poa.json").read_text())
    assert 0 < data["poa"] <= 1.0
    assert data["poa"] >= data["lower_bound"] - 1e-9


def test_cli_potential_check(tmp_path, capsys):
    doc = {
        "scenario": {
            "graph": {"n_users": 3, "edges": [[1, 2], [2, 1], [1, 3], [3, 1], [2, 3], [3, 2]]},
            "channels": [{"kind": "bernoulli", "theta": 0.5}, {"kind": "bernoulli", "theta": 0.7}],
            "rates": {"kind": "fixed", "mean": [[4.0, 2.0], [4.0, 2.0], [4.0, 2.0]]},
            "mechanism": {"kind": "backoff", "max_counter": 6},
        }
    }
    p = _write(tmp_path, doc)
    rc = cli_main(["potential-check", str(p), "--out", str(tmp_path)])
    out = capsys.readouterr().out
    assert rc == 0
    assert "backoff_complete" in out and "OK" in out


def _tiny_learning_doc():
    return {
        "scenario": {
            "graph": {"n_users": 2, "edges": [[1, 2], [2, 1]]},
            "channels": [{"kind": "markov", "epsilon": 0.3, "xi": 0.3},
                         {"kind": "markov", "epsilon": 0.3, "xi": 0.3}],
            "rates": {"kind": "fixed", "mean": [[8.0, 4.0], [4.0, 8.0]]},
            "mechanism": {"kind": "backoff", "max_counter": 6},
            "t_max": 40,
            "periods": 30,
            "profile": [1, 2],
        },
        "learning": {"gamma": 3.0, "payoff_scale": "auto"},
        "compare": {
            "policies": [{"kind": "learning"}, {"kind": "random_access"}],
            "replications": 2,
        },
        "sweep": {"gammas": [1.0, 4.0], "replications": 2},
    }


def test_cli_estimate_learn_simulate(tmp_path, capsys):
    p = _write(tmp_path, _tiny_learning_doc())
    assert cli_main(["estimate", str(p), "--out", str(tmp_path / "e"), "--seed", "1"]) == 0
    est = (tmp_path / "e" / "estimates.csv").read_text()
    assert est.startswith("# schema: estimation-trace v1")
    assert len(est.strip().splitlines()) > 30

    assert cli_main(["learn", str(p), "--out", str(tmp_path / "l"), "--seed", "1"]) == 0
    lrn = (tmp_path / "l" / "learning.csv").read_text()
    header = [l for l in lrn.splitlines() if not l.startswith("#")][0]
    assert header.split(",")[:3] == ["period", "welfare", "dP_inf"]
    assert "channel_1" in header and "estimate_2" in header

    assert cli_main(["simulate", str(p), "--out", str(tmp_path / "s"), "--seed", "1"]) == 0
    per = (tmp_path / "s" / "periods.csv").read_text()
    assert "period,welfare" in per


def test_cli_compare_and_sweep_artifacts(tmp_path, capsys):
    p = _write(tmp_path, _tiny_learning_doc())
    assert cli_main(["compare", str(p), "--out", str(tmp_path / "c"), "--seed", "2"]) == 0
    rows = [l for l in (tmp_path / "c" / "comparison.csv").read_text().splitlines()
            if l and not l.startswith("#")]
    assert rows[0] == "policy,replication,seed,mean_welfare"
    assert len(rows) == 1 + 2 * 2  # header + (2 policies x 2 replications)
    summary = (tmp_path / "c" / "comparison_summary.csv").read_text()
    assert "random_access" in summary and "learning" in summary

    assert cli_main(["gamma-sweep", str(p), "--out", str(tmp_path / "g"), "--seed", "2"]) == 0
    sw = [l for l in (tmp_path / "g" / "gamma_sweep.csv").read_text().splitlines()
          if l and not l.startswith("#")]
    assert sw[0] == "gamma,mean_welfare,stderr,replications"
    assert len(sw) == 3  # header + 2 gammas


def test_cli_byte_reproducibility(tmp_path):
    p = _write(tmp_path, _tiny_learning_doc())
    for d in ("r1", "r2"):
        assert cli_main(["compare", str(p), "--out", str(tmp_path / d), "--seed", "7"]) == 0
    b1 = (tmp_path / "r1" / "comparison.csv").read_bytes()
    b2 = (tmp_path / "r2" / "comparison.csv").read_bytes()
    assert b1 == b2


def test_cli_rejects_bad_config(tmp_path, capsys):
    p = _write(tmp_path, {"scenario": {}})
    rc = cli_main(["solve", str(p)])
    assert rc == 1
    assert "error:" in capsys.readouterr().err


def test_cli_slot_trace(tmp_path):
    doc = _tiny_learning_doc()
    doc["output"] = {"slot_trace": True}
    p = _write(tmp_path, doc)
    assert cli_main(["simulate", str(p), "--out", str(tmp_path / "st"), "--seed", "1"]) == 0
    trace = (tmp_path / "st" / "slots.csv").read_text()
    rows = [l for l in trace.splitlines() if l and not l.startswith("#")]
    assert rows[0] == "period,slot,user,channel,S,I,b"
    assert len(rows) == 1 + 40 * 2  # t_max slots x 2 users
