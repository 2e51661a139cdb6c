"""Command-line surface: one binary, batch subcommands, CSV/JSON artifacts.

Commands operate on a JSON experiment configuration (see config.schema.json
at the repo root). Interference graph files are JSON documents of the form
``{"n_users": N, "edges": [[i, j], ...]}`` (1-based, edge [i, j] = user i
interferes with user j; undirected links appear in both directions), or
``{"placements": [{"tx": [x, y], "rx": [x, y], "interference_range": r},
...]}`` from which edges are derived geometrically, or ``{"file": "path"}``
referencing another graph file. Artifacts embed the resolved-config hash and
the seed, so reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .config import (
    ExperimentConfig,
    learning_policy_from,
    load_config,
    load_graph,
    resolved_payoff_scale,
)
from .contention import RandomBackoff
from .equilibria import construct_ne_bipartite, construct_ne_dag, construct_ne_directed_tree
from .errors import PreconditionError, ResourceLimitError, UndefinedEstimateError
from .estimation import estimate_throughput
from .game import enumerate_pure_ne, is_pure_ne, welfare
from .graph import classify
from .learning import contraction_temperature_bound
from .potentials import applicable_variants, deviation_signs_match
from .reporting import fmt, write_csv, write_json
from .simulator import (
    FixedProfilePolicy,
    RandomAccessPolicy,
    SimStreams,
    compare_policies,
    run_policy,
    simulate_period,
    sweep_gamma,
)

log = logging.getLogger("specaccess")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specaccess",
        description="Spectrum access games on interference graphs: equilibria, estimation, learning, simulation.",
    )
    parser.add_argument("--version", action="version", version=f"specaccess {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str, help_: str, config_arg: bool = True):
        p = sub.add_parser(name, help=help_)
        if config_arg:
            p.add_argument("config", help="experiment configuration (JSON)")
        p.add_argument("--seed", type=int, default=0, help="master seed (default 0)")
        p.add_argument("--out", default=None, help="output directory (default: config output.dir)")
        p.add_argument("--jobs", type=int, default=1, help="parallel replications")
        p.add_argument("--verbose", action="store_true")
        return p

    p = add("classify", "report the structural classes of an interference graph", config_arg=False)
    p.add_argument("graph", help="graph file or experiment configuration (JSON)")
    p.set_defaults(func=cmd_classify)

    add("solve", "find and certify a pure Nash equilibrium").set_defaults(func=cmd_solve)
    add("potential-check", "validate potential-function sign identities").set_defaults(func=cmd_potential_check)
    add("poa", "exhaustive welfare optimum, worst equilibrium, price of anarchy").set_defaults(func=cmd_poa)
    add("estimate", "simulate a fixed profile and emit per-period MLE rows").set_defaults(func=cmd_estimate)
    add("learn", "run the distributed learning algorithm").set_defaults(func=cmd_learn)
    add("simulate", "roll out one policy and emit period summaries").set_defaults(func=cmd_simulate)
    add("compare", "paired-seed policy comparison").set_defaults(func=cmd_compare)
    add("gamma-sweep", "welfare as a function of the learning temperature").set_defaults(func=cmd_gamma_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ValueError, PreconditionError, ResourceLimitError, FileNotFoundError, RuntimeError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1


def _load(args) -> ExperimentConfig:
    return load_config(args.config)


def _outdir(args, cfg: ExperimentConfig | None) -> Path:
    out = args.out or (cfg.output.dir if cfg else "out")
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _meta(cfg: ExperimentConfig, seed: int) -> dict:
    return {
        "config_sha256": cfg.sha256,
        "seed": seed,
        "source": cfg.source,
        "rate_unit": cfg.rate_unit,
        "generator": f"specaccess {__version__}",
    }


def _echo(cfg: ExperimentConfig, outdir: Path) -> None:
    write_json(outdir / "resolved_config.json", cfg.resolved)


# ---------------------------------------------------------------------------

def cmd_classify(args) -> int:
    doc = json.loads(Path(args.graph).read_text())
    if "scenario" in doc:
        cfg = load_config(args.graph)
        graph = cfg.scenario.game.graph
    else:
        cfg = None
        graph = load_graph(args.graph)
    cls = classify(graph)
    names = sorted(cls.classes)
    print(f"users: {graph.n_users}, edges: {len(graph.edges)}")
    print("classes: " + ", ".join(names))
    if cls.directed_acyclic:
        print("pure NE guaranteed: acyclic structure (topological best responses)")
        print(f"topological order: {list(cls.topological_order)}")
    elif cls.directed_forest:
        print("pure NE guaranteed under the congestion property (tree/forest structure)")
    elif cls.undirected:
        print("undirected: pure NE guaranteed for backoff/Aloha/weighted sharing (potential game)")
    else:
        print("no structural pure-NE guarantee")
    if cls.bipartition:
        print(f"bipartition: {list(cls.bipartition[0])} | {list(cls.bipartition[1])}")
    outdir = _outdir(args, cfg)
    write_json(outdir / "classification.json", {
        "n_users": graph.n_users,
        "edges": sorted(graph.edges),
        "classes": names,
        "topological_order": cls.topological_order,
        "bipartition": cls.bipartition,
        "regular_degree": cls.regular_degree,
    })
    return 0


def _solve_routine(cfg: ExperimentConfig):
    spec = cfg.scenario.game
    cls = classify(spec.graph)
    if cls.directed_acyclic:
        return "dag", construct_ne_dag(spec)
    if cls.directed_forest:
        return "directed_tree", construct_ne_directed_tree(spec, cfg.solver.recursion_budget)
    if (cls.complete_bipartite or cls.regular_bipartite) and isinstance(spec.mechanism, RandomBackoff):
        try:
            return "bipartite", construct_ne_bipartite(spec)
        except PreconditionError:
            pass
    ne = enumerate_pure_ne(spec, cap=cfg.solver.enumeration_cap)
    if not ne:
        return "enumeration", None
    return "enumeration", ne[0]


def cmd_solve(args) -> int:
    cfg = _load(args)
    outdir = _outdir(args, cfg)
    _echo(cfg, outdir)
    spec = cfg.scenario.game
    routine, profile = _solve_routine(cfg)
    if profile is None:
        print(f"routine: {routine}")
        print("no pure Nash equilibrium exists for this instance")
        write_json(outdir / "solution.json", {"routine": routine, "pure_ne": None})
        return 0
    check = is_pure_ne(spec, profile)
    payoffs = [spec.payoff(profile, n) for n in range(1, spec.n_users + 1)]
    print(f"routine: {routine}")
    print(f"profile: {list(profile)}")
    print(f"verified pure NE: {check.is_ne}")
    print(f"welfare: {welfare(spec, profile):.6g} {cfg.rate_unit}")
    write_json(outdir / "solution.json", {
        "routine": routine,
        "profile": list(profile),
        "verified": check.is_ne,
        "payoffs": payoffs,
        "welfare": welfare(spec, profile),
        "rate_unit": cfg.rate_unit,
        "config_sha256": cfg.sha256,
    })
    return 0 if check.is_ne else 1


def cmd_potential_check(args) -> int:
    cfg = _load(args)
    outdir = _outdir(args, cfg)
    _echo(cfg, outdir)
    spec = cfg.scenario.game
    variants = applicable_variants(spec)
    if not variants:
        print("no potential variant's hypotheses hold for this instance")
        write_json(outdir / "potential_check.json", {"variants": {}})
        return 0
    rng = np.random.default_rng(args.seed)
    total_profiles = spec.n_channels ** spec.n_users
    results = {}
    failed = False
    for variant in variants:
        checked = ok = 0
        if total_profiles <= 2000:
            import itertools

            profiles = itertools.product(range(1, spec.n_channels + 1), repeat=spec.n_users)
            for a in profiles:
                for n in range(1, spec.n_users + 1):
                    for m in range(1, spec.n_channels + 1):
                        if m != a[n - 1]:
                            checked += 1
                            ok += deviation_signs_match(spec, variant, a, n, m)
        else:
            for _ in range(500):
                a = tuple(int(c) for c in rng.integers(1, spec.n_channels + 1, size=spec.n_users))
                n = int(rng.integers(1, spec.n_users + 1))
                m = int(rng.integers(1, spec.n_channels + 1))
                if m == a[n - 1]:
                    continue
                checked += 1
                ok += deviation_signs_match(spec, variant, a, n, m)
        results[variant] = {"deviations_checked": checked, "sign_matches": ok}
        status = "OK" if ok == checked else "MISMATCH"
        failed |= ok != checked
        print(f"{variant}: {ok}/{checked} deviation signs match [{status}]")
    write_json(outdir / "potential_check.json", {"variants": results})
    return 1 if failed else 0


def cmd_poa(args) -> int:
    cfg = _load(args)
    outdir = _outdir(args, cfg)
    _echo(cfg, outdir)
    spec = cfg.scenario.game
    report = social_welfare_and_poa_cli(spec, cfg)
    write_json(outdir / "poa.json", report)
    return 0


def social_welfare_and_poa_cli(spec, cfg: ExperimentConfig) -> dict:
    from .game import social_welfare_and_poa

    rep = social_welfare_and_poa(spec, cap=cfg.solver.enumeration_cap)
    if rep.poa is None:
        print("no pure Nash equilibrium: PoA undefined")
        print(f"certificate: improving deviation from every profile "
              f"(first {len(rep.no_ne_certificate)} witnessed)")
        return {
            "optimal_welfare": rep.optimal_welfare,
            "pure_ne_count": 0,
            "poa": None,
            "lower_bound": rep.lower_bound,
            "certificate": [
                {"profile": list(a), "user": w.user, "better_channel": w.better_channel}
                for a, w in rep.no_ne_certificate
            ],
        }
    print(f"optimal welfare: {rep.optimal_welfare:.6g} {cfg.rate_unit} at {list(rep.optimal_profile)}")
    print(f"pure NE count: {len(rep.pure_ne)}")
    print(f"worst NE welfare: {rep.worst_ne_welfare:.6g} at {list(rep.worst_ne_profile)}")
    print(f"PoA: {rep.poa:.6f} (structural lower bound {rep.lower_bound:.6f})")
    return {
        "optimal_welfare": rep.optimal_welfare,
        "optimal_profile": list(rep.optimal_profile),
        "pure_ne_count": len(rep.pure_ne),
        "worst_ne_welfare": rep.worst_ne_welfare,
        "worst_ne_profile": list(rep.worst_ne_profile),
        "poa": rep.poa,
        "lower_bound": rep.lower_bound,
    }


def _default_profile(cfg: ExperimentConfig):
    if cfg.fixed_profile is not None:
        return cfg.fixed_profile
    spec = cfg.scenario.game
    # best-value channel per user, ignoring contention; fine as a trace source
    return tuple(
        max(range(1, spec.n_channels + 1), key=lambda m: spec.idle_prob[m - 1] * spec.effective_rate(n, m))
        for n in range(1, spec.n_users + 1)
    )


def cmd_estimate(args) -> int:
    cfg = _load(args)
    outdir = _outdir(args, cfg)
    _echo(cfg, outdir)
    scenario = cfg.scenario
    profile = _default_profile(cfg)
    streams = SimStreams.from_seed(args.seed, scenario.game.n_users)
    state = scenario.initial_channel_state(streams.channels)
    rows = []
    for period in range(1, scenario.periods + 1):
        obs, state = simulate_period(scenario, profile, state, streams)
        for n in range(1, scenario.game.n_users + 1):
            o = obs[n - 1]
            try:
                est = estimate_throughput(o)
                cells = [fmt(est.theta_hat), fmt(est.grab_hat), fmt(est.rate_hat), fmt(est.throughput)]
            except UndefinedEstimateError:
                cells = ["", "", "", ""]
            rows.append([period, n, profile[n - 1], int(o.S.sum()), int(o.I.sum()), fmt(o.b.sum())] + cells)
    path = write_csv(
        outdir / "estimates.csv", "estimation-trace", 1,
        ["period", "user", "channel", "sum_S", "sum_I", "sum_b",
         "theta_hat", "grab_hat", "rate_hat", "throughput_hat"],
        rows, _meta(cfg, args.seed),
    )
    print(f"wrote {path} ({len(rows)} user-period rows)")
    return 0


def cmd_learn(args) -> int:
    cfg = _load(args)
    outdir = _outdir(args, cfg)
    _echo(cfg, outdir)
    scenario = cfg.scenario
    policy = learning_policy_from(cfg)
    result = run_policy(scenario, policy, (args.seed, 0))
    outcome = result.learning
    n = scenario.game.n_users
    rows = []
    for t in range(scenario.periods):
        row = [t + 1, fmt(outcome.welfare_trace[t]), fmt(outcome.dP_trace[t])]
        row += [int(outcome.channels[t, u]) for u in range(n)]
        row += ["" if np.isnan(outcome.estimates[t, u]) else fmt(outcome.estimates[t, u]) for u in range(n)]
        rows.append(row)
    cols = (["period", "welfare", "dP_inf"]
            + [f"channel_{u}" for u in range(1, n + 1)]
            + [f"estimate_{u}" for u in range(1, n + 1)])
    path = write_csv(outdir / "learning.csv", "learning-trace", 1, cols, rows, _meta(cfg, args.seed))
    bound = contraction_temperature_bound(scenario.game)
    scale = resolved_payoff_scale(cfg)
    print(f"wrote {path}")
    print(f"mean welfare: {result.mean_welfare:.6g} {cfg.rate_unit}")
    print(f"delta gap at final strategies: {outcome.delta:.6g} {cfg.rate_unit}")
    print(f"effective temperature {cfg.learning.gamma / scale:.3g} vs contraction bound {bound:.3g}")
    write_json(outdir / "learning_summary.json", {
        "mean_welfare": result.mean_welfare,
        "delta": outcome.delta,
        "skipped_updates": outcome.skipped_updates,
        "final_sigma": outcome.sigma,
        "final_perceptions": outcome.perceptions,
        "payoff_scale": scale,
        "config_sha256": cfg.sha256,
        "seed": args.seed,
    })
    return 0


def cmd_simulate(args) -> int:
    cfg = _load(args)
    outdir = _outdir(args, cfg)
    _echo(cfg, outdir)
    scenario = cfg.scenario
    profile = _default_profile(cfg)
    policy = FixedProfilePolicy(profile) if cfg.fixed_profile is not None else RandomAccessPolicy()
    result = run_policy(scenario, policy, (args.seed, 0))
    rows = [[t + 1, fmt(result.welfare_trace[t])] for t in range(scenario.periods)]
    path = write_csv(
        outdir / "periods.csv", "period-summary", 1,
        ["period", "welfare"], rows, _meta(cfg, args.seed),
    )
    print(f"policy: {result.label}")
    print(f"wrote {path}")
    print(f"mean welfare: {result.mean_welfare:.6g} {cfg.rate_unit}")
    if cfg.output.slot_trace:
        _write_slot_trace(cfg, profile, outdir, args.seed)
    return 0


def _write_slot_trace(cfg: ExperimentConfig, profile, outdir: Path, seed: int) -> None:
    scenario = cfg.scenario
    streams = SimStreams.from_seed((seed, 0), scenario.game.n_users)
    state = scenario.initial_channel_state(streams.channels)
    obs, _ = simulate_period(scenario, profile, state, streams)
    rows = []
    for t in range(scenario.t_max):
        for n in range(1, scenario.game.n_users + 1):
            o = obs[n - 1]
            rows.append([1, t + 1, n, profile[n - 1], int(o.S[t]), int(o.I[t]), fmt(o.b[t])])
    write_csv(
        outdir / "slots.csv", "slot-trace", 1,
        ["period", "slot", "user", "channel", "S", "I", "b"],
        rows, _meta(cfg, seed),
    )


def cmd_compare(args) -> int:
    cfg = _load(args)
    if not cfg.policies:
        print("error: config has no compare.policies section", file=sys.stderr)
        return 1
    outdir = _outdir(args, cfg)
    _echo(cfg, outdir)
    report = compare_policies(
        cfg.scenario, cfg.policies, cfg.compare_replications, args.seed, jobs=args.jobs
    )
    rows = [
        [r.policy, r.replication, f"{r.seed_entropy[0]}:{r.seed_entropy[1]}", fmt(r.mean_welfare)]
        for r in report.runs
    ]
    write_csv(
        outdir / "comparison.csv", "policy-comparison", 1,
        ["policy", "replication", "seed", "mean_welfare"], rows, _meta(cfg, args.seed),
    )
    summary = report.summary()
    srows = [[name, fmt(mean), fmt(sem), n] for name, (mean, sem, n) in sorted(summary.items())]
    write_csv(
        outdir / "comparison_summary.csv", "policy-comparison-summary", 1,
        ["policy", "mean_welfare", "stderr", "replications"], srows, _meta(cfg, args.seed),
    )
    print(f"{'policy':32s} {'mean':>12s} {'stderr':>10s}")
    for name, (mean, sem, n) in sorted(summary.items()):
        print(f"{name:32s} {mean:12.4f} {sem:10.4f}")
    return 0


def cmd_gamma_sweep(args) -> int:
    cfg = _load(args)
    if not cfg.sweep_gammas:
        print("error: config has no sweep.gammas section", file=sys.stderr)
        return 1
    outdir = _outdir(args, cfg)
    _echo(cfg, outdir)
    template = learning_policy_from(cfg)
    results = sweep_gamma(
        cfg.scenario, cfg.sweep_gammas, cfg.sweep_replications, args.seed, template, jobs=args.jobs
    )
    rows = [[fmt(g), fmt(mean), fmt(sem), cfg.sweep_replications] for g, mean, sem in results]
    path = write_csv(
        outdir / "gamma_sweep.csv", "gamma-sweep", 1,
        ["gamma", "mean_welfare", "stderr", "replications"], rows, _meta(cfg, args.seed),
    )
    print(f"wrote {path}")
    for g, mean, sem in results:
        print(f"gamma={g:<8g} welfare {mean:10.4f} +- {sem:.4f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
