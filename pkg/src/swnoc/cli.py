"""Command-line toolkit: generation, evaluation, simulation, aging, spares.

Exit codes: 0 success, 1 runtime failure (e.g. deadlock), 2 generation or
constraint failure, 3 search-space refusal.
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np

from . import backend_name
from .aging import failure_timeline, lifetime, mesh_baseline_edp
from .errors import (
    DeadlockError,
    GenerationFailed,
    SearchSpaceTooLarge,
    TopologyError,
)
from .features import comm_cost
from .model import Topology, all_pairs_hops
from .netsim import simulate
from .optimize import CostParams, StageConfig, stage_optimize
from .spares import (
    LifetimeEvaluator,
    critical_set,
    exhaustive_allocate,
    greedy_allocate,
    saturation_sweep,
    static_allocate,
)
from .experiments import (
    ExperimentConfig,
    build_topology,
    run_recipe,
    traffic_from_spec,
    write_csv,
    write_summary,
    RECIPES,
)

__all__ = ["main"]


# ------------------------------------------------------------ shared pieces


def _add_traffic_flags(p):
    p.add_argument(
        "--traffic",
        default="uniform",
        help="traffic matrix file, or pattern: uniform | hotspot | skewed",
    )
    p.add_argument("--traffic-seed", type=int, default=0)
    p.add_argument("--hot-pairs", type=int, help="hotspot: number of hot pairs")
    p.add_argument("--hot-ratio", type=float, help="hotspot: hot/background ratio")
    p.add_argument("--gap", type=int, help="skewed: stressed die gap (1-based)")
    p.add_argument("--share", type=float, help="skewed: fraction of traffic on the gap")
    p.add_argument("--dies", type=int, help="skewed: number of dies in the stack")


def _traffic_spec(args) -> dict:
    if Path(args.traffic).exists():
        return {"path": args.traffic}
    spec = {"kind": args.traffic, "seed": args.traffic_seed}
    for key, name in (
        ("hot_pairs", "k"),
        ("hot_ratio", "ratio"),
        ("gap", "gap"),
        ("share", "share"),
        ("dies", "dies"),
    ):
        value = getattr(args, key)
        if value is not None:
            spec[name] = value
    return spec


def _add_config_flags(p):
    p.add_argument("--config", help="experiment config JSON (sim/energy/aging settings)")
    p.add_argument("--seed", type=int, help="override the config's base seed")


def _experiment_config(args, **section_overrides) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    updates = {}
    for section, extra in section_overrides.items():
        merged = dict(getattr(cfg, section))
        merged.update({k: v for k, v in extra.items() if v is not None})
        updates[section] = merged
    if updates:
        import dataclasses

        cfg = dataclasses.replace(cfg, **updates)
    return cfg


def _sim_overrides(args) -> dict:
    return {
        "injection_rate": getattr(args, "rate", None),
        "warmup_cycles": getattr(args, "warmup", None),
        "measure_cycles": getattr(args, "measure", None),
        "drain_cycles": getattr(args, "drain", None),
    }


def _load_topology(path) -> Topology:
    return Topology.load(path)


def _print(pairs):
    for key, value in pairs:
        print(f"{key}: {value}")


# ----------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    spec = {"family": args.family, "grid": tuple(args.grid)}
    if args.alpha is not None:
        spec["alpha"] = args.alpha
    topo = build_topology(spec, seed=args.seed or 0)
    if not args.out:
        sys.stdout.write(topo.to_text())
        return 0
    topo.save(args.out)
    hops = all_pairs_hops(topo)
    off_diag = hops[~np.eye(topo.n_nodes, dtype=bool)]
    _print(
        [
            ("family", args.family),
            ("nodes", topo.n_nodes),
            ("links", len(topo.links)),
            ("vertical_links", len(topo.vertical_links)),
            ("avg_hops", f"{off_diag[np.isfinite(off_diag)].mean():.4f}"),
        ]
    )
    return 0


def cmd_evaluate(args) -> int:
    topo = _load_topology(args.topology)
    traffic = traffic_from_spec(_traffic_spec(args), topo.n_nodes)
    params = CostParams(router_delay_weight=args.router_weight)
    cost = comm_cost(topo, traffic, params)
    hops = all_pairs_hops(topo)
    weighted_hops = float((hops * traffic.f).sum() / traffic.f.sum())
    _print(
        [
            ("comm_cost", repr(cost)),
            ("weighted_avg_hops", f"{weighted_hops:.4f}"),
            ("links", len(topo.links)),
        ]
    )
    if args.out:
        cfg = _experiment_config(args, traffic=_traffic_spec(args))
        write_csv(
            args.out,
            ["comm_cost", "weighted_avg_hops", "links"],
            [(cost, weighted_hops, len(topo.links))],
            cfg,
        )
    return 0


def cmd_optimize(args) -> int:
    cfg = _experiment_config(args, traffic=_traffic_spec(args))
    grid = tuple(args.grid)
    n = grid[0] * grid[1] * grid[2]
    traffic = traffic_from_spec(cfg.traffic, n)
    stage_cfg = StageConfig(
        alpha=args.alpha,
        seed=cfg.seed,
        max_iterations=args.iterations,
        max_evals=args.max_evals,
    )
    report = stage_optimize(traffic, stage_cfg, grid=grid)
    report.best_design.save(args.out)
    if args.history:
        rows = [
            (r.iteration, r.best_score, r.evals, r.training_rows, r.accepted, r.wall_ms)
            for r in report.history
        ]
        write_csv(
            args.history,
            ["iteration", "best_score", "evals", "training_rows", "accepted", "wall_ms"],
            rows,
            cfg,
        )
    if args.summary:
        write_summary(
            args.summary,
            cfg,
            {
                "best_score": report.best_score,
                "evals": report.evals,
                "iterations": len(report.history),
                "converged": report.converged,
                "method": report.method,
            },
        )
    _print(
        [
            ("best_comm_cost", repr(report.best_score)),
            ("evals", report.evals),
            ("design", args.out),
        ]
    )
    return 0


def cmd_simulate(args) -> int:
    topo = _load_topology(args.topology)
    cfg = _experiment_config(
        args, traffic=_traffic_spec(args), sim=_sim_overrides(args)
    )
    traffic = traffic_from_spec(cfg.traffic, topo.n_nodes)
    result = simulate(topo, traffic, cfg.sim_config(), cfg.energy_params())
    rows = [
        (
            result.injected_packets,
            result.delivered_packets,
            result.avg_latency_cycles,
            result.avg_hops,
            result.energy_per_message_pj,
            result.edp,
            result.saturated,
        )
    ]
    header = [
        "injected_packets",
        "delivered_packets",
        "avg_latency_cycles",
        "avg_hops",
        "energy_per_message_pj",
        "edp",
        "saturated",
    ]
    _print(list(zip(header, rows[0])) + [("backend", result.backend)])
    if args.out:
        write_csv(args.out, header, rows, cfg)
    if args.summary:
        write_summary(
            args.summary,
            cfg,
            dict(zip(header, rows[0])) | {"backend": result.backend},
        )
    return 0


def _parse_allocation(text) -> dict:
    allocation = {}
    if not text:
        return allocation
    for part in text.split(","):
        vl, _, frac = part.partition(":")
        allocation[int(vl)] = float(frac) if frac else 1.0
    return allocation


def cmd_age(args) -> int:
    topo = _load_topology(args.topology)
    cfg = _experiment_config(
        args, traffic=_traffic_spec(args), sim=_sim_overrides(args)
    )
    traffic = traffic_from_spec(cfg.traffic, topo.n_nodes)
    threshold = mesh_baseline_edp(
        traffic,
        cfg.sim_config(),
        cfg.energy_params(),
        grid=topo.grid,
        planar_pitch_mm=topo.planar_pitch_mm,
        die_pitch_mm=topo.die_pitch_mm,
    )
    timeline = failure_timeline(
        topo,
        traffic,
        cfg.sim_config(),
        cfg.energy_params(),
        cfg.aging_params(),
        allocation=_parse_allocation(args.allocation),
        horizon=args.horizon,
        max_failures=args.max_failures,
    )
    labels = [("start", 0, False)] + [
        (e.what, e.vl, e.link_removed) for e in timeline.events
    ]
    rows = []
    for k, (t, edp) in enumerate(timeline.samples):
        what, vl, removed = labels[k] if k < len(labels) else labels[-1]
        norm = edp / threshold if math.isfinite(edp) else math.inf
        rows.append((t, what, vl, removed, edp, norm))
    life = lifetime(timeline, threshold)
    _print(
        [
            ("threshold_edp", repr(threshold)),
            ("events", len(timeline.events)),
            ("lifetime_hours", repr(life)),
        ]
    )
    if args.out:
        write_csv(
            args.out,
            ["time_hours", "event", "vl", "link_removed", "edp", "normalized_edp"],
            rows,
            cfg,
        )
    if args.summary:
        write_summary(
            args.summary,
            cfg,
            {
                "threshold_edp": threshold,
                "lifetime_hours": life,
                "events": len(timeline.events),
            },
        )
    return 0


def _evaluator_for(args, topo, traffic, cfg) -> LifetimeEvaluator:
    threshold = mesh_baseline_edp(
        traffic,
        cfg.sim_config(),
        cfg.energy_params(),
        grid=topo.grid,
        planar_pitch_mm=topo.planar_pitch_mm,
        die_pitch_mm=topo.die_pitch_mm,
    )
    return LifetimeEvaluator(
        topo,
        traffic,
        threshold,
        cfg.sim_config(),
        cfg.energy_params(),
        cfg.aging_params(),
    )


def _restricted_pool(args, evaluator, n_vl):
    full = tuple(range(1, n_vl + 1))
    if args.restrict in (None, "none"):
        return full, None
    _, util = evaluator.base_measurement()
    return full, critical_set(util, int(args.restrict))


def cmd_allocate(args) -> int:
    topo = _load_topology(args.topology)
    cfg = _experiment_config(
        args, traffic=_traffic_spec(args), sim=_sim_overrides(args)
    )
    traffic = traffic_from_spec(cfg.traffic, topo.n_nodes)
    evaluator = _evaluator_for(args, topo, traffic, cfg)
    fraction = args.partial / 100.0
    pool, restrict = _restricted_pool(args, evaluator, len(topo.vertical_links))
    if args.algo == "greedy":
        solution, stats = greedy_allocate(
            pool, args.n, evaluator, restrict_to=restrict, fraction=fraction
        )
    elif args.algo == "exhaustive":
        solution, stats = exhaustive_allocate(
            pool, args.n, evaluator, restrict_to=restrict, fraction=fraction
        )
    else:
        _, util = evaluator.base_measurement()
        solution = static_allocate(util, args.n, fraction=fraction)
        stats = None
    life = evaluator.evaluate(solution)
    _print(
        [
            ("algo", args.algo),
            ("members", ",".join(str(v) for v in solution.members)),
            ("fraction", fraction),
            ("lifetime_hours", repr(life)),
            ("evaluator_calls", stats.simulator_calls if stats else 0),
        ]
    )
    if args.out:
        rows = [
            (rank + 1, vl, frac)
            for rank, (vl, frac) in enumerate(zip(solution.members, solution.fractions))
        ]
        write_csv(args.out, ["rank", "vl", "fraction"], rows, cfg)
    if args.summary:
        write_summary(
            args.summary,
            cfg,
            {
                "algo": args.algo,
                "members": list(solution.members),
                "fraction": fraction,
                "lifetime_hours": life,
                "evaluator_calls": stats.simulator_calls if stats else 0,
                "threshold_edp": evaluator.threshold_edp,
            },
        )
    return 0


def cmd_sweep(args) -> int:
    topo = _load_topology(args.topology)
    cfg = _experiment_config(
        args, traffic=_traffic_spec(args), sim=_sim_overrides(args)
    )
    traffic = traffic_from_spec(cfg.traffic, topo.n_nodes)
    evaluator = _evaluator_for(args, topo, traffic, cfg)
    pool, restrict = _restricted_pool(args, evaluator, len(topo.vertical_links))
    sweep = saturation_sweep(restrict or pool, args.n_max, evaluator)
    _print(
        [
            ("n_star", sweep.n_star),
            ("order", ",".join(str(v) for v in sweep.order)),
            ("lifetimes", ",".join(repr(v) for v in sweep.lifetimes)),
        ]
    )
    if args.out:
        rows = [
            (k, sweep.lifetimes[k], sweep.gains[k]) for k in range(args.n_max + 1)
        ]
        write_csv(args.out, ["n_spares", "lifetime_hours", "relative_gain"], rows, cfg)
    if args.summary:
        write_summary(
            args.summary,
            cfg,
            {
                "n_star": sweep.n_star,
                "order": list(sweep.order),
                "lifetimes": list(sweep.lifetimes),
            },
        )
    return 0


def cmd_recipe(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    if args.seed is not None:
        cfg = cfg.with_seed(args.seed)
    if args.out_dir or args.workers:
        import dataclasses

        cfg = dataclasses.replace(
            cfg,
            output_dir=args.out_dir or cfg.output_dir,
            workers=args.workers or cfg.workers,
        )
    paths = run_recipe(args.name, cfg)
    _print([(key, str(path)) for key, path in paths.items()])
    return 0


def cmd_backend(args) -> int:
    _print([("backend", backend_name())])
    return 0


# -------------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="swnoc",
        description="Small-world 3D NoC design, simulation and reliability toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a topology")
    p.add_argument("--family", default="sw", choices=["mesh", "sw", "mrrm", "rrrr"])
    p.add_argument("--grid", type=int, nargs=3, default=[4, 4, 4], metavar=("X", "Y", "Z"))
    p.add_argument("--alpha", type=float)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="topology file to write (stdout otherwise)")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("evaluate", help="communication cost of a topology")
    p.add_argument("--topology", required=True)
    _add_traffic_flags(p)
    _add_config_flags(p)
    p.add_argument("--router-weight", type=float, default=3.0)
    p.add_argument("--out", help="CSV row to write")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("optimize", help="learning-guided topology search")
    _add_traffic_flags(p)
    _add_config_flags(p)
    p.add_argument("--grid", type=int, nargs=3, default=[4, 4, 4], metavar=("X", "Y", "Z"))
    p.add_argument("--alpha", type=float, default=2.4)
    p.add_argument("--iterations", type=int, default=10)
    p.add_argument("--max-evals", type=int)
    p.add_argument("--out", required=True, help="best design file")
    p.add_argument("--history", help="per-iteration CSV (includes wall_ms)")
    p.add_argument("--summary", help="run summary JSON")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="flit-level wormhole simulation")
    p.add_argument("--topology", required=True)
    _add_traffic_flags(p)
    _add_config_flags(p)
    p.add_argument("--rate", type=float, help="flits per node per cycle")
    p.add_argument("--warmup", type=int)
    p.add_argument("--measure", type=int)
    p.add_argument("--drain", type=int)
    p.add_argument("--out", help="CSV row to write")
    p.add_argument("--summary", help="run summary JSON")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("age", help="vertical-link aging timeline")
    p.add_argument("--topology", required=True)
    _add_traffic_flags(p)
    _add_config_flags(p)
    p.add_argument("--rate", type=float)
    p.add_argument("--warmup", type=int)
    p.add_argument("--measure", type=int)
    p.add_argument("--drain", type=int)
    p.add_argument("--allocation", help="spares as vl:frac,vl:frac (frac defaults 1)")
    p.add_argument("--horizon", type=float, default=math.inf)
    p.add_argument("--max-failures", type=int)
    p.add_argument("--out", help="timeline CSV")
    p.add_argument("--summary", help="run summary JSON")
    p.set_defaults(func=cmd_age)

    p = sub.add_parser("allocate", help="spare vertical link selection")
    p.add_argument("--topology", required=True)
    _add_traffic_flags(p)
    _add_config_flags(p)
    p.add_argument("--rate", type=float)
    p.add_argument("--warmup", type=int)
    p.add_argument("--measure", type=int)
    p.add_argument("--drain", type=int)
    p.add_argument("--algo", default="greedy", choices=["greedy", "exhaustive", "static"])
    p.add_argument("--n", type=int, required=True, help="number of spares")
    p.add_argument("--restrict", help="critical-set size, or 'none'")
    p.add_argument(
        "--partial", type=int, default=100, choices=[50, 75, 100],
        help="spare bundle fraction (percent)",
    )
    p.add_argument("--out", help="allocation CSV")
    p.add_argument("--summary", help="run summary JSON")
    p.set_defaults(func=cmd_allocate)

    p = sub.add_parser("sweep", help="lifetime vs spare count saturation sweep")
    p.add_argument("--topology", required=True)
    _add_traffic_flags(p)
    _add_config_flags(p)
    p.add_argument("--rate", type=float)
    p.add_argument("--warmup", type=int)
    p.add_argument("--measure", type=int)
    p.add_argument("--drain", type=int)
    p.add_argument("--n-max", type=int, required=True)
    p.add_argument("--restrict", help="critical-set size, or 'none'")
    p.add_argument("--out", help="sweep CSV")
    p.add_argument("--summary", help="run summary JSON")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("recipe", help="run a full experiment recipe")
    p.add_argument("name", choices=sorted(RECIPES))
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--out-dir")
    p.add_argument("--workers", type=int)
    p.set_defaults(func=cmd_recipe)

    p = sub.add_parser("backend", help="report the active compute backend")
    p.set_defaults(func=cmd_backend)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (GenerationFailed, TopologyError, ValueError, OSError) as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except SearchSpaceTooLarge as err:
        print(f"refused: {err}", file=sys.stderr)
        return 3
    except DeadlockError as err:
        print(f"deadlock: {err}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
