"""Reproducible experiment recipes and their result files.

Every run is driven by one :class:`ExperimentConfig` (a JSON file); every
emitted CSV and summary embeds the config's SHA-256 hash and base seed, and
re-running a recipe with the same config reproduces byte-identical files.
Recipes fan independent cases out to worker processes when ``workers`` > 1
and always write results from the calling process in a fixed order.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .aging import AgingParams, failure_timeline, lifetime, mesh_baseline_edp
from .model import Topology, TrafficProfile
from .netsim import EnergyParams, SimConfig, simulate
from .optimize import StageConfig, stage_optimize
from .spares import (
    AllocationSolution,
    LifetimeEvaluator,
    critical_set,
    greedy_allocate,
    saturation_sweep,
    static_allocate,
)
from .topogen import build_3d_sw, build_mesh, build_mrrm, build_rrrr
from .workloads import synth_traffic

__all__ = [
    "ExperimentConfig",
    "build_topology",
    "traffic_from_spec",
    "write_csv",
    "write_summary",
    "recipe_alpha_sweep",
    "recipe_topology_compare",
    "recipe_reliability",
    "run_recipe",
    "RECIPES",
]

DEFAULT_ALPHAS = (1.2, 1.6, 2.0, 2.4, 2.8, 3.2)
COMPARE_FAMILIES = ("mesh", "mrrm", "rrrr", "sw_rand", "sw_opt")


@dataclass(frozen=True)
class ExperimentConfig:
    """One experiment run, fully determined by its fields.

    ``topology`` names a family and its parameters, ``traffic`` a synthetic
    pattern or a matrix file, and ``sim``/``energy``/``aging`` hold keyword
    overrides for :class:`SimConfig`, :class:`EnergyParams` and
    :class:`AgingParams`.  ``search`` carries recipe-specific budgets.
    ``seeds`` drives per-case repetition; ``seed`` is the base seed echoed
    into every output file.
    """

    topology: dict = field(default_factory=dict)
    traffic: dict = field(default_factory=dict)
    sim: dict = field(default_factory=dict)
    energy: dict = field(default_factory=dict)
    aging: dict = field(default_factory=dict)
    search: dict = field(default_factory=dict)
    seeds: tuple = (1, 2, 3)
    seed: int = 1
    output_dir: str = "results"
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "seeds", tuple(int(s) for s in self.seeds))
        for name in ("topology", "traffic", "sim", "energy", "aging", "search"):
            object.__setattr__(self, name, dict(getattr(self, name)))

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        with open(path) as fh:
            raw = json.load(fh)
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**raw)

    def with_seed(self, seed: int) -> "ExperimentConfig":
        return dataclasses.replace(self, seed=int(seed))

    def canonical(self) -> dict:
        return dataclasses.asdict(self) | {"seeds": list(self.seeds)}

    @property
    def config_hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    def sim_config(self, seed=None) -> SimConfig:
        kw = dict(self.sim)
        kw.setdefault("seed", self.seed)
        if seed is not None:
            kw["seed"] = int(seed)
        return SimConfig(**kw)

    def energy_params(self) -> EnergyParams:
        return EnergyParams(**self.energy)

    def aging_params(self) -> AgingParams:
        return AgingParams(**self.aging)


# ------------------------------------------------------------- construction


def build_topology(spec: dict, seed=None) -> Topology:
    """Build the topology a config's ``topology`` section describes."""
    spec = dict(spec)
    family = spec.pop("family", "sw")
    grid = tuple(spec.pop("grid", (4, 4, 4)))
    if seed is not None:
        spec["seed"] = int(seed)
    if family == "mesh":
        spec.pop("seed", None)
        spec.pop("alpha", None)
        return build_mesh(*grid, **spec)
    if family in ("sw", "small-world"):
        return build_3d_sw(*grid, **spec)
    if family == "mrrm":
        spec.pop("alpha", None)
        return build_mrrm(*grid, **spec)
    if family == "rrrr":
        spec.pop("alpha", None)
        return build_rrrr(*grid, **spec)
    raise ValueError(f"unknown topology family {family!r}")


def traffic_from_spec(spec: dict, n: int) -> TrafficProfile:
    """Load or synthesize the traffic a config's ``traffic`` section names."""
    spec = dict(spec)
    path = spec.pop("path", None)
    if path is not None:
        return TrafficProfile.load(path)
    kind = spec.pop("kind", "uniform")
    seed = spec.pop("seed", 0)
    return synth_traffic(kind, n=n, seed=seed, **spec)


# ---------------------------------------------------------------- emission


def _fmt(value) -> str:
    if isinstance(value, bool):
        return str(value).lower()
    if isinstance(value, float):
        return repr(value)
    return str(value)


def provenance_lines(config: ExperimentConfig) -> list:
    return [f"# config_hash: {config.config_hash}", f"# seed: {config.seed}"]


def write_csv(path, header, rows, config: ExperimentConfig):
    lines = provenance_lines(config)
    lines.append(",".join(header))
    for row in rows:
        lines.append(",".join(_fmt(v) for v in row))
    Path(path).write_text("\n".join(lines) + "\n")
    return Path(path)


def write_summary(path, config: ExperimentConfig, payload: dict):
    body = {"config_hash": config.config_hash, "seed": config.seed} | payload
    Path(path).write_text(json.dumps(body, sort_keys=True, indent=2) + "\n")
    return Path(path)


def _map_ordered(fn, items, workers):
    if workers and workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, items))
    return [fn(item) for item in items]


def _median(values):
    finite = [v for v in values if v is not None and math.isfinite(v)]
    return statistics.median(finite) if finite else math.inf


# ------------------------------------------------------------ alpha sweep


def _stage_config(config: ExperimentConfig, alpha, seed) -> StageConfig:
    search = config.search
    return StageConfig(
        alpha=float(alpha),
        seed=int(seed),
        max_iterations=int(search.get("stage_iterations", 5)),
        hc_patience=int(search.get("hc_patience", 100)),
        max_evals=search.get("stage_max_evals"),
    )


def _alpha_case(args):
    config, alpha, seed = args
    grid = tuple(config.topology.get("grid", (4, 4, 4)))
    n = grid[0] * grid[1] * grid[2]
    traffic = traffic_from_spec(config.traffic, n)
    report = stage_optimize(traffic, _stage_config(config, alpha, seed), grid=grid)
    res = simulate(
        report.best_design, traffic, config.sim_config(seed), config.energy_params()
    )
    return (alpha, seed, report.best_score, res.edp, res.avg_latency_cycles)


def recipe_alpha_sweep(config: ExperimentConfig) -> dict:
    """Optimize and simulate at each connectivity exponent; one row per seed.

    Emits ``alpha_sweep.csv`` (alpha, seed, comm_cost, edp, latency) plus a
    summary with per-alpha medians and the location of the EDP minimum.
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    alphas = tuple(config.search.get("alphas", DEFAULT_ALPHAS))
    cases = [(config, alpha, seed) for alpha in alphas for seed in config.seeds]
    rows = _map_ordered(_alpha_case, cases, config.workers)
    csv_path = write_csv(
        out / "alpha_sweep.csv",
        ["alpha", "seed", "comm_cost", "edp", "avg_latency_cycles"],
        rows,
        config,
    )
    medians = {}
    for alpha in alphas:
        grp = [r for r in rows if r[0] == alpha]
        medians[repr(float(alpha))] = {
            "comm_cost": _median([r[2] for r in grp]),
            "edp": _median([r[3] for r in grp]),
        }
    best_alpha = min(medians, key=lambda a: medians[a]["edp"])
    summary_path = write_summary(
        out / "alpha_sweep_summary.json",
        config,
        {"per_alpha_medians": medians, "edp_min_alpha": best_alpha},
    )
    return {"csv": csv_path, "summary": summary_path}


# ------------------------------------------------------- topology compare


def _compare_case(args):
    config, family = args
    grid = tuple(config.topology.get("grid", (4, 4, 4)))
    n = grid[0] * grid[1] * grid[2]
    traffic = traffic_from_spec(config.traffic, n)
    seed = config.topology.get("seed", config.seed)
    if family == "sw_opt":
        alpha = config.topology.get("alpha", 2.4)
        report = stage_optimize(traffic, _stage_config(config, alpha, seed), grid=grid)
        topo = report.best_design
    elif family == "sw_rand":
        topo = build_topology(dict(config.topology, family="sw"), seed=seed)
    else:
        topo = build_topology(dict(config.topology, family=family), seed=seed)
    res = simulate(topo, traffic, config.sim_config(), config.energy_params())
    return (family, res.avg_latency_cycles, res.energy_per_message_pj, res.edp)


def recipe_topology_compare(config: ExperimentConfig) -> dict:
    """Simulate all five topology families on one traffic, normalized to mesh.

    Emits ``topology_compare.csv`` with raw and mesh-normalized latency,
    energy and EDP per family (the mesh row normalizes to exactly 1.0).
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    raw = _map_ordered(
        _compare_case, [(config, fam) for fam in COMPARE_FAMILIES], config.workers
    )
    base = {fam: (lat, en, edp) for fam, lat, en, edp in raw}["mesh"]
    rows = [
        (fam, lat, en, edp, lat / base[0], en / base[1], edp / base[2])
        for fam, lat, en, edp in raw
    ]
    csv_path = write_csv(
        out / "topology_compare.csv",
        [
            "family",
            "avg_latency_cycles",
            "energy_per_message_pj",
            "edp",
            "norm_latency",
            "norm_energy",
            "norm_edp",
        ],
        rows,
        config,
    )
    norm_edp = {row[0]: row[6] for row in rows}
    summary_path = write_summary(
        out / "topology_compare_summary.json",
        config,
        {
            "norm_edp": norm_edp,
            "sw_opt_below_random": norm_edp["sw_opt"] < norm_edp["sw_rand"],
            "sw_opt_best": norm_edp["sw_opt"] == min(norm_edp.values()),
        },
    )
    return {"csv": csv_path, "summary": summary_path}


# ------------------------------------------------------------- reliability


def _timeline_case(args):
    config, family, threshold = args
    grid = tuple(config.topology.get("grid", (4, 4, 4)))
    n = grid[0] * grid[1] * grid[2]
    traffic = traffic_from_spec(config.traffic, n)
    seed = config.topology.get("seed", config.seed)
    topo = build_topology(dict(config.topology, family=family), seed=seed)
    # run past the lifetime threshold so every family's profile has a shape
    # (the mesh starts exactly at the baseline)
    stop = threshold * float(config.search.get("stop_edp_factor", 2.0))
    tl = failure_timeline(
        topo,
        traffic,
        config.sim_config(),
        config.energy_params(),
        config.aging_params(),
        stop_edp=stop,
    )
    return family, tl.samples, lifetime(tl, threshold)


def _gvs_case(args):
    config, instance_seed, threshold_grid = args
    grid = tuple(config.topology.get("grid", (4, 4, 4)))
    n = grid[0] * grid[1] * grid[2]
    traffic = traffic_from_spec(dict(config.traffic, seed=instance_seed), n)
    topo = build_topology(config.topology, seed=instance_seed)
    threshold = mesh_baseline_edp(
        traffic, config.sim_config(), config.energy_params(), grid=threshold_grid
    )
    evaluator = LifetimeEvaluator(
        topo,
        traffic,
        threshold,
        config.sim_config(),
        config.energy_params(),
        config.aging_params(),
    )
    n_spares = int(config.search.get("n_spares", 4))
    pool = range(1, len(topo.vertical_links) + 1)
    h = config.search.get("critical_h")
    _, base_util = evaluator.base_measurement()
    restrict = critical_set(base_util, int(h)) if h else None
    sol_g, _ = greedy_allocate(pool, n_spares, evaluator, restrict_to=restrict)
    sol_s = static_allocate(base_util, n_spares)
    return (
        instance_seed,
        evaluator.evaluate(sol_g),
        evaluator.evaluate(sol_s),
    )


def recipe_reliability(config: ExperimentConfig) -> dict:
    """Aging timelines, spare-count sweep, partial fractions, greedy vs static.

    Emits ``timelines.csv`` (per-family EDP profiles, normalized to the
    fault-free mesh), ``spare_sweep.csv`` (lifetime and relative gain per
    spare count), ``partial_fractions.csv`` (lifetime per spare fraction) and
    ``greedy_vs_static.csv`` (both lifetimes per instance).
    """
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    grid = tuple(config.topology.get("grid", (4, 4, 4)))
    n = grid[0] * grid[1] * grid[2]
    traffic = traffic_from_spec(config.traffic, n)
    threshold = mesh_baseline_edp(
        traffic, config.sim_config(), config.energy_params(), grid=grid
    )

    families = tuple(config.search.get("timeline_families", ("mesh", "mrrm", "rrrr", "sw")))
    timed = _map_ordered(
        _timeline_case,
        [(config, fam, threshold) for fam in families],
        config.workers,
    )
    tl_rows = [
        (fam, t, edp, edp / threshold)
        for fam, samples, _ in timed
        for t, edp in samples
        if math.isfinite(edp)
    ]
    timelines_csv = write_csv(
        out / "timelines.csv",
        ["family", "time_hours", "edp", "normalized_edp"],
        tl_rows,
        config,
    )

    seed = config.topology.get("seed", config.seed)
    topo = build_topology(config.topology, seed=seed)
    evaluator = LifetimeEvaluator(
        topo,
        traffic,
        threshold,
        config.sim_config(),
        config.energy_params(),
        config.aging_params(),
    )
    _, base_util = evaluator.base_measurement()
    h = config.search.get("critical_h")
    pool = (
        critical_set(base_util, int(h))
        if h
        else tuple(range(1, len(topo.vertical_links) + 1))
    )
    n_max = int(config.search.get("n_max", min(8, len(pool))))
    sweep = saturation_sweep(pool, n_max, evaluator)
    sweep_csv = write_csv(
        out / "spare_sweep.csv",
        ["n_spares", "lifetime_hours", "relative_gain"],
        [(k, sweep.lifetimes[k], sweep.gains[k]) for k in range(n_max + 1)],
        config,
    )

    fractions = tuple(config.search.get("fractions", (0.0, 0.5, 0.75, 1.0)))
    n_partial = int(config.search.get("n_spares", min(4, n_max)))
    members = sweep.order[:n_partial]
    partial_rows = []
    for frac in fractions:
        sol = AllocationSolution.uniform(members, float(frac))
        partial_rows.append((frac, evaluator.evaluate(sol)))
    partial_csv = write_csv(
        out / "partial_fractions.csv",
        ["fraction", "lifetime_hours"],
        partial_rows,
        config,
    )

    instances = config.search.get("instances", config.seeds)
    gvs = _map_ordered(
        _gvs_case,
        [(config, int(s), grid) for s in instances],
        config.workers,
    )
    gvs_rows = [
        (s, lg, ls, (lg / ls if ls > 0 and math.isfinite(ls) else (1.0 if lg == ls else math.inf)))
        for s, lg, ls in gvs
    ]
    gvs_csv = write_csv(
        out / "greedy_vs_static.csv",
        ["instance_seed", "greedy_lifetime", "static_lifetime", "ratio"],
        gvs_rows,
        config,
    )

    summary = write_summary(
        out / "reliability_summary.json",
        config,
        {
            "threshold_edp": threshold,
            "n_star": sweep.n_star,
            "lifetimes_by_n": sweep.lifetimes,
            "partial_fractions": {repr(float(f)): lt for f, lt in partial_rows},
            "greedy_wins": sum(1 for _, lg, ls, _ in gvs_rows if lg > ls),
            "instances": len(gvs_rows),
        },
    )
    return {
        "timelines": timelines_csv,
        "sweep": sweep_csv,
        "partial": partial_csv,
        "greedy_vs_static": gvs_csv,
        "summary": summary,
    }


RECIPES = {
    "alpha_sweep": recipe_alpha_sweep,
    "topology_compare": recipe_topology_compare,
    "reliability": recipe_reliability,
}


def run_recipe(name: str, config: ExperimentConfig) -> dict:
    if name not in RECIPES:
        raise ValueError(f"unknown recipe {name!r}; choose from {sorted(RECIPES)}")
    return RECIPES[name](config)
