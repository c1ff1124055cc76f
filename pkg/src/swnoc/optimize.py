"""Local search over constrained small-world link placements.

The design space fixes routers, vertical links, the planar link budget, the
equal-length-exchange move, and the degree cap; a state is a set of planar
links.  One move removes a planar link and inserts a different unconnected
same-die pair of exactly the same length class, keeping the link count, the
length multiset, the degree cap, and connectivity intact.

Three searchers share that space:

* ``hill_climb``            -- stochastic first-improvement descent: sample one
  random successor per step, accept only strict improvements, stop after a
  patience budget of consecutive rejections.
* ``stage_optimize``        -- alternates real-objective descent with descent on
  a learned predictor of "where does a descent from here end up", trained on
  features of previously visited states; restarts from the predictor's
  recommendation (or fresh when it recommends the current optimum).
* ``simulated_annealing``   -- Metropolis acceptance with a geometric cooling
  schedule, same successor set, used as the budget-matched baseline.

Objective evaluations (communication cost or a caller-supplied callable) are
counted explicitly; predictor queries are not objective evaluations.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ._native import kernels
from .errors import GenerationFailed, TopologyError
from .features import (
    CostParams,
    clustering_by_die,
    region_hop_features,
    region_node_lists,
    weighted_comm_bins,
)
from .model import Link, NetworkConstraints, Topology, TrafficProfile
from .regtree import TrainingSet, fit_regression_tree
from .topogen import _same_die_candidates, _vertical_links, grid_positions


def _length_class(length_mm: float) -> int:
    return int(round(length_mm * 1e6))


@dataclass
class Move:
    """Remove planar pair ``drop`` and insert equal-length pair ``add``."""

    drop: tuple
    add: tuple
    slot: int = -1


class DesignSpace:
    """Candidate machinery for one (grid, constraints, traffic) instance."""

    def __init__(
        self,
        grid_x: int,
        grid_y: int,
        dies: int,
        constraints: NetworkConstraints,
        traffic: TrafficProfile,
        cost_params: CostParams = CostParams(),
        planar_pitch_mm: float = 2.0,
        die_pitch_mm: float = 0.05,
    ):
        self.grid = (grid_x, grid_y, dies)
        self.constraints = constraints
        self.traffic = traffic
        self.cost_params = cost_params
        self.planar_pitch_mm = planar_pitch_mm
        self.die_pitch_mm = die_pitch_mm
        self.n = grid_x * grid_y * dies
        if traffic.n != self.n:
            raise TopologyError("traffic size does not match grid")
        self.positions = grid_positions(grid_x, grid_y, dies)
        self.vls = _vertical_links(grid_x, grid_y, dies, die_pitch_mm)
        pairs, _, dist = _same_die_candidates(grid_x, grid_y, dies, planar_pitch_mm)
        self.cand_pairs = pairs
        self.cand_len = dist
        self.cand_index = {(int(a), int(b)): i for i, (a, b) in enumerate(pairs)}
        self.class_of = np.array([_length_class(d) for d in dist], dtype=np.int64)
        self.groups = {}
        for i, c in enumerate(self.class_of):
            self.groups.setdefault(int(c), []).append(i)
        self.groups = {c: np.array(g, dtype=np.int64) for c, g in self.groups.items()}
        self.pos_in_group = np.zeros(len(pairs), dtype=np.int64)
        for g in self.groups.values():
            self.pos_in_group[g] = np.arange(len(g))
        self.vl_degrees = np.zeros(self.n, dtype=np.int64)
        for lk in self.vls:
            self.vl_degrees[lk.a] += 1
            self.vl_degrees[lk.b] += 1
        # static objective pieces
        pos = np.array(self.positions, dtype=np.float64)
        pos[:, 0] *= planar_pitch_mm
        pos[:, 1] *= planar_pitch_mm
        pos[:, 2] *= die_pitch_mm
        diff = pos[:, None, :] - pos[None, :, :]
        self.dist_matrix = np.sqrt((diff**2).sum(axis=2))
        self.static_dist_term = float((self.dist_matrix * traffic.f).sum())
        # feature machinery
        self.regions = region_node_lists(grid_x, grid_y, dies)
        self.die_of = np.array([p.z for p in self.positions], dtype=np.int64)
        self.sym_f = traffic.f + traffic.f.T

    # -- states ------------------------------------------------------------

    def empty_arrays(self):
        b = self.constraints.planar_link_budget
        eu = np.empty(len(self.vls) + b, dtype=np.int32)
        ev = np.empty_like(eu)
        for i, lk in enumerate(self.vls):
            eu[i] = lk.a
            ev[i] = lk.b
        return eu, ev

    def state_from_pairs(self, planar_pairs) -> "_State":
        b = self.constraints.planar_link_budget
        if len(planar_pairs) != b:
            raise TopologyError(f"expected {b} planar links, got {len(planar_pairs)}")
        eu, ev = self.empty_arrays()
        off = len(self.vls)
        degrees = self.vl_degrees.copy()
        pair_set = set()
        cand = np.empty(b, dtype=np.int64)
        for i, (a, bb) in enumerate(planar_pairs):
            a, bb = int(min(a, bb)), int(max(a, bb))
            idx = self.cand_index.get((a, bb))
            if idx is None:
                raise TopologyError(f"({a}, {bb}) is not a same-die candidate pair")
            eu[off + i] = a
            ev[off + i] = bb
            degrees[a] += 1
            degrees[bb] += 1
            pair_set.add((a, bb))
            cand[i] = idx
        if len(pair_set) != b:
            raise TopologyError("duplicate planar pair")
        if degrees.max() > self.constraints.k_max:
            raise TopologyError("degree cap violated")
        return _State(self, eu, ev, degrees, pair_set, cand)

    def state_from_topology(self, topology: Topology) -> "_State":
        return self.state_from_pairs([lk.ends for lk in topology.planar_links])

    def topology_of(self, state: "_State") -> Topology:
        links = list(self.vls)
        for idx in state.cand:
            a, b = self.cand_pairs[idx]
            links.append(Link(int(a), int(b), "planar", float(self.cand_len[idx])))
        return Topology(
            self.positions,
            links,
            planar_pitch_mm=self.planar_pitch_mm,
            die_pitch_mm=self.die_pitch_mm,
        )

    # -- objective and features ---------------------------------------------

    def comm_cost_of(self, state: "_State") -> float:
        hop = kernels.weighted_hop_sum(self.n, state.eu, state.ev, self.traffic.f)
        if hop == np.inf:
            return float("inf")
        return self.cost_params.router_delay_weight * hop + self.static_dist_term

    def features_of(self, state: "_State") -> np.ndarray:
        hops = kernels.all_pairs_hops(self.n, state.eu, state.ev).astype(np.float64)
        regions = region_hop_features(hops, self.regions)
        bins = weighted_comm_bins(hops, self.traffic, normalized=True)
        adj = np.zeros((self.n, self.n), dtype=bool)
        for idx in state.cand:
            a, b = self.cand_pairs[idx]
            adj[a, b] = adj[b, a] = True
        cc = clustering_by_die(adj, self.die_of, self.grid[2])
        return np.concatenate([regions, bins, cc])

    # -- moves ---------------------------------------------------------------

    def sample_move(self, state: "_State", rng: np.random.Generator, max_tries: int = 500):
        """A uniformly random valid move, or None when none can be found.

        The drop slot is drawn with weight equal to the number of other
        candidates in its length class; the replacement is drawn uniformly
        from that class; invalid proposals (already linked, degree cap,
        disconnecting) are rejected and redrawn, which leaves the accepted
        distribution uniform over the valid move set.
        """
        weights = np.array(
            [len(self.groups[int(self.class_of[c])]) - 1 for c in state.cand],
            dtype=np.float64,
        )
        total = weights.sum()
        if total <= 0:
            return None
        p = weights / total
        k = self.constraints.k_max
        for _ in range(max_tries):
            slot = int(rng.choice(len(state.cand), p=p))
            drop_idx = int(state.cand[slot])
            group = self.groups[int(self.class_of[drop_idx])]
            j = int(rng.integers(len(group) - 1))
            if j >= self.pos_in_group[drop_idx]:
                j += 1
            add_idx = int(group[j])
            a, b = (int(x) for x in self.cand_pairs[add_idx])
            if (a, b) in state.pair_set:
                continue
            da, db = (int(x) for x in self.cand_pairs[drop_idx])
            deg = state.degrees
            gain_a = 1 - (a == da) - (a == db)
            gain_b = 1 - (b == da) - (b == db)
            if deg[a] + gain_a > k or deg[b] + gain_b > k:
                continue
            move = Move((da, db), (a, b))
            state.apply(move, slot)
            connected = kernels.reach_count(self.n, state.eu, state.ev, 0) == self.n
            state.revert(move, slot)
            if not connected:
                continue
            move.slot = slot
            return move
        return None

    def enumerate_moves(self, state: "_State"):
        """Every valid move (used by tests and tiny instances; not the hot path)."""
        k = self.constraints.k_max
        out = []
        for slot in range(len(state.cand)):
            drop_idx = int(state.cand[slot])
            da, db = (int(x) for x in self.cand_pairs[drop_idx])
            for add_idx in self.groups[int(self.class_of[drop_idx])]:
                if add_idx == drop_idx:
                    continue
                a, b = (int(x) for x in self.cand_pairs[add_idx])
                if (a, b) in state.pair_set:
                    continue
                gain_a = 1 - (a == da) - (a == db)
                gain_b = 1 - (b == da) - (b == db)
                if state.degrees[a] + gain_a > k or state.degrees[b] + gain_b > k:
                    continue
                move = Move((da, db), (a, b))
                state.apply(move, slot)
                connected = kernels.reach_count(self.n, state.eu, state.ev, 0) == self.n
                state.revert(move, slot)
                if connected:
                    move.slot = slot
                    out.append(move)
        return out


class _State:
    """Mutable search state: planar slots over the static vertical-link prefix."""

    __slots__ = ("space", "eu", "ev", "degrees", "pair_set", "cand")

    def __init__(self, space, eu, ev, degrees, pair_set, cand):
        self.space = space
        self.eu = eu
        self.ev = ev
        self.degrees = degrees
        self.pair_set = pair_set
        self.cand = cand

    def apply(self, move: Move, slot: int):
        off = len(self.space.vls)
        da, db = move.drop
        a, b = move.add
        self.pair_set.remove((da, db))
        self.pair_set.add((a, b))
        self.degrees[da] -= 1
        self.degrees[db] -= 1
        self.degrees[a] += 1
        self.degrees[b] += 1
        self.eu[off + slot] = a
        self.ev[off + slot] = b
        self.cand[slot] = self.space.cand_index[(a, b)]

    def revert(self, move: Move, slot: int):
        self.apply(Move(move.add, move.drop), slot)

    def snapshot(self):
        return self.cand.copy()

    def restore(self, snap):
        return self.space.state_from_pairs(
            [tuple(int(x) for x in self.space.cand_pairs[i]) for i in snap]
        )


# -- public move helpers ---------------------------------------------------------


def _space_for_topology(topology: Topology, traffic, constraints, cost_params):
    gx, gy, dies = topology.grid
    if constraints is None:
        constraints = NetworkConstraints.mesh_matched(gx, gy, dies)
        constraints = replace(
            constraints, planar_link_budget=len(topology.planar_links)
        )
    if traffic is None:
        f = np.ones((topology.n_nodes, topology.n_nodes)) - np.eye(topology.n_nodes)
        traffic = TrafficProfile(f)
    return DesignSpace(
        gx,
        gy,
        dies,
        constraints,
        traffic,
        cost_params,
        planar_pitch_mm=topology.planar_pitch_mm,
        die_pitch_mm=topology.die_pitch_mm,
    )


def successors(topology: Topology, constraints: NetworkConstraints | None = None):
    """All equal-length planar exchanges preserving constraints and connectivity."""
    space = _space_for_topology(topology, None, constraints, CostParams())
    return space.enumerate_moves(space.state_from_topology(topology))


def apply_move(topology: Topology, move: Move) -> Topology:
    drop = (min(move.drop), max(move.drop))
    add = (min(move.add), max(move.add))
    links = [lk for lk in topology.links if lk.ends != drop]
    if len(links) == len(topology.links):
        raise TopologyError(f"move drops a link not present: {drop}")
    links.append(Link(add[0], add[1], "planar", topology.planar_length(*add)))
    return topology.with_links(links)


# -- search records ---------------------------------------------------------------


@dataclass
class SearchTrajectory:
    """Accepted states of one descent, in visit order (start included)."""

    designs: list
    scores: np.ndarray
    evals: int
    accepted: int

    @property
    def best_index(self) -> int:
        return int(np.argmin(self.scores))

    @property
    def best_score(self) -> float:
        return float(self.scores[self.best_index])

    @property
    def best_design(self):
        return self.designs[self.best_index]


@dataclass
class IterationRecord:
    iteration: int
    best_score: float
    evals: int
    wall_ms: float
    accepted: int
    training_rows: int


@dataclass
class OptimizationReport:
    best_design: Topology
    best_score: float
    history: list
    evals: int
    converged: bool
    method: str


# -- the descent engine ------------------------------------------------------------


def _climb(space, state, scorer, rng, patience, budget):
    """First-improvement stochastic descent; returns (snapshots, scores, evals, accepted)."""
    score = scorer(state)
    evals = 1
    snaps = [state.snapshot()]
    scores = [score]
    rejects = 0
    accepted = 0
    while rejects < patience and evals < budget:
        move = space.sample_move(state, rng)
        if move is None:
            break
        slot = move.slot
        state.apply(move, slot)
        evals += 1
        cand_score = scorer(state)
        if cand_score < score:
            score = cand_score
            snaps.append(state.snapshot())
            scores.append(score)
            accepted += 1
            rejects = 0
        else:
            state.revert(move, slot)
            rejects += 1
    return snaps, np.array(scores, dtype=np.float64), evals, accepted


@dataclass(frozen=True)
class StageConfig:
    max_iterations: int = 100
    convergence_window: int = 10
    hc_patience: int = 200
    meta_max_samples: int = 2000
    gamma0: float = 1.0
    gamma_decay: float = 0.95
    alpha: float = 2.4
    cost_params: CostParams = field(default_factory=CostParams)
    max_depth: int = 12
    min_leaf: int = 5
    training_cap: int = 50_000
    max_evals: int | None = None
    seed: int = 0


def hill_climb(
    start: Topology,
    traffic: TrafficProfile | None = None,
    objective=None,
    constraints: NetworkConstraints | None = None,
    cost_params: CostParams = CostParams(),
    patience: int = 200,
    seed: int = 0,
    max_evals: int | None = None,
) -> SearchTrajectory:
    """Stochastic first-improvement descent from ``start``.

    Scores states by communication cost against ``traffic`` unless a custom
    ``objective(topology) -> float`` is supplied.  Deterministic in ``seed``.
    """
    space = _space_for_topology(start, traffic, constraints, cost_params)
    state = space.state_from_topology(start)
    rng = np.random.default_rng(seed)
    if objective is None:
        scorer = space.comm_cost_of
    else:
        scorer = lambda st: float(objective(space.topology_of(st)))
    budget = max_evals if max_evals is not None else float("inf")
    snaps, scores, evals, accepted = _climb(space, state, scorer, rng, patience, budget)
    designs = [space.topology_of(state.restore(s)) for s in snaps]
    return SearchTrajectory(designs, scores, evals, accepted)


def _fresh_start(space, gamma, rng, alpha, max_attempts=50):
    """Traffic-greedy start: with probability gamma take the heaviest feasible
    candidate pair, otherwise a uniform one; falls back to power-law sampling
    if the greedy construction keeps coming out disconnected."""
    b = space.constraints.planar_link_budget
    k = space.constraints.k_max
    cand_f = space.sym_f[space.cand_pairs[:, 0], space.cand_pairs[:, 1]]
    heavy_order = np.lexsort((np.arange(len(cand_f)), -cand_f))
    for _ in range(max_attempts):
        degrees = space.vl_degrees.copy()
        taken = np.zeros(len(space.cand_pairs), dtype=bool)
        chosen = []
        for _step in range(b):
            feasible = ~taken
            feasible &= degrees[space.cand_pairs[:, 0]] < k
            feasible &= degrees[space.cand_pairs[:, 1]] < k
            idxs = np.flatnonzero(feasible)
            if len(idxs) == 0:
                break
            if rng.random() < gamma:
                pick = next(i for i in heavy_order if feasible[i])
            else:
                pick = int(idxs[rng.integers(len(idxs))])
            taken[pick] = True
            a, bb = space.cand_pairs[pick]
            degrees[a] += 1
            degrees[bb] += 1
            chosen.append((int(a), int(bb)))
        if len(chosen) != b:
            continue
        state = space.state_from_pairs(chosen)
        if kernels.reach_count(space.n, state.eu, state.ev, 0) == space.n:
            return state
    from .topogen import _sample_planar

    for _ in range(200):
        picked = _sample_planar(
            space.cand_pairs, space.cand_len, b, alpha, k, space.vl_degrees, rng
        )
        if picked is None:
            continue
        state = space.state_from_pairs(
            [tuple(int(x) for x in space.cand_pairs[i]) for i in picked]
        )
        if kernels.reach_count(space.n, state.eu, state.ev, 0) == space.n:
            return state
    raise GenerationFailed("could not construct a connected start", attempts=max_attempts + 200)


def stage_optimize(
    traffic: TrafficProfile,
    config: StageConfig = StageConfig(),
    grid=(4, 4, 4),
    constraints: NetworkConstraints | None = None,
    initial: Topology | None = None,
) -> OptimizationReport:
    """Learning-guided repeated descent.

    Each round: (1) descend on communication cost, (2) label every visited
    state with the best cost seen from it onward, (3) refit the regression
    tree on accumulated (features, label) rows, (4) descend on the tree's
    prediction to pick the next start; when that search just returns the
    current optimum, restart fresh instead.  Converges after
    ``convergence_window`` rounds without improvement.  With
    ``max_iterations=1`` this reduces to a single plain descent.
    """
    if config.max_iterations < 1:
        raise ValueError("max_iterations must be at least 1")
    gx, gy, dies = grid if initial is None else initial.grid
    if constraints is None:
        constraints = NetworkConstraints.mesh_matched(gx, gy, dies)
    space = (
        DesignSpace(gx, gy, dies, constraints, traffic, config.cost_params)
        if initial is None
        else _space_for_topology(initial, traffic, constraints, config.cost_params)
    )
    rng = np.random.default_rng(config.seed)
    budget = config.max_evals if config.max_evals is not None else float("inf")
    training = TrainingSet(cap=config.training_cap)
    gamma = config.gamma0
    if initial is not None:
        state = space.state_from_topology(initial)
    else:
        state = _fresh_start(space, gamma, rng, config.alpha)
        gamma *= config.gamma_decay
    evals = 0
    best_snap = None
    best_score = float("inf")
    no_improve = 0
    history = []
    converged = False
    for iteration in range(config.max_iterations):
        t0 = time.perf_counter()
        snaps, scores, used, accepted = _climb(
            space, state, space.comm_cost_of, rng, config.hc_patience, budget - evals
        )
        evals += used
        # best-to-go labels over this descent's visit order
        labels = np.minimum.accumulate(scores[::-1])[::-1]
        feats = [space.features_of(state.restore(s)) for s in snaps]
        training.extend(feats, labels)
        if scores[-1] < best_score:
            best_score = float(scores[-1])
            best_snap = snaps[-1]
            no_improve = 0
        else:
            no_improve += 1
        history.append(
            IterationRecord(
                iteration,
                best_score,
                evals,
                (time.perf_counter() - t0) * 1000.0,
                accepted,
                len(training),
            )
        )
        if no_improve >= config.convergence_window:
            converged = True
            break
        if iteration == config.max_iterations - 1 or evals >= budget:
            break
        # learned restart selection
        X, y = training.arrays()
        tree = fit_regression_tree(X, y, max_depth=config.max_depth, min_leaf=config.min_leaf)
        end_snap = snaps[-1]
        meta_state = state.restore(end_snap)
        meta_scorer = lambda st: float(tree.predict(space.features_of(st)))
        meta_snaps, _, _, _ = _climb(
            space, meta_state, meta_scorer, rng, config.hc_patience, config.meta_max_samples
        )
        suggestion = meta_snaps[-1]
        if np.array_equal(np.sort(suggestion), np.sort(end_snap)):
            state = _fresh_start(space, gamma, rng, config.alpha)
            gamma *= config.gamma_decay
        else:
            state = space.state_from_pairs(
                [tuple(int(x) for x in space.cand_pairs[i]) for i in suggestion]
            )
    best_design = space.topology_of(state.restore(best_snap))
    return OptimizationReport(best_design, best_score, history, evals, converged, "stage")


@dataclass(frozen=True)
class SaConfig:
    t0: float | None = None  # None: calibrate to the 90th pct of pilot |delta|
    cooling: float = 0.95
    steps_per_temp: int = 100
    t_floor_ratio: float = 1e-6
    max_evals: int | None = None


def simulated_annealing(
    start: Topology,
    traffic: TrafficProfile | None = None,
    config: SaConfig = SaConfig(),
    constraints: NetworkConstraints | None = None,
    cost_params: CostParams = CostParams(),
    objective=None,
    seed: int = 0,
) -> OptimizationReport:
    """Metropolis search over the same successor set as the descent methods."""
    space = _space_for_topology(start, traffic, constraints, cost_params)
    state = space.state_from_topology(start)
    rng = np.random.default_rng(seed)
    scorer = (
        space.comm_cost_of
        if objective is None
        else (lambda st: float(objective(space.topology_of(st))))
    )
    budget = config.max_evals if config.max_evals is not None else float("inf")
    score = scorer(state)
    evals = 1
    best_snap, best_score = state.snapshot(), score
    t = config.t0
    if t is None:
        # pilot probe: spread of proposal deltas around the start
        deltas = []
        for _ in range(100):
            move = space.sample_move(state, rng)
            if move is None:
                break
            state.apply(move, move.slot)
            evals += 1
            deltas.append(abs(scorer(state) - score))
            state.revert(move, move.slot)
        t = float(np.percentile(deltas, 90)) if deltas else 1.0
        if t <= 0:
            t = 1.0
    t_floor = t * config.t_floor_ratio
    history = []
    level = 0
    while t > t_floor and evals < budget:
        t_start = time.perf_counter()
        accepted = 0
        for _ in range(config.steps_per_temp):
            if evals >= budget:
                break
            move = space.sample_move(state, rng)
            if move is None:
                t = 0.0
                break
            state.apply(move, move.slot)
            evals += 1
            cand = scorer(state)
            delta = cand - score
            if delta <= 0 or rng.random() < math.exp(-delta / t):
                score = cand
                accepted += 1
                if score < best_score:
                    best_score = score
                    best_snap = state.snapshot()
            else:
                state.revert(move, move.slot)
        history.append(
            IterationRecord(
                level,
                best_score,
                evals,
                (time.perf_counter() - t_start) * 1000.0,
                accepted,
                0,
            )
        )
        level += 1
        t *= config.cooling
    best_design = space.topology_of(state.restore(best_snap))
    return OptimizationReport(best_design, best_score, history, evals, False, "sa")
