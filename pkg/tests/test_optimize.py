"""Local search: move legality, descent laws, learning-guided restarts, annealing."""

import numpy as np
import pytest

from swnoc import NetworkConstraints, TrafficProfile, is_connected
from swnoc.features import comm_cost
from swnoc.optimize import (
    SaConfig,
    StageConfig,
    apply_move,
    hill_climb,
    simulated_annealing,
    stage_optimize,
    successors,
)
from swnoc.topogen import build_3d_sw


def toy_instance(seed=0, grid=(4, 2, 1)):
    gx, gy, dies = grid
    constraints = NetworkConstraints.mesh_matched(gx, gy, dies)
    topo = build_3d_sw(gx, gy, dies, alpha=1.5, constraints=constraints, seed=seed)
    n = topo.n_nodes
    rng = np.random.default_rng(seed + 100)
    f = rng.random((n, n)) * (rng.random((n, n)) < 0.4)
    np.fill_diagonal(f, 0)
    f[0, n - 1] += 1.0
    return topo, TrafficProfile(f), constraints


def length_multiset(topo):
    return sorted(round(lk.length_mm, 6) for lk in topo.planar_links)


def test_successors_preserve_invariants():
    topo, _, constraints = toy_instance(3)
    moves = successors(topo, constraints)
    assert moves, "toy instance should have at least one legal exchange"
    base_lengths = length_multiset(topo)
    for move in moves[:40]:
        nxt = apply_move(topo, move)
        assert len(nxt.planar_links) == len(topo.planar_links)
        assert length_multiset(nxt) == base_lengths
        assert nxt.degrees.max() <= constraints.k_max
        assert is_connected(nxt)
        # the dropped pair is gone, the added one is present
        assert not nxt.has_link(*move.drop)
        assert nxt.has_link(*move.add)


def test_successors_exclude_disconnecting_moves():
    topo, _, constraints = toy_instance(1)
    for move in successors(topo, constraints):
        assert is_connected(apply_move(topo, move))


def test_hill_climb_descends_and_ends_at_local_optimum():
    topo, traffic, constraints = toy_instance(0)
    traj = hill_climb(topo, traffic, constraints=constraints, patience=150, seed=5)
    # first state is the start, scores strictly decrease along accepted states
    assert traj.scores[0] == pytest.approx(comm_cost(topo, traffic))
    assert all(b < a for a, b in zip(traj.scores, traj.scores[1:]))
    end = traj.designs[-1]
    assert traj.best_design is end
    end_score = comm_cost(end, traffic)
    assert end_score == pytest.approx(traj.scores[-1])
    # verified local optimum: no legal exchange improves the endpoint
    for move in successors(end, constraints):
        assert comm_cost(apply_move(end, move), traffic) >= end_score - 1e-9


def test_hill_climb_deterministic_in_seed():
    topo, traffic, constraints = toy_instance(2)
    a = hill_climb(topo, traffic, constraints=constraints, seed=9)
    b = hill_climb(topo, traffic, constraints=constraints, seed=9)
    assert np.array_equal(a.scores, b.scores)
    assert a.designs[-1].link_set() == b.designs[-1].link_set()
    c = hill_climb(topo, traffic, constraints=constraints, seed=10)
    assert a.evals != c.evals or not np.array_equal(a.scores, c.scores)


def test_hill_climb_respects_eval_budget():
    topo, traffic, constraints = toy_instance(4)
    traj = hill_climb(topo, traffic, constraints=constraints, max_evals=37, seed=0)
    assert traj.evals <= 37


def test_hill_climb_custom_objective():
    topo, traffic, constraints = toy_instance(5)
    calls = []

    def objective(t):
        calls.append(1)
        return comm_cost(t, traffic)

    traj = hill_climb(topo, objective=objective, constraints=constraints,
                      patience=30, seed=1, max_evals=60)
    assert len(calls) == traj.evals


def test_stage_single_iteration_is_plain_descent():
    topo, traffic, constraints = toy_instance(6)
    cfg = StageConfig(max_iterations=1, hc_patience=120, seed=3)
    report = stage_optimize(traffic, cfg, constraints=constraints, initial=topo)
    traj = hill_climb(topo, traffic, constraints=constraints, patience=120, seed=3)
    assert report.best_score == pytest.approx(traj.scores[-1])
    assert report.best_design.link_set() == traj.designs[-1].link_set()
    assert report.evals == traj.evals
    assert len(report.history) == 1


def test_stage_runs_multiple_rounds_and_tracks_best():
    topo, traffic, constraints = toy_instance(7)
    cfg = StageConfig(
        max_iterations=4,
        convergence_window=10,
        hc_patience=60,
        meta_max_samples=120,
        seed=2,
    )
    report = stage_optimize(traffic, cfg, constraints=constraints, initial=topo)
    assert report.method == "stage"
    assert 1 <= len(report.history) <= 4
    bests = [rec.best_score for rec in report.history]
    assert all(b <= a + 1e-12 for a, b in zip(bests, bests[1:]))  # never regresses
    assert report.history[-1].training_rows > 0
    assert report.best_score <= comm_cost(topo, traffic)
    assert is_connected(report.best_design)
    assert report.best_design.degrees.max() <= constraints.k_max


def test_stage_respects_total_budget():
    topo, traffic, constraints = toy_instance(8)
    cfg = StageConfig(max_iterations=6, hc_patience=50, meta_max_samples=60,
                      max_evals=300, seed=0)
    report = stage_optimize(traffic, cfg, constraints=constraints, initial=topo)
    assert report.evals <= 300


def test_stage_fresh_start_path_runs():
    _, traffic, constraints = toy_instance(9)
    cfg = StageConfig(max_iterations=2, hc_patience=40, meta_max_samples=50, seed=4)
    report = stage_optimize(traffic, cfg, grid=(4, 2, 1), constraints=constraints)
    assert report.best_design.n_nodes == 8
    assert len(report.best_design.planar_links) == constraints.planar_link_budget
    assert is_connected(report.best_design)


def test_simulated_annealing_improves_and_is_deterministic():
    topo, traffic, constraints = toy_instance(10)
    cfg = SaConfig(steps_per_temp=40, max_evals=800)
    a = simulated_annealing(topo, traffic, cfg, constraints=constraints, seed=6)
    b = simulated_annealing(topo, traffic, cfg, constraints=constraints, seed=6)
    assert a.best_score == b.best_score
    assert a.best_design.link_set() == b.best_design.link_set()
    assert a.best_score <= comm_cost(topo, traffic) + 1e-12
    assert a.evals <= 800
    assert a.method == "sa"
    # annealing result stays inside the constrained space
    assert len(a.best_design.planar_links) == len(topo.planar_links)
    assert length_multiset(a.best_design) == length_multiset(topo)
    assert a.best_design.degrees.max() <= constraints.k_max


def test_annealing_and_stage_share_move_semantics():
    topo, traffic, constraints = toy_instance(11)
    sa = simulated_annealing(topo, traffic, SaConfig(steps_per_temp=20, max_evals=200),
                             constraints=constraints, seed=1)
    st = stage_optimize(traffic, StageConfig(max_iterations=1, hc_patience=40, seed=1),
                        constraints=constraints, initial=topo)
    for design in (sa.best_design, st.best_design):
        assert length_multiset(design) == length_multiset(topo)
        assert len(design.vertical_links) == len(topo.vertical_links)
