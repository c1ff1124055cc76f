"""Topology generators: constraint compliance, determinism, locality effects."""

import math

import numpy as np
import pytest

from swnoc import GenerationFailed, NetworkConstraints, avg_hop_count, is_connected
from swnoc.topogen import (
    apply_placement,
    build_3d_sw,
    build_mesh,
    build_mrrm,
    build_rrrr,
    grid_positions,
    mesh_link_set,
    place_cores,
)
from swnoc.model import TrafficProfile

MESH_444_MEAN_HOPS = 80.0 / 21.0


def check_constraints(topo, budget=96, k_max=7):
    assert len(topo.planar_links) == budget
    assert len(topo.vertical_links) == 48
    assert topo.degrees.max() <= k_max
    assert is_connected(topo)
    for lk in topo.planar_links:
        assert topo.positions[lk.a].z == topo.positions[lk.b].z


def test_sw_meets_constraints_and_is_deterministic():
    a = build_3d_sw(seed=7)
    b = build_3d_sw(seed=7)
    c = build_3d_sw(seed=8)
    check_constraints(a)
    assert a.link_set() == b.link_set()
    assert a.link_set() != c.link_set()


def test_sw_budget_matches_mesh_resources():
    topo = build_3d_sw(seed=1)
    mesh = build_mesh()
    assert len(topo.links) == len(mesh.links) == 144
    assert topo.degrees.sum() == mesh.degrees.sum()


def test_sw_beats_mesh_hops_at_default_alpha():
    hops = [avg_hop_count(build_3d_sw(alpha=2.4, seed=s)) for s in range(5)]
    assert all(h < MESH_444_MEAN_HOPS for h in hops)
    assert np.mean(hops) < 3.3  # small-world shortcuts cut well below 3.81


def test_alpha_controls_locality():
    def local_fraction(topo):
        # lattice-local: planar length within one diagonal step of the pitch
        limit = math.sqrt(2.0) * topo.planar_pitch_mm + 1e-9
        planar = topo.planar_links
        return sum(lk.length_mm <= limit for lk in planar) / len(planar)

    def nn_fraction(topo):
        planar = topo.planar_links
        return sum(abs(lk.length_mm - topo.planar_pitch_mm) < 1e-9 for lk in planar) / len(planar)

    high = [build_3d_sw(alpha=10.0, seed=s) for s in range(10)]
    flat = [build_3d_sw(alpha=0.0, seed=s) for s in range(10)]
    for topo in high:
        assert local_fraction(topo) >= 0.95
    assert np.mean([nn_fraction(t) for t in high]) > 2 * np.mean(
        [nn_fraction(t) for t in flat]
    )


def test_generation_failure_raises_with_attempt_count():
    # degree cap 2 is fully consumed by the vertical links on middle dies,
    # so the planar budget can never be met
    tight = NetworkConstraints(k_max=2, planar_link_budget=96)
    with pytest.raises(GenerationFailed) as err:
        build_3d_sw(constraints=tight, seed=0, max_retries=17)
    assert err.value.attempts == 17


def test_mrrm_outer_dies_are_mesh():
    topo = build_mrrm(seed=3)
    check_constraints(topo)
    mesh_planar = {
        lk.ends for lk in build_mesh().planar_links
    }
    for z in (0, 3):
        die_links = {
            lk.ends for lk in topo.planar_links if topo.positions[lk.a].z == z
        }
        assert die_links == {e for e in mesh_planar if topo.positions[e[0]].z == z}
    for z in (1, 2):
        die_links = [lk for lk in topo.planar_links if topo.positions[lk.a].z == z]
        assert len(die_links) == 24


def test_rrrr_each_die_random_with_mesh_budget():
    topo = build_rrrr(seed=3)
    check_constraints(topo)
    for z in range(4):
        die_links = [lk for lk in topo.planar_links if topo.positions[lk.a].z == z]
        assert len(die_links) == 24
    assert topo.link_set() != mesh_link_set()


def test_mesh_link_set_matches_build_mesh():
    assert mesh_link_set() == build_mesh().link_set()


def test_place_cores_pairs_heavy_talkers():
    topo = build_mesh(4, 1, 1)  # four routers in a row
    f = np.zeros((4, 4))
    f[2, 3] = 10.0  # dominant flow
    f[0, 1] = 0.1
    traffic = TrafficProfile(f)
    perm = place_cores(traffic, topo)
    assert sorted(perm.tolist()) == [0, 1, 2, 3]
    # the dominant pair must sit on an adjacent router pair
    assert abs(perm[2] - perm[3]) == 1


def test_place_cores_never_hurts_uniform_random_traffic():
    rng = np.random.default_rng(11)
    topo = build_mesh(4, 2, 2)
    n = topo.n_nodes
    f = rng.random((n, n)) * (rng.random((n, n)) < 0.2)
    np.fill_diagonal(f, 0)
    f[0, 1] = 5.0  # ensure at least one strong pair
    traffic = TrafficProfile(f)
    perm = place_cores(traffic, topo)
    placed = apply_placement(traffic, perm)
    d = topo.distance_matrix
    assert (placed.f * d).sum() <= (traffic.f * d).sum() + 1e-9
    assert placed.total == pytest.approx(traffic.total)


def test_apply_placement_reindexes():
    f = np.array([[0.0, 3.0, 0.0], [0.0, 0.0, 1.0], [2.0, 0.0, 0.0]])
    traffic = TrafficProfile(f)
    perm = np.array([2, 0, 1])
    placed = apply_placement(traffic, perm)
    assert placed.f[2, 0] == 3.0
    assert placed.f[0, 1] == 1.0
    assert placed.f[1, 2] == 2.0


def test_small_grids_supported():
    topo = build_3d_sw(4, 2, 2, alpha=2.0, seed=5,
                       constraints=NetworkConstraints.mesh_matched(4, 2, 2))
    assert topo.n_nodes == 16
    assert len(topo.planar_links) == NetworkConstraints.mesh_matched(4, 2, 2).planar_link_budget
    assert is_connected(topo)
