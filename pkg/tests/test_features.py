"""Cost model and feature map: frozen small-case values and structural laws."""

import numpy as np
import pytest

from swnoc import Link, Topology, TrafficProfile, all_pairs_hops
from swnoc.features import (
    CostParams,
    clustering_coefficient,
    comm_cost,
    feature_names,
    feature_vector,
    region_hop_features,
    region_node_lists,
    weighted_comm_bins,
)
from swnoc.topogen import build_3d_sw, build_mesh, grid_positions


def line2(f01=2.0):
    topo = Topology(grid_positions(2, 1, 1), [Link(0, 1, "planar", 2.0)])
    f = np.zeros((2, 2))
    f[0, 1] = f01
    return topo, TrafficProfile(f)


def test_comm_cost_two_node_hand_value():
    topo, traffic = line2(2.0)
    # (r*1 + 2.0 mm) * 2.0 flow = (3 + 2) * 2
    assert comm_cost(topo, traffic) == pytest.approx(10.0)
    assert comm_cost(topo, traffic, CostParams(router_delay_weight=5.0)) == pytest.approx(14.0)
    assert comm_cost(topo, traffic, normalized=True) == pytest.approx(5.0)


def test_comm_cost_linear_in_traffic_scale():
    topo = build_mesh()
    rng = np.random.default_rng(0)
    f = rng.random((64, 64))
    np.fill_diagonal(f, 0)
    traffic = TrafficProfile(f)
    assert comm_cost(topo, traffic.scaled(2.0)) == pytest.approx(2 * comm_cost(topo, traffic))


def test_comm_cost_monotone_under_link_removal():
    rng = np.random.default_rng(1)
    f = rng.random((64, 64))
    np.fill_diagonal(f, 0)
    traffic = TrafficProfile(f)
    topo = build_mesh()
    base = comm_cost(topo, traffic)
    for lk in list(topo.planar_links)[:10]:
        smaller = topo.with_links([l for l in topo.links if l != lk])
        assert comm_cost(smaller, traffic) >= base - 1e-9


def test_comm_cost_inf_when_traffic_crosses_cut():
    pos = grid_positions(2, 1, 1)
    topo = Topology(pos, [])
    f = np.zeros((2, 2))
    f[0, 1] = 1.0
    assert comm_cost(topo, TrafficProfile(f)) == np.inf


def test_region_windows_shape_and_mesh_value():
    regions = region_node_lists(4, 4, 4)
    assert len(regions) == 9
    assert all(len(r) == 16 for r in regions)
    hops = all_pairs_hops(build_mesh())
    vals = region_hop_features(hops, regions)
    # inside a 2x2-column window of a mesh, shortest paths are Manhattan:
    # E|dx| = E|dy| = 0.5, E|dz| = 1.25 over all pairs -> 2.25 * 256/240
    assert vals == pytest.approx(np.full(9, 2.4), abs=1e-12)


def test_comm_bins_clamp_and_sum_rule():
    mesh = build_mesh()
    hops = all_pairs_hops(mesh)
    f = np.zeros((64, 64))
    f[0, 63] = 1.5  # 9 hops -> clamps into bin 8
    f[0, 1] = 2.0  # 1 hop
    traffic = TrafficProfile(f)
    bins = weighted_comm_bins(hops, traffic)
    assert bins[7] == pytest.approx(1.5 * 8)
    assert bins[0] == pytest.approx(2.0 * 1)
    assert bins[1:7].sum() == 0
    clamped = np.minimum(hops, 8)
    assert bins.sum() == pytest.approx((traffic.f * clamped).sum())
    norm = weighted_comm_bins(hops, traffic, normalized=True)
    assert norm.sum() == pytest.approx(bins.sum() / traffic.total)


def test_clustering_complete_die_is_one_and_mesh_is_zero():
    pos = grid_positions(2, 2, 1)
    links = [
        Topology(pos, []).planar_link(a, b)
        for a in range(4)
        for b in range(a + 1, 4)
    ]
    k4 = Topology(pos, links)
    assert clustering_coefficient(k4) == pytest.approx([1.0])
    # grid graphs are triangle-free
    assert clustering_coefficient(build_mesh()) == pytest.approx(np.zeros(4))


def test_feature_vector_is_21_long_and_deterministic():
    topo = build_3d_sw(seed=3)
    rng = np.random.default_rng(3)
    f = rng.random((64, 64))
    np.fill_diagonal(f, 0)
    traffic = TrafficProfile(f)
    v1 = feature_vector(topo, traffic)
    v2 = feature_vector(topo, traffic)
    assert len(v1) == 21
    assert np.array_equal(v1, v2)
    assert len(feature_names()) == 21
    # region block first, then bins, then per-die clustering
    assert feature_names()[0] == "region_hops_0_0"
    assert feature_names()[9] == "comm_bin_1"
    assert feature_names()[-1] == "die_clustering_3"
    # comm-bin block is scale-free
    v3 = feature_vector(topo, traffic.scaled(7.0))
    assert v3[9:17] == pytest.approx(v1[9:17])
