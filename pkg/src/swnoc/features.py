"""Analytic communication cost and design features for learned search guidance.

The scalar objective is

    O(d) = sum_{i != j} (r * h_ij + d_ij) * f_ij

where ``h_ij`` is the hop count in design ``d``, ``d_ij`` the physical
Euclidean router distance (fixed by the grid, independent of the link set),
``f_ij`` the traffic flow, and ``r`` the per-hop router-delay weight.

The feature map summarises a design with one value per 2x2-column window of
the die footprint (average hops inside the window across all dies), a fixed
number of hop-binned traffic-volume shares, and one planar clustering
coefficient per die.  On the canonical 4x4 footprint with four dies that is
9 + 8 + 4 = 21 features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._native import kernels
from .model import Topology, TrafficProfile, all_pairs_hops

N_COMM_BINS = 8


@dataclass(frozen=True)
class CostParams:
    """``router_delay_weight`` is r in the objective; distances stay in mm."""

    router_delay_weight: float = 3.0


def comm_cost(
    topology: Topology,
    traffic: TrafficProfile,
    params: CostParams = CostParams(),
    normalized: bool = False,
) -> float:
    """Weighted communication cost; ``inf`` when traffic crosses a cut.

    ``normalized=True`` divides by the total traffic volume, making values
    comparable across traffic scales.
    """
    eu, ev = topology.edge_arrays
    hop_term = kernels.weighted_hop_sum(topology.n_nodes, eu, ev, traffic.f)
    if hop_term == np.inf:
        return float("inf")
    dist_term = float((topology.distance_matrix * traffic.f).sum())
    cost = params.router_delay_weight * hop_term + dist_term
    return cost / traffic.total if normalized else cost


# -- feature blocks -------------------------------------------------------------


def region_node_lists(grid_x: int, grid_y: int, dies: int):
    """Index arrays for every 2x2 window of the footprint, all dies included.

    Windows slide with stride 1, row-major by window origin, giving
    (grid_x - 1) * (grid_y - 1) overlapping regions.
    """
    per_die = grid_x * grid_y
    regions = []
    for wy in range(grid_y - 1):
        for wx in range(grid_x - 1):
            nodes = [
                z * per_die + y * grid_x + x
                for z in range(dies)
                for y in (wy, wy + 1)
                for x in (wx, wx + 1)
            ]
            regions.append(np.array(nodes, dtype=np.int64))
    return regions


def region_hop_features(hops: np.ndarray, regions) -> np.ndarray:
    """Average hop count over ordered distinct pairs inside each region."""
    out = np.empty(len(regions), dtype=np.float64)
    for k, idx in enumerate(regions):
        sub = hops[np.ix_(idx, idx)]
        m = len(idx)
        out[k] = (sub.sum() - np.trace(sub)) / (m * (m - 1))
    return out


def weighted_comm_bins(
    hops: np.ndarray,
    traffic: TrafficProfile,
    n_bins: int = N_COMM_BINS,
    normalized: bool = False,
) -> np.ndarray:
    """Traffic volume weighted by hop count, split by (clamped) hop count.

    Bin ``k`` (1-based) collects ``f_ij * k`` over pairs whose hop count
    clamps to ``k``; hops above ``n_bins`` land in the last bin, so the bins
    always sum to ``sum(f * min(h, n_bins))``.
    """
    f = traffic.f
    clamped = np.minimum(hops, n_bins)
    out = np.zeros(n_bins, dtype=np.float64)
    mask_traffic = f > 0
    for k in range(1, n_bins + 1):
        sel = (clamped == k) & mask_traffic
        out[k - 1] = f[sel].sum() * k
    if normalized:
        out /= traffic.total
    return out


def planar_adjacency(topology: Topology) -> np.ndarray:
    """Boolean adjacency over planar links only."""
    n = topology.n_nodes
    adj = np.zeros((n, n), dtype=bool)
    for lk in topology.planar_links:
        adj[lk.a, lk.b] = True
        adj[lk.b, lk.a] = True
    return adj


def clustering_by_die(adj: np.ndarray, die_of: np.ndarray, dies: int) -> np.ndarray:
    """Mean node clustering coefficient per die over the planar subgraph.

    Nodes with fewer than two planar neighbours contribute zero.
    """
    out = np.zeros(dies, dtype=np.float64)
    for z in range(dies):
        nodes = np.flatnonzero(die_of == z)
        acc = 0.0
        for v in nodes:
            nbrs = np.flatnonzero(adj[v])
            k = len(nbrs)
            if k >= 2:
                closed = adj[np.ix_(nbrs, nbrs)].sum() / 2
                acc += closed / (k * (k - 1) / 2)
        out[z] = acc / len(nodes) if len(nodes) else 0.0
    return out


def clustering_coefficient(topology: Topology) -> np.ndarray:
    die_of = np.array([p.z for p in topology.positions], dtype=np.int64)
    return clustering_by_die(planar_adjacency(topology), die_of, topology.dies)


def feature_names(grid_x: int = 4, grid_y: int = 4, dies: int = 4):
    names = [
        f"region_hops_{wy}_{wx}"
        for wy in range(grid_y - 1)
        for wx in range(grid_x - 1)
    ]
    names += [f"comm_bin_{k}" for k in range(1, N_COMM_BINS + 1)]
    names += [f"die_clustering_{z}" for z in range(dies)]
    return names


def feature_vector(
    topology: Topology,
    traffic: TrafficProfile,
    hops: np.ndarray | None = None,
) -> np.ndarray:
    """Concatenated feature blocks; length 21 on the canonical 4x4x4 grid.

    Comm bins are normalized by total traffic so the block is scale-free,
    matching what the regression learner trains on.
    """
    gx, gy, dies = topology.grid
    if hops is None:
        hops = all_pairs_hops(topology)
    regions = region_hop_features(hops, region_node_lists(gx, gy, dies))
    bins = weighted_comm_bins(hops, traffic, normalized=True)
    die_of = np.array([p.z for p in topology.positions], dtype=np.int64)
    cc = clustering_by_die(planar_adjacency(topology), die_of, dies)
    vec = np.concatenate([regions, bins, cc])
    assert len(vec) == (gx - 1) * (gy - 1) + N_COMM_BINS + dies
    return vec
