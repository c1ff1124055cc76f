"""Wormhole network simulation driver.

Builds Poisson packet schedules from a traffic profile, runs the flit-level
cycle kernel (compiled when available, pure Python otherwise), and reduces the
raw grant/latency data to the reported metrics: mean packet latency, energy
per message, energy-delay product, and per-vertical-link utilization.
"""

from __future__ import annotations

import warnings

import numpy as np

from .._native import backend_name, kernels
from ..errors import DeadlockError, SaturationWarning
from ..model import TrafficProfile, Topology
from .config import EnergyParams, SimConfig, SimResult
from .routing import RouteSet, build_routes

__all__ = ["make_schedule", "simulate", "single_packet_latency"]


def make_schedule(traffic, config, n_nodes, routes, rng):
    """Draw a Poisson packet schedule over the whole simulated window.

    Each source s emits packets as a Poisson process whose rate (packets per
    cycle) is ``injection_rate / packet_flits`` scaled by ``n_nodes`` times
    the source's share of total traffic, so the network-wide mean injected
    load equals ``injection_rate`` flits per node per cycle.  Destinations
    are drawn from the source's traffic row.  Returns int arrays
    (cycle, src, dst, vc) sorted by (cycle, src, emission order).
    """
    total = traffic.total
    horizon = config.total_cycles
    rows = traffic.row_sums
    cycles, srcs, dsts, vcs = [], [], [], []
    for s in range(n_nodes):
        if rows[s] <= 0.0:
            continue
        lam = config.injection_rate / config.packet_flits * n_nodes * rows[s] / total
        count = int(rng.poisson(lam * horizon))
        if count == 0:
            continue
        times = np.sort(rng.integers(0, horizon, size=count))
        p = traffic.f[s] / rows[s]
        dd = rng.choice(n_nodes, size=count, p=p)
        cycles.append(times)
        srcs.append(np.full(count, s, dtype=np.int64))
        dsts.append(dd.astype(np.int64))
        if routes.family == "dor":
            vcs.append(np.arange(count, dtype=np.int64) % config.n_vcs)
        else:
            vcs.append(np.array([routes.vc_of[s * n_nodes + d] for d in dd], dtype=np.int64))
    if not cycles:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty, empty
    cycle = np.concatenate(cycles)
    src = np.concatenate(srcs)
    dst = np.concatenate(dsts)
    vc = np.concatenate(vcs)
    order = np.lexsort((src, cycle))  # stable: per-source emission order kept
    return cycle[order], src[order], dst[order], vc[order]


def _pack_paths(routes, src, dst):
    """Flatten per-packet channel paths for the kernel."""
    n = routes.topology.n_nodes
    n_pkt = len(src)
    path_off = np.zeros(n_pkt + 1, dtype=np.int64)
    chunks = []
    for i in range(n_pkt):
        p = routes.paths[src[i] * n + dst[i]]
        path_off[i + 1] = path_off[i] + len(p)
        chunks.append(p)
    flat = np.concatenate(chunks) if chunks else np.zeros(0, dtype=np.int64)
    path_len = np.diff(path_off).astype(np.int64)
    return path_off, path_len, flat.astype(np.int64)


def _energy_per_flit(routes, params):
    """Per-channel flit energy: router traversal + wire + vertical-link cost."""
    e = params.e_router_pj + params.e_link_pj_per_mm * routes.ch_len_mm
    e = e + np.where(routes.ch_is_vl, params.e_vl_pj, 0.0)
    return e


def _run_kernel(routes, config, cycle, src, dst, vc):
    path_off, path_len, flat = _pack_paths(routes, src, dst)
    n_vl = len(routes.topology.vertical_links)
    return kernels.run_cycle_sim(
        routes.topology.n_nodes,
        config.n_vcs,
        config.credit_pool,
        config.router_stages,
        config.packet_flits,
        config.horizon_cycles,
        config.warmup_cycles,
        config.measure_cycles,
        config.deadlock_window,
        np.asarray(routes.ch_dst, dtype=np.int64),
        np.asarray(routes.ch_vl_index, dtype=np.int64),
        np.asarray(routes.ch_vl_dir, dtype=np.int64),
        np.asarray(cycle, dtype=np.int64),
        np.asarray(src, dtype=np.int64),
        np.asarray(vc, dtype=np.int64),
        path_off,
        path_len,
        flat,
        n_vl,
    )


def simulate(topology, traffic, config=None, energy=None, routes=None, family="auto"):
    """Run a warmup + measurement wormhole simulation and report metrics.

    Packets whose source cycle falls inside the measurement window and that
    are delivered before the horizon contribute latency, hop, and energy
    statistics.  Raises :class:`DeadlockError` if the network stops making
    progress with flits outstanding.  When the traffic demands a pair the
    topology cannot connect, returns :meth:`SimResult.unroutable`.
    """
    config = config or SimConfig()
    energy = energy or EnergyParams()
    n_vl = len(topology.vertical_links)
    if routes is None:
        try:
            routes = build_routes(topology, n_vcs=config.n_vcs, family=family)
        except Exception:
            routes = None
        if routes is None:
            return SimResult.unroutable(n_vl, config, energy, backend_name())
    n = topology.n_nodes
    need = np.argwhere(traffic.f > 0.0)
    for s, d in need:
        if routes.paths[s * n + d] is None:
            return SimResult.unroutable(n_vl, config, energy, backend_name())

    rng = np.random.default_rng(config.seed)
    cycle, src, dst, vc = make_schedule(traffic, config, n, routes, rng)
    status, status_cycle, tail_cycle, vl_flits, grants = _run_kernel(
        routes, config, cycle, src, dst, vc
    )
    if status == 1:
        stalled = int(np.sum(tail_cycle < 0))
        raise DeadlockError(
            f"no progress for {config.deadlock_window} cycles at cycle {status_cycle} "
            f"with {stalled} packets outstanding",
            cycle=int(status_cycle),
            stalled_flits=stalled,
        )
    if status == 2:
        raise AssertionError(f"internal buffer overflow at cycle {status_cycle}")

    lo, hi = config.warmup_cycles, config.warmup_cycles + config.measure_cycles
    in_window = (cycle >= lo) & (cycle < hi)
    injected = int(in_window.sum())
    done = in_window & (tail_cycle >= 0)
    delivered = int(done.sum())

    vl_dir = vl_flits.astype(np.float64) / float(config.measure_cycles)
    vl_util = vl_dir.sum(axis=1) / 2.0  # mean of the two directions

    if injected == 0:
        return SimResult(
            injected_packets=0,
            delivered_packets=0,
            avg_latency_cycles=None,
            avg_hops=None,
            energy_per_message_pj=None,
            edp=None,
            vl_utilization=np.zeros(n_vl),
            vl_utilization_dir=np.zeros((n_vl, 2)),
            saturated=False,
            backend=backend_name(),
            config=config,
            energy_params=energy,
        )

    frac = delivered / injected
    saturated = frac < config.saturation_threshold
    if saturated:
        warnings.warn(
            f"only {frac:.1%} of measured packets delivered; "
            "network is past saturation",
            SaturationWarning,
            stacklevel=2,
        )
    if delivered == 0:
        inf = float("inf")
        return SimResult(
            injected_packets=injected,
            delivered_packets=0,
            avg_latency_cycles=inf,
            avg_hops=inf,
            energy_per_message_pj=inf,
            edp=inf,
            vl_utilization=vl_util,
            vl_utilization_dir=vl_dir,
            saturated=True,
            backend=backend_name(),
            config=config,
            energy_params=energy,
        )

    lat = tail_cycle[done] - cycle[done]
    avg_latency = float(lat.mean())
    e_flit = _energy_per_flit(routes, energy)
    hops = np.zeros(delivered, dtype=np.int64)
    e_pkt = np.zeros(delivered, dtype=np.float64)
    idx = np.flatnonzero(done)
    for k, i in enumerate(idx):
        p = routes.paths[src[i] * n + dst[i]]
        hops[k] = len(p)
        e_pkt[k] = e_flit[p].sum()
    energy_per_message = float(config.packet_flits * e_pkt.mean())
    return SimResult(
        injected_packets=injected,
        delivered_packets=delivered,
        avg_latency_cycles=avg_latency,
        avg_hops=float(hops.mean()),
        energy_per_message_pj=energy_per_message,
        edp=avg_latency * energy_per_message,
        vl_utilization=vl_util,
        vl_utilization_dir=vl_dir,
        saturated=saturated,
        backend=backend_name(),
        config=config,
        energy_params=energy,
    )


def single_packet_latency(topology, src, dst, config=None, routes=None, family="auto"):
    """Cycle count for one isolated packet from src to dst (zero load)."""
    config = config or SimConfig()
    if routes is None:
        routes = build_routes(topology, n_vcs=config.n_vcs, family=family)
    path = routes.path(src, dst)
    horizon = (config.router_stages + 1) * (len(path) + 2) + 4 * config.packet_flits + 64
    cycle = np.zeros(1, dtype=np.int64)
    s = np.array([src], dtype=np.int64)
    d = np.array([dst], dtype=np.int64)
    v = np.array([max(0, routes.vc_of[src * topology.n_nodes + dst])], dtype=np.int64)
    cfg = SimConfig(
        packet_flits=config.packet_flits,
        flit_bits=config.flit_bits,
        buffer_depth=config.buffer_depth,
        n_vcs=config.n_vcs,
        router_stages=config.router_stages,
        injection_rate=config.injection_rate,
        warmup_cycles=0,
        measure_cycles=max(horizon, 10 * config.packet_flits),
        seed=config.seed,
        deadlock_window=config.deadlock_window,
        saturation_threshold=config.saturation_threshold,
    )
    status, status_cycle, tail_cycle, _, _ = _run_kernel(routes, cfg, cycle, s, d, v)
    if status != 0:
        raise DeadlockError(
            f"isolated packet stalled at cycle {status_cycle}",
            cycle=int(status_cycle),
            stalled_flits=1,
        )
    assert tail_cycle[0] >= 0, "packet not delivered within horizon"
    return int(tail_cycle[0])
