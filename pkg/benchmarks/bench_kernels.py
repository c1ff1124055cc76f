"""Compare the compiled Cython kernels against the pure-Python fallback.

Runs the three hot kernels on representative inputs and reports wall time
per call plus the speedup factor.  Both backends implement identical integer
state machines, so the script also cross-checks that their outputs agree.

Usage: python3 benchmarks/bench_kernels.py [--repeat N]
"""

import argparse
import time

import numpy as np

from swnoc import _kernels_py
from swnoc import _native
from swnoc.netsim import SimConfig
from swnoc.netsim.engine import _pack_paths, make_schedule
from swnoc.netsim.routing import build_routes
from swnoc.topogen import build_3d_sw
from swnoc.workloads import skewed_middle_traffic


def timeit(fn, repeat):
    best = float("inf")
    result = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        result = fn()
        best = min(best, time.perf_counter() - t0)
    return best, result


def bench_pair(name, make_args, pure_fn, native_fn, repeat, check=None):
    args = make_args()
    t_pure, r_pure = timeit(lambda: pure_fn(*args), repeat)
    if native_fn is None:
        print(f"{name:<22} python {t_pure*1e3:9.2f} ms   (no compiled backend)")
        return
    t_nat, r_nat = timeit(lambda: native_fn(*args), repeat)
    agree = check(r_pure, r_nat) if check else "-"
    print(
        f"{name:<22} python {t_pure*1e3:9.2f} ms   cython {t_nat*1e3:9.2f} ms"
        f"   speedup {t_pure/t_nat:7.1f}x   agree={agree}"
    )


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--repeat", type=int, default=3)
    args = parser.parse_args()

    if not _native.HAVE_NATIVE:
        print("compiled backend unavailable; timing pure Python only")
        native = None
    else:
        native = _native.kernels

    topo = build_3d_sw(seed=1)
    eu, ev = topo.edge_arrays
    traffic = skewed_middle_traffic(64, dies=4, gap=2, share=0.7, seed=0)
    f = traffic.f

    bench_pair(
        "all_pairs_hops",
        lambda: (topo.n_nodes, eu, ev),
        _kernels_py.all_pairs_hops,
        native.all_pairs_hops if native else None,
        args.repeat,
        check=lambda a, b: bool(np.array_equal(a, b)),
    )
    bench_pair(
        "weighted_hop_sum",
        lambda: (topo.n_nodes, eu, ev, f),
        _kernels_py.weighted_hop_sum,
        native.weighted_hop_sum if native else None,
        args.repeat,
        check=lambda a, b: bool(abs(a - b) <= 1e-9 * max(abs(a), 1.0)),
    )

    config = SimConfig(
        warmup_cycles=500, measure_cycles=2000, drain_cycles=1000,
        injection_rate=0.05, seed=1,
    )
    routes = build_routes(topo, n_vcs=config.n_vcs)
    rng = np.random.default_rng(config.seed)
    pkt_cycle, pkt_src, pkt_dst, pkt_vc = make_schedule(
        traffic, config, topo.n_nodes, routes, rng
    )
    path_off, path_len, path_flat = _pack_paths(routes, pkt_src, pkt_dst)
    sim_args = (
        topo.n_nodes,
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
        pkt_cycle,
        pkt_src,
        pkt_vc,
        path_off,
        path_len,
        path_flat,
        len(topo.vertical_links),
    )
    bench_pair(
        "run_cycle_sim",
        lambda: sim_args,
        _kernels_py.run_cycle_sim,
        native.run_cycle_sim if native else None,
        args.repeat,
        check=lambda a, b: bool(
            a[0] == b[0]
            and np.array_equal(a[2], b[2])
            and np.array_equal(a[3], b[3])
            and a[4] == b[4]
        ),
    )


if __name__ == "__main__":
    main()
