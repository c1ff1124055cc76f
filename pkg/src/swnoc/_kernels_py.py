"""Pure-Python/numpy kernels, semantically identical to the Cython extension.

Every function here has a twin of the same name and contract in
``swnoc/_kernels.pyx``.  Integer results are bit-identical between the two;
only float reductions may differ by summation-order rounding.
"""

import numpy as np


def all_pairs_hops(n, eu, ev):
    """All-pairs unweighted hop counts of an undirected simple graph.

    Parameters: node count ``n`` and edge endpoint arrays ``eu``/``ev``
    (int32, parallel).  Returns an int32 ``(n, n)`` matrix with 0 on the
    diagonal and -1 for unreachable pairs.

    Runs one synchronous breadth-first sweep for all sources at once using
    boolean frontier/adjacency products.
    """
    adj = np.zeros((n, n), dtype=bool)
    if len(eu):
        adj[eu, ev] = True
        adj[ev, eu] = True
    hops = np.full((n, n), -1, dtype=np.int32)
    np.fill_diagonal(hops, 0)
    reached = np.eye(n, dtype=bool)
    frontier = reached.copy()
    depth = 0
    while frontier.any():
        depth += 1
        nxt = ((frontier.astype(np.uint8) @ adj.astype(np.uint8)) > 0) & ~reached
        hops[nxt] = depth
        reached |= nxt
        frontier = nxt
    return hops


def reach_count(n, eu, ev, start):
    """Number of nodes reachable from ``start`` (counting ``start`` itself)."""
    adj = np.zeros((n, n), dtype=bool)
    if len(eu):
        adj[eu, ev] = True
        adj[ev, eu] = True
    reached = np.zeros(n, dtype=bool)
    reached[start] = True
    frontier = reached.copy()
    while frontier.any():
        nxt = adj[frontier].any(axis=0) & ~reached
        reached |= nxt
        frontier = nxt
    return int(reached.sum())


def weighted_hop_sum(n, eu, ev, f):
    """Sum of ``f[i, j] * hops(i, j)`` over all pairs.

    Returns ``inf`` as soon as any pair with positive weight is unreachable.
    """
    hops = all_pairs_hops(n, eu, ev)
    f = np.asarray(f, dtype=np.float64)
    if np.any((hops < 0) & (f > 0.0)):
        return float("inf")
    h = np.where(hops < 0, 0, hops).astype(np.float64)
    return float((h * f).sum())


def run_cycle_sim(
    n_nodes,
    n_vcs,
    credit_pool,
    router_stages,
    packet_flits,
    total_cycles,
    warmup,
    measure,
    deadlock_window,
    ch_dst,
    ch_vl_index,
    ch_vl_dir,
    pkt_cycle,
    pkt_src,
    pkt_vc,
    path_off,
    path_len,
    path_flat,
    n_vl,
):
    """Flit-level wormhole cycle engine, two phases per cycle.

    Phase A lands flits that finished their channel flight (``router_stages``
    pipeline cycles plus one link cycle after the grant): a flit that has
    traversed its whole path ejects instantly, returning its credit, otherwise
    it joins the per-(channel, vc) FIFO.  Phase B arbitrates: every FIFO head
    and every available injection queue head requests its next channel;
    eligibility is checked against phase-start credit/ownership state (a
    header needs a free vc and a credit, a body flit needs its packet to own
    the vc plus a credit); each output channel grants at most one flit per
    cycle, round-robin over a global requester key, and each input channel or
    injection port releases at most one flit per cycle.

    Packets must arrive sorted by (cycle, source, sequence).  All state is
    integer, so a compiled twin reproduces results bit for bit.

    Returns (status, status_cycle, tail_cycle, vl_flits, grants):
    status 0 = completed, 1 = deadlock (no progress for ``deadlock_window``
    cycles with work pending), 2 = internal buffer overflow.
    """
    from collections import deque

    n_ch = len(ch_dst)
    n_pkt = len(pkt_cycle)
    fifo = [[deque() for _ in range(n_vcs)] for _ in range(n_ch)]
    credits = [[credit_pool] * n_vcs for _ in range(n_ch)]
    owner = [[-1] * n_vcs for _ in range(n_ch)]
    last_key = [-1] * n_ch
    w = router_stages + 2
    ring = [[] for _ in range(w)]
    tail_cycle = np.full(n_pkt, -1, dtype=np.int64)
    vl_flits = np.zeros((n_vl, 2), dtype=np.int64)

    # per-(source, vc) injection queues in global packet order
    queues = [[[] for _ in range(n_vcs)] for _ in range(n_nodes)]
    for pid in range(n_pkt):
        queues[pkt_src[pid]][pkt_vc[pid]].append(pid)
    inj_pos = [[0] * n_vcs for _ in range(n_nodes)]
    inj_seq = [[0] * n_vcs for _ in range(n_nodes)]

    occupied = set()  # (channel, vc) codes with buffered flits
    active_inj = set()  # (source, vc) codes whose head packet is available
    avail_ptr = 0
    fully_injected = 0
    network_flits = 0
    grants = 0
    no_progress = 0
    win_lo, win_hi = warmup, warmup + measure
    fin = packet_flits - 1

    for t in range(total_cycles):
        progress = False
        # newly available packets activate their queue when at its head
        while avail_ptr < n_pkt and pkt_cycle[avail_ptr] <= t:
            pid = avail_ptr
            s, v = pkt_src[pid], pkt_vc[pid]
            q = queues[s][v]
            if inj_pos[s][v] < len(q) and q[inj_pos[s][v]] == pid:
                active_inj.add(s * n_vcs + v)
            avail_ptr += 1

        # -- phase A: arrivals -------------------------------------------
        slot = t % w
        if ring[slot]:
            for ch, vc, pkt, seq, hop in ring[slot]:
                if hop == path_len[pkt]:
                    credits[ch][vc] += 1
                    network_flits -= 1
                    if seq == fin:
                        tail_cycle[pkt] = t
                        owner[ch][vc] = -1
                else:
                    q = fifo[ch][vc]
                    q.append((pkt, seq, hop))
                    if len(q) > credit_pool:
                        return 2, t, tail_cycle, vl_flits, grants
                    occupied.add(ch * n_vcs + vc)
                progress = True
            ring[slot] = []

        # -- phase B: requests against phase-start state ------------------
        requests = {}
        for code in sorted(occupied):
            c, v = divmod(code, n_vcs)
            pkt, seq, hop = fifo[c][v][0]
            nc = path_flat[path_off[pkt] + hop]
            own = owner[nc][v]
            if credits[nc][v] > 0 and (own == pkt if seq else own == -1):
                requests.setdefault(nc, []).append((code, 0, c, v, pkt, seq, hop))
        inj_base = n_ch * n_vcs
        for code in sorted(active_inj):
            s, v = divmod(code, n_vcs)
            pkt = queues[s][v][inj_pos[s][v]]
            seq = inj_seq[s][v]
            nc = path_flat[path_off[pkt]]
            own = owner[nc][v]
            if credits[nc][v] > 0 and (own == pkt if seq else own == -1):
                requests.setdefault(nc, []).append((inj_base + code, 1, s, v, pkt, seq, 0))

        # -- phase B: grants, one per output channel ----------------------
        pop_used = set()
        inj_used = set()
        for nc in sorted(requests):
            cand = requests[nc]
            lk = last_key[nc]
            pick = None
            for entry in cand:
                if entry[0] > lk and (
                    entry[2] not in pop_used if entry[1] == 0 else entry[2] not in inj_used
                ):
                    pick = entry
                    break
            if pick is None:
                for entry in cand:
                    if entry[2] not in pop_used if entry[1] == 0 else entry[2] not in inj_used:
                        pick = entry
                        break
            if pick is None:
                continue
            key, kind, cs, v, pkt, seq, hop = pick
            if kind == 0:
                fifo[cs][v].popleft()
                credits[cs][v] += 1
                if seq == fin:
                    owner[cs][v] = -1
                if not fifo[cs][v]:
                    occupied.discard(cs * n_vcs + v)
                pop_used.add(cs)
            else:
                inj_used.add(cs)
                network_flits += 1
                if seq == fin:
                    fully_injected += 1
                    inj_seq[cs][v] = 0
                    inj_pos[cs][v] += 1
                    q = queues[cs][v]
                    code = cs * n_vcs + v
                    if inj_pos[cs][v] < len(q) and pkt_cycle[q[inj_pos[cs][v]]] <= t:
                        pass  # next head already available, stay active
                    else:
                        active_inj.discard(code)
                else:
                    inj_seq[cs][v] += 1
            if seq == 0:
                owner[nc][v] = pkt
            credits[nc][v] -= 1
            ring[(t + router_stages + 1) % w].append((nc, v, pkt, seq, hop + 1))
            if win_lo <= t < win_hi and ch_vl_index[nc] >= 0:
                vl_flits[ch_vl_index[nc], ch_vl_dir[nc]] += 1
            last_key[nc] = key
            grants += 1
            progress = True

        # -- bookkeeping ---------------------------------------------------
        if progress:
            no_progress = 0
        else:
            no_progress += 1
            if no_progress >= deadlock_window and (
                network_flits > 0 or fully_injected < avail_ptr
            ):
                return 1, t, tail_cycle, vl_flits, grants
            if network_flits == 0 and avail_ptr == n_pkt and fully_injected == n_pkt:
                break  # nothing left to move, ever

    return 0, total_cycles, tail_cycle, vl_flits, grants
