# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels, twin of ``swnoc._kernels_py``.

Same function names and contracts as the pure-Python module; integer results
are bit-identical.  Only breadth-first graph sweeps and the wormhole cycle
engine live here -- everything else stays in plain Python.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()


cdef _build_csr(int n, const cnp.int32_t[::1] u, const cnp.int32_t[::1] v):
    """Counting-sort adjacency build: returns (indptr, nbr) int32 arrays."""
    cdef int m = u.shape[0]
    deg_arr = np.zeros(n, dtype=np.int32)
    cdef cnp.int32_t[::1] deg = deg_arr
    cdef int i, a, b
    for i in range(m):
        deg[u[i]] += 1
        deg[v[i]] += 1
    indptr_arr = np.zeros(n + 1, dtype=np.int32)
    cdef cnp.int32_t[::1] indptr = indptr_arr
    for i in range(n):
        indptr[i + 1] = indptr[i] + deg[i]
    nbr_arr = np.empty(indptr[n], dtype=np.int32)
    cdef cnp.int32_t[::1] nbr = nbr_arr
    fill_arr = np.zeros(n, dtype=np.int32)
    cdef cnp.int32_t[::1] fill = fill_arr
    for i in range(m):
        a = u[i]
        b = v[i]
        nbr[indptr[a] + fill[a]] = b
        fill[a] += 1
        nbr[indptr[b] + fill[b]] = a
        fill[b] += 1
    return indptr_arr, nbr_arr


def all_pairs_hops(int n, eu, ev):
    """All-pairs unweighted hop counts; int32 matrix, -1 for unreachable."""
    cdef const cnp.int32_t[::1] u = np.ascontiguousarray(eu, dtype=np.int32)
    cdef const cnp.int32_t[::1] v = np.ascontiguousarray(ev, dtype=np.int32)
    indptr_arr, nbr_arr = _build_csr(n, u, v)
    cdef cnp.int32_t[::1] indptr = indptr_arr
    cdef cnp.int32_t[::1] nbr = nbr_arr
    out = np.full((n, n), -1, dtype=np.int32)
    cdef cnp.int32_t[:, ::1] hops = out
    queue_arr = np.empty(n, dtype=np.int32)
    cdef cnp.int32_t[::1] queue = queue_arr
    cdef int s, head, tail, cur, nxt, j, d
    for s in range(n):
        hops[s, s] = 0
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            cur = queue[head]
            head += 1
            d = hops[s, cur] + 1
            for j in range(indptr[cur], indptr[cur + 1]):
                nxt = nbr[j]
                if hops[s, nxt] < 0:
                    hops[s, nxt] = d
                    queue[tail] = nxt
                    tail += 1
    return out


def reach_count(int n, eu, ev, int start):
    """Number of nodes reachable from ``start`` (counting ``start`` itself)."""
    cdef const cnp.int32_t[::1] u = np.ascontiguousarray(eu, dtype=np.int32)
    cdef const cnp.int32_t[::1] v = np.ascontiguousarray(ev, dtype=np.int32)
    indptr_arr, nbr_arr = _build_csr(n, u, v)
    cdef cnp.int32_t[::1] indptr = indptr_arr
    cdef cnp.int32_t[::1] nbr = nbr_arr
    seen_arr = np.zeros(n, dtype=np.int8)
    cdef cnp.int8_t[::1] seen = seen_arr
    queue_arr = np.empty(n, dtype=np.int32)
    cdef cnp.int32_t[::1] queue = queue_arr
    cdef int head = 0, tail = 1, cur, nxt, j, count = 1
    seen[start] = 1
    queue[0] = start
    while head < tail:
        cur = queue[head]
        head += 1
        for j in range(indptr[cur], indptr[cur + 1]):
            nxt = nbr[j]
            if not seen[nxt]:
                seen[nxt] = 1
                count += 1
                queue[tail] = nxt
                tail += 1
    return count


def weighted_hop_sum(int n, eu, ev, f):
    """Sum of f[i, j] * hops(i, j); inf if any positive-weight pair is unreachable."""
    cdef const cnp.int32_t[::1] u = np.ascontiguousarray(eu, dtype=np.int32)
    cdef const cnp.int32_t[::1] v = np.ascontiguousarray(ev, dtype=np.int32)
    cdef const cnp.float64_t[:, ::1] w = np.ascontiguousarray(f, dtype=np.float64)
    indptr_arr, nbr_arr = _build_csr(n, u, v)
    cdef cnp.int32_t[::1] indptr = indptr_arr
    cdef cnp.int32_t[::1] nbr = nbr_arr
    dist_arr = np.empty(n, dtype=np.int32)
    cdef cnp.int32_t[::1] dist = dist_arr
    queue_arr = np.empty(n, dtype=np.int32)
    cdef cnp.int32_t[::1] queue = queue_arr
    cdef double total = 0.0
    cdef int s, head, tail, cur, nxt, j, d
    for s in range(n):
        for j in range(n):
            dist[j] = -1
        dist[s] = 0
        queue[0] = s
        head = 0
        tail = 1
        while head < tail:
            cur = queue[head]
            head += 1
            d = dist[cur] + 1
            for j in range(indptr[cur], indptr[cur + 1]):
                nxt = nbr[j]
                if dist[nxt] < 0:
                    dist[nxt] = d
                    queue[tail] = nxt
                    tail += 1
        for j in range(n):
            if dist[j] < 0:
                if w[s, j] > 0.0:
                    return float("inf")
            else:
                total += w[s, j] * dist[j]
    return total


def run_cycle_sim(
    int n_nodes,
    int n_vcs,
    int credit_pool,
    int router_stages,
    int packet_flits,
    long long total_cycles,
    long long warmup,
    long long measure,
    long long deadlock_window,
    const cnp.int64_t[::1] ch_dst,
    const cnp.int64_t[::1] ch_vl_index,
    const cnp.int64_t[::1] ch_vl_dir,
    const cnp.int64_t[::1] pkt_cycle,
    const cnp.int64_t[::1] pkt_src,
    const cnp.int64_t[::1] pkt_vc,
    const cnp.int64_t[::1] path_off,
    const cnp.int64_t[::1] path_len,
    const cnp.int64_t[::1] path_flat,
    int n_vl,
):
    """Flit-level wormhole cycle engine; see the pure-Python twin for the
    cycle-by-cycle contract.  Integer outputs are bit-identical to it."""
    cdef int n_ch = ch_dst.shape[0]
    cdef long long n_pkt = pkt_cycle.shape[0]
    cdef int cap = credit_pool
    cdef int w = router_stages + 2
    cdef int n_codes = n_ch * n_vcs
    cdef int n_inj = n_nodes * n_vcs
    cdef long long inj_base = n_codes
    cdef int fin = packet_flits - 1

    # per-(channel, vc) fifo rings
    fifo_pkt_arr = np.zeros(n_codes * cap, dtype=np.int64)
    fifo_seq_arr = np.zeros(n_codes * cap, dtype=np.int64)
    fifo_hop_arr = np.zeros(n_codes * cap, dtype=np.int64)
    fifo_head_arr = np.zeros(n_codes, dtype=np.int64)
    fifo_len_arr = np.zeros(n_codes, dtype=np.int64)
    cdef cnp.int64_t[::1] fifo_pkt = fifo_pkt_arr
    cdef cnp.int64_t[::1] fifo_seq = fifo_seq_arr
    cdef cnp.int64_t[::1] fifo_hop = fifo_hop_arr
    cdef cnp.int64_t[::1] fifo_head = fifo_head_arr
    cdef cnp.int64_t[::1] fifo_len = fifo_len_arr

    credits_arr = np.full(n_codes, credit_pool, dtype=np.int64)
    owner_arr = np.full(n_codes, -1, dtype=np.int64)
    last_key_arr = np.full(n_ch, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] credits = credits_arr
    cdef cnp.int64_t[::1] owner = owner_arr
    cdef cnp.int64_t[::1] last_key = last_key_arr

    # in-flight ring: one slot per landing cycle, at most one grant per channel
    ring_ch_arr = np.zeros(w * n_ch, dtype=np.int64)
    ring_vc_arr = np.zeros(w * n_ch, dtype=np.int64)
    ring_pkt_arr = np.zeros(w * n_ch, dtype=np.int64)
    ring_seq_arr = np.zeros(w * n_ch, dtype=np.int64)
    ring_hop_arr = np.zeros(w * n_ch, dtype=np.int64)
    ring_cnt_arr = np.zeros(w, dtype=np.int64)
    cdef cnp.int64_t[::1] ring_ch = ring_ch_arr
    cdef cnp.int64_t[::1] ring_vc = ring_vc_arr
    cdef cnp.int64_t[::1] ring_pkt = ring_pkt_arr
    cdef cnp.int64_t[::1] ring_seq = ring_seq_arr
    cdef cnp.int64_t[::1] ring_hop = ring_hop_arr
    cdef cnp.int64_t[::1] ring_cnt = ring_cnt_arr

    # per-(source, vc) injection queues, packets in global order
    qcnt_arr = np.zeros(n_inj + 1, dtype=np.int64)
    cdef cnp.int64_t[::1] qcnt = qcnt_arr
    cdef long long pid
    cdef int code
    for pid in range(n_pkt):
        qcnt[pkt_src[pid] * n_vcs + pkt_vc[pid] + 1] += 1
    for code in range(n_inj):
        qcnt[code + 1] += qcnt[code]
    queue_off_arr = qcnt_arr.copy()
    cdef cnp.int64_t[::1] queue_off = queue_off_arr
    queue_flat_arr = np.zeros(max(n_pkt, 1), dtype=np.int64)
    cdef cnp.int64_t[::1] queue_flat = queue_flat_arr
    qfill_arr = queue_off_arr.copy()
    cdef cnp.int64_t[::1] qfill = qfill_arr
    for pid in range(n_pkt):
        code = <int>(pkt_src[pid] * n_vcs + pkt_vc[pid])
        queue_flat[qfill[code]] = pid
        qfill[code] += 1
    inj_pos_arr = np.zeros(n_inj, dtype=np.int64)
    inj_seq_arr = np.zeros(n_inj, dtype=np.int64)
    cdef cnp.int64_t[::1] inj_pos = inj_pos_arr
    cdef cnp.int64_t[::1] inj_seq = inj_seq_arr

    # request pool: per output channel a chain in ascending key order
    cdef int req_cap = n_codes + n_inj
    req_key_arr = np.zeros(req_cap, dtype=np.int64)
    req_kind_arr = np.zeros(req_cap, dtype=np.int64)
    req_cs_arr = np.zeros(req_cap, dtype=np.int64)
    req_v_arr = np.zeros(req_cap, dtype=np.int64)
    req_pkt_arr = np.zeros(req_cap, dtype=np.int64)
    req_seq_arr = np.zeros(req_cap, dtype=np.int64)
    req_hop_arr = np.zeros(req_cap, dtype=np.int64)
    req_next_arr = np.zeros(req_cap, dtype=np.int64)
    cdef cnp.int64_t[::1] req_key = req_key_arr
    cdef cnp.int64_t[::1] req_kind = req_kind_arr
    cdef cnp.int64_t[::1] req_cs = req_cs_arr
    cdef cnp.int64_t[::1] req_v = req_v_arr
    cdef cnp.int64_t[::1] req_pkt = req_pkt_arr
    cdef cnp.int64_t[::1] req_seq = req_seq_arr
    cdef cnp.int64_t[::1] req_hop = req_hop_arr
    cdef cnp.int64_t[::1] req_next = req_next_arr
    req_head_arr = np.full(n_ch, -1, dtype=np.int64)
    req_tail_arr = np.full(n_ch, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] req_head = req_head_arr
    cdef cnp.int64_t[::1] req_tail = req_tail_arr

    # one pop per input channel / one injection per source per cycle
    pop_stamp_arr = np.full(n_ch, -1, dtype=np.int64)
    inj_stamp_arr = np.full(n_nodes, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] pop_stamp = pop_stamp_arr
    cdef cnp.int64_t[::1] inj_stamp = inj_stamp_arr

    tail_cycle_arr = np.full(n_pkt, -1, dtype=np.int64)
    cdef cnp.int64_t[::1] tail_cycle = tail_cycle_arr
    vl_flits_arr = np.zeros((n_vl, 2), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] vl_flits = vl_flits_arr

    cdef long long avail_ptr = 0
    cdef long long fully_injected = 0
    cdef long long network_flits = 0
    cdef long long grants = 0
    cdef long long no_progress = 0
    cdef long long win_lo = warmup
    cdef long long win_hi = warmup + measure
    cdef long long t, lk, key, pkt, seq, hop, qlo, qhi
    cdef int progress, slot, i, cnt, ch, vc, c, v, nc, s, nreq, pick, kind, cs
    cdef int base, idx, free_port

    for t in range(total_cycles):
        progress = 0
        while avail_ptr < n_pkt and pkt_cycle[avail_ptr] <= t:
            avail_ptr += 1

        # -- phase A: arrivals --------------------------------------------
        slot = <int>(t % w)
        cnt = <int>ring_cnt[slot]
        if cnt > 0:
            for i in range(cnt):
                ch = <int>ring_ch[slot * n_ch + i]
                vc = <int>ring_vc[slot * n_ch + i]
                pkt = ring_pkt[slot * n_ch + i]
                seq = ring_seq[slot * n_ch + i]
                hop = ring_hop[slot * n_ch + i]
                code = ch * n_vcs + vc
                if hop == path_len[pkt]:
                    credits[code] += 1
                    network_flits -= 1
                    if seq == fin:
                        tail_cycle[pkt] = t
                        owner[code] = -1
                else:
                    if fifo_len[code] >= cap:
                        return 2, t, tail_cycle_arr, vl_flits_arr, grants
                    idx = <int>((fifo_head[code] + fifo_len[code]) % cap)
                    fifo_pkt[code * cap + idx] = pkt
                    fifo_seq[code * cap + idx] = seq
                    fifo_hop[code * cap + idx] = hop
                    fifo_len[code] += 1
                progress = 1
            ring_cnt[slot] = 0

        # -- phase B: collect requests against phase-start state -----------
        nreq = 0
        for code in range(n_codes):
            if fifo_len[code] == 0:
                continue
            c = code // n_vcs
            v = code - c * n_vcs
            idx = <int>fifo_head[code]
            pkt = fifo_pkt[code * cap + idx]
            seq = fifo_seq[code * cap + idx]
            hop = fifo_hop[code * cap + idx]
            nc = <int>path_flat[path_off[pkt] + hop]
            if credits[nc * n_vcs + v] <= 0:
                continue
            if seq == 0:
                if owner[nc * n_vcs + v] != -1:
                    continue
            elif owner[nc * n_vcs + v] != pkt:
                continue
            req_key[nreq] = code
            req_kind[nreq] = 0
            req_cs[nreq] = c
            req_v[nreq] = v
            req_pkt[nreq] = pkt
            req_seq[nreq] = seq
            req_hop[nreq] = hop
            req_next[nreq] = -1
            if req_head[nc] == -1:
                req_head[nc] = nreq
            else:
                req_next[req_tail[nc]] = nreq
            req_tail[nc] = nreq
            nreq += 1
        for code in range(n_inj):
            qlo = queue_off[code]
            qhi = queue_off[code + 1]
            if qlo + inj_pos[code] >= qhi:
                continue
            pid = queue_flat[qlo + inj_pos[code]]
            if pkt_cycle[pid] > t:
                continue
            s = code // n_vcs
            v = code - s * n_vcs
            seq = inj_seq[code]
            nc = <int>path_flat[path_off[pid]]
            if credits[nc * n_vcs + v] <= 0:
                continue
            if seq == 0:
                if owner[nc * n_vcs + v] != -1:
                    continue
            elif owner[nc * n_vcs + v] != pid:
                continue
            req_key[nreq] = inj_base + code
            req_kind[nreq] = 1
            req_cs[nreq] = s
            req_v[nreq] = v
            req_pkt[nreq] = pid
            req_seq[nreq] = seq
            req_hop[nreq] = 0
            req_next[nreq] = -1
            if req_head[nc] == -1:
                req_head[nc] = nreq
            else:
                req_next[req_tail[nc]] = nreq
            req_tail[nc] = nreq
            nreq += 1

        # -- phase B: grants, round-robin per output channel ----------------
        for nc in range(n_ch):
            i = <int>req_head[nc]
            if i == -1:
                continue
            lk = last_key[nc]
            pick = -1
            while i != -1:
                if req_key[i] > lk:
                    if req_kind[i] == 0:
                        free_port = pop_stamp[req_cs[i]] != t
                    else:
                        free_port = inj_stamp[req_cs[i]] != t
                    if free_port:
                        pick = i
                        break
                i = <int>req_next[i]
            if pick == -1:
                i = <int>req_head[nc]
                while i != -1:
                    if req_kind[i] == 0:
                        free_port = pop_stamp[req_cs[i]] != t
                    else:
                        free_port = inj_stamp[req_cs[i]] != t
                    if free_port:
                        pick = i
                        break
                    i = <int>req_next[i]
            req_head[nc] = -1
            req_tail[nc] = -1
            if pick == -1:
                continue
            key = req_key[pick]
            kind = <int>req_kind[pick]
            cs = <int>req_cs[pick]
            v = <int>req_v[pick]
            pkt = req_pkt[pick]
            seq = req_seq[pick]
            hop = req_hop[pick]
            if kind == 0:
                code = cs * n_vcs + v
                fifo_head[code] = (fifo_head[code] + 1) % cap
                fifo_len[code] -= 1
                credits[code] += 1
                if seq == fin:
                    owner[code] = -1
                pop_stamp[cs] = t
            else:
                inj_stamp[cs] = t
                code = cs * n_vcs + v
                network_flits += 1
                if seq == fin:
                    fully_injected += 1
                    inj_seq[code] = 0
                    inj_pos[code] += 1
                else:
                    inj_seq[code] += 1
            if seq == 0:
                owner[nc * n_vcs + v] = pkt
            credits[nc * n_vcs + v] -= 1
            slot = <int>((t + router_stages + 1) % w)
            cnt = <int>ring_cnt[slot]
            ring_ch[slot * n_ch + cnt] = nc
            ring_vc[slot * n_ch + cnt] = v
            ring_pkt[slot * n_ch + cnt] = pkt
            ring_seq[slot * n_ch + cnt] = seq
            ring_hop[slot * n_ch + cnt] = hop + 1
            ring_cnt[slot] = cnt + 1
            if win_lo <= t and t < win_hi and ch_vl_index[nc] >= 0:
                vl_flits[ch_vl_index[nc], ch_vl_dir[nc]] += 1
            last_key[nc] = key
            grants += 1
            progress = 1

        # -- bookkeeping -----------------------------------------------------
        if progress:
            no_progress = 0
        else:
            no_progress += 1
            if no_progress >= deadlock_window and (
                network_flits > 0 or fully_injected < avail_ptr
            ):
                return 1, t, tail_cycle_arr, vl_flits_arr, grants
            if network_flits == 0 and avail_ptr == n_pkt and fully_injected == n_pkt:
                break

    return 0, total_cycles, tail_cycle_arr, vl_flits_arr, grants
