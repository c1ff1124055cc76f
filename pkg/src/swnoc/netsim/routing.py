"""Deterministic deadlock-free route construction.

Mesh-shaped networks take dimension-order routes (X, then Y, then Z) and pick
the packet's virtual channel round-robin at injection; the dependency graph of
dimension-ordered turns is acyclic on every virtual channel.

Irregular networks route obliviously on layered virtual channels.  Each layer
owns a total order on routers derived from a breadth-first tree (each layer
uses a different root): an edge points "up" toward smaller (level, id).  A
route is legal on a layer if it climbs up-edges first and then descends
down-edges, which makes every layer's channel dependency graph acyclic by
construction.  Layer 0 is the escape layer and always has a legal route
between connected routers (the tree path itself qualifies); a pair stays on
layer 0 when its escape route is already shortest, otherwise it goes to the
first upper layer whose legal route achieves true shortest length, spread
round-robin over the qualifying layers.  Pairs no layer can serve at shortest
length fall back to the (possibly longer) escape route.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..errors import RoutingUnreachable
from ..model import Topology
from ..topogen import mesh_link_set


@dataclass
class RouteSet:
    """Channel-indexed oblivious routes for every reachable ordered pair."""

    topology: Topology
    family: str  # "dor" or "layered"
    n_vcs: int
    channels: list  # directed (u, v), ascending
    ch_dst: np.ndarray  # receiving router per channel
    ch_len_mm: np.ndarray
    ch_is_vl: np.ndarray  # bool
    ch_vl_index: np.ndarray  # 0-based vertical-link serial, -1 for planar
    ch_vl_dir: np.ndarray  # 0 ascending die, 1 descending, -1 planar
    paths: list  # pair index s*n+d -> int32 channel array or None
    vc_of: np.ndarray  # int8 per pair; -1 lets the injector pick round-robin

    @property
    def n(self) -> int:
        return self.topology.n_nodes

    def pair(self, src: int, dst: int) -> int:
        return src * self.n + dst

    def path(self, src: int, dst: int) -> np.ndarray:
        p = self.paths[self.pair(src, dst)]
        if p is None:
            raise RoutingUnreachable(
                f"no route from {src} to {dst}", src=src, dst=dst
            )
        return p

    def hops(self, src: int, dst: int) -> int:
        return len(self.path(src, dst))


def _channel_table(topology: Topology):
    channels = []
    for lk in topology.links:
        channels.append((lk.a, lk.b))
        channels.append((lk.b, lk.a))
    channels.sort()
    index = {uv: i for i, uv in enumerate(channels)}
    m = len(channels)
    ch_dst = np.empty(m, dtype=np.int32)
    ch_len = np.empty(m, dtype=np.float64)
    ch_is_vl = np.zeros(m, dtype=bool)
    ch_vl_index = np.full(m, -1, dtype=np.int32)
    ch_vl_dir = np.full(m, -1, dtype=np.int32)
    for i, (u, v) in enumerate(channels):
        lk = topology.link_between(u, v)
        ch_dst[i] = v
        ch_len[i] = lk.length_mm
        if lk.is_vertical():
            ch_is_vl[i] = True
            ch_vl_index[i] = topology.vl_numbers[lk.ends] - 1
            ch_vl_dir[i] = 0 if topology.positions[v].z > topology.positions[u].z else 1
    return channels, index, ch_dst, ch_len, ch_is_vl, ch_vl_index, ch_vl_dir


def _nodes_to_channels(nodes, index):
    return np.array(
        [index[(nodes[i], nodes[i + 1])] for i in range(len(nodes) - 1)], dtype=np.int32
    )


# -- dimension-order family ------------------------------------------------------


def _dor_nodes(topology: Topology, src: int, dst: int):
    gx, gy, _ = topology.grid
    pos = topology.positions
    x, y, z = pos[src]
    tx, ty, tz = pos[dst]
    nodes = [src]

    def rid(xx, yy, zz):
        return zz * gx * gy + yy * gx + xx

    while x != tx:
        x += 1 if tx > x else -1
        nodes.append(rid(x, y, z))
    while y != ty:
        y += 1 if ty > y else -1
        nodes.append(rid(x, y, z))
    while z != tz:
        z += 1 if tz > z else -1
        nodes.append(rid(x, y, z))
    return nodes


def _build_dor(topology: Topology, n_vcs: int) -> RouteSet:
    channels, index, *meta = _channel_table(topology)
    n = topology.n_nodes
    paths = [None] * (n * n)
    for s in range(n):
        for d in range(n):
            if s != d:
                paths[s * n + d] = _nodes_to_channels(_dor_nodes(topology, s, d), index)
    vc_of = np.full(n * n, -1, dtype=np.int8)
    return RouteSet(topology, "dor", n_vcs, channels, *meta, paths, vc_of)


# -- layered family ---------------------------------------------------------------


def _bfs_levels(adjacency, root: int):
    n = len(adjacency)
    level = np.full(n, -1, dtype=np.int64)
    level[root] = 0
    q = deque([root])
    while q:
        u = q.popleft()
        for v in adjacency[u]:
            if level[v] < 0:
                level[v] = level[u] + 1
                q.append(v)
    return level


def _order_key(level, node: int, n: int) -> int:
    return int(level[node]) * n + node


def _legal_shortest_from(adjacency, level, src: int):
    """Shortest legal up*/down* walk lengths and parents from ``src``.

    States are (node, phase): phase 0 still climbing, phase 1 descending.
    Returns (dist, parent) with shape (n, 2); parents encode state links for
    path reconstruction.  First BFS discovery wins, neighbours scanned in
    ascending id, so results are deterministic.
    """
    n = len(adjacency)
    dist = np.full((n, 2), -1, dtype=np.int64)
    parent = np.full((n, 2, 2), -1, dtype=np.int64)
    dist[src, 0] = 0
    q = deque([(src, 0)])
    while q:
        u, phase = q.popleft()
        du = dist[u, phase]
        ku = _order_key(level, u, n)
        for v in adjacency[u]:
            is_up = _order_key(level, v, n) < ku
            if phase == 1 and is_up:
                continue  # cannot climb after descending
            nxt_phase = 0 if (phase == 0 and is_up) else 1
            if dist[v, nxt_phase] < 0:
                dist[v, nxt_phase] = du + 1
                parent[v, nxt_phase] = (u, phase)
                q.append((v, nxt_phase))
    return dist, parent


def _legal_path_nodes(dist, parent, src: int, dst: int):
    d0, d1 = dist[dst, 0], dist[dst, 1]
    if d0 < 0 and d1 < 0:
        return None
    if d0 >= 0 and (d1 < 0 or d0 <= d1):
        phase = 0
    else:
        phase = 1
    nodes = [dst]
    cur, ph = dst, phase
    while cur != src or dist[cur, ph] != 0:
        cur, ph = (int(x) for x in parent[cur, ph])
        nodes.append(cur)
    nodes.reverse()
    return nodes


def _legal_dist(dist, dst: int) -> int:
    d0, d1 = int(dist[dst, 0]), int(dist[dst, 1])
    if d0 < 0 and d1 < 0:
        return -1
    if d0 < 0:
        return d1
    if d1 < 0:
        return d0
    return min(d0, d1)


def layer_roots(n: int, n_vcs: int):
    """Spread tree roots across the id range, one per layer, escape first."""
    if n_vcs == 1:
        return [0]
    return [0] + [((k * n) // n_vcs) + (n // (2 * n_vcs)) for k in range(1, n_vcs)][: n_vcs - 1]


def _build_layered(topology: Topology, n_vcs: int) -> RouteSet:
    channels, index, *meta = _channel_table(topology)
    n = topology.n_nodes
    adjacency = topology.adjacency
    roots = layer_roots(n, n_vcs)
    levels = [_bfs_levels(adjacency, r) for r in roots]
    # true shortest distances via per-source BFS
    true_dist = np.full((n, n), -1, dtype=np.int64)
    for s in range(n):
        true_dist[s] = _bfs_levels(adjacency, s)
    legal = [
        [_legal_shortest_from(adjacency, levels[layer], s) for s in range(n)]
        for layer in range(n_vcs)
    ]
    paths = [None] * (n * n)
    vc_of = np.full(n * n, -1, dtype=np.int8)
    for s in range(n):
        for d in range(n):
            if s == d:
                continue
            want = int(true_dist[s, d])
            if want < 0:
                continue  # unreachable; caller decides how to react
            dist0, parent0 = legal[0][s]
            if _legal_dist(dist0, d) == want:
                layer = 0
                nodes = _legal_path_nodes(dist0, parent0, s, d)
            else:
                fits = [
                    layer
                    for layer in range(1, n_vcs)
                    if _legal_dist(legal[layer][s][0], d) == want
                ]
                if fits:
                    layer = fits[(s * n + d) % len(fits)]
                    nodes = _legal_path_nodes(*legal[layer][s], s, d)
                else:
                    layer = 0
                    nodes = _legal_path_nodes(dist0, parent0, s, d)
            paths[s * n + d] = _nodes_to_channels(nodes, index)
            vc_of[s * n + d] = layer
    return RouteSet(topology, "layered", n_vcs, channels, *meta, paths, vc_of)


def build_routes(topology: Topology, n_vcs: int = 4, family: str = "auto") -> RouteSet:
    """Build oblivious routes; ``family`` "auto" picks dimension-order routing
    exactly when the link set is the full mesh for this grid."""
    if family == "auto":
        gx, gy, dies = topology.grid
        family = "dor" if topology.link_set() == mesh_link_set(gx, gy, dies) else "layered"
    if family == "dor":
        return _build_dor(topology, n_vcs)
    if family == "layered":
        return _build_layered(topology, n_vcs)
    raise ValueError(f"unknown routing family {family!r}")


# -- dependency audit --------------------------------------------------------------


def channel_dependency_graph(routes: RouteSet, layer: int):
    """Directed channel-to-channel dependencies induced by the routes of one layer.

    For the dimension-order family every layer carries the same path set.
    """
    deps = set()
    n = routes.n
    for s in range(n):
        for d in range(n):
            if s == d:
                continue
            p = routes.paths[s * n + d]
            if p is None:
                continue
            vc = routes.vc_of[s * n + d]
            if vc >= 0 and vc != layer:
                continue
            for i in range(len(p) - 1):
                deps.add((int(p[i]), int(p[i + 1])))
    return deps


def cdg_is_acyclic(routes: RouteSet, layer: int) -> bool:
    """Kahn peeling on the layer's channel dependency graph."""
    deps = channel_dependency_graph(routes, layer)
    nodes = {c for dep in deps for c in dep}
    out = {c: set() for c in nodes}
    indeg = {c: 0 for c in nodes}
    for a, b in deps:
        if b not in out[a]:
            out[a].add(b)
            indeg[b] += 1
    ready = deque(c for c in nodes if indeg[c] == 0)
    seen = 0
    while ready:
        c = ready.popleft()
        seen += 1
        for b in out[c]:
            indeg[b] -= 1
            if indeg[b] == 0:
                ready.append(b)
    return seen == len(nodes)
