"""Constrained 3D topology generation.

Families:

* ``build_mesh``   -- the regular 3D mesh baseline (nearest-neighbour planar
  links on every die plus the full set of vertical links).
* ``build_3d_sw``  -- small-world networks: the same routers and vertical
  links, but the planar link budget is spent on randomly sampled same-die
  pairs with probability proportional to ``distance**-alpha``, drawn
  sequentially without replacement under a node degree cap.
* ``build_mrrm``   -- outer dies meshed, middle dies uniform-random, each die
  holding the per-die mesh link budget.
* ``build_rrrr``   -- every die uniform-random with the per-die mesh budget.

All generators retry from scratch (fresh sample) until the network is
connected, raising ``GenerationFailed`` after ``max_retries`` attempts.
Results are deterministic functions of the seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import GenerationFailed, TopologyError
from .model import (
    DEFAULT_DIE_PITCH_MM,
    DEFAULT_PLANAR_PITCH_MM,
    Link,
    NetworkConstraints,
    Position,
    Topology,
    TrafficProfile,
    is_connected,
)


def grid_positions(grid_x: int, grid_y: int, dies: int):
    """Canonical z-major, row-major router placement."""
    return [
        Position(x, y, z)
        for z in range(dies)
        for y in range(grid_y)
        for x in range(grid_x)
    ]


def router_id(x: int, y: int, z: int, grid_x: int, grid_y: int) -> int:
    return z * grid_x * grid_y + y * grid_x + x


def _vertical_links(gx: int, gy: int, dies: int, die_pitch: float):
    links = []
    for z in range(dies - 1):
        for y in range(gy):
            for x in range(gx):
                a = router_id(x, y, z, gx, gy)
                b = router_id(x, y, z + 1, gx, gy)
                links.append(Link(a, b, "vertical", die_pitch))
    return links


def _mesh_planar_links_for_die(z: int, gx: int, gy: int, pitch: float):
    links = []
    for y in range(gy):
        for x in range(gx):
            a = router_id(x, y, z, gx, gy)
            if x + 1 < gx:
                links.append(Link(a, router_id(x + 1, y, z, gx, gy), "planar", pitch))
            if y + 1 < gy:
                links.append(Link(a, router_id(x, y + 1, z, gx, gy), "planar", pitch))
    return links


def build_mesh(
    grid_x: int = 4,
    grid_y: int = 4,
    dies: int = 4,
    planar_pitch_mm: float = DEFAULT_PLANAR_PITCH_MM,
    die_pitch_mm: float = DEFAULT_DIE_PITCH_MM,
) -> Topology:
    """Regular 3D mesh: nearest-neighbour planar links plus all vertical links."""
    links = _vertical_links(grid_x, grid_y, dies, die_pitch_mm)
    for z in range(dies):
        links += _mesh_planar_links_for_die(z, grid_x, grid_y, planar_pitch_mm)
    return Topology(
        grid_positions(grid_x, grid_y, dies),
        links,
        planar_pitch_mm=planar_pitch_mm,
        die_pitch_mm=die_pitch_mm,
    )


def mesh_link_set(grid_x: int = 4, grid_y: int = 4, dies: int = 4) -> frozenset:
    """Endpoint pairs of the full mesh; used to recognise mesh-shaped networks."""
    pitch = DEFAULT_PLANAR_PITCH_MM
    links = _vertical_links(grid_x, grid_y, dies, DEFAULT_DIE_PITCH_MM)
    for z in range(dies):
        links += _mesh_planar_links_for_die(z, grid_x, grid_y, pitch)
    return frozenset(lk.ends for lk in links)


# -- power-law sampler ---------------------------------------------------------


def _same_die_candidates(gx: int, gy: int, dies: int, pitch: float):
    """All unordered same-die pairs with their planar distances.

    Returns (pairs int32 [m, 2], die int32 [m], dist float64 [m]).
    """
    pairs, die, dist = [], [], []
    per_die = gx * gy
    for z in range(dies):
        for i in range(per_die):
            for j in range(i + 1, per_die):
                xi, yi = i % gx, i // gx
                xj, yj = j % gx, j // gx
                pairs.append((z * per_die + i, z * per_die + j))
                die.append(z)
                dist.append(pitch * math.hypot(xi - xj, yi - yj))
    return (
        np.array(pairs, dtype=np.int32),
        np.array(die, dtype=np.int32),
        np.array(dist, dtype=np.float64),
    )


def _sample_planar(pairs, dist, budget, alpha, k_max, degrees, rng):
    """Draw ``budget`` distinct pairs without replacement, p proportional to
    dist**-alpha, renormalising after each draw and zeroing any pair whose
    endpoint has reached the degree cap.  Returns index array or None when the
    budget cannot be met.
    """
    if budget == 0:
        return np.empty(0, dtype=np.int64)
    weights = dist.astype(np.float64) ** (-float(alpha)) if alpha != 0 else np.ones(len(dist))
    weights = weights.copy()
    deg = degrees.copy()
    blocked = (deg[pairs[:, 0]] >= k_max) | (deg[pairs[:, 1]] >= k_max)
    weights[blocked] = 0.0
    chosen = []
    for _ in range(budget):
        total = weights.sum()
        if total <= 0.0:
            return None
        idx = rng.choice(len(weights), p=weights / total)
        chosen.append(idx)
        weights[idx] = 0.0
        a, b = pairs[idx]
        deg[a] += 1
        deg[b] += 1
        for node in (a, b):
            if deg[node] >= k_max:
                weights[(pairs[:, 0] == node) | (pairs[:, 1] == node)] = 0.0
    return np.array(chosen, dtype=np.int64)


@dataclass(frozen=True)
class SwGenConfig:
    """Knobs for small-world generation kept separate from the hard constraints."""

    alpha: float = 2.4
    max_retries: int = 200
    planar_pitch_mm: float = DEFAULT_PLANAR_PITCH_MM
    die_pitch_mm: float = DEFAULT_DIE_PITCH_MM


def sample_sw_planar_links(
    grid_x: int,
    grid_y: int,
    dies: int,
    alpha: float,
    constraints: NetworkConstraints,
    rng: np.random.Generator,
    planar_pitch_mm: float = DEFAULT_PLANAR_PITCH_MM,
):
    """One unchecked sampling attempt; returns planar Link list or None.

    Node degrees start from the vertical links (one for outer dies, two for
    middle dies) so the cap applies to total degree.
    """
    n = grid_x * grid_y * dies
    pairs, _, dist = _same_die_candidates(grid_x, grid_y, dies, planar_pitch_mm)
    if len(pairs) < constraints.planar_link_budget:
        raise GenerationFailed(
            f"{grid_x}x{grid_y} dies offer only {len(pairs)} same-die pairs, "
            f"fewer than the {constraints.planar_link_budget}-link planar budget",
            attempts=0,
        )
    degrees = np.zeros(n, dtype=np.int64)
    for lk in _vertical_links(grid_x, grid_y, dies, 1.0):
        degrees[lk.a] += 1
        degrees[lk.b] += 1
    chosen = _sample_planar(
        pairs, dist, constraints.planar_link_budget, alpha, constraints.k_max, degrees, rng
    )
    if chosen is None:
        return None
    return [
        Link(int(pairs[i, 0]), int(pairs[i, 1]), "planar", float(dist[i])) for i in chosen
    ]


def build_3d_sw(
    grid_x: int = 4,
    grid_y: int = 4,
    dies: int = 4,
    alpha: float = 2.4,
    constraints: NetworkConstraints | None = None,
    seed: int = 0,
    max_retries: int = 200,
    planar_pitch_mm: float = DEFAULT_PLANAR_PITCH_MM,
    die_pitch_mm: float = DEFAULT_DIE_PITCH_MM,
) -> Topology:
    """Connected constrained small-world network; deterministic in ``seed``."""
    if constraints is None:
        constraints = NetworkConstraints.mesh_matched(grid_x, grid_y, dies)
    rng = np.random.default_rng(seed)
    base = grid_positions(grid_x, grid_y, dies)
    vls = _vertical_links(grid_x, grid_y, dies, die_pitch_mm)
    for _ in range(max_retries):
        planar = sample_sw_planar_links(
            grid_x, grid_y, dies, alpha, constraints, rng, planar_pitch_mm
        )
        if planar is None:
            continue
        topo = Topology(
            base,
            vls + planar,
            planar_pitch_mm=planar_pitch_mm,
            die_pitch_mm=die_pitch_mm,
        )
        if is_connected(topo):
            return topo
    raise GenerationFailed(
        f"no connected topology within {max_retries} attempts "
        f"(alpha={alpha}, budget={constraints.planar_link_budget}, k_max={constraints.k_max})",
        attempts=max_retries,
    )


def _build_mixed(random_dies, grid_x, grid_y, dies, seed, max_retries, planar_pitch, die_pitch):
    """Mesh on some dies, uniform-random on the rest, mesh budget per die."""
    constraints = NetworkConstraints.mesh_matched(grid_x, grid_y, dies)
    per_die_budget = constraints.planar_link_budget // dies
    rng = np.random.default_rng(seed)
    base = grid_positions(grid_x, grid_y, dies)
    vls = _vertical_links(grid_x, grid_y, dies, die_pitch)
    pairs, die_of, dist = _same_die_candidates(grid_x, grid_y, dies, planar_pitch)
    n = grid_x * grid_y * dies
    for _ in range(max_retries):
        links = list(vls)
        degrees = np.zeros(n, dtype=np.int64)
        for lk in vls:
            degrees[lk.a] += 1
            degrees[lk.b] += 1
        ok = True
        for z in range(dies):
            if z in random_dies:
                mask = die_of == z
                sub_pairs, sub_dist = pairs[mask], dist[mask]
                chosen = _sample_planar(
                    sub_pairs, sub_dist, per_die_budget, 0.0, constraints.k_max, degrees, rng
                )
                if chosen is None:
                    ok = False
                    break
                for i in chosen:
                    a, b = int(sub_pairs[i, 0]), int(sub_pairs[i, 1])
                    links.append(Link(a, b, "planar", float(sub_dist[i])))
                    degrees[a] += 1
                    degrees[b] += 1
            else:
                mesh_links = _mesh_planar_links_for_die(z, grid_x, grid_y, planar_pitch)
                for lk in mesh_links:
                    degrees[lk.a] += 1
                    degrees[lk.b] += 1
                links += mesh_links
        if not ok:
            continue
        topo = Topology(base, links, planar_pitch_mm=planar_pitch, die_pitch_mm=die_pitch)
        if is_connected(topo):
            return topo
    raise GenerationFailed(
        f"no connected mixed topology within {max_retries} attempts", attempts=max_retries
    )


def build_mrrm(
    grid_x: int = 4,
    grid_y: int = 4,
    dies: int = 4,
    seed: int = 0,
    max_retries: int = 200,
    planar_pitch_mm: float = DEFAULT_PLANAR_PITCH_MM,
    die_pitch_mm: float = DEFAULT_DIE_PITCH_MM,
) -> Topology:
    """Outer dies mesh, middle dies uniform-random (same per-die budget)."""
    middle = set(range(1, dies - 1))
    return _build_mixed(
        middle, grid_x, grid_y, dies, seed, max_retries, planar_pitch_mm, die_pitch_mm
    )


def build_rrrr(
    grid_x: int = 4,
    grid_y: int = 4,
    dies: int = 4,
    seed: int = 0,
    max_retries: int = 200,
    planar_pitch_mm: float = DEFAULT_PLANAR_PITCH_MM,
    die_pitch_mm: float = DEFAULT_DIE_PITCH_MM,
) -> Topology:
    """Every die uniform-random with the per-die mesh budget."""
    return _build_mixed(
        set(range(dies)), grid_x, grid_y, dies, seed, max_retries, planar_pitch_mm, die_pitch_mm
    )


# -- core placement ------------------------------------------------------------


def place_cores(traffic: TrafficProfile, topology: Topology) -> np.ndarray:
    """Greedy communication-aware placement.

    Repeatedly takes the heaviest not-yet-bound core pair and maps it to the
    closest available router pair; a core whose partner is already placed goes
    to the free router nearest that partner.  Returns ``perm`` with
    ``perm[core] = router``.
    """
    n = traffic.n
    if n != topology.n_nodes:
        raise TopologyError("traffic size does not match topology")
    sym = traffic.f + traffic.f.T
    order = [
        (i, j)
        for i in range(n)
        for j in range(i + 1, n)
        if sym[i, j] > 0
    ]
    order.sort(key=lambda ij: (-sym[ij[0], ij[1]], ij))
    dist = topology.distance_matrix
    router_pairs = [(a, b) for a in range(n) for b in range(a + 1, n)]
    router_pairs.sort(key=lambda ab: (dist[ab[0], ab[1]], ab))
    perm = np.full(n, -1, dtype=np.int64)
    used = np.zeros(n, dtype=bool)

    def nearest_free(anchor):
        best, best_d = -1, math.inf
        for r in range(n):
            if not used[r] and dist[anchor, r] < best_d:
                best, best_d = r, dist[anchor, r]
        return best

    for i, j in order:
        pi, pj = perm[i] >= 0, perm[j] >= 0
        if pi and pj:
            continue
        if pi or pj:
            anchor = perm[i] if pi else perm[j]
            core = j if pi else i
            r = nearest_free(anchor)
            perm[core] = r
            used[r] = True
            continue
        for a, b in router_pairs:
            if not used[a] and not used[b]:
                perm[i], perm[j] = a, b
                used[a] = used[b] = True
                break
    for core in range(n):
        if perm[core] < 0:
            r = int(np.flatnonzero(~used)[0])
            perm[core] = r
            used[r] = True
    return perm


def apply_placement(traffic: TrafficProfile, perm: np.ndarray) -> TrafficProfile:
    """Reindex a core-indexed traffic matrix into router indices."""
    n = traffic.n
    f = np.zeros((n, n), dtype=np.float64)
    p = np.asarray(perm, dtype=np.int64)
    f[np.ix_(p, p)] = traffic.f
    return TrafficProfile(f)
