"""Core 3D NoC data model: router grid, links, traffic, and hop metrics.

Conventions used throughout the toolkit:

* Routers live on an integer grid ``(x, y, z)`` where ``z`` is the die index.
  Router ids are z-major, row-major: ``id = z * (gx * gy) + y * gx + x``.
* Physical coordinates are the grid coordinates scaled by the planar pitch
  (x, y) and the die pitch (z), both in millimetres.
* Links are undirected, simple, and typed: ``planar`` links join two routers
  on the same die, ``vertical`` links join vertically adjacent routers in
  neighbouring dies (through-silicon via bundles).
* Regular vertical links are numbered serially from 1, die-gap major and
  position minor: gap 0 (die 0 to die 1) takes numbers ``1 .. gx*gy``, gap 1
  the next block, and so on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, NamedTuple

import numpy as np

from ._native import kernels
from .errors import TopologyError

PLANAR = "planar"
VERTICAL = "vertical"

DEFAULT_PLANAR_PITCH_MM = 2.0
DEFAULT_DIE_PITCH_MM = 0.05


class Position(NamedTuple):
    x: int
    y: int
    z: int


@dataclass(frozen=True, order=True)
class Link:
    """Undirected link; endpoints are stored sorted so (a, b) == (b, a)."""

    a: int
    b: int
    kind: str
    length_mm: float

    def __post_init__(self):
        if self.a == self.b:
            raise TopologyError(f"self-link at router {self.a}")
        if self.kind not in (PLANAR, VERTICAL):
            raise TopologyError(f"unknown link kind {self.kind!r}")
        if self.a > self.b:
            a, b = self.a, self.b
            object.__setattr__(self, "a", b)
            object.__setattr__(self, "b", a)

    @property
    def ends(self):
        return (self.a, self.b)

    def is_vertical(self):
        return self.kind == VERTICAL


@dataclass(frozen=True)
class NetworkConstraints:
    """Degree and link-budget constraints for constrained topology generation.

    ``planar_link_budget`` counts planar links across all dies; the default
    matches a 4x4x4 mesh (96 planar + 48 vertical = 144 links, average degree
    4.5 over 64 routers) so that generated small-world networks are
    resource-comparable with the mesh baseline.
    """

    k_max: int = 7
    planar_link_budget: int = 96
    avg_degree_target: float = 4.5

    @classmethod
    def mesh_matched(cls, grid_x=4, grid_y=4, dies=4, k_max=7):
        per_die = grid_x * (grid_y - 1) + grid_y * (grid_x - 1)
        budget = dies * per_die
        n = grid_x * grid_y * dies
        n_vl = grid_x * grid_y * (dies - 1)
        avg = 2.0 * (budget + n_vl) / n
        return cls(k_max=k_max, planar_link_budget=budget, avg_degree_target=avg)


class Topology:
    """An immutable 3D router network.

    Construction validates the structural invariants: ids in range, no
    duplicate links, planar links within one die with length equal to the
    planar pitch times the in-plane Euclidean grid distance, vertical links
    between vertically adjacent grid positions with length equal to the die
    pitch.
    """

    def __init__(
        self,
        positions: Iterable[Position],
        links: Iterable[Link],
        planar_pitch_mm: float = DEFAULT_PLANAR_PITCH_MM,
        die_pitch_mm: float = DEFAULT_DIE_PITCH_MM,
        validate: bool = True,
    ):
        self.positions = tuple(Position(*p) for p in positions)
        self.links = tuple(sorted(links))
        self.planar_pitch_mm = float(planar_pitch_mm)
        self.die_pitch_mm = float(die_pitch_mm)
        self.n_nodes = len(self.positions)
        if validate:
            self._validate()

    # -- construction helpers ------------------------------------------------

    def planar_link(self, a: int, b: int) -> Link:
        """Build a planar link with the length implied by the grid positions."""
        return Link(a, b, PLANAR, self.planar_length(a, b))

    def vertical_link(self, a: int, b: int) -> Link:
        return Link(a, b, VERTICAL, self.die_pitch_mm)

    def planar_length(self, a: int, b: int) -> float:
        pa, pb = self.positions[a], self.positions[b]
        return self.planar_pitch_mm * math.hypot(pa.x - pb.x, pa.y - pb.y)

    def with_links(self, links: Iterable[Link], validate: bool = True) -> "Topology":
        """A new topology on the same routers with a different link set."""
        return Topology(
            self.positions,
            links,
            planar_pitch_mm=self.planar_pitch_mm,
            die_pitch_mm=self.die_pitch_mm,
            validate=validate,
        )

    # -- validation ----------------------------------------------------------

    def _validate(self):
        n = self.n_nodes
        if n == 0:
            raise TopologyError("empty topology")
        seen_pos = set()
        for i, p in enumerate(self.positions):
            if p in seen_pos:
                raise TopologyError(f"duplicate grid position {p} at router {i}")
            seen_pos.add(p)
        seen = set()
        for lk in self.links:
            if not (0 <= lk.a < n and 0 <= lk.b < n):
                raise TopologyError(f"link endpoint out of range: {lk}")
            if lk.ends in seen:
                raise TopologyError(f"duplicate link {lk.ends}")
            seen.add(lk.ends)
            pa, pb = self.positions[lk.a], self.positions[lk.b]
            if lk.kind == PLANAR:
                if pa.z != pb.z:
                    raise TopologyError(f"planar link spans dies: {lk}")
                want = self.planar_length(lk.a, lk.b)
                if abs(lk.length_mm - want) > 1e-9 * max(1.0, want):
                    raise TopologyError(
                        f"planar link length {lk.length_mm} != grid distance {want}: {lk}"
                    )
            else:
                if (pa.x, pa.y) != (pb.x, pb.y) or abs(pa.z - pb.z) != 1:
                    raise TopologyError(f"vertical link not between stacked routers: {lk}")
                if abs(lk.length_mm - self.die_pitch_mm) > 1e-9:
                    raise TopologyError(f"vertical link length != die pitch: {lk}")

    # -- cached structure ----------------------------------------------------

    @cached_property
    def grid(self):
        """(gx, gy, dies) grid extents."""
        gx = max(p.x for p in self.positions) + 1
        gy = max(p.y for p in self.positions) + 1
        gz = max(p.z for p in self.positions) + 1
        return (gx, gy, gz)

    @property
    def dies(self):
        return self.grid[2]

    @cached_property
    def edge_arrays(self):
        """Parallel int32 endpoint arrays (eu, ev) for the kernels."""
        eu = np.fromiter((lk.a for lk in self.links), dtype=np.int32, count=len(self.links))
        ev = np.fromiter((lk.b for lk in self.links), dtype=np.int32, count=len(self.links))
        return eu, ev

    @cached_property
    def degrees(self):
        deg = np.zeros(self.n_nodes, dtype=np.int32)
        for lk in self.links:
            deg[lk.a] += 1
            deg[lk.b] += 1
        return deg

    @cached_property
    def adjacency(self):
        """Tuple of sorted neighbour tuples, index = router id."""
        nbrs = [[] for _ in range(self.n_nodes)]
        for lk in self.links:
            nbrs[lk.a].append(lk.b)
            nbrs[lk.b].append(lk.a)
        return tuple(tuple(sorted(ns)) for ns in nbrs)

    @cached_property
    def link_index(self):
        return {lk.ends: i for i, lk in enumerate(self.links)}

    def has_link(self, a: int, b: int) -> bool:
        return (min(a, b), max(a, b)) in self.link_index

    def link_between(self, a: int, b: int) -> Link:
        return self.links[self.link_index[(min(a, b), max(a, b))]]

    @cached_property
    def planar_links(self):
        return tuple(lk for lk in self.links if lk.kind == PLANAR)

    @cached_property
    def vertical_links(self):
        """Regular vertical links ordered by serial number (1-based externally).

        Ordering is die-gap major, in-plane position minor (y-major then x),
        so with a 4x4 footprint the gap between dies 1 and 2 holds numbers
        17..32.
        """
        gx, gy, _ = self.grid

        def serial(lk):
            pa, pb = self.positions[lk.a], self.positions[lk.b]
            lo = pa if pa.z < pb.z else pb
            return lo.z * gx * gy + lo.y * gx + lo.x

        return tuple(sorted((lk for lk in self.links if lk.kind == VERTICAL), key=serial))

    @cached_property
    def vl_numbers(self):
        """Map link endpoints -> 1-based serial vertical-link number."""
        return {lk.ends: i + 1 for i, lk in enumerate(self.vertical_links)}

    @cached_property
    def distance_matrix(self):
        """Euclidean physical distances in mm between every router pair."""
        pos = np.array(self.positions, dtype=np.float64)
        pos[:, 0] *= self.planar_pitch_mm
        pos[:, 1] *= self.planar_pitch_mm
        pos[:, 2] *= self.die_pitch_mm
        diff = pos[:, None, :] - pos[None, :, :]
        return np.sqrt((diff**2).sum(axis=2))

    def link_set(self):
        return frozenset(lk.ends for lk in self.links)

    # -- text round-trip -----------------------------------------------------

    def to_text(self) -> str:
        lines = ["# topology v1"]
        lines.append(f"nodes {self.n_nodes}")
        lines.append(f"planar_pitch_mm {self.planar_pitch_mm!r}")
        lines.append(f"die_pitch_mm {self.die_pitch_mm!r}")
        for i, p in enumerate(self.positions):
            lines.append(f"node {i} {p.x} {p.y} {p.z}")
        for lk in self.links:
            lines.append(f"link {lk.a} {lk.b} {lk.kind} {float(lk.length_mm)!r}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "Topology":
        n = None
        planar_pitch = DEFAULT_PLANAR_PITCH_MM
        die_pitch = DEFAULT_DIE_PITCH_MM
        positions = {}
        links = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            tag = parts[0]
            if tag == "nodes":
                n = int(parts[1])
            elif tag == "planar_pitch_mm":
                planar_pitch = float(parts[1])
            elif tag == "die_pitch_mm":
                die_pitch = float(parts[1])
            elif tag == "node":
                positions[int(parts[1])] = Position(int(parts[2]), int(parts[3]), int(parts[4]))
            elif tag == "link":
                links.append(Link(int(parts[1]), int(parts[2]), parts[3], float(parts[4])))
            else:
                raise TopologyError(f"unrecognised topology line: {line!r}")
        if n is None or sorted(positions) != list(range(n)):
            raise TopologyError("topology text missing nodes or node records")
        ordered = [positions[i] for i in range(n)]
        return cls(ordered, links, planar_pitch_mm=planar_pitch, die_pitch_mm=die_pitch)

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "Topology":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def __repr__(self):
        gx, gy, gz = self.grid
        return (
            f"Topology(n={self.n_nodes}, grid={gx}x{gy}x{gz}, "
            f"links={len(self.links)} [{len(self.planar_links)}p+{len(self.vertical_links)}v])"
        )


class TrafficProfile:
    """A nonnegative traffic matrix ``f[i, j]`` (flows between router pairs).

    The diagonal is zero and at least one entry is positive.  Values are in
    arbitrary flow units; metrics that depend on absolute scale say so.
    """

    def __init__(self, f):
        f = np.array(f, dtype=np.float64)
        if f.ndim != 2 or f.shape[0] != f.shape[1]:
            raise ValueError(f"traffic matrix must be square, got {f.shape}")
        if np.any(f < 0) or not np.all(np.isfinite(f)):
            raise ValueError("traffic entries must be finite and nonnegative")
        if np.any(np.diag(f) != 0):
            raise ValueError("traffic diagonal must be zero")
        if not np.any(f > 0):
            raise ValueError("traffic matrix has no positive entry")
        f.flags.writeable = False
        self.f = f

    @property
    def n(self):
        return self.f.shape[0]

    @cached_property
    def total(self):
        return float(self.f.sum())

    @cached_property
    def row_sums(self):
        return self.f.sum(axis=1)

    def scaled(self, factor: float) -> "TrafficProfile":
        return TrafficProfile(self.f * float(factor))

    def to_text(self) -> str:
        return "\n".join(",".join(repr(float(v)) for v in row) for row in self.f) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "TrafficProfile":
        rows = []
        for raw in text.splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            rows.append([float(tok) for tok in line.split(",")])
        return cls(np.array(rows, dtype=np.float64))

    def save(self, path):
        with open(path, "w") as fh:
            fh.write(self.to_text())

    @classmethod
    def load(cls, path) -> "TrafficProfile":
        with open(path) as fh:
            return cls.from_text(fh.read())

    def __repr__(self):
        return f"TrafficProfile(n={self.n}, total={self.total:.6g})"


# -- hop metrics --------------------------------------------------------------


def _filtered_edges(topology: Topology, exclude):
    if not exclude:
        return topology.edge_arrays
    drop = {(min(a, b), max(a, b)) for a, b in (getattr(e, "ends", e) for e in exclude)}
    keep = [lk for lk in topology.links if lk.ends not in drop]
    eu = np.fromiter((lk.a for lk in keep), dtype=np.int32, count=len(keep))
    ev = np.fromiter((lk.b for lk in keep), dtype=np.int32, count=len(keep))
    return eu, ev


def all_pairs_hops(topology: Topology, exclude=()) -> np.ndarray:
    """Hop-count matrix as float64 with ``inf`` marking unreachable pairs.

    ``exclude`` removes the given links (Link objects or (a, b) tuples)
    before measuring, without building a new topology.
    """
    eu, ev = _filtered_edges(topology, exclude)
    hops = kernels.all_pairs_hops(topology.n_nodes, eu, ev).astype(np.float64)
    hops[hops < 0] = np.inf
    return hops


def avg_hop_count(topology: Topology, traffic: TrafficProfile | None = None) -> float:
    """Mean hops over ordered pairs i != j; traffic-weighted when given."""
    hops = all_pairs_hops(topology)
    n = topology.n_nodes
    if traffic is None:
        off = ~np.eye(n, dtype=bool)
        return float(hops[off].mean())
    if np.any((hops == np.inf) & (traffic.f > 0)):
        return float("inf")
    return float((hops * traffic.f).sum() / traffic.total)


def pair_distance(topology: Topology, i: int, j: int) -> float:
    """Euclidean physical distance between routers i and j in mm."""
    return float(topology.distance_matrix[i, j])


def is_connected(topology: Topology, exclude=()) -> bool:
    eu, ev = _filtered_edges(topology, exclude)
    return kernels.reach_count(topology.n_nodes, eu, ev, 0) == topology.n_nodes
