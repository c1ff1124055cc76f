"""Simulator configuration and result records."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass(frozen=True)
class SimConfig:
    """Wormhole simulator knobs.

    ``injection_rate`` is the mean number of flits injected per node per
    cycle, spread over sources in proportion to their traffic row sums.
    ``router_stages`` is the per-hop router pipeline depth; each link adds one
    further cycle.  Credits per (channel, virtual channel) cover the buffer
    plus the flits staged in the pipeline, so an uncontended packet streams at
    one flit per cycle.

    Sources emit during warmup + measurement; the simulation then runs up to
    ``drain_cycles`` further so packets issued near the end of the window can
    finish.  A network is flagged saturated when fewer than
    ``saturation_threshold`` of the packets issued inside the measurement
    window are delivered by the end of the drain.
    """

    packet_flits: int = 64
    flit_bits: int = 32
    buffer_depth: int = 2
    n_vcs: int = 4
    router_stages: int = 3
    injection_rate: float = 0.05
    warmup_cycles: int = 10_000
    measure_cycles: int = 100_000
    drain_cycles: int = 5_000
    seed: int = 1
    deadlock_window: int = 10_000
    saturation_threshold: float = 0.95

    def __post_init__(self):
        if self.packet_flits < 1 or self.buffer_depth < 1 or self.n_vcs < 1:
            raise ValueError("packet_flits, buffer_depth and n_vcs must be positive")
        if self.router_stages < 1:
            raise ValueError("router_stages must be at least 1")
        if self.injection_rate < 0:
            raise ValueError("injection_rate must be nonnegative")
        if self.measure_cycles < 10 * self.packet_flits:
            raise ValueError(
                "measure_cycles must cover at least ten packet serialisations "
                f"({10 * self.packet_flits} cycles)"
            )
        if self.warmup_cycles < 0 or self.drain_cycles < 0:
            raise ValueError("warmup_cycles and drain_cycles must be nonnegative")

    @property
    def total_cycles(self) -> int:
        """Cycles during which sources emit packets (warmup plus measurement)."""
        return self.warmup_cycles + self.measure_cycles

    @property
    def horizon_cycles(self) -> int:
        """Simulated cycles: emission window plus a bounded drain period."""
        return self.warmup_cycles + self.measure_cycles + self.drain_cycles

    @property
    def credit_pool(self) -> int:
        """Per-(channel, vc) credit count: buffer slots plus pipeline/link stages."""
        return self.buffer_depth + self.router_stages + 1


@dataclass(frozen=True)
class EnergyParams:
    """Per-flit energy coefficients (picojoules).

    ``e_router_pj`` is charged per flit per router traversal, ``e_link_pj_per_mm``
    per flit per millimetre of planar wire, and ``e_vl_pj`` per flit per
    vertical-link crossing.
    """

    e_router_pj: float = 0.98
    e_link_pj_per_mm: float = 0.6
    e_vl_pj: float = 0.06


@dataclass
class SimResult:
    """Measured over packets injected inside the measurement window.

    ``avg_latency_cycles`` spans injection to tail ejection.  ``edp`` is
    latency times energy per message.  All three are None when no traffic was
    injected, and ``inf`` when traffic exists but nothing was delivered (or
    the network cannot route its traffic at all).  ``vl_utilization`` is
    flits crossed in both directions divided by the measurement cycles,
    per vertical-link serial number; the per-direction split never exceeds
    one flit per cycle.
    """

    injected_packets: int
    delivered_packets: int
    avg_latency_cycles: float | None
    avg_hops: float | None
    energy_per_message_pj: float | None
    edp: float | None
    vl_utilization: np.ndarray
    vl_utilization_dir: np.ndarray
    saturated: bool
    backend: str
    config: SimConfig
    energy_params: EnergyParams = field(default_factory=EnergyParams)

    @classmethod
    def unroutable(
        cls, n_vl: int, config: SimConfig, energy: EnergyParams, backend: str
    ) -> "SimResult":
        return cls(
            injected_packets=0,
            delivered_packets=0,
            avg_latency_cycles=float("inf"),
            avg_hops=float("inf"),
            energy_per_message_pj=float("inf"),
            edp=float("inf"),
            vl_utilization=np.zeros(n_vl),
            vl_utilization_dir=np.zeros((n_vl, 2)),
            saturated=True,
            backend=backend,
            config=config,
            energy_params=energy,
        )
