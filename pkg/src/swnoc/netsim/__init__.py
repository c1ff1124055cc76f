"""Flit-level wormhole network simulation: routing, cycle engine, metrics."""

from .config import EnergyParams, SimConfig, SimResult
from .engine import make_schedule, simulate, single_packet_latency
from .routing import (
    RouteSet,
    build_routes,
    cdg_is_acyclic,
    channel_dependency_graph,
)

__all__ = [
    "SimConfig",
    "EnergyParams",
    "SimResult",
    "RouteSet",
    "build_routes",
    "channel_dependency_graph",
    "cdg_is_acyclic",
    "simulate",
    "make_schedule",
    "single_packet_latency",
]
