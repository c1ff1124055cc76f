"""Small-world 3D NoC toolkit.

Library + CLI for synthesising constrained small-world 3D networks-on-chip,
optimising their link placement with learning-guided local search, simulating
wormhole traffic at flit level, aging the vertical links electromigration-style,
and planning spare vertical links for lifetime.
"""

from ._native import HAVE_NATIVE, backend_name
from .errors import (
    DeadlockError,
    GenerationFailed,
    NoFailurePossible,
    RoutingUnreachable,
    SaturationWarning,
    SearchSpaceTooLarge,
    SwnocError,
    TopologyError,
)
from .model import (
    Link,
    NetworkConstraints,
    Position,
    Topology,
    TrafficProfile,
    all_pairs_hops,
    avg_hop_count,
    is_connected,
    pair_distance,
)

__version__ = "0.1.0"

__all__ = [
    "HAVE_NATIVE",
    "backend_name",
    "SwnocError",
    "TopologyError",
    "GenerationFailed",
    "RoutingUnreachable",
    "DeadlockError",
    "SearchSpaceTooLarge",
    "NoFailurePossible",
    "SaturationWarning",
    "Position",
    "Link",
    "Topology",
    "NetworkConstraints",
    "TrafficProfile",
    "all_pairs_hops",
    "avg_hop_count",
    "pair_distance",
    "is_connected",
    "__version__",
]
