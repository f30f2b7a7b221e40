"""Deterministic mmWave packet-routing simulator.

Stations with directional mmWave links, a geometric interference model,
greedy/random/full-power power-allocation schedulers, and an episode
environment with an agent-facing wire protocol.
"""

from .propagation import (
    Position,
    PropagationConfig,
    PowerDomain,
    DegenerateGeometryError,
)
from .network import Topology, TopologySpec, StationSpec, EdgeSpec, TopologyError
from .interference import PowerLadder, InterferenceModel, NoiseField
from .environment import RoutingEnv, DemandConfig, EnvConfig, EpisodeSpec

__version__ = "0.1.0"

__all__ = [
    "Position",
    "PropagationConfig",
    "PowerDomain",
    "DegenerateGeometryError",
    "Topology",
    "TopologySpec",
    "StationSpec",
    "EdgeSpec",
    "TopologyError",
    "PowerLadder",
    "InterferenceModel",
    "NoiseField",
    "RoutingEnv",
    "DemandConfig",
    "EnvConfig",
    "EpisodeSpec",
    "__version__",
]
