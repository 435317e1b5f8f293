"""Simulator and algorithm library for the range-limited broadcast clique."""

from .bits import Bits, bits_for
from .engine import (
    BandwidthViolation,
    ModelConfig,
    Network,
    NodeProgram,
    NonTermination,
    Outbox,
    OutputDisagreement,
    RangeViolation,
    RunMetrics,
    run,
    simulate_unicast_round,
)
from .graph import (
    EdgeKey,
    Graph,
    GraphParseError,
    Partition,
    generate,
    oracle_components,
    oracle_msf,
    parse_graph,
)

__all__ = [
    "Bits",
    "bits_for",
    "ModelConfig",
    "Network",
    "NodeProgram",
    "Outbox",
    "RunMetrics",
    "RangeViolation",
    "BandwidthViolation",
    "NonTermination",
    "OutputDisagreement",
    "run",
    "simulate_unicast_round",
    "Graph",
    "GraphParseError",
    "EdgeKey",
    "Partition",
    "generate",
    "parse_graph",
    "oracle_components",
    "oracle_msf",
]
