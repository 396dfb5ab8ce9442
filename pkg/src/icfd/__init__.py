"""Solver, verifier, kernelizer and generator toolkit for incomplete connected fair division."""

from icfd.model import (
    Allocation,
    FairnessNotion,
    Graph,
    IcfdError,
    Instance,
    ParseError,
    StatsReport,
    ValidationError,
    compute_stats,
    parse_allocation,
    parse_instance,
    serialize_allocation,
    serialize_instance,
)

__all__ = [
    "Allocation",
    "FairnessNotion",
    "Graph",
    "IcfdError",
    "Instance",
    "ParseError",
    "StatsReport",
    "ValidationError",
    "compute_stats",
    "parse_allocation",
    "parse_instance",
    "serialize_allocation",
    "serialize_instance",
]
