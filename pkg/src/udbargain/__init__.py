"""Approximate unequal-division solutions for bargaining networks."""

from ._backend import BACKEND
from .bp import BpResult, MessageState, run_algorithm_A, run_bp_mwm
from .instance import (
    Edge,
    Instance,
    InstanceError,
    Matching,
    Outcome,
    generate_odd_cycle_instance,
    generate_random_bipartite,
    generate_random_graph,
    generate_ring,
    parse_instance,
    parse_matching,
    parse_outcome,
    serialize_instance,
    serialize_outcome,
)
from .rebalance import (
    InvariantError,
    RebalanceError,
    SolveConfig,
    SolveResult,
    SolveStatus,
    edge_rebalancing,
    iterate_to_exact,
    solve,
)
from .verify import ViolationReport, check_eps_correct_division, check_stability, is_eps_ud, violation_report

__all__ = [
    "BACKEND", "BpResult", "Edge", "Instance", "InstanceError", "InvariantError", "Matching",
    "MessageState", "Outcome", "RebalanceError", "SolveConfig", "SolveResult", "SolveStatus",
    "ViolationReport", "check_eps_correct_division", "check_stability", "edge_rebalancing",
    "generate_odd_cycle_instance", "generate_random_bipartite", "generate_random_graph",
    "generate_ring", "is_eps_ud", "iterate_to_exact", "parse_instance", "parse_matching",
    "parse_outcome", "run_algorithm_A", "run_bp_mwm", "serialize_instance", "serialize_outcome",
    "solve", "violation_report",
]
