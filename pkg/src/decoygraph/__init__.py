"""Attack-graph deception toolkit.

Model a network, build its logical attack graph, simulate a cost-minimizing
attacker that replans when a planted fake vulnerability fails, and search for
the placement of fakes that maximizes the attacker's total cost.
"""

from .aggraph import (
    AttackGraph,
    NodeKind,
    apply_assignments,
    build_attack_graph,
    load_graph,
    remove_assignment,
    save_graph,
    validate_graph,
)
from .attacker import (
    AttackIteration,
    EvaluationReport,
    SimulationTrace,
    evaluate_placement,
    simulate_attack,
)
from .errors import ConfigurationError, Unreachable, ValidationError
from .netmodel import (
    EXTERNAL,
    Assignment,
    Catalog,
    CvssVersion,
    Goal,
    Host,
    Layer,
    NetworkModel,
    VulnerabilityRecord,
    check_assignment,
    compatible_vulns,
    default_catalog,
    generate_network,
    load_catalog,
    load_network,
    normalize_cost,
    save_catalog,
    save_network,
)
from .placement_random import random_budget_placement, random_placement
from .placement_search import (
    Candidate,
    PathIndex,
    PathRecord,
    SearchNode,
    SearchResult,
    astar,
    build_path_index,
    compute_singleton_utilities,
    dfbnb,
    enumerate_candidates,
    exhaustive_best,
    expand,
    h1,
    h2,
    order_candidates,
)
from .planner import (
    AttackPlan,
    PlannerStats,
    brute_force_plan,
    derivable,
    derivable_facts,
    optimal_cost,
    optimal_plan,
    plan_with_stats,
    plan_violations,
)

__version__ = "0.1.0"

__all__ = [
    "AttackGraph",
    "AttackIteration",
    "AttackPlan",
    "Assignment",
    "Candidate",
    "Catalog",
    "ConfigurationError",
    "CvssVersion",
    "EXTERNAL",
    "EvaluationReport",
    "Goal",
    "Host",
    "Layer",
    "NetworkModel",
    "NodeKind",
    "PathIndex",
    "PathRecord",
    "PlannerStats",
    "SearchNode",
    "SearchResult",
    "SimulationTrace",
    "Unreachable",
    "ValidationError",
    "VulnerabilityRecord",
    "apply_assignments",
    "astar",
    "build_attack_graph",
    "build_path_index",
    "brute_force_plan",
    "check_assignment",
    "compatible_vulns",
    "compute_singleton_utilities",
    "default_catalog",
    "derivable",
    "derivable_facts",
    "dfbnb",
    "enumerate_candidates",
    "evaluate_placement",
    "exhaustive_best",
    "expand",
    "generate_network",
    "h1",
    "h2",
    "load_catalog",
    "load_graph",
    "load_network",
    "normalize_cost",
    "optimal_cost",
    "optimal_plan",
    "order_candidates",
    "plan_violations",
    "plan_with_stats",
    "random_budget_placement",
    "random_placement",
    "remove_assignment",
    "save_catalog",
    "save_graph",
    "save_network",
    "simulate_attack",
    "validate_graph",
]
