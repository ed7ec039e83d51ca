"""Attacker simulation: iterative planning against planted fake vulnerabilities.

The simulated attacker cannot tell fake vulnerabilities from real ones before
attempting them. Each round it computes the cheapest plan at face value and
executes it in order; the first exploit that needs a fake config fails. The
attacker pays for every config consumed up to and including the failed
attempt, keeps the privileges it gained (configs consumed before the failure
cost nothing from then on), scratches the discovered fake off its map, and
replans. The loop ends when a plan runs entirely on real configs, and the
accumulated payments are the attack's actual total cost.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .aggraph import AttackGraph, apply_assignments, build_attack_graph, remove_assignment
from .errors import Unreachable
from .netmodel import Assignment, NetworkModel
from .planner import AttackPlan, PlannerStats, derivable, optimal_cost, plan_with_stats


@dataclass(frozen=True)
class AttackIteration:
    plan: AttackPlan
    paid_prefix_cost: float
    discovered_fake: Assignment | None
    zeroed_configs: frozenset[str]

    def to_dict(self) -> dict:
        return {
            "plan": self.plan.to_dict(),
            "paid_prefix_cost": self.paid_prefix_cost,
            "discovered_fake": None if self.discovered_fake is None else self.discovered_fake.to_dict(),
            "zeroed_configs": sorted(self.zeroed_configs),
        }


@dataclass(frozen=True)
class SimulationTrace:
    iterations: tuple[AttackIteration, ...]
    total_cost: float
    planning_effort: PlannerStats

    @property
    def recalculations(self) -> int:
        return len(self.iterations)

    def to_dict(self) -> dict:
        return {
            "iterations": [it.to_dict() for it in self.iterations],
            "total_cost": self.total_cost,
            "planning_effort": self.planning_effort.to_dict(),
        }


@dataclass(frozen=True)
class EvaluationReport:
    """The four success measures plus the trace they were derived from.

    p1 counts plan recalculations, p2 is the accumulated planning effort,
    p3 the attack cost relative to the deception-free optimum, p4 the share
    of placed fakes the attacker actually tripped over.
    """

    p1: int
    p2: PlannerStats
    p3: float
    p4: float
    p4_by_convention: bool
    n_assignments: int
    baseline_cost: float
    total_cost: float
    seed: int
    trace: SimulationTrace

    def to_dict(self) -> dict:
        return {
            "p1": self.p1,
            "p2_states": self.p2.expanded_states,
            "p2_ms": self.p2.elapsed_ms,
            "p3": self.p3,
            "p4": self.p4,
            "p4_by_convention": self.p4_by_convention,
            "n_assignments": self.n_assignments,
            "baseline_cost": self.baseline_cost,
            "total_cost": self.total_cost,
            "seed": self.seed,
            "trace": self.trace.to_dict(),
        }


def _remove(
    graph: AttackGraph,
    assignment: Assignment,
    graph_cache: dict | None,
) -> AttackGraph:
    if graph_cache is not None and graph.origin is not None:
        remaining = frozenset(a for a in graph.origin[1] if a != assignment)
        cached = graph_cache.get(remaining)
        if cached is not None:
            return cached
        rebuilt = remove_assignment(graph, assignment)
        graph_cache[remaining] = rebuilt
        return rebuilt
    return remove_assignment(graph, assignment)


def simulate_attack(graph: AttackGraph, graph_cache: dict | None = None) -> SimulationTrace:
    """Run the plan/fail/replan loop to completion and return the trace.

    Requires a real attack path to exist (goal derivable using real configs
    only), otherwise the attacker would fail forever. `graph_cache` optionally
    memoizes regenerated graphs by remaining-assignment set; only share it
    between simulations on the same underlying network.
    """
    if not derivable(graph, graph.real_configs()):
        raise Unreachable("no real attack path exists")
    working: dict[str, float] = dict(graph.config_cost)
    current = graph
    iterations: list[AttackIteration] = []
    effort = PlannerStats()
    total = 0.0
    while True:
        plan, stats = plan_with_stats(current, cost_override=working)
        effort += stats
        failed_at = None
        fake_reqs: list[str] = []
        for idx, exploit in enumerate(plan.exec_order):
            fake_reqs = [
                c for c in current.requirements[exploit][1] if current.fake_flag.get(c, False)
            ]
            if fake_reqs:
                failed_at = idx
                break
        if failed_at is None:
            paid = sum(working[c] for c in sorted(plan.node_set & current.config_nodes))
            total += paid
            iterations.append(AttackIteration(plan, paid, None, frozenset()))
            break
        consumed: set[str] = set()
        for exploit in plan.exec_order[: failed_at + 1]:
            consumed.update(current.requirements[exploit][1])
        paid = sum(working[c] for c in sorted(consumed))
        before: set[str] = set()
        for exploit in plan.exec_order[:failed_at]:
            before.update(current.requirements[exploit][1])
        # Several fakes on one exploit: the attacker learns the one whose
        # config node id sorts first. Generated graphs never hit this case.
        discovered = current.provenance[min(fake_reqs)]
        total += paid
        iterations.append(AttackIteration(plan, paid, discovered, frozenset(before)))
        for c in before:
            working[c] = 0.0
        current = _remove(current, discovered, graph_cache)
    return SimulationTrace(
        iterations=tuple(iterations),
        total_cost=total,
        planning_effort=effort,
    )


def evaluate_placement(
    network: NetworkModel,
    assignments,
    seed: int = 0,
    graph_cache: dict | None = None,
) -> EvaluationReport:
    """Simulate the attacker against a placement and compute the measures.

    The seed is recorded for reporting only; the simulation itself is
    deterministic. An empty placement reports p4 = 1.0 by convention, flagged.
    """
    ordered = tuple(sorted(set(assignments)))
    baseline = build_attack_graph(network)
    baseline_cost = optimal_cost(baseline)
    graph = apply_assignments(network, ordered)
    trace = simulate_attack(graph, graph_cache=graph_cache)
    p1 = trace.recalculations
    if baseline_cost == 0:
        p3 = 1.0 if trace.total_cost == 0 else math.inf
    else:
        p3 = trace.total_cost / baseline_cost
    if ordered:
        p4 = (p1 - 1) / len(ordered)
        by_convention = False
    else:
        p4 = 1.0
        by_convention = True
    return EvaluationReport(
        p1=p1,
        p2=trace.planning_effort,
        p3=p3,
        p4=p4,
        p4_by_convention=by_convention,
        n_assignments=len(ordered),
        baseline_cost=baseline_cost,
        total_cost=trace.total_cost,
        seed=seed,
        trace=trace,
    )
