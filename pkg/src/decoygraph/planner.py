"""Minimum-cost attack planning on AND/OR attack graphs.

A plan is a closed node set containing the goal (every privilege supported,
every exploit requirement present) plus an executable exploit ordering. The
plan cost sums config-node costs, each config counted once even when several
exploits share it, which makes this delete-free optimal planning.

Two engines produce identical results where both apply. Graphs generated by
the single remote rule give every exploit exactly one privilege requirement
and one config requirement; on those the cheapest plan's minimal support is a
chain from the attacker entry to the goal and never reuses a config, so plain
Dijkstra over privilege nodes is exact. Arbitrary graphs (higher AND arity,
shared configs across required branches) go through admissible best-first
search over achieved-fact sets. A brute-force subset enumerator serves as the
oracle for both.

Plan cost is always summed over the sorted config-id list so the same config
set yields the same float no matter which engine found it.
"""

from __future__ import annotations

import heapq
import itertools
import time
from dataclasses import dataclass
from typing import Iterable, Mapping

from .aggraph import AttackGraph
from .errors import ConfigurationError, Unreachable, ValidationError

_INF = float("inf")


@dataclass(frozen=True)
class AttackPlan:
    node_set: frozenset[str]
    exec_order: tuple[str, ...]
    cost: float
    endpoints: tuple[str, str]

    def to_dict(self) -> dict:
        return {
            "cost": self.cost,
            "exec_order": list(self.exec_order),
            "node_set": sorted(self.node_set),
        }


@dataclass(frozen=True)
class PlannerStats:
    expanded_states: int = 0
    heuristic_evals: int = 0
    elapsed_ms: float = 0.0

    def __add__(self, other: "PlannerStats") -> "PlannerStats":
        return PlannerStats(
            expanded_states=self.expanded_states + other.expanded_states,
            heuristic_evals=self.heuristic_evals + other.heuristic_evals,
            elapsed_ms=self.elapsed_ms + other.elapsed_ms,
        )

    def to_dict(self) -> dict:
        return {
            "expanded_states": self.expanded_states,
            "heuristic_evals": self.heuristic_evals,
            "elapsed_ms": self.elapsed_ms,
        }


# ---------------------------------------------------------------------------
# Derivability
# ---------------------------------------------------------------------------


def derivable_facts(
    graph: AttackGraph, usable_configs: Iterable[str] | None = None
) -> tuple[frozenset[str], frozenset[str]]:
    """Least fixpoint of the derivation rules.

    Returns (derivable privileges, firable exploits). The source privilege is
    an axiom; an exploit fires when its privilege requirements are derived and
    its config requirements all sit in `usable_configs` (None means every
    config); a privilege is derived when any supporting exploit fires.
    """
    usable = graph.config_nodes if usable_configs is None else frozenset(usable_configs)
    if not usable <= graph.config_nodes:
        raise ValidationError("usable_configs must be a subset of the config nodes")
    pending: dict[str, int] = {}
    eligible: dict[str, bool] = {}
    waiting: dict[str, list[str]] = {}
    for e, (req_privs, req_configs) in graph.requirements.items():
        pending[e] = len(req_privs)
        eligible[e] = all(c in usable for c in req_configs)
        for p in req_privs:
            waiting.setdefault(p, []).append(e)
    derived: set[str] = set()
    fired: set[str] = set()
    frontier = [graph.source]
    # Exploits with no privilege requirements fire immediately when eligible.
    for e in sorted(graph.exploit_nodes):
        if pending[e] == 0 and eligible[e]:
            fired.add(e)
    stack = [p for e in sorted(fired) for p in graph.grants[e]]
    frontier.extend(stack)
    while frontier:
        p = frontier.pop()
        if p in derived or p not in graph.privilege_nodes:
            continue
        derived.add(p)
        for e in waiting.get(p, ()):
            pending[e] -= 1
            if pending[e] == 0 and eligible[e] and e not in fired:
                fired.add(e)
                frontier.extend(graph.grants[e])
    return frozenset(derived), frozenset(fired)


def derivable(graph: AttackGraph, usable_configs: Iterable[str] | None = None) -> bool:
    """Whether the goal is derivable using only the given configs."""
    derived, _ = derivable_facts(graph, usable_configs)
    return graph.goal in derived


# ---------------------------------------------------------------------------
# Shared plan assembly
# ---------------------------------------------------------------------------


def _cost_fn(graph: AttackGraph, cost_override: Mapping[str, float] | None):
    base = graph.config_cost
    if cost_override is None:
        return base.__getitem__

    def effective(c: str) -> float:
        value = cost_override.get(c)
        return base[c] if value is None else value

    return effective


def _exec_waves(graph: AttackGraph, support: set[str]) -> tuple[str, ...]:
    # Earliest-enabled-first execution, ties inside a wave by exploit id.
    # Configs never gate enablement; the attacker pays them on execution.
    have = {graph.source}
    remaining = set(support)
    order: list[str] = []
    while remaining:
        wave = sorted(
            e for e in remaining if all(p in have for p in graph.requirements[e][0])
        )
        if not wave:
            raise ValidationError("plan support is not executable")
        for e in wave:
            order.append(e)
            have.update(graph.grants[e])
        remaining.difference_update(wave)
    return tuple(order)


def _assemble_plan(
    graph: AttackGraph,
    supporter: Mapping[str, str],
    effective,
) -> AttackPlan:
    """Build a plan from a privilege -> chosen-supporting-exploit map."""
    support: set[str] = set()
    configs: set[str] = set()
    privs: set[str] = {graph.source, graph.goal}
    todo = [graph.goal]
    while todo:
        p = todo.pop()
        if p == graph.source:
            continue
        e = supporter[p]
        if e in support:
            continue
        support.add(e)
        req_privs, req_configs = graph.requirements[e]
        configs.update(req_configs)
        for q in req_privs:
            if q not in privs:
                privs.add(q)
                todo.append(q)
    exec_order = _exec_waves(graph, support)
    cost = sum(effective(c) for c in sorted(configs))
    node_set = frozenset(privs) | frozenset(support) | frozenset(configs)
    return AttackPlan(
        node_set=node_set,
        exec_order=exec_order,
        cost=cost,
        endpoints=(graph.source, graph.goal),
    )


def _empty_plan(graph: AttackGraph) -> AttackPlan:
    return AttackPlan(
        node_set=frozenset({graph.source}),
        exec_order=(),
        cost=0.0,
        endpoints=(graph.source, graph.goal),
    )


# ---------------------------------------------------------------------------
# Fast path: unit-rule graphs
# ---------------------------------------------------------------------------


def _is_unit_rule(graph: AttackGraph) -> bool:
    return all(
        len(req_privs) == 1 and len(req_configs) == 1
        for req_privs, req_configs in graph.requirements.values()
    )


def _dijkstra_plan(
    graph: AttackGraph,
    effective,
    banned: frozenset[str],
) -> tuple[AttackPlan, int]:
    consumers: dict[str, list[str]] = {}
    for e in sorted(graph.exploit_nodes):
        req_privs, req_configs = graph.requirements[e]
        if req_configs[0] in banned:
            continue
        consumers.setdefault(req_privs[0], []).append(e)
    dist: dict[str, float] = {graph.source: 0.0}
    pred: dict[str, str] = {}  # privilege -> exploit that reaches it on the best chain
    done: set[str] = set()
    heap: list[tuple[float, str]] = [(0.0, graph.source)]
    expanded = 0
    while heap:
        d, p = heapq.heappop(heap)
        if p in done or d > dist.get(p, _INF):
            continue
        done.add(p)
        expanded += 1
        if p == graph.goal:
            break
        for e in consumers.get(p, ()):
            weight = effective(graph.requirements[e][1][0])
            nd = d + weight
            for q in graph.grants[e]:
                if nd < dist.get(q, _INF):
                    dist[q] = nd
                    pred[q] = e
                    heapq.heappush(heap, (nd, q))
    if graph.goal not in done:
        raise Unreachable(f"goal {graph.goal} is not derivable")
    if graph.goal == graph.source:
        return _empty_plan(graph), expanded
    supporter: dict[str, str] = {}
    p = graph.goal
    while p != graph.source:
        e = pred[p]
        supporter[p] = e
        p = graph.requirements[e][0][0]
    return _assemble_plan(graph, supporter, effective), expanded


# ---------------------------------------------------------------------------
# General path: best-first search over achieved-fact sets
# ---------------------------------------------------------------------------


def _hmax(graph: AttackGraph, state: frozenset[str], effective, banned: frozenset[str]) -> float:
    """Admissible max-cost relaxation with already-paid configs treated as free."""
    value: dict[str, float] = {}
    for c in graph.config_nodes:
        if c in banned:
            continue
        value[c] = 0.0 if c in state else effective(c)
    pending: dict[str, int] = {}
    heap: list[tuple[float, str]] = []
    for e, (req_privs, req_configs) in graph.requirements.items():
        if any(c in banned for c in req_configs):
            continue
        pending[e] = len(req_privs) + len(req_configs)
    for p in graph.privilege_nodes:
        if p == graph.source or p in state:
            value[p] = 0.0
            heapq.heappush(heap, (0.0, p))
    for c in sorted(graph.config_nodes - banned):
        heapq.heappush(heap, (value[c], c))
    requirers: dict[str, list[str]] = {}
    for e in pending:
        for node in itertools.chain(*graph.requirements[e]):
            requirers.setdefault(node, []).append(e)
    best: dict[str, float] = {}
    running: dict[str, float] = {e: 0.0 for e in pending}
    while heap:
        v, node = heapq.heappop(heap)
        if node in best and best[node] <= v:
            continue
        best[node] = v
        if node == graph.goal:
            return v
        for e in requirers.get(node, ()):
            if pending[e] <= 0:
                continue
            pending[e] -= 1
            running[e] = max(running[e], v)
            if pending[e] == 0:
                for q in graph.grants[e]:
                    if running[e] < best.get(q, _INF):
                        heapq.heappush(heap, (running[e], q))
    return best.get(graph.goal, _INF)


def _bestfirst_plan(
    graph: AttackGraph,
    effective,
    banned: frozenset[str],
) -> tuple[AttackPlan, int, int]:
    start = frozenset({graph.source})
    if graph.goal in start:
        return _empty_plan(graph), 0, 0
    actions = []
    for e in sorted(graph.exploit_nodes):
        req_privs, req_configs = graph.requirements[e]
        if any(c in banned for c in req_configs):
            continue
        if not graph.grants[e]:
            continue  # grants nothing, can never belong to a minimal plan
        actions.append((e, frozenset(req_privs), frozenset(req_configs), frozenset(graph.grants[e])))

    g_best: dict[frozenset[str], float] = {start: 0.0}
    came_from: dict[frozenset[str], tuple[frozenset[str], str]] = {}
    counter = itertools.count()
    h0 = _hmax(graph, start, effective, banned)
    heuristic_evals = 1
    if h0 == _INF:
        raise Unreachable(f"goal {graph.goal} is not derivable")
    heap: list[tuple[float, int, float, frozenset[str]]] = [(h0, next(counter), 0.0, start)]
    expanded = 0
    goal_state: frozenset[str] | None = None
    while heap:
        _, _, g, state = heapq.heappop(heap)
        if g > g_best.get(state, _INF):
            continue  # a cheaper route to this state was pushed later
        if graph.goal in state:
            goal_state = state
            break
        expanded += 1
        for e, req_privs, req_configs, grants in actions:
            if not req_privs <= state:
                continue
            new_privs = grants - state
            if not new_privs:
                continue
            succ = state | grants | req_configs
            step = sum(effective(c) for c in sorted(req_configs - state))
            ng = g + step
            if ng < g_best.get(succ, _INF):
                g_best[succ] = ng
                came_from[succ] = (state, e)
                h = _hmax(graph, succ, effective, banned)
                heuristic_evals += 1
                if h == _INF:
                    continue
                heapq.heappush(heap, (ng + h, next(counter), ng, succ))
    if goal_state is None:
        raise Unreachable(f"goal {graph.goal} is not derivable")
    sequence: list[str] = []
    state = goal_state
    while state in came_from:
        state, e = came_from[state]
        sequence.append(e)
    sequence.reverse()
    # Earliest executed supporter per privilege, then minimal-support walk-back.
    supporter: dict[str, str] = {}
    for e in sequence:
        for p in graph.grants[e]:
            supporter.setdefault(p, e)
    plan = _assemble_plan(graph, supporter, effective)
    return plan, expanded, heuristic_evals


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def plan_with_stats(
    graph: AttackGraph,
    cost_override: Mapping[str, float] | None = None,
    banned_configs: Iterable[str] = (),
) -> tuple[AttackPlan, PlannerStats]:
    """Optimal plan plus search-effort counters.

    `cost_override` replaces individual config costs (the simulator's zeroed
    weights); `banned_configs` removes configs from consideration entirely.
    Raises Unreachable when no plan exists.
    """
    banned = frozenset(banned_configs)
    effective = _cost_fn(graph, cost_override)
    started = time.perf_counter()
    if not derivable(graph, graph.config_nodes - banned):
        raise Unreachable(f"goal {graph.goal} is not derivable")
    if _is_unit_rule(graph):
        plan, expanded = _dijkstra_plan(graph, effective, banned)
        heuristic_evals = 0
    else:
        plan, expanded, heuristic_evals = _bestfirst_plan(graph, effective, banned)
    elapsed_ms = (time.perf_counter() - started) * 1000.0
    return plan, PlannerStats(expanded, heuristic_evals, elapsed_ms)


def optimal_plan(
    graph: AttackGraph,
    cost_override: Mapping[str, float] | None = None,
    banned_configs: Iterable[str] = (),
) -> AttackPlan:
    return plan_with_stats(graph, cost_override, banned_configs)[0]


def optimal_cost(
    graph: AttackGraph,
    cost_override: Mapping[str, float] | None = None,
) -> float:
    """Cost of the cheapest plan with every config taken at face value.

    Fake flags are ignored: this is the cost the attacker believes the
    cheapest attack has.
    """
    return optimal_plan(graph, cost_override).cost


def brute_force_plan(graph: AttackGraph, max_configs: int = 16) -> AttackPlan:
    """Oracle: enumerate config subsets in (cost, lexicographic) order.

    The first derivable subset that equals its own used-config set wins, which
    realizes the documented tie-break exactly. Exponential; refuses graphs
    with more than `max_configs` configs.
    """
    configs = sorted(graph.config_nodes)
    if len(configs) > max_configs:
        raise ConfigurationError(
            f"brute force refuses {len(configs)} configs (bound {max_configs})"
        )
    effective = _cost_fn(graph, None)
    if graph.goal == graph.source:
        return _empty_plan(graph)
    subsets = []
    for r in range(len(configs) + 1):
        for combo in itertools.combinations(configs, r):
            subsets.append((sum(effective(c) for c in combo), combo))
    subsets.sort(key=lambda item: (item[0], item[1]))
    for _, combo in subsets:
        usable = frozenset(combo)
        derived, fired = derivable_facts(graph, usable)
        if graph.goal not in derived:
            continue
        plan = _plan_from_closure(graph, fired, effective)
        if plan is not None and frozenset(plan.node_set & graph.config_nodes) == usable:
            return plan
    raise Unreachable(f"goal {graph.goal} is not derivable")


def _plan_from_closure(graph: AttackGraph, fired: frozenset[str], effective) -> AttackPlan | None:
    """Minimal support over a fixpoint closure, earliest wave first."""
    have = {graph.source}
    remaining = set(fired)
    supporter: dict[str, str] = {}
    while remaining:
        wave = sorted(
            e for e in remaining if all(p in have for p in graph.requirements[e][0])
        )
        if not wave:
            break
        for e in wave:
            for p in graph.grants[e]:
                supporter.setdefault(p, e)
                have.add(p)
        remaining.difference_update(wave)
    if graph.goal not in have:
        return None
    return _assemble_plan(graph, supporter, effective)


# ---------------------------------------------------------------------------
# Plan checking
# ---------------------------------------------------------------------------


def plan_violations(
    graph: AttackGraph,
    plan: AttackPlan,
    cost_override: Mapping[str, float] | None = None,
) -> list[str]:
    """Machine check of the plan closure bullets and the execution contract."""
    effective = _cost_fn(graph, cost_override)
    violations: list[str] = []
    nodes = plan.node_set
    if graph.goal not in nodes:
        violations.append("goal not in plan")
    for p in sorted(nodes & graph.privilege_nodes):
        if p == graph.source:
            continue
        supported = any(
            e in nodes and p in graph.grants[e] for e in graph.exploit_nodes
        )
        if not supported:
            violations.append(f"privilege {p} has no supporting exploit in the plan")
    for e in sorted(nodes & graph.exploit_nodes):
        req_privs, req_configs = graph.requirements[e]
        for target in itertools.chain(req_privs, req_configs):
            if target not in nodes:
                violations.append(f"exploit {e} requirement {target} missing from plan")
    if set(plan.exec_order) != set(nodes & graph.exploit_nodes):
        violations.append("exec_order does not cover exactly the plan's exploits")
    have = {graph.source}
    for e in plan.exec_order:
        req_privs, _ = graph.requirements[e]
        if not all(p in have for p in req_privs):
            violations.append(f"exploit {e} executed before its privileges are available")
        have.update(graph.grants[e])
    expected = sum(effective(c) for c in sorted(nodes & graph.config_nodes))
    if expected != plan.cost:
        violations.append(f"plan cost {plan.cost} != config sum {expected}")
    return violations
