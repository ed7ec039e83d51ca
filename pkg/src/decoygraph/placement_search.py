"""Search for the fake-vulnerability placement that hurts the attacker most.

The placement problem is cast as a binary decision tree over candidate
(host, vulnerability) pairs: each node either commits to the head candidate
or drops it. A node's value is the simulated attacker's total cost against
the chosen set, and two upper-bound heuristics estimate how much the open
candidates could still add. Engines: depth-first branch and bound, best-first
(A*-style) search, and brute-force subset enumeration as the ground truth on
small instances.
"""

from __future__ import annotations

import heapq
import itertools
import math
import random
import time
from dataclasses import dataclass, replace
from typing import Callable

from .aggraph import AttackGraph, apply_assignments, build_attack_graph
from .attacker import simulate_attack
from .errors import ConfigurationError, Unreachable, ValidationError
from .netmodel import Assignment, Catalog, NetworkModel, compatible_vulns, normalize_cost
from .planner import optimal_cost, optimal_plan

ORDERINGS = ("utility", "shortest_path", "random")
HEURISTICS = ("h1", "h2")

# Structure tag of the one exploit shape the graph rules produce. Candidates
# on the same host with equal cost and shape are interchangeable lures.
_EXPLOIT_SHAPE = "remote:priv+config"

# Bound on planner calls during path-pool construction, per unit of pool size.
_POOL_CALL_FACTOR = 40


@dataclass(frozen=True)
class Candidate:
    assignment: Assignment
    equivalence_key: tuple
    singleton_utility: float | None = None


@dataclass(frozen=True)
class SearchNode:
    """One decision-tree node: committed assignments plus open candidates."""

    chosen: tuple[Assignment, ...]
    remaining: tuple[Candidate, ...]
    utility: float
    heuristic: float
    budget: int
    baseline_cost: float

    @property
    def f(self) -> float:
        return self.utility + self.heuristic


@dataclass(frozen=True)
class SearchResult:
    best_assignments: tuple[Assignment, ...]
    best_utility: float
    baseline_cost: float
    expanded_nodes: int
    generated_nodes: int
    elapsed_ms: float
    budget_used: int

    def to_dict(self) -> dict:
        return {
            "best_assignments": [a.to_dict() for a in self.best_assignments],
            "best_utility": self.best_utility,
            "baseline_cost": self.baseline_cost,
            "expanded_nodes": self.expanded_nodes,
            "generated_nodes": self.generated_nodes,
            "elapsed_ms": self.elapsed_ms,
            "budget_used": self.budget_used,
        }


@dataclass(frozen=True)
class PathRecord:
    """One cheap attack path through planted fakes: its cost and the fakes it uses."""

    path_id: int
    cost: float
    assignments: frozenset[Assignment]
    config_ids: tuple[str, ...]


@dataclass(frozen=True)
class PathIndex:
    """Pool of cheap fake-using paths with lookups by assignment and by host."""

    paths: tuple[PathRecord, ...]
    by_assignment: dict[Assignment, tuple[int, ...]]
    by_host: dict[str, tuple[int, ...]]


def enumerate_candidates(network: NetworkModel, catalog: Catalog | None = None) -> list[Candidate]:
    """List plantable (host, vulnerability) pairs, one per equivalence class.

    Two candidates on the same host with the same config cost produce
    interchangeable graph structure, so only the one with the smallest
    vulnerability id is kept. Order is deterministic: by host, then vuln id.
    """
    catalog = network.catalog if catalog is None else catalog
    seen: set[tuple] = set()
    out: list[Candidate] = []
    for host_id in sorted(network.hosts):
        host = network.hosts[host_id]
        for vuln_id in compatible_vulns(catalog, host):
            key = (host_id, normalize_cost(catalog[vuln_id]), _EXPLOIT_SHAPE)
            if key in seen:
                continue
            seen.add(key)
            out.append(Candidate(assignment=Assignment(host_id=host_id, vuln_id=vuln_id), equivalence_key=key))
    return out


def compute_singleton_utilities(
    baseline: AttackGraph,
    candidates: list[Candidate],
    utility_cache: dict | None = None,
    graph_cache: dict | None = None,
) -> list[Candidate]:
    """Attach to each candidate the attacker cost if it were planted alone."""
    if baseline.origin is None:
        raise ValidationError("baseline graph lacks its source network; rebuild it from the model")
    network = baseline.origin[0]
    cache = {} if utility_cache is None else utility_cache
    out: list[Candidate] = []
    for cand in candidates:
        singleton = frozenset({cand.assignment})
        value = cache.get(singleton)
        if value is None:
            graph = None if graph_cache is None else graph_cache.get(singleton)
            if graph is None:
                graph = apply_assignments(network, singleton)
                if graph_cache is not None:
                    graph_cache[singleton] = graph
            value = simulate_attack(graph, graph_cache=graph_cache).total_cost
            cache[singleton] = value
        out.append(replace(cand, singleton_utility=value))
    return out


def _top_utility_sum(candidates: tuple[Candidate, ...], slots: int) -> float:
    if slots <= 0:
        return 0.0
    utilities = []
    for c in candidates:
        if c.singleton_utility is None:
            raise ValidationError("candidate is missing its singleton utility")
        utilities.append(c.singleton_utility)
    utilities.sort(reverse=True)
    return sum(utilities[:slots])


def h1(node: SearchNode) -> float:
    """Optimistic estimate: sum of the best still-open singleton utilities.

    Not a sound upper bound; a combination of fakes can beat the sum of its
    parts, so search under h1 may prune the true optimum.
    """
    return _top_utility_sum(node.remaining, node.budget - len(node.chosen))


def h2(node: SearchNode) -> float:
    """Sound upper bound: baseline plan cost plus the best open singletons."""
    return node.baseline_cost + _top_utility_sum(node.remaining, node.budget - len(node.chosen))


def order_candidates(
    node: SearchNode,
    mode: str,
    index: PathIndex | None = None,
    seed: int | None = None,
) -> tuple[Candidate, ...]:
    """Order a node's open candidates for branching.

    utility: static, best singleton first. shortest_path: candidates that
    complete a cheap fake-using path first (needs the index). random: seeded
    shuffle, meant to be applied once at the root.
    """
    mode = mode.replace("-", "_")
    if mode == "utility":
        for c in node.remaining:
            if c.singleton_utility is None:
                raise ValidationError("candidate is missing its singleton utility")
        return tuple(sorted(node.remaining, key=lambda c: (-c.singleton_utility, c.assignment)))
    if mode == "random":
        rng = random.Random(seed)
        items = list(node.remaining)
        rng.shuffle(items)
        return tuple(items)
    if mode == "shortest_path":
        if index is None:
            raise ConfigurationError("shortest-path ordering requires a path index")
        return _rank_by_paths(index, node.remaining, frozenset(node.chosen), node.budget)
    raise ConfigurationError(f"unknown ordering {mode!r}; expected one of {ORDERINGS}")


def _rank_by_paths(
    index: PathIndex,
    remaining: tuple[Candidate, ...],
    chosen: frozenset[Assignment],
    budget: int,
) -> tuple[Candidate, ...]:
    """Rank open candidates by the cheapest path they help complete.

    A path counts if its not-yet-chosen assignments are all still available
    and fit the remaining budget. Candidates on no such path fall back to
    utility order behind the path-backed ones.
    """
    available = {c.assignment for c in remaining}
    slots = budget - len(chosen)
    best_key: dict[Assignment, tuple] = {}
    for cand in remaining:
        a = cand.assignment
        for pid in index.by_assignment.get(a, ()):
            path = index.paths[pid]
            need = path.assignments - chosen
            if len(need) > slots or not need <= available:
                continue
            key = (len(need), path.cost, path.path_id)
            if a not in best_key or key < best_key[a]:
                best_key[a] = key
    on_path = [c for c in remaining if c.assignment in best_key]
    on_path.sort(key=lambda c: (best_key[c.assignment], c.assignment))
    off_path = [c for c in remaining if c.assignment not in best_key]
    off_path.sort(key=lambda c: (-(c.singleton_utility or 0.0), c.assignment))
    return tuple(on_path + off_path)


def build_path_index(
    network: NetworkModel,
    assignments,
    pool_size: int = 100,
    baseline_cost: float | None = None,
) -> PathIndex:
    """Enumerate cheap fake-using plans on the fully-decorated graph.

    All candidate fakes are planted at once and plans are enumerated cheapest
    first by banning one config per branch; only plans strictly cheaper than
    the deception-free optimum are kept (costlier ones cannot lure a
    cost-minimizing attacker off the real path). Dedup is by config set.
    """
    all_assignments = frozenset(assignments)
    full = apply_assignments(network, all_assignments)
    if baseline_cost is None:
        baseline_cost = optimal_cost(build_attack_graph(network))
    records: list[PathRecord] = []
    seen_cfg: set[frozenset[str]] = set()
    heap: list[tuple[float, int, frozenset[str]]] = []
    plans: dict[int, object] = {}
    seq = 0
    calls = 0
    call_cap = max(_POOL_CALL_FACTOR * pool_size, 200)

    def push(banned: frozenset[str]) -> None:
        nonlocal seq, calls
        if calls >= call_cap:
            return
        calls += 1
        try:
            plan = optimal_plan(full, banned_configs=banned)
        except Unreachable:
            return
        if plan.cost >= baseline_cost:
            return
        plans[seq] = plan
        heapq.heappush(heap, (plan.cost, seq, banned))
        seq += 1

    push(frozenset())
    while heap and len(records) < pool_size:
        cost, entry, banned = heapq.heappop(heap)
        plan = plans.pop(entry)
        cfgs = frozenset(plan.node_set & full.config_nodes)
        if cfgs in seen_cfg:
            continue
        seen_cfg.add(cfgs)
        fakes = frozenset(full.provenance[c] for c in cfgs if full.fake_flag.get(c, False))
        if fakes:
            records.append(
                PathRecord(
                    path_id=len(records),
                    cost=cost,
                    assignments=fakes,
                    config_ids=tuple(sorted(cfgs)),
                )
            )
        for c in sorted(cfgs):
            push(banned | {c})

    by_assignment: dict[Assignment, list[int]] = {}
    by_host: dict[str, list[int]] = {}
    for rec in records:
        for a in sorted(rec.assignments):
            by_assignment.setdefault(a, []).append(rec.path_id)
            ids = by_host.setdefault(a.host_id, [])
            if not ids or ids[-1] != rec.path_id:
                ids.append(rec.path_id)
    return PathIndex(
        paths=tuple(records),
        by_assignment={a: tuple(ids) for a, ids in sorted(by_assignment.items())},
        by_host={h: tuple(ids) for h, ids in sorted(by_host.items())},
    )


def _make_node(
    chosen: tuple[Assignment, ...],
    remaining: tuple[Candidate, ...],
    utility: float,
    budget: int,
    baseline_cost: float,
    heuristic_fn: Callable[[SearchNode], float],
) -> SearchNode:
    node = SearchNode(
        chosen=chosen,
        remaining=remaining,
        utility=utility,
        heuristic=0.0,
        budget=budget,
        baseline_cost=baseline_cost,
    )
    return replace(node, heuristic=heuristic_fn(node))


def expand(
    node: SearchNode,
    evaluate: Callable[[frozenset[Assignment]], float],
    heuristic_fn: Callable[[SearchNode], float],
    reorder: Callable[[tuple[Candidate, ...], tuple[Assignment, ...]], tuple[Candidate, ...]] | None = None,
) -> tuple[SearchNode | None, SearchNode | None]:
    """Generate the (drop-head, take-head) children, None where discarded.

    A child is discarded when it can no longer fill the budget. The take-head
    child's set is always evaluated first so its value registers with the
    caller even if the child itself is discarded; `reorder`, when given, is
    applied to the take-head child's open candidates only.
    """
    if len(node.chosen) >= node.budget or not node.remaining:
        return None, None
    head = node.remaining[0]
    rest = node.remaining[1:]
    left = None
    if len(node.chosen) + len(rest) >= node.budget:
        left = _make_node(node.chosen, rest, node.utility, node.budget, node.baseline_cost, heuristic_fn)
    chosen = tuple(sorted(node.chosen + (head.assignment,)))
    value = evaluate(frozenset(chosen))
    right = None
    if len(chosen) + len(rest) >= node.budget:
        right_rest = reorder(rest, chosen) if reorder is not None else rest
        right = _make_node(chosen, right_rest, value, node.budget, node.baseline_cost, heuristic_fn)
    return left, right


class _SearchContext:
    """Shared setup for one placement search on one network.

    Holds the merged network, candidate list with singleton utilities, the
    incumbent, and the memo caches. Caches may be passed in to share planner
    work across searches on the same network; never share across networks.
    """

    def __init__(
        self,
        network: NetworkModel,
        catalog: Catalog | None,
        budget: int,
        ordering: str,
        heuristic: str,
        seed: int,
        pool_size: int,
        utility_cache: dict | None,
        graph_cache: dict | None,
        path_index: PathIndex | None,
    ):
        if budget < 0:
            raise ConfigurationError(f"budget must be non-negative, got {budget}")
        ordering = ordering.replace("-", "_")
        if ordering not in ORDERINGS:
            raise ConfigurationError(f"unknown ordering {ordering!r}; expected one of {ORDERINGS}")
        if heuristic not in HEURISTICS:
            raise ConfigurationError(f"unknown heuristic {heuristic!r}; expected one of {HEURISTICS}")
        if catalog:
            network = network.with_records(catalog.values())
        self.network = network
        self.ordering = ordering
        self.heuristic_fn = h1 if heuristic == "h1" else h2
        self.seed = seed
        self.utility_cache: dict = {} if utility_cache is None else utility_cache
        self.graph_cache: dict = {} if graph_cache is None else graph_cache
        self.baseline = self._graph(frozenset())
        self.baseline_cost = optimal_cost(self.baseline)
        candidates = enumerate_candidates(network)
        candidates = compute_singleton_utilities(
            self.baseline, candidates, utility_cache=self.utility_cache, graph_cache=self.graph_cache
        )
        self.candidates = candidates
        # a budget beyond the candidate pool means "plant everything"
        self.budget = min(budget, len(candidates))
        if ordering == "shortest_path" and path_index is None:
            path_index = build_path_index(
                network,
                [c.assignment for c in candidates],
                pool_size=pool_size,
                baseline_cost=self.baseline_cost,
            )
        self.index = path_index
        self.best_key: tuple | None = None
        self.best_value = -math.inf
        self.best_set: tuple[Assignment, ...] = ()
        if self.ordering == "shortest_path":
            self.reorder_fn = lambda remaining, chosen: _rank_by_paths(
                self.index, remaining, frozenset(chosen), self.budget
            )
        else:
            self.reorder_fn = None

    def _graph(self, assignments: frozenset[Assignment]) -> AttackGraph:
        graph = self.graph_cache.get(assignments)
        if graph is None:
            graph = apply_assignments(self.network, assignments)
            self.graph_cache[assignments] = graph
        return graph

    def evaluate(self, assignments: frozenset[Assignment]) -> float:
        value = self.utility_cache.get(assignments)
        if value is None:
            value = simulate_attack(self._graph(assignments), graph_cache=self.graph_cache).total_cost
            self.utility_cache[assignments] = value
        key = (-value, len(assignments), tuple(sorted(assignments)))
        if self.best_key is None or key < self.best_key:
            self.best_key = key
            self.best_value = value
            self.best_set = tuple(sorted(assignments))
        return value

    def root(self) -> SearchNode:
        root_value = self.evaluate(frozenset())
        prov = SearchNode(
            chosen=(),
            remaining=tuple(sorted(self.candidates, key=lambda c: c.assignment)),
            utility=root_value,
            heuristic=0.0,
            budget=self.budget,
            baseline_cost=self.baseline_cost,
        )
        ordered = order_candidates(prov, self.ordering, index=self.index, seed=self.seed)
        node = replace(prov, remaining=ordered)
        return replace(node, heuristic=self.heuristic_fn(node))

    def result(self, expanded: int, generated: int, t0: float) -> SearchResult:
        return SearchResult(
            best_assignments=self.best_set,
            best_utility=self.best_value,
            baseline_cost=self.baseline_cost,
            expanded_nodes=expanded,
            generated_nodes=generated,
            elapsed_ms=(time.perf_counter() - t0) * 1000.0,
            budget_used=len(self.best_set),
        )


def dfbnb(
    network: NetworkModel,
    catalog: Catalog | None = None,
    budget: int = 1,
    ordering: str = "utility",
    heuristic: str = "h2",
    seed: int = 0,
    pool_size: int = 100,
    utility_cache: dict | None = None,
    graph_cache: dict | None = None,
    path_index: PathIndex | None = None,
) -> SearchResult:
    """Depth-first branch and bound over the placement tree.

    The incumbent starts at the deception-free attack cost and a subtree is
    cut when its bound cannot beat it. Take-head branches are explored first.
    With the sound heuristic this returns an optimal placement; with h1 it
    can miss the optimum.
    """
    t0 = time.perf_counter()
    ctx = _SearchContext(
        network, catalog, budget, ordering, heuristic, seed, pool_size, utility_cache, graph_cache, path_index
    )
    stack = [ctx.root()]
    generated = 1
    expanded = 0
    while stack:
        node = stack.pop()
        if node.f <= ctx.best_value:
            continue
        if len(node.chosen) >= ctx.budget or not node.remaining:
            continue
        expanded += 1
        left, right = expand(node, ctx.evaluate, ctx.heuristic_fn, ctx.reorder_fn)
        if left is not None:
            generated += 1
            stack.append(left)
        if right is not None:
            generated += 1
            stack.append(right)
    return ctx.result(expanded, generated, t0)


def astar(
    network: NetworkModel,
    catalog: Catalog | None = None,
    budget: int = 1,
    ordering: str = "utility",
    heuristic: str = "h2",
    seed: int = 0,
    pool_size: int = 100,
    utility_cache: dict | None = None,
    graph_cache: dict | None = None,
    path_index: PathIndex | None = None,
) -> SearchResult:
    """Best-first search over the placement tree, highest bound popped first.

    Stops as soon as the best open bound cannot beat the incumbent. Under the
    sound heuristic this expands no more nodes than branch and bound on the
    same tree, at the price of keeping the frontier in memory.
    """
    t0 = time.perf_counter()
    ctx = _SearchContext(
        network, catalog, budget, ordering, heuristic, seed, pool_size, utility_cache, graph_cache, path_index
    )
    root = ctx.root()
    heap: list[tuple[float, int, SearchNode]] = [(-root.f, 0, root)]
    seq = 1
    generated = 1
    expanded = 0
    while heap:
        negf, _, node = heapq.heappop(heap)
        if -negf <= ctx.best_value:
            break
        if len(node.chosen) >= ctx.budget or not node.remaining:
            # solution leaf on top of the frontier: no open subtree can beat
            # the incumbent when the heuristic is sound, so the search ends
            # (with h1 this can return a sub-optimal set, as documented)
            break
        expanded += 1
        left, right = expand(node, ctx.evaluate, ctx.heuristic_fn, ctx.reorder_fn)
        for child in (left, right):
            if child is None:
                continue
            generated += 1
            heapq.heappush(heap, (-child.f, seq, child))
            seq += 1
    return ctx.result(expanded, generated, t0)


def exhaustive_best(
    network: NetworkModel,
    catalog: Catalog | None = None,
    budget: int = 1,
    max_subsets: int = 10_000,
    utility_cache: dict | None = None,
    graph_cache: dict | None = None,
) -> SearchResult:
    """Evaluate every candidate subset up to the budget; the ground truth.

    Refuses instances whose subset count exceeds `max_subsets`. Ties on
    utility go to the smaller, then lexicographically smaller, set; the empty
    set is always evaluated, so the result never loses to doing nothing.
    """
    t0 = time.perf_counter()
    ctx = _SearchContext(
        network, catalog, budget, "utility", "h2", 0, 0, utility_cache, graph_cache, None
    )
    assignments = sorted(c.assignment for c in ctx.candidates)
    total = sum(math.comb(len(assignments), size) for size in range(ctx.budget + 1))
    if total > max_subsets:
        raise ConfigurationError(
            f"{total} subsets exceed the cap of {max_subsets}; shrink the instance or raise max_subsets"
        )
    count = 0
    for size in range(ctx.budget + 1):
        for combo in itertools.combinations(assignments, size):
            ctx.evaluate(frozenset(combo))
            count += 1
    return ctx.result(count, count, t0)
