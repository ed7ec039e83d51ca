"""Command-line surface for the toolkit.

Artifacts (JSON/CSV) are byte-stable for fixed seeds: wall-clock timings are
left out of outputs unless --timings is given, since they would differ
between otherwise identical runs. Exit codes: 0 on success, 2 on validation
or configuration errors, 3 when the goal is unreachable.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import sys
from pathlib import Path

import click

from .aggraph import apply_assignments, build_attack_graph, load_graph
from .attacker import EvaluationReport, evaluate_placement, simulate_attack
from .errors import ConfigurationError, Unreachable, ValidationError
from .fixtures import EXPECTED, FIXTURES
from .netmodel import (
    Assignment,
    Catalog,
    NetworkModel,
    VulnerabilityRecord,
    default_catalog,
    generate_network,
    load_catalog,
)
from .placement_random import random_budget_placement, random_placement
from .placement_search import SearchResult, astar, build_path_index, dfbnb, exhaustive_best

_CSV_COLUMNS = [
    "network_id",
    "n_hosts",
    "approach",
    "budget",
    "n_assignments",
    "p1",
    "p2_states",
    "p2_ms",
    "p3",
    "p4",
    "seed",
    "trial",
    "expanded_nodes",
    "budget_used",
    "search_ms",
    "p4_budget",
    "error",
]


def _guarded(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (ValidationError, ConfigurationError) as exc:
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(2)
        except (OSError, json.JSONDecodeError) as exc:
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(2)
        except Unreachable as exc:
            click.echo(f"error: {exc}", err=True)
            raise SystemExit(3)

    return wrapper


def _dumps(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _catalog_from_option(catalog_path: str | None) -> Catalog:
    if catalog_path:
        return load_catalog(catalog_path)
    return default_catalog()


def _load_network_file(path: str, catalog_path: str | None) -> NetworkModel:
    """Read a network JSON, either bare or bundled with its catalog."""
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict) and "network" in data:
        if catalog_path:
            catalog = load_catalog(catalog_path)
        else:
            catalog = {
                rec["vuln_id"]: VulnerabilityRecord.from_dict(rec) for rec in data.get("catalog", [])
            }
            if not catalog:
                catalog = default_catalog()
        return NetworkModel.from_dict(data["network"], catalog)
    return NetworkModel.from_dict(data, _catalog_from_option(catalog_path))


def _network_bundle(network: NetworkModel) -> dict:
    return {
        "catalog": [network.catalog[k].to_dict() for k in sorted(network.catalog)],
        "network": network.to_dict(),
    }


def _load_assignments(path: str) -> tuple[Assignment, ...]:
    data = json.loads(Path(path).read_text())
    if isinstance(data, dict):
        data = data.get("assignments", [])
    return tuple(sorted(Assignment.from_dict(item) for item in data))


def _assignments_payload(assignments) -> list[dict]:
    return [a.to_dict() for a in sorted(assignments)]


def _report_payload(report: EvaluationReport, timings: bool) -> dict:
    payload = report.to_dict()
    if not timings:
        payload["p2_ms"] = None
        payload["trace"]["planning_effort"].pop("elapsed_ms", None)
    return payload


def _search_payload(result: SearchResult, timings: bool) -> dict:
    payload = result.to_dict()
    if not timings:
        payload.pop("elapsed_ms", None)
    return payload


@click.group()
def main() -> None:
    """Model networks, plant fake vulnerabilities, and measure attacker cost."""


@main.command()
@click.option("--hosts", type=int, required=True, help="Number of hosts to generate.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--dead-hosts", type=int, default=0, show_default=True, help="Hosts with no vulnerabilities.")
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None, help="Output path (stdout when omitted).")
@_guarded
def generate(hosts: int, seed: int, dead_hosts: int, catalog_path: str | None, out: str | None) -> None:
    """Generate a synthetic layered network with its catalog."""
    catalog = _catalog_from_option(catalog_path)
    network = generate_network(hosts, catalog, seed, dead_hosts=dead_hosts)
    _emit(_dumps(_network_bundle(network)), out)


@main.command("build-graph")
@click.option("--network", "network_path", type=click.Path(exists=True), required=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--assignments", "assignments_path", type=click.Path(exists=True), default=None)
@click.option("--out", type=click.Path(), default=None)
@_guarded
def build_graph_cmd(
    network_path: str, catalog_path: str | None, assignments_path: str | None, out: str | None
) -> None:
    """Build the attack graph, with fakes applied when assignments are given."""
    network = _load_network_file(network_path, catalog_path)
    if assignments_path:
        graph = apply_assignments(network, _load_assignments(assignments_path))
    else:
        graph = build_attack_graph(network)
    _emit(graph.to_json(), out)


@main.command()
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--format", "fmt", type=click.Choice(["text", "json"]), default="text", show_default=True)
@click.option("--out", type=click.Path(), default=None)
@_guarded
def plan(graph_path: str, fmt: str, out: str | None) -> None:
    """Compute the cheapest attack plan on a graph, at face value."""
    from .planner import optimal_plan

    graph = load_graph(graph_path)
    result = optimal_plan(graph)
    if fmt == "json":
        _emit(_dumps(result.to_dict()), out)
        return
    lines = [f"cost: {result.cost}"]
    lines += [f"{i + 1}. {exploit}" for i, exploit in enumerate(result.exec_order)]
    _emit("\n".join(lines) + "\n", out)


@main.group()
def obfuscate() -> None:
    """Plant fake vulnerabilities."""


@obfuscate.command("random")
@click.option("--network", "network_path", type=click.Path(exists=True), required=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--fraction", type=float, default=None, help="Fraction of hosts to decorate.")
@click.option("--count", type=int, default=None, help="Exact number of hosts to decorate.")
@click.option("--budget", type=int, default=None, help="Exact number of fakes, drawn network-wide.")
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None)
@click.option("--out-graph", type=click.Path(), default=None, help="Also write the decorated graph.")
@_guarded
def obfuscate_random_cmd(
    network_path: str,
    catalog_path: str | None,
    fraction: float | None,
    count: int | None,
    budget: int | None,
    seed: int,
    out: str | None,
    out_graph: str | None,
) -> None:
    """Place fakes at random (host-fraction, host-count, or flat budget)."""
    network = _load_network_file(network_path, catalog_path)
    modes = [m for m in (fraction, count, budget) if m is not None]
    if len(modes) != 1:
        raise ConfigurationError("give exactly one of --fraction, --count, --budget")
    if budget is not None:
        assignments, graph = random_budget_placement(network, budget, seed)
    elif count is not None:
        assignments, graph = random_placement(network, count, seed)
    else:
        assignments, graph = random_placement(network, fraction, seed)
    payload = {
        "assignments": _assignments_payload(assignments),
        "n_assignments": len(assignments),
        "seed": seed,
    }
    _emit(_dumps(payload), out)
    if out_graph:
        Path(out_graph).write_text(graph.to_json())


@obfuscate.command("search")
@click.option("--network", "network_path", type=click.Path(exists=True), required=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--budget", type=int, required=True)
@click.option(
    "--algorithm",
    type=click.Choice(["dfbnb", "astar", "exhaustive"]),
    default="dfbnb",
    show_default=True,
)
@click.option(
    "--ordering",
    type=click.Choice(["utility", "shortest-path", "random"]),
    default="utility",
    show_default=True,
)
@click.option("--heuristic", type=click.Choice(["h1", "h2"]), default="h2", show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--pool-size", type=int, default=100, show_default=True)
@click.option("--max-subsets", type=int, default=10_000, show_default=True)
@click.option("--timings", is_flag=True, help="Include wall-clock fields (breaks byte-stability).")
@click.option("--out", type=click.Path(), default=None)
@click.option("--out-graph", type=click.Path(), default=None)
@_guarded
def obfuscate_search_cmd(
    network_path: str,
    catalog_path: str | None,
    budget: int,
    algorithm: str,
    ordering: str,
    heuristic: str,
    seed: int,
    pool_size: int,
    max_subsets: int,
    timings: bool,
    out: str | None,
    out_graph: str | None,
) -> None:
    """Search for the placement that maximizes the attacker's cost."""
    network = _load_network_file(network_path, catalog_path)
    if algorithm == "exhaustive":
        result = exhaustive_best(network, budget=budget, max_subsets=max_subsets)
    else:
        engine = dfbnb if algorithm == "dfbnb" else astar
        result = engine(
            network,
            budget=budget,
            ordering=ordering,
            heuristic=heuristic,
            seed=seed,
            pool_size=pool_size,
        )
    payload = {
        "search": _search_payload(result, timings),
        "assignments": _assignments_payload(result.best_assignments),
        "seed": seed,
    }
    _emit(_dumps(payload), out)
    if out_graph:
        graph = apply_assignments(network, result.best_assignments)
        Path(out_graph).write_text(graph.to_json())


@main.command()
@click.option("--network", "network_path", type=click.Path(exists=True), default=None)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--assignments", "assignments_path", type=click.Path(exists=True), default=None)
@click.option("--graph", "graph_path", type=click.Path(exists=True), default=None)
@click.option("--timings", is_flag=True)
@click.option("--out", type=click.Path(), default=None)
@_guarded
def simulate(
    network_path: str | None,
    catalog_path: str | None,
    assignments_path: str | None,
    graph_path: str | None,
    timings: bool,
    out: str | None,
) -> None:
    """Replay the attacker's plan/fail/replan loop and emit the trace."""
    if network_path:
        network = _load_network_file(network_path, catalog_path)
        assignments = _load_assignments(assignments_path) if assignments_path else ()
        graph = apply_assignments(network, assignments)
    elif graph_path:
        graph = load_graph(graph_path)
        if graph.fake_configs():
            raise ConfigurationError(
                "a serialized graph cannot be replanned past a fake; "
                "pass --network and --assignments instead"
            )
    else:
        raise ConfigurationError("give --network (with optional --assignments) or --graph")
    trace = simulate_attack(graph)
    payload = trace.to_dict()
    if not timings:
        payload["planning_effort"].pop("elapsed_ms", None)
    _emit(_dumps(payload), out)


@main.command()
@click.option("--network", "network_path", type=click.Path(exists=True), required=True)
@click.option("--catalog", "catalog_path", type=click.Path(exists=True), default=None)
@click.option("--assignments", "assignments_path", type=click.Path(exists=True), required=True)
@click.option("--seed", type=int, default=0, show_default=True)
@click.option("--format", "fmt", type=click.Choice(["json", "csv"]), default="json", show_default=True)
@click.option("--timings", is_flag=True)
@click.option("--out", type=click.Path(), default=None)
@_guarded
def evaluate(
    network_path: str,
    catalog_path: str | None,
    assignments_path: str,
    seed: int,
    fmt: str,
    timings: bool,
    out: str | None,
) -> None:
    """Evaluate a placement: recalculations, effort, cost ratio, precision."""
    network = _load_network_file(network_path, catalog_path)
    assignments = _load_assignments(assignments_path)
    report = evaluate_placement(network, assignments, seed=seed)
    if fmt == "json":
        _emit(_dumps(_report_payload(report, timings)), out)
        return
    row = {
        "network_id": Path(network_path).stem,
        "n_hosts": network.n_hosts,
        "approach": "evaluate",
        "budget": "",
        "n_assignments": report.n_assignments,
        "p1": report.p1,
        "p2_states": report.p2.expanded_states,
        "p2_ms": report.p2.elapsed_ms if timings else "",
        "p3": report.p3,
        "p4": report.p4,
        "seed": seed,
        "trial": 0,
        "expanded_nodes": "",
        "budget_used": "",
        "search_ms": "",
        "p4_budget": "",
        "error": "",
    }
    _emit(_rows_to_csv([row]), out)


def _rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=_CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def _approach_label(approach: dict) -> str:
    name = approach.get("name", "")
    if name == "random-hosts":
        return f"random-hosts:{approach.get('fraction')}"
    if name == "search":
        return ":".join(
            [
                "search",
                approach.get("algorithm", "dfbnb"),
                approach.get("heuristic", "h2"),
                approach.get("ordering", "utility"),
            ]
        )
    return name


class _NetworkContext:
    """Per-network caches shared by every cell of a sweep."""

    def __init__(self, network_id: str, network: NetworkModel):
        self.network_id = network_id
        self.network = network
        self.utility_cache: dict = {}
        self.graph_cache: dict = {}
        self.path_index = None

    def index(self, pool_size: int):
        if self.path_index is None:
            from .placement_search import enumerate_candidates

            candidates = enumerate_candidates(self.network)
            self.path_index = build_path_index(
                self.network,
                [c.assignment for c in candidates],
                pool_size=pool_size,
            )
        return self.path_index


def _sweep_cell(
    ctx: _NetworkContext,
    approach: dict,
    budget: int,
    trial: int,
    seed: int,
    timings: bool,
) -> dict:
    name = approach.get("name", "")
    row = {
        "network_id": ctx.network_id,
        "n_hosts": ctx.network.n_hosts,
        "approach": _approach_label(approach),
        "budget": budget,
        "seed": seed,
        "trial": trial,
        "n_assignments": "",
        "p1": "",
        "p2_states": "",
        "p2_ms": "",
        "p3": "",
        "p4": "",
        "expanded_nodes": "",
        "budget_used": "",
        "search_ms": "",
        "p4_budget": "",
        "error": "",
    }
    try:
        result = None
        if name == "random":
            assignments, _ = random_budget_placement(ctx.network, budget, seed)
        elif name == "random-hosts":
            assignments, _ = random_placement(ctx.network, approach["fraction"], seed)
        elif name == "search":
            algorithm = approach.get("algorithm", "dfbnb")
            if algorithm == "exhaustive":
                result = exhaustive_best(
                    ctx.network,
                    budget=budget,
                    max_subsets=approach.get("max_subsets", 10_000),
                    utility_cache=ctx.utility_cache,
                    graph_cache=ctx.graph_cache,
                )
            else:
                engine = dfbnb if algorithm == "dfbnb" else astar
                ordering = approach.get("ordering", "utility")
                pool_size = approach.get("pool_size", 100)
                index = ctx.index(pool_size) if ordering in ("shortest_path", "shortest-path") else None
                result = engine(
                    ctx.network,
                    budget=budget,
                    ordering=ordering,
                    heuristic=approach.get("heuristic", "h2"),
                    seed=seed,
                    pool_size=pool_size,
                    utility_cache=ctx.utility_cache,
                    graph_cache=ctx.graph_cache,
                    path_index=index,
                )
            assignments = result.best_assignments
        else:
            raise ConfigurationError(f"unknown approach {name!r}")
        report = evaluate_placement(ctx.network, assignments, seed=seed, graph_cache=ctx.graph_cache)
        row.update(
            {
                "n_assignments": report.n_assignments,
                "p1": report.p1,
                "p2_states": report.p2.expanded_states,
                "p2_ms": report.p2.elapsed_ms if timings else "",
                "p3": report.p3,
                "p4": report.p4,
            }
        )
        if budget:
            row["p4_budget"] = (report.p1 - 1) / budget
        if result is not None:
            row["expanded_nodes"] = result.expanded_nodes
            row["budget_used"] = result.budget_used
            row["search_ms"] = result.elapsed_ms if timings else ""
    except (ValidationError, ConfigurationError, Unreachable) as exc:
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def _summarize(rows: list[dict]) -> dict:
    cells: dict[tuple, dict] = {}
    for row in rows:
        key = (row["network_id"], row["approach"], row["budget"])
        cell = cells.setdefault(
            key,
            {
                "network_id": row["network_id"],
                "approach": row["approach"],
                "budget": row["budget"],
                "trials": 0,
                "errors": 0,
                "_ok": [],
            },
        )
        cell["trials"] += 1
        if row["error"]:
            cell["errors"] += 1
        else:
            cell["_ok"].append(row)
    out = []
    for key in sorted(cells, key=lambda k: (str(k[0]), str(k[1]), str(k[2]))):
        cell = cells[key]
        ok = cell.pop("_ok")
        for field in ("p1", "p3", "p4", "p2_states", "n_assignments"):
            values = [float(r[field]) for r in ok if r[field] != ""]
            cell[f"mean_{field}"] = sum(values) / len(values) if values else None
        expanded = [float(r["expanded_nodes"]) for r in ok if r["expanded_nodes"] != ""]
        cell["mean_expanded_nodes"] = sum(expanded) / len(expanded) if expanded else None
        out.append(cell)
    return {"cells": out}


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), required=True, help="Results CSV path.")
@click.option("--summary", "summary_path", type=click.Path(), default=None, help="Summary JSON path.")
@click.option("--timings", is_flag=True)
@_guarded
def sweep(spec_path: str, out: str, summary_path: str | None, timings: bool) -> None:
    """Run an experiment grid: networks x approaches x budgets x trials.

    The spec JSON carries: networks (generator specs {hosts, seed} or file
    refs {path}), optional catalog path, budgets, approaches, trials, and
    base_seed; trial seeds are base_seed + trial index.
    """
    spec = json.loads(Path(spec_path).read_text())
    catalog_path = spec.get("catalog")
    budgets = spec.get("budgets", [1])
    approaches = spec.get("approaches", [{"name": "random"}])
    trials = int(spec.get("trials", 1))
    base_seed = int(spec.get("base_seed", 0))
    rows: list[dict] = []
    for net_spec in spec.get("networks", []):
        if "path" in net_spec:
            network = _load_network_file(net_spec["path"], catalog_path)
            network_id = net_spec.get("id", Path(net_spec["path"]).stem)
        else:
            catalog = _catalog_from_option(catalog_path)
            network = generate_network(
                int(net_spec["hosts"]),
                catalog,
                int(net_spec.get("seed", 0)),
                dead_hosts=int(net_spec.get("dead_hosts", 0)),
            )
            network_id = net_spec.get("id", f"gen-{net_spec['hosts']}-{net_spec.get('seed', 0)}")
        ctx = _NetworkContext(network_id, network)
        for approach in approaches:
            for budget in budgets:
                for trial in range(trials):
                    seed = base_seed + trial
                    rows.append(_sweep_cell(ctx, approach, int(budget), trial, seed, timings))
    Path(out).write_text(_rows_to_csv(rows))
    summary_file = summary_path or str(Path(out).with_suffix(".summary.json"))
    Path(summary_file).write_text(_dumps(_summarize(rows)))
    click.echo(f"wrote {len(rows)} rows to {out}", err=True)


@main.command("export-fixture")
@click.argument("name", type=click.Choice(sorted(FIXTURES)))
@click.option("--out", type=click.Path(), default=None)
@_guarded
def export_fixture(name: str, out: str | None) -> None:
    """Write a built-in example network (with catalog and expected values)."""
    network = FIXTURES[name]()
    bundle = _network_bundle(network)
    bundle["expected"] = EXPECTED[name]
    _emit(_dumps(bundle), out)


@main.command("to-dot")
@click.option("--graph", "graph_path", type=click.Path(exists=True), required=True)
@click.option("--out", type=click.Path(), default=None)
@_guarded
def to_dot(graph_path: str, out: str | None) -> None:
    """Render an attack graph as Graphviz DOT."""
    graph = load_graph(graph_path)
    _emit(graph.to_dot(), out)


if __name__ == "__main__":
    main()
