"""Shared test utilities: random graph and network builders.

The random attack-graph builder produces general AND/OR structure directly
(multi-requirement exploits, shared configs, zero costs, occasional cycles),
independent of the network-model rules, so the planner is exercised beyond
the shapes the generator emits. Costs come from a dyadic palette so equal
plan costs compare exactly as floats.
"""

from __future__ import annotations

import random

from decoygraph.aggraph import AttackGraph
from decoygraph.netmodel import (
    EXTERNAL,
    CvssVersion,
    Goal,
    Host,
    Layer,
    NetworkModel,
    VulnerabilityRecord,
    default_catalog,
    generate_network,
)

# dyadic values with repeats to encourage cost ties
COST_PALETTE = [0.0, 0.125, 0.25, 0.25, 0.375, 0.5, 0.5, 0.75, 1.0]


def random_attack_graph(
    rng: random.Random,
    max_privs: int = 7,
    max_exploits: int = 12,
    max_configs: int = 10,
) -> AttackGraph:
    """Build a random fake-free AND/OR graph, not necessarily solvable."""
    n_p = rng.randint(2, max_privs)
    n_e = rng.randint(2, max_exploits)
    n_c = rng.randint(2, max_configs)
    privs = [f"pv{i}" for i in range(n_p)]
    configs = [f"cf{i}" for i in range(n_c)]
    exploits = [f"ex{i}" for i in range(n_e)]
    source = privs[0]
    goal = privs[-1]
    grantable = privs[1:]
    edges: set[tuple[str, str]] = set()
    for ex in exploits:
        n_priv_req = rng.randint(0, 2)
        priv_req = rng.sample(privs, min(n_priv_req, len(privs)))
        n_cfg_req = rng.randint(0 if priv_req else 1, 2)
        cfg_req = rng.sample(configs, min(n_cfg_req, len(configs)))
        for p in priv_req:
            edges.add((ex, p))
        for c in cfg_req:
            edges.add((ex, c))
        target = rng.choice(grantable)
        edges.add((target, ex))
        # occasionally grant a second privilege
        if rng.random() < 0.25:
            edges.add((rng.choice(grantable), ex))
    # every non-source privilege needs at least one granting exploit
    for p in grantable:
        if not any(src == p for src, dst in edges if dst in set(exploits)):
            edges.add((p, rng.choice(exploits)))
    return AttackGraph(
        privilege_nodes=frozenset(privs),
        exploit_nodes=frozenset(exploits),
        config_nodes=frozenset(configs),
        edges=frozenset(edges),
        goal=goal,
        source=source,
        config_cost={c: rng.choice(COST_PALETTE) for c in configs},
        fake_flag={c: False for c in configs},
        provenance={},
    )


def small_network(rng: random.Random, max_hosts: int = 8) -> NetworkModel:
    n = rng.randint(3, max_hosts)
    return generate_network(n, default_catalog(), seed=rng.randrange(10**6))


def _vuln(vuln_id: str, os: str, subscore: float) -> VulnerabilityRecord:
    return VulnerabilityRecord(
        vuln_id=vuln_id,
        cvss_version=CvssVersion.V2,
        exploitability_subscore=subscore,
        affected_os=frozenset({os}),
    )


def eight_candidate_net() -> NetworkModel:
    """Four-host chain with two differently priced lures per host.

    Eight plantable candidates survive dedup (distinct costs per host), small
    enough for full search-tree enumeration at budget 3.
    """
    hosts: dict[str, Host] = {}
    catalog: dict[str, VulnerabilityRecord] = {}
    edges: set[tuple[str, str]] = set()
    layers = (Layer.DMZ, Layer.INTERNAL, Layer.INTERNAL, Layer.SECURED)
    prev = EXTERNAL
    for i, layer in zip(range(1, 5), layers):
        hid = f"g{i}"
        os = f"os-{hid}"
        rv = f"rv-{hid}"
        catalog[rv] = _vuln(rv, os, 10.0)
        catalog[f"wa-{hid}"] = _vuln(f"wa-{hid}", os, 5.0)
        catalog[f"wb-{hid}"] = _vuln(f"wb-{hid}", os, 2.5)
        hosts[hid] = Host(host_id=hid, os=os, installed_vulns=frozenset({rv}), layer=layer)
        edges.add((prev, hid))
        prev = hid
    return NetworkModel(
        hosts=hosts,
        reachability=frozenset(edges),
        attacker_entry=EXTERNAL,
        goal=Goal(host_id="g4"),
        catalog=catalog,
    )
