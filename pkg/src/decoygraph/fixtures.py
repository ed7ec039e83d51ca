"""Hand-built networks with worked-out expected values.

Two instances small enough to verify by hand but rich enough to exercise the
interesting behavior: one where the optimistic heuristic underestimates the
combined effect of two lures, and a three-host chain whose full placement
tree is enumerable. The expected numbers next to each builder were derived
by tracing the attacker by hand; tests assert them exactly.
"""

from __future__ import annotations

from .netmodel import (
    EXTERNAL,
    Catalog,
    CvssVersion,
    Goal,
    Host,
    Layer,
    NetworkModel,
    VulnerabilityRecord,
)


def _record(vuln_id: str, os: str, subscore: float) -> VulnerabilityRecord:
    return VulnerabilityRecord(
        vuln_id=vuln_id,
        cvss_version=CvssVersion.V2,
        exploitability_subscore=subscore,
        affected_os=frozenset({os}),
    )


def _chain(prefix: str, length: int) -> list[str]:
    return [f"{prefix}{i:02d}" for i in range(1, length + 1)]


def build_h1_counterexample() -> NetworkModel:
    """Two dead-end decoy hosts whose combined lure beats its parts.

    The real goal path costs 10. Host f1 is reachable but leads nowhere on
    its own; f2 likewise. Planted together they open a fake shortcut that
    drags the attacker through three replanning rounds totalling 22, while
    each alone changes nothing (utility 10 each). The optimistic root bound
    10 + 10 = 20 therefore undershoots the true optimum 22; the sound bound
    is 10 + 20 = 30.
    """
    a = _chain("a", 10)
    b = _chain("b", 5)
    c = _chain("c", 6)
    e = _chain("e", 8)
    real_hosts = a + b + c + e + ["d1"]
    catalog: Catalog = {}
    hosts: dict[str, Host] = {}
    for host_id in real_hosts:
        vuln_id = f"rv-{host_id}"
        catalog[vuln_id] = _record(vuln_id, f"os-{host_id}", 10.0)
        if host_id in (a[0], b[0]):
            layer = Layer.DMZ
        elif host_id == a[-1]:
            layer = Layer.SECURED
        else:
            layer = Layer.INTERNAL
        hosts[host_id] = Host(
            host_id=host_id,
            os=f"os-{host_id}",
            installed_vulns=frozenset({vuln_id}),
            layer=layer,
        )
    catalog["fv-1"] = _record("fv-1", "os-f1", 10.0)
    catalog["fv-2"] = _record("fv-2", "os-f2", 10.0)
    hosts["f1"] = Host(host_id="f1", os="os-f1")
    hosts["f2"] = Host(host_id="f2", os="os-f2")

    edges: list[tuple[str, str]] = [(EXTERNAL, a[0]), (EXTERNAL, b[0])]
    for chain in (a, b, c, e):
        edges.extend(zip(chain, chain[1:]))
    edges.append((b[-1], c[0]))
    edges.append((c[-1], e[0]))
    edges.append((e[-1], a[-1]))
    edges.append((b[-1], "f1"))
    edges.append(("f1", "f2"))
    edges.append((c[-1], "f2"))
    edges.append(("f2", "d1"))
    edges.append(("d1", a[-1]))

    return NetworkModel(
        hosts=hosts,
        reachability=frozenset(edges),
        attacker_entry=EXTERNAL,
        goal=Goal(host_id=a[-1]),
        catalog=catalog,
    )


H1_COUNTEREXAMPLE_EXPECTED = {
    "baseline_cost": 10.0,
    "candidates": (("f1", "fv-1"), ("f2", "fv-2")),
    "budget": 2,
    "decorated_optimal_cost": 9.0,
    "simulated_total_cost": 22.0,
    "iteration_payments": (6.0, 7.0, 9.0),
    "recalculations": 3,
    "singleton_utilities": (10.0, 10.0),
    "h1_root": 20.0,
    "h2_root": 30.0,
    "best_utility": 22.0,
}


def build_searchspace_k2() -> NetworkModel:
    """A three-host chain whose placement tree is fully enumerable.

    One real vulnerability of cost 1 per host, one plantable fake of cost 0.5
    per host. Every singleton placement yields attacker cost 3.5, every pair
    4.0, so a budget of two has a three-way tie broken toward the smallest
    assignment pair.
    """
    hosts: dict[str, Host] = {}
    catalog: Catalog = {}
    layers = {1: Layer.DMZ, 2: Layer.INTERNAL, 3: Layer.SECURED}
    for i in (1, 2, 3):
        host_id = f"h{i}"
        real = f"rv-{host_id}"
        fake = f"w{i}"
        catalog[real] = _record(real, f"os-{host_id}", 10.0)
        catalog[fake] = _record(fake, f"os-{host_id}", 5.0)
        hosts[host_id] = Host(
            host_id=host_id,
            os=f"os-{host_id}",
            installed_vulns=frozenset({real}),
            layer=layers[i],
        )
    edges = frozenset({(EXTERNAL, "h1"), ("h1", "h2"), ("h2", "h3")})
    return NetworkModel(
        hosts=hosts,
        reachability=edges,
        attacker_entry=EXTERNAL,
        goal=Goal(host_id="h3"),
        catalog=catalog,
    )


SEARCHSPACE_K2_EXPECTED = {
    "baseline_cost": 3.0,
    "candidates": (("h1", "w1"), ("h2", "w2"), ("h3", "w3")),
    "budget": 2,
    "singleton_utility": 3.5,
    "pair_utility": 4.0,
    "best_utility": 4.0,
    "best_set": (("h1", "w1"), ("h2", "w2")),
    "subsets_up_to_budget": 7,
}


FIXTURES = {
    "h1-counterexample": build_h1_counterexample,
    "searchspace-k2": build_searchspace_k2,
}

EXPECTED = {
    "h1-counterexample": H1_COUNTEREXAMPLE_EXPECTED,
    "searchspace-k2": SEARCHSPACE_K2_EXPECTED,
}
