from __future__ import annotations

import dataclasses
import random

import pytest
from hypothesis import given
from hypothesis import strategies as st

from decoygraph.aggraph import (
    NodeKind,
    apply_assignments,
    build_attack_graph,
    config_id,
    config_owner,
    exploit_id,
    load_graph,
    priv_id,
    remove_assignment,
    save_graph,
    validate_graph,
)
from decoygraph.errors import ValidationError
from decoygraph.netmodel import Assignment, default_catalog, generate_network


def test_node_id_helpers_round_trip():
    assert config_owner(config_id("h7", "CVE-1")) == ("h7", "CVE-1")
    assert priv_id("h7") != exploit_id("h7", "CVE-1", "h6")


class TestBuild:
    def test_kinds_are_disjoint(self, chain_graph):
        g = chain_graph
        assert not (g.privilege_nodes & g.exploit_nodes)
        assert not (g.privilege_nodes & g.config_nodes)
        assert not (g.exploit_nodes & g.config_nodes)

    def test_edges_point_to_requirements(self, chain_graph):
        g = chain_graph
        for exploit in g.exploit_nodes:
            priv_req, cfg_req = g.requirements[exploit]
            # the one remote rule: one privilege plus one config per exploit
            assert len(priv_req) == 1 and len(cfg_req) == 1
            assert priv_req[0] in g.privilege_nodes
            assert cfg_req[0] in g.config_nodes

    def test_goal_and_source_present(self, chain_graph):
        assert chain_graph.goal in chain_graph.privilege_nodes
        assert chain_graph.source in chain_graph.privilege_nodes

    def test_costs_in_unit_interval(self, lure_graph):
        assert set(lure_graph.config_cost) == lure_graph.config_nodes
        assert all(0.0 <= c <= 1.0 for c in lure_graph.config_cost.values())

    def test_baseline_has_no_fakes(self, lure_graph):
        assert not lure_graph.fake_configs()
        assert lure_graph.provenance == {}

    def test_unreachable_branches_are_absent(self, lure_graph):
        # f1/f2 have no real vulnerabilities, so the baseline graph must not
        # materialize privileges for them
        assert priv_id("f1") not in lure_graph.privilege_nodes
        assert priv_id("f2") not in lure_graph.privilege_nodes

    def test_validates_clean(self, chain_graph, lure_graph):
        assert validate_graph(chain_graph) == []
        assert validate_graph(lure_graph) == []

    def test_deterministic(self, chain_net):
        assert build_attack_graph(chain_net).to_json() == build_attack_graph(chain_net).to_json()


class TestApplyAssignments:
    def test_fake_configs_flagged_with_provenance(self, lure_net):
        both = [Assignment("f1", "fv-1"), Assignment("f2", "fv-2")]
        g = apply_assignments(lure_net, both)
        fakes = g.fake_configs()
        assert fakes == {config_id("f1", "fv-1"), config_id("f2", "fv-2")}
        assert {g.provenance[c] for c in fakes} == set(both)
        assert validate_graph(g) == []

    def test_duplicates_collapse(self, lure_net):
        a = Assignment("f1", "fv-1")
        assert apply_assignments(lure_net, [a, a]) == apply_assignments(lure_net, [a])

    def test_assignment_nodes_partition(self, lure_net):
        both = [Assignment("f1", "fv-1"), Assignment("f2", "fv-2")]
        g = apply_assignments(lure_net, both)
        parts = g.assignment_nodes()
        assert set(parts) == set(both)
        seen = set()
        for nodes in parts.values():
            assert not (nodes & seen)
            seen |= nodes
        assert seen == set(g.provenance)

    def test_downstream_nodes_inherit_the_enabling_assignment(self, lure_net):
        # d1 is only reachable through the fake on f2, so its exploit and
        # config exist because of that assignment and vanish with it
        both = [Assignment("f1", "fv-1"), Assignment("f2", "fv-2")]
        g = apply_assignments(lure_net, both)
        d1_cfg = config_id("d1", "rv-d1")
        assert d1_cfg in g.config_nodes
        assert g.provenance[d1_cfg] == Assignment("f2", "fv-2")
        assert not g.fake_flag[d1_cfg]

    def test_invalid_assignment_rejected(self, lure_net):
        with pytest.raises(ValidationError):
            apply_assignments(lure_net, [Assignment("a01", "fv-1")])


class TestRemoveAssignment:
    def test_remove_restores_baseline(self, lure_net, lure_graph):
        a = Assignment("f1", "fv-1")
        g = apply_assignments(lure_net, [a])
        assert remove_assignment(g, a) == lure_graph

    def test_remove_one_of_two(self, lure_net):
        a1, a2 = Assignment("f1", "fv-1"), Assignment("f2", "fv-2")
        g = apply_assignments(lure_net, [a1, a2])
        assert remove_assignment(g, a1) == apply_assignments(lure_net, [a2])

    def test_remove_unapplied_rejected(self, lure_net, lure_graph):
        with pytest.raises(ValidationError):
            remove_assignment(lure_graph, Assignment("f1", "fv-1"))

    def test_remove_without_origin_rejected(self, lure_net, tmp_path):
        a = Assignment("f1", "fv-1")
        g = apply_assignments(lure_net, [a])
        path = tmp_path / "g.json"
        save_graph(g, path)
        loaded = load_graph(path)
        with pytest.raises(ValidationError):
            remove_assignment(loaded, a)


class TestSerialization:
    def test_round_trip(self, lure_net, tmp_path):
        g = apply_assignments(lure_net, [Assignment("f1", "fv-1")])
        path = tmp_path / "g.json"
        save_graph(g, path)
        assert load_graph(path) == g

    def test_to_dot_markers(self, lure_net):
        g = apply_assignments(lure_net, [Assignment("f1", "fv-1")])
        dot = g.to_dot()
        assert dot.startswith("digraph")
        assert "dashed" in dot  # fake config
        assert "penwidth" in dot  # goal highlight

    def test_json_is_stable(self, lure_graph):
        assert lure_graph.to_json() == lure_graph.to_json()


class TestValidateCatchesTampering:
    def test_cost_out_of_range(self, chain_graph):
        costs = dict(chain_graph.config_cost)
        costs[sorted(costs)[0]] = 1.5
        bad = dataclasses.replace(chain_graph, config_cost=costs)
        assert any("cost" in issue for issue in validate_graph(bad))

    def test_fake_flag_without_provenance(self, chain_graph):
        flags = dict(chain_graph.fake_flag)
        flags[sorted(flags)[0]] = True
        bad = dataclasses.replace(chain_graph, fake_flag=flags)
        assert validate_graph(bad)

    def test_missing_goal(self, chain_graph):
        bad = dataclasses.replace(chain_graph, goal="p|h:ghost")
        assert any("goal" in issue for issue in validate_graph(bad))

    def test_dangling_edge(self, chain_graph):
        edges = set(chain_graph.edges)
        edges.add((chain_graph.goal, "c|h:ghost|v:x"))
        bad = dataclasses.replace(chain_graph, edges=frozenset(edges))
        assert validate_graph(bad)


@given(st.integers(min_value=3, max_value=10), st.integers(min_value=0, max_value=30))
def test_generated_graphs_always_validate(n, seed):
    net = generate_network(n, default_catalog(), seed=seed)
    g = build_attack_graph(net)
    assert validate_graph(g) == []
    assert set(g.config_cost) == g.config_nodes
    assert set(g.fake_flag) == g.config_nodes


@given(st.integers(min_value=0, max_value=40))
def test_apply_then_remove_all_is_identity(seed):
    rng = random.Random(seed)
    net = generate_network(rng.randint(3, 7), default_catalog(), seed=seed)
    baseline = build_attack_graph(net)
    from decoygraph.placement_random import random_budget_placement

    placement, g = random_budget_placement(net, 3, seed=seed)
    assert validate_graph(g) == []
    for a in sorted(placement):
        g = remove_assignment(g, a)
    assert g == baseline


def test_node_kind_values():
    assert (NodeKind.PRIVILEGE, NodeKind.EXPLOIT, NodeKind.CONFIG) == (
        "privilege",
        "exploit",
        "config",
    )
