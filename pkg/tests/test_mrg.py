import itertools
import json
import re

import pytest

from cgrnet.mrg import (
    TASKS,
    UNTYPED,
    NodeId,
    Relation,
    build_mrg,
    export_dot,
    export_edges_json,
    neighbors,
    parse_node_label,
    relation_counts,
    relation_types,
    reverse_relation,
)


def table_rows(gamma):
    """Relation table: name -> (source task, target task, allowed rdis values)."""
    span = set(range(-gamma, gamma + 1))
    rows = {
        "cc": ("c", "c", span - {0}),
        "tt": ("t", "t", span - {0}),
        "ee": ("e", "e", span - {0}),
        "ct": ("c", "t", {0}),
        "tc": ("t", "c", {0}),
    }
    for d in sorted(span):
        rows[f"te:{d}"] = ("t", "e", {d})
        rows[f"et:{d}"] = ("e", "t", {d})
    return rows


def brute_force_edges(n, gamma):
    rows = table_rows(gamma)
    nodes = [(task, i) for task in "cte" for i in range(1, n + 1)]
    edges = set()
    for (ta, i), (tb, j) in itertools.product(nodes, nodes):
        for name, (src, dst, allowed) in rows.items():
            if ta == src and tb == dst and (j - i) in allowed:
                edges.add((ta, i, tb, j, name))
    return edges


def as_tuples(graph):
    return {(s.label[0], s.index, t.label[0], t.index, r.name) for s, t, r in graph.edges}


def test_single_clause_graph():
    g = build_mrg(1, 2, "full")
    assert len(g.nodes) == 3
    assert {(s.label, t.label, r.name) for s, t, r in g.edges} == {
        ("c1", "t1", "ct"),
        ("t1", "c1", "tc"),
        ("t1", "e1", "te:0"),
        ("e1", "t1", "et:0"),
    }


def test_te_plus_one_count():
    g = build_mrg(3, 1, "full")
    te1 = [(s.label, t.label) for s, t, r in g.edges if r == Relation("te", 1)]
    brute = [e for e in brute_force_edges(3, 1) if e[4] == "te:1"]
    assert len(te1) == len(brute) == 2
    assert sorted(te1) == [("t1", "e2"), ("t2", "e3")]


def test_node_count():
    assert len(build_mrg(4, 2).nodes) == 12


def test_relation_count_gamma_two():
    assert len(relation_types(2)) == 15
    names = [r.name for r in relation_types(2)]
    assert names[:5] == ["cc", "tt", "ee", "ct", "tc"]


@pytest.mark.parametrize("n", [1, 2, 5, 9])
@pytest.mark.parametrize("gamma", [1, 2, 3])
def test_full_graph_matches_brute_force(n, gamma):
    assert as_tuples(build_mrg(n, gamma)) == brute_force_edges(n, gamma)


@pytest.mark.parametrize(
    "r, expected",
    [
        (Relation("ct"), Relation("tc")),
        (Relation("te", 0), Relation("et", 0)),
        (Relation("et", -2), Relation("te", 2)),
        (Relation("cc"), Relation("cc")),
    ],
)
def test_reverse_relation(r, expected):
    assert reverse_relation(r) == expected
    assert reverse_relation(expected) == r


def test_reverse_matches_edge_pairs():
    g = build_mrg(6, 2)
    edge_set = set(g.edges)
    for s, t, r in g.edges:
        assert (t, s, reverse_relation(r)) in edge_set


@pytest.mark.parametrize("variant", ["full", "norel"])
def test_direction_symmetry(variant):
    g = build_mrg(7, 3, variant)
    edge_set = set(g.edges)
    for s, t, r in g.edges:
        assert (t, s, reverse_relation(r)) in edge_set


@pytest.mark.parametrize("variant", ["full", "owm", "norel"])
def test_locality(variant):
    g = build_mrg(10, 2, variant)
    assert all(abs(t.index - s.index) <= 2 for s, t, _ in g.edges)


def test_neighbors_examples():
    g = build_mrg(3, 1)
    assert neighbors(g, NodeId("tag", 2), Relation("et", 1)) == [NodeId("emotion", 1)]
    assert g.neighbors(NodeId("cause", 2), Relation("et", 1)) == []
    assert neighbors(build_mrg(3, 1, "owm"), NodeId("cause", 1), Relation("tc")) == []


def test_neighbors_order():
    g = build_mrg(5, 2, "norel")
    got = neighbors(g, NodeId("tag", 3), UNTYPED)
    assert got == sorted(got, key=lambda x: (x.index, TASKS.index(x.task)))
    assert NodeId("cause", 3) in got and NodeId("emotion", 5) in got


def test_owm_removes_only_tag_outgoing_cross_edges():
    full, owm = build_mrg(6, 2), build_mrg(6, 2, "owm")
    removed = set(full.edges) - set(owm.edges)
    assert set(owm.edges) <= set(full.edges)
    assert removed == {e for e in full.edges if e[2].kind in ("tc", "te")}
    assert all(s.task == "tag" and t.task != "tag" for s, t, _ in removed)


def test_norel_keeps_topology():
    full, norel = build_mrg(6, 3), build_mrg(6, 3, "norel")
    assert {(s, t) for s, t, _ in full.edges} == {(s, t) for s, t, _ in norel.edges}
    assert norel.relations == (UNTYPED,)


def test_fcg_tag_nodes_see_everything():
    n = 6
    g = build_mrg(n, 1, "fcg")
    pairs = {(s, t) for s, t, _ in g.edges}
    for i, j in itertools.product(range(1, n + 1), repeat=2):
        for other in ("cause", "emotion"):
            assert (NodeId("tag", i), NodeId(other, j)) in pairs
            assert (NodeId(other, j), NodeId("tag", i)) in pairs
    assert all(r == UNTYPED for _, _, r in g.edges)


def test_no_duplicate_edges_and_no_self_loops():
    for variant in ("full", "owm", "norel", "fcg"):
        g = build_mrg(5, 2, variant)
        assert len(set(g.edges)) == len(g.edges)
        assert all(s != t for s, t, _ in g.edges)


def test_unknown_variant():
    with pytest.raises(ValueError):
        build_mrg(3, 1, "dense")


def test_message_index_weights_are_inverse_fan_in():
    g = build_mrg(5, 2)
    src, dst, rel, weight = g.message_index
    for k in range(len(src)):
        node = g.nodes[[g.node_position(x) for x in g.nodes].index(dst[k])]
        fan_in = len(neighbors(g, node, g.relations[rel[k]]))
        assert weight[k] == pytest.approx(1 / fan_in)


def test_relation_counts_sum_to_edges():
    g = build_mrg(8, 3)
    counts = relation_counts(g)
    assert sum(counts.values()) == len(g.edges)
    assert counts["te:3"] == 5


# -- exports -------------------------------------------------------------------------


def parse_dot(text):
    nodes = re.findall(r'^\s*"(\w+)" \[task=', text, flags=re.M)
    edges = re.findall(r'^\s*"(\w+)" -> "(\w+)" \[label="([^"]+)"\];', text, flags=re.M)
    return nodes, edges


def test_dot_single_clause():
    text = export_dot(build_mrg(1, 2))
    assert text.startswith("digraph")
    nodes, edges = parse_dot(text)
    assert len(nodes) == 3 and len(edges) == 4


def test_dot_round_trip():
    g = build_mrg(7, 3, "owm")
    nodes, edges = parse_dot(export_dot(g))
    assert len(nodes) == 3 * g.n
    assert sum(1 for line in export_dot(g).splitlines() if "->" in line) == len(g.edges)
    rebuilt = {(parse_node_label(a), parse_node_label(b), Relation.parse(r)) for a, b, r in edges}
    assert rebuilt == set(g.edges)


def test_edges_json():
    g = build_mrg(2, 1)
    rows = json.loads(export_edges_json(g))
    assert len(rows) == len(g.edges)
    assert ["tag", 1, "emotion", 2, "te:1"] in rows
