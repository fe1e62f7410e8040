import math

import networkx as nx
import numpy as np
import pytest
from hypothesis import given, strategies as st

from dpsublinear.graph import (Graph, GraphError, GraphFormatError, OracleHandle, complete,
                               d_regular, degree_query, empty, enumerate_neighbors, generate, gnp,
                               load_edge_list, neighbor_query, parse_edge_list, path,
                               perfect_matching, save_edge_list, star)


@st.composite
def graphs(draw, max_n=9):
    n = draw(st.integers(1, max_n))
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    chosen = draw(st.lists(st.sampled_from(pairs), unique=True)) if pairs else []
    return Graph.from_edges(n, chosen)


def test_star_degrees():
    h = OracleHandle(star(5))
    assert degree_query(h, 0) == 4
    assert degree_query(h, 3) == 1
    assert h.degree_queries == 2


def test_isolated_vertex_degree():
    assert degree_query(OracleHandle(empty(3)), 1) == 0


def test_neighbor_queries_path_and_triangle():
    h = OracleHandle(path(3))
    assert neighbor_query(h, 1, 2) == 2
    assert neighbor_query(h, 0, 2) is None
    assert neighbor_query(OracleHandle(complete(3)), 0, 1) == 1
    assert h.neighbor_queries == 2


@pytest.mark.parametrize("v", [-1, 3, 100])
def test_out_of_range_vertex(v):
    h = OracleHandle(path(3))
    with pytest.raises(GraphError):
        h.degree(v)
    with pytest.raises(GraphError):
        h.neighbor(v, 1)


def test_neighbor_index_is_one_based():
    with pytest.raises(GraphError):
        OracleHandle(path(3)).neighbor(1, 0)


def test_counters_reset_only_explicitly():
    h = OracleHandle(path(4))
    h.all_neighbors(1)
    assert (h.degree_queries, h.neighbor_queries) == (1, 2)
    h.degree(0)
    assert h.total_queries == 4
    h.reset()
    assert h.total_queries == 0


@given(graphs())
def test_oracle_view_matches_adjacency(g):
    h = OracleHandle(g)
    for v in range(g.n):
        d = h.degree(v)
        got = [h.neighbor(v, i) for i in range(1, d + 1)]
        assert got == sorted(got) == g.neighbors(v).tolist()
        assert h.neighbor(v, d + 1) is None


@given(graphs())
def test_graph_invariants(g):
    for v in range(g.n):
        nb = g.neighbors(v).tolist()
        assert v not in nb
        assert len(set(nb)) == len(nb)
        for u in nb:
            assert g.has_edge(u, v) and v in g.neighbors(u).tolist()
    assert 2 * g.m == int(g.degrees().sum())


def test_from_edges_rejects_bad_input():
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 1), (1, 0)])
    with pytest.raises(GraphError):
        Graph.from_edges(3, [(0, 3)])


def test_small_families():
    assert complete(4).m == 6
    pm = perfect_matching(6)
    assert pm.m == 3 and set(pm.degrees().tolist()) == {1}
    assert path(5).m == 4 and star(6).degree(0) == 5 and empty(4).m == 0


def test_gnp_edge_count_within_three_sigma():
    total = 1000 * 999 // 2
    mean, sd = total * 0.01, math.sqrt(total * 0.01 * 0.99)
    for seed in range(5):
        assert abs(gnp(1000, 0.01, seed=seed).m - mean) <= 3 * sd


def test_gnp_is_seeded():
    assert gnp(300, 0.05, seed=4) == gnp(300, 0.05, seed=4)
    assert gnp(300, 0.05, seed=4) != gnp(300, 0.05, seed=5)


def test_d_regular_against_networkx():
    g = d_regular(200, 7, seed=3)
    assert set(g.degrees().tolist()) == {7}
    G = nx.Graph(g.edges().tolist())
    assert nx.is_regular(G) and G.number_of_edges() == 700


@pytest.mark.parametrize("n,d", [(5, 5), (5, 3), (4, 9)])
def test_d_regular_infeasible(n, d):
    with pytest.raises(GraphError):
        d_regular(n, d)


def test_generate_dispatch_and_errors():
    assert generate("complete", 4).m == 6
    with pytest.raises(GraphError):
        generate("gnp", 10)
    with pytest.raises(GraphError):
        generate("nope", 10)
    with pytest.raises(GraphError):
        generate("perfect_matching", 5)


def test_edge_neighbors_of_empty_and_complete():
    added = list(enumerate_neighbors(empty(3), "edge"))
    assert len(added) == 3 and all(p.variant.m == 1 for p in added)
    removed = list(enumerate_neighbors(complete(3), "edge"))
    assert len(removed) == 3 and all(p.variant.m == 2 for p in removed)


@given(graphs(max_n=7))
def test_edge_neighbor_count_and_difference(g):
    pairs = list(enumerate_neighbors(g, "edge"))
    assert len(pairs) == g.n * (g.n - 1) // 2
    for p in pairs:
        assert len(p.base.edge_set() ^ p.variant.edge_set()) == 1


def test_node_neighbors_only_touch_witness():
    g = path(3)
    pairs = list(enumerate_neighbors(g, "node"))
    # 3 vertices, 2^2 subsets each, minus the unchanged one
    assert len(pairs) == 9
    for p in pairs:
        diff = p.base.edge_set() ^ p.variant.edge_set()
        assert diff and all(p.witness in e for e in diff)


def test_node_neighbors_sampled_above_bound():
    g = gnp(9, 0.3, seed=1)
    pairs = list(enumerate_neighbors(g, "node", exhaustive_max_n=6, samples_per_vertex=20, seed=2))
    assert len(pairs) <= 9 * 20
    for p in pairs:
        assert all(p.witness in e for e in p.base.edge_set() ^ p.variant.edge_set())


def test_parse_path_and_comments():
    g = parse_edge_list("# a path\n3 2\n0 1\n1 2\n")
    assert g == path(3)


@pytest.mark.parametrize("text,line", [
    ("3 1\n0 0\n", 2),
    ("3 2\n0 1\n1 0\n", 3),
    ("3 1\n0 x\n", 2),
    ("3 1\n0 5\n", 2),
    ("3 1\n0 1 2\n", 2),
])
def test_parse_errors_carry_line(text, line):
    with pytest.raises(GraphFormatError) as exc:
        parse_edge_list(text)
    assert exc.value.line == line and f"line {line}" in str(exc.value)


def test_parse_edge_count_mismatch():
    with pytest.raises(GraphFormatError):
        parse_edge_list("3 2\n0 1\n")


def test_round_trip_byte_identical(tmp_path):
    f = tmp_path / "g.el"
    text = "5 4\n0 1\n0 4\n1 2\n3 4\n"
    f.write_text(text)
    g = load_edge_list(f)
    out = tmp_path / "h.el"
    save_edge_list(g, out)
    assert out.read_text() == text


@given(graphs())
def test_round_trip_property(g):
    from dpsublinear.graph import format_edge_list
    assert parse_edge_list(format_edge_list(g)) == g
