import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_dataset
from localexpert.centrality import (ScoreMap, argmax_candidate, betweenness, closeness, degree,
                                    pagerank)
from localexpert.errors import DomainError
from localexpert.graph import ReviewerGraph
from localexpert.model import Query
from oracles import (adjacency, betweenness_bruteforce, closeness_bruteforce, pagerank_dense,
                     random_graph)

PATH = ReviewerGraph.from_edges([], [("A", "B"), ("B", "C")])
EMPTY = ReviewerGraph.from_edges([], [])


def graph(edges, nodes=()):
    return ReviewerGraph.from_edges(nodes, edges)


@pytest.mark.parametrize("fn", [pagerank, betweenness, closeness])
def test_empty_graph_is_an_error(fn):
    with pytest.raises(DomainError):
        fn(EMPTY)


def test_pagerank_cycle_uniform():
    for n in (3, 4, 7):
        g = graph([(f"c{i}", f"c{(i + 1) % n}") for i in range(n)])
        for v in pagerank(g).scores.values():
            assert v == pytest.approx(1 / n, abs=1e-12)


def test_pagerank_star():
    g = graph([("hub", f"l{i}") for i in range(4)])
    s = pagerank(g).scores
    leaves = [s[f"l{i}"] for i in range(4)]
    assert all(s["hub"] > x for x in leaves)
    assert max(leaves) - min(leaves) < 1e-15


def test_pagerank_five_node_oracle():
    nodes = ["a", "b", "c", "d", "e"]
    edges = [("a", "b"), ("a", "c"), ("b", "c"), ("c", "d")]
    ref = pagerank_dense(adjacency(nodes, edges))
    got = pagerank(graph(edges, nodes)).scores
    for v in nodes:
        assert abs(got[v] - ref[v]) < 1e-8
    assert abs(math.fsum(got.values()) - 1) < 1e-9


def test_pagerank_rejects_bad_damping():
    with pytest.raises(DomainError):
        pagerank(PATH, damping=1.0)


def test_betweenness_path():
    assert dict(betweenness(PATH).scores) == {"A": 0.0, "B": 1.0, "C": 0.0}


def test_betweenness_complete_graph():
    k4 = graph([(a, b) for a in "wxyz" for b in "wxyz" if a < b])
    assert set(betweenness(k4).scores.values()) == {0.0}


def test_closeness_path():
    assert dict(closeness(PATH).scores) == {"A": 2 / 3, "B": 1.0, "C": 2 / 3}


def test_closeness_isolated():
    assert closeness(graph([("a", "b")], ["z"])).scores["z"] == 0.0


def test_degree():
    g = graph([("c", "l1"), ("c", "l2"), ("c", "l3")], ["iso"])
    s = degree(g).scores
    assert s["c"] == 3 and s["iso"] == 0
    assert all(s[n] == len(g.adjacency[n]) for n in g.adjacency)


def test_twenty_node_fixture_matches_oracles():
    nodes, edges = random_graph(random.Random(5), max_nodes=20)
    assert (len(nodes), len(edges)) == (20, 36)
    adj = adjacency(nodes, edges)
    g = graph(edges, nodes)
    b_ref, c_ref = betweenness_bruteforce(adj), closeness_bruteforce(adj)
    b, c = betweenness(g).scores, closeness(g).scores
    for v in nodes:
        assert abs(b[v] - float(b_ref[v])) < 1e-9
        assert c[v] == float(c_ref[v])


# -- argmax ---------------------------------------------------------------

@pytest.fixture
def ab():
    return make_dataset(
        [("a", "Bandung", []), ("b", "Bandung", []), ("x", "Jakarta", [])],
        [("m", "Bandung", "shopping mall")],
        [("a", "m", "positive"), ("b", "m", "positive"), ("x", "m", "positive")],
    )


MALL = Query("mall", "shopping mall", "Bandung")


def test_argmax_best(ab):
    assert argmax_candidate(ScoreMap({"a": 0.5, "b": 0.3}, "degree"), ab, MALL) == ("a", True)


def test_argmax_tie_to_smaller_id(ab):
    assert argmax_candidate(ScoreMap({"b": 0.4, "a": 0.4}, "degree"), ab, MALL) == ("a", True)


def test_argmax_skips_non_candidates(ab):
    assert argmax_candidate(ScoreMap({"x": 0.9, "b": 0.1}, "degree"), ab, MALL) == ("b", True)


def test_argmax_nobody_qualifies(ab):
    assert argmax_candidate(ScoreMap({"x": 0.9}, "degree"), ab, MALL) == ("x", False)


def test_argmax_empty(ab):
    with pytest.raises(DomainError):
        argmax_candidate(ScoreMap({}, "degree"), ab, MALL)


# -- properties -------------------------------------------------------------

@st.composite
def graphs(draw):
    n = draw(st.integers(1, 12))
    nodes = [f"v{i:02d}" for i in range(n)]
    pairs = [(a, b) for i, a in enumerate(nodes) for b in nodes[i + 1:]]
    edges = draw(st.lists(st.sampled_from(pairs), max_size=30, unique=True)) if pairs else []
    return nodes, edges


@settings(max_examples=150, deadline=None)
@given(graphs())
def test_scores_are_nonnegative_and_pagerank_sums_to_one(data):
    g = graph(data[1], data[0])
    pr = pagerank(g).scores
    assert abs(math.fsum(pr.values()) - 1) < 1e-9
    for fn in (pagerank, betweenness, closeness, degree):
        scores = fn(g).scores
        assert set(scores) == g.nodes
        assert all(v >= 0 for v in scores.values())


@settings(max_examples=100, deadline=None)
@given(graphs(), st.randoms(use_true_random=False))
def test_invariant_under_relabelling(data, rnd):
    nodes, edges = data
    shuffled = nodes[:]
    rnd.shuffle(shuffled)
    rename = dict(zip(nodes, shuffled))
    g1 = graph(edges, nodes)
    g2 = graph([(rename[a], rename[b]) for a, b in edges], shuffled)
    for fn, tol in ((pagerank, 1e-8), (betweenness, 1e-9), (closeness, 0.0), (degree, 0.0)):
        s1, s2 = fn(g1).scores, fn(g2).scores
        for v in nodes:
            assert abs(s1[v] - s2[rename[v]]) <= tol


@settings(max_examples=100, deadline=None)
@given(graphs())
def test_betweenness_and_closeness_match_oracles(data):
    nodes, edges = data
    adj = adjacency(nodes, edges)
    g = graph(edges, nodes)
    b_ref, c_ref = betweenness_bruteforce(adj), closeness_bruteforce(adj)
    b, c = betweenness(g).scores, closeness(g).scores
    for v in nodes:
        assert abs(b[v] - float(b_ref[v])) < 1e-9
        assert c[v] == float(c_ref[v])
