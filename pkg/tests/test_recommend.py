import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import make_dataset
from golden import LRW_42_EXPERTS, LRW_42_RANKED
from localexpert.errors import DataError, DomainError, NotFoundError, UnknownQueryError
from localexpert.recommend import (DEFAULT_QUERY_MAP, MODAL, RankedPlace, TimingReport, dumps_body,
                                   expert_recommendations, make_query, modal_terminal, rank, recommend,
                                   resolve_category, run_body)
from localexpert.walk import WalkConfig

MALL = make_query("mall", "Bandung")


def rp(pid, pos, neg):
    return RankedPlace(pid, pid, pos, neg)


def test_resolve_category():
    assert resolve_category("mall") == "shopping mall"
    assert resolve_category("MALL") == "shopping mall"
    assert resolve_category("  Inexpensive Market ") == "market"


def test_resolve_unknown_lists_known():
    with pytest.raises(UnknownQueryError) as exc:
        resolve_category("spa")
    assert exc.value.known == sorted(DEFAULT_QUERY_MAP)
    assert "mall" in str(exc.value)


def test_expert_majority_filter():
    ds = make_dataset(
        [("e", "Bandung", [])] + [(f"o{i}", "Bandung", []) for i in range(9)],
        [("good", "Bandung", "shopping mall"), ("bad", "Bandung", "shopping mall")],
        [("e", "good", "positive"), ("e", "bad", "negative")]
        + [(f"o{i}", "good", "positive") for i in range(4)] + [("o4", "good", "negative")]
        + [("o5", "bad", "positive")] + [(f"o{i}", "bad", "negative") for i in range(6, 9)],
    )
    assert ds.label_counts("good")[:2] == (5, 1) and ds.label_counts("bad")[:2] == (1, 4)
    assert expert_recommendations(ds, "e", MALL) == [RankedPlace("good", "good", 5, 1)]


def test_expert_without_matching_reviews():
    ds = make_dataset([("e", "Bandung", [])], [("b", "Bandung", "bookstore")], [("e", "b", "positive")])
    assert expert_recommendations(ds, "e", MALL) == []


def test_expert_unknown():
    ds = make_dataset([("e", "Bandung", [])])
    with pytest.raises(NotFoundError):
        expert_recommendations(ds, "ghost", MALL)


def _counts_dataset(rows):
    users = [("e", "Bandung", [])]
    reviews = []
    n = 0
    for pid, pos, neg in rows:
        reviews.append(("e", pid, "positive"))
        for label, count in (("positive", pos - 1), ("negative", neg)):
            for _ in range(count):
                users.append((f"x{n}", "Bandung", []))
                reviews.append((f"x{n}", pid, label))
                n += 1
    places = [(pid, "Bandung", "shopping mall") for pid, _, _ in rows]
    return make_dataset(users, places, reviews)


def test_expert_with_several_positive_places():
    ds = _counts_dataset([("ip", 24, 5), ("lotte", 23, 3), ("pvj", 20, 3)])
    got = [(p.place_id, p.pos, p.neg) for p in expert_recommendations(ds, "e", MALL)]
    assert sorted(got) == [("ip", 24, 5), ("lotte", 23, 3), ("pvj", 20, 3)]


def test_rank_comparator():
    got = rank([rp("a", 23, 3), rp("b", 26, 1), rp("c", 24, 4), rp("d", 24, 5)])
    assert [(p.pos, p.neg) for p in got] == [(26, 1), (24, 4), (24, 5), (23, 3)]


def test_rank_empty_and_id_tiebreak():
    assert rank([]) == []
    assert [p.place_id for p in rank([rp("z", 5, 0), rp("a", 5, 0)])] == ["a", "z"]


def test_rank_merges_and_rejects_conflicts():
    assert rank([rp("a", 1, 0), rp("a", 1, 0)]) == [rp("a", 1, 0)]
    with pytest.raises(DataError):
        rank([rp("a", 1, 0), rp("a", 2, 0)])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.sampled_from("abcdefgh"), st.integers(0, 5), st.integers(0, 5)), max_size=12))
def test_rank_is_sorted_and_unique(items):
    counts = {}
    for pid, pos, neg in items:
        counts.setdefault(pid, (pos, neg))
    places = [rp(pid, *counts[pid]) for pid, _, _ in items]
    out = rank(places)
    assert len({p.place_id for p in out}) == len(out) == len(counts)
    keys = [(-p.pos, p.neg, p.place_id) for p in out]
    assert keys == sorted(keys)


def test_modal_terminal_tie_goes_to_smaller_id():
    assert modal_terminal([("s1", "b", True), ("s2", "a", True), ("s3", "c", False), ("s4", "c", False)]) == "a"
    assert modal_terminal([("s", "c", False)]) is None


def test_single_node_graph_forces_outcome():
    # a requester without contacts never gets a pa graph, so the one-node case is global
    solo = make_dataset([("e", "Bandung", [])], [("m", "Bandung", "shopping mall")], [("e", "m", "positive")])
    for method in ("rw", "lrw", "pagerank", "degree", "betweenness", "closeness"):
        run = recommend(solo, make_query("mall", "Bandung", "global", 3), method, WalkConfig(master_seed=1))
        assert run.experts == ("e",)
        assert [p.place_id for p in run.ranked] == ["m"]
        assert run.fallback == "none"


def test_pa_without_contacts_falls_back(malls):
    q = make_query("mall", "Bandung", "pa", 5, user_id="b37")
    run = recommend(malls, q, "degree")
    assert run.fallback == "pa_to_global"
    assert run.ranked == recommend(malls, MALL, "degree").ranked


def test_pa_with_contacts(malls):
    q = make_query("mall", "Bandung", "pa", 5, user_id="b01")
    run = recommend(malls, q, "lrw", WalkConfig(master_seed=42))
    assert run.fallback == "none"
    assert run.graph_size < 38


def test_no_candidate(malls):
    run = recommend(malls, make_query("dress shop", "Bandung"), "lrw", WalkConfig(master_seed=1))
    assert run.ranked == () and run.experts == ()
    assert run.fallback == "no_candidate"


def test_errors(malls):
    with pytest.raises(DomainError):
        recommend(malls, MALL, "magic")
    with pytest.raises(UnknownQueryError):
        make_query("spa", "Bandung")
    with pytest.raises(NotFoundError):
        recommend(malls, make_query("mall", "Bandung", "pa", 5, user_id="ghost"), "degree")


@pytest.mark.parametrize("method", ["pagerank", "betweenness", "closeness", "degree"])
def test_centrality_runs_are_repeatable(malls, method):
    runs = [recommend(malls, MALL, method) for _ in range(3)]
    assert runs[0] == runs[1] == runs[2]
    assert len(runs[0].experts) == 1


def test_lrw_golden_run(malls):
    run = recommend(malls, MALL, "lrw", WalkConfig(master_seed=42))
    assert [(p.place_id, p.pos, p.neg) for p in run.ranked] == LRW_42_RANKED
    assert run.experts == LRW_42_EXPERTS
    assert run.graph_size == 38
    assert recommend(malls, MALL, "lrw", WalkConfig(master_seed=42)) == run


def test_lrw_modal_golden_run(malls):
    run = recommend(malls, MALL, "lrw", WalkConfig(master_seed=42), MODAL)
    assert run.experts == ("b05",)
    assert [p.place_id for p in run.ranked] == ["pl02", "pl03", "pl05", "pl04", "pl08", "pl10", "pl13",
                                                "pl12", "pl14"]


def test_threads_do_not_change_output(malls):
    cfg = WalkConfig(master_seed=42)
    assert recommend(malls, MALL, "rw", cfg, workers=1) == recommend(malls, MALL, "rw", cfg, workers=4)


def test_timings_are_additive(malls):
    t = recommend(malls, MALL, "lrw", WalkConfig(master_seed=3)).timings
    assert abs(t.t_graph + t.t_algo + t.t_other - t.t_total) < 1e-3
    assert abs(sum(t.shares().values()) - 100) < 0.1
    assert TimingReport().shares() == {"graph": 0.0, "algo": 0.0, "other": 0.0}


def test_run_body(malls):
    run = recommend(malls, MALL, "lrw", WalkConfig(master_seed=42))
    body = run_body(run, 42, top=2)
    assert body["ranked"][0] == {"place": "pl01", "name": "Setiabudhi Supermarket", "pos": 29, "neg": 1}
    assert len(body["ranked"]) == 2 and body["seed"] == 42 and "timings" not in body
    assert "timings" in run_body(run, 42, timings=True)
    text = dumps_body(body)
    assert json.loads(text) == body
    assert text.startswith('{"experts":[') and ', ' not in text
