"""End-to-end recommendation: resolve, build graph, choose experts, rank places."""
from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping, Optional

from . import centrality
from .errors import DataError, DomainError, UnknownQueryError
from .graph import build_global_graph, build_pa_graph, highest_degree_component
from .model import GLOBAL, PA, Dataset, Query, matching_places, norm, pos_neg_counts
from .walk import WALK_METHODS, WalkConfig, candidate_terminals

METHODS = WALK_METHODS + centrality.CENTRALITY_METHODS
POOL = "pool"
MODAL = "modal"
AGGREGATIONS = (POOL, MODAL)

NO_FALLBACK = "none"
PA_TO_GLOBAL = "pa_to_global"
NO_CANDIDATE = "no_candidate"

DEFAULT_QUERY_MAP = {
    "mall": "shopping mall",
    "inexpensive market": "market",
    "discount books": "bookstore",
    "dress shop": "department store",
    "comfortable shopping": "shopping mall",
    "complete and inexpensive shopping": "supermarket",
}


@dataclass(frozen=True)
class RankedPlace:
    place_id: str
    name: str
    pos: int
    neg: int

    def sort_key(self):
        return (-self.pos, self.neg, self.place_id)


@dataclass(frozen=True)
class TimingReport:
    t_graph: float = 0.0
    t_algo: float = 0.0
    t_other: float = 0.0
    t_total: float = 0.0

    def as_dict(self) -> dict:
        return {"t_graph": self.t_graph, "t_algo": self.t_algo, "t_other": self.t_other,
                "t_total": self.t_total}

    def shares(self) -> dict:
        """Percentage of ``t_total`` spent in each stage."""
        if self.t_total <= 0:
            return {"graph": 0.0, "algo": 0.0, "other": 0.0}
        return {
            "graph": 100.0 * self.t_graph / self.t_total,
            "algo": 100.0 * self.t_algo / self.t_total,
            "other": 100.0 * self.t_other / self.t_total,
        }


@dataclass(frozen=True)
class RecommendationRun:
    query: Query
    method: str
    experts: tuple
    ranked: tuple
    fallback: str = NO_FALLBACK
    timings: TimingReport = field(default_factory=TimingReport, compare=False)
    graph_size: int = 0


def resolve_category(query_text: str, mapping: Mapping[str, str] = DEFAULT_QUERY_MAP) -> str:
    if not mapping:
        raise DomainError("query mapping is empty")
    table = {norm(k): v for k, v in mapping.items()}
    try:
        return table[norm(query_text)]
    except KeyError:
        raise UnknownQueryError(query_text, list(mapping)) from None


def make_query(
    text: str,
    city: str,
    mode: str = GLOBAL,
    k: int = 5,
    user_id: Optional[str] = None,
    mapping: Mapping[str, str] = DEFAULT_QUERY_MAP,
) -> Query:
    return Query(text, resolve_category(text, mapping), city, mode, k, user_id or None)


def expert_recommendations(dataset: Dataset, expert: str, query: Query) -> list[RankedPlace]:
    """Matching places the expert reviewed that have at least as many positive as negative reviews."""
    dataset.user(expert)
    return _reviewed_positive(dataset, expert, set(matching_places(dataset, query)))


def _reviewed_positive(dataset, expert, wanted):
    out = []
    for pid in sorted({r.place_id for r in dataset.reviews_by_user(expert)} & wanted):
        pos, neg = pos_neg_counts(dataset, pid)
        if pos >= neg:
            out.append(RankedPlace(pid, dataset.places[pid].name, pos, neg))
    return out


def rank(places) -> list[RankedPlace]:
    """Sort by positives desc, negatives asc, id asc; merge duplicate ids."""
    merged = {}
    for p in places:
        seen = merged.get(p.place_id)
        if seen is not None and (seen.pos, seen.neg) != (p.pos, p.neg):
            raise DataError(f"place {p.place_id!r} listed with conflicting counts")
        merged[p.place_id] = p
    return sorted(merged.values(), key=RankedPlace.sort_key)


def modal_terminal(terminals) -> Optional[str]:
    counts = Counter(t for _, t, ok in terminals if ok)
    if not counts:
        return None
    return min(counts.items(), key=lambda kv: (-kv[1], kv[0]))[0]


def recommend(
    dataset: Dataset,
    query: Query,
    method: str = "lrw",
    config: Optional[WalkConfig] = None,
    aggregation: str = POOL,
    run_index: int = 0,
    workers: Optional[int] = None,
) -> RecommendationRun:
    """Run one recommendation.

    ``config`` carries the walk settings; its ``method`` and ``k`` are taken
    from ``method`` and ``query.k`` so callers only need it for the seed and
    stay probability. ``run_index`` selects an independent repetition.
    """
    if method not in METHODS:
        raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
    if aggregation not in AGGREGATIONS:
        raise DomainError(f"unknown aggregation {aggregation!r}; expected one of {AGGREGATIONS}")

    t0 = time.perf_counter()
    fallback = NO_FALLBACK
    if query.mode == PA:
        requester = dataset.user(query.user_id)
        if requester.contacts:
            graph = build_pa_graph(dataset, query.user_id, query)
        else:
            fallback = PA_TO_GLOBAL
            graph = None
    else:
        graph = None
    if graph is None:
        graph = highest_degree_component(build_global_graph(dataset, query))
    t1 = time.perf_counter()

    experts: list = []
    if method in WALK_METHODS:
        base = config or WalkConfig()
        walk_cfg = WalkConfig(method, query.k, base.stay_probability, base.master_seed)
        terminals = candidate_terminals(graph, dataset, query, walk_cfg, run_index, workers)
        if aggregation == MODAL:
            best = modal_terminal(terminals)
            experts = [best] if best is not None else []
        else:
            experts = sorted({t for _, t, ok in terminals if ok})
    elif graph.adjacency:
        scores = centrality.SCORERS[method](graph)
        node, ok = centrality.argmax_candidate(scores, dataset, query)
        if ok:
            experts = [node]
    t2 = time.perf_counter()

    if not experts and fallback == NO_FALLBACK:
        fallback = NO_CANDIDATE
    wanted = set(matching_places(dataset, query))
    picked = []
    for e in experts:
        picked.extend(_reviewed_positive(dataset, e, wanted))
    ranked = tuple(rank(picked))
    t3 = time.perf_counter()

    timings = TimingReport(t1 - t0, t2 - t1, t3 - t2, t3 - t0)
    return RecommendationRun(query, method, tuple(experts), ranked, fallback, timings, len(graph))


def run_body(run: RecommendationRun, seed: Optional[int], top: Optional[int] = None,
             timings: bool = False) -> dict:
    """JSON document shared by the CLI and the HTTP service."""
    ranked = run.ranked if top is None else run.ranked[:top]
    q = run.query
    body = {
        "query": {"text": q.text, "category": q.category, "city": q.city, "mode": q.mode,
                  "k": q.k, "user": q.user_id},
        "method": run.method,
        "experts": list(run.experts),
        "ranked": [{"place": p.place_id, "name": p.name, "pos": p.pos, "neg": p.neg} for p in ranked],
        "fallback": run.fallback,
        "seed": seed,
    }
    if timings:
        body["timings"] = run.timings.as_dict()
    return body


def dumps_body(body: dict) -> str:
    return json.dumps(body, sort_keys=True, ensure_ascii=False, separators=(",", ":"))
