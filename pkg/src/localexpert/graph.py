"""Query-filtered reviewer graphs: global search and the requester's ego network."""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

from .model import GLOBAL, PA, Dataset, Query, matching_places

HOPS = 2


@dataclass(frozen=True)
class ReviewerGraph:
    nodes: frozenset
    adjacency: Mapping[str, tuple]
    seed_nodes: frozenset
    origin: str = GLOBAL

    @classmethod
    def induced(cls, dataset: Dataset, nodes: Iterable[str], seeds: Iterable[str], origin: str) -> "ReviewerGraph":
        """Subgraph of the contact graph induced by ``nodes``."""
        nodes = frozenset(nodes)
        adj = {}
        for n in sorted(nodes):
            adj[n] = tuple(sorted(c for c in dataset.users[n].contacts if c in nodes and c != n))
        return cls(nodes, MappingProxyType(adj), frozenset(seeds) & nodes, origin)

    @classmethod
    def from_edges(cls, nodes: Iterable[str], edges: Iterable[tuple], seeds: Iterable[str] = (),
                   origin: str = GLOBAL) -> "ReviewerGraph":
        nodes = set(nodes)
        adj = {}
        for a, b in edges:
            if a == b:
                continue
            nodes.update((a, b))
            adj.setdefault(a, set()).add(b)
            adj.setdefault(b, set()).add(a)
        ordered = {n: tuple(sorted(adj.get(n, ()))) for n in sorted(nodes)}
        return cls(frozenset(nodes), MappingProxyType(ordered), frozenset(seeds) & frozenset(nodes), origin)

    def __len__(self):
        return len(self.nodes)

    def sorted_nodes(self) -> list:
        return list(self.adjacency)

    def neighbors(self, node: str) -> tuple:
        return self.adjacency[node]

    def edge_count(self) -> int:
        return sum(len(v) for v in self.adjacency.values()) // 2

    def edges(self) -> list:
        return [(a, b) for a, nbrs in self.adjacency.items() for b in nbrs if a < b]

    def subgraph(self, nodes: Iterable[str]) -> "ReviewerGraph":
        keep = frozenset(nodes)
        adj = {n: tuple(b for b in self.adjacency[n] if b in keep) for n in self.adjacency if n in keep}
        return ReviewerGraph(keep, MappingProxyType(adj), self.seed_nodes & keep, self.origin)


def _within_hops(dataset: Dataset, sources: Iterable[str], hops: int = HOPS) -> set:
    seen = set(sources)
    frontier = deque((s, 0) for s in sorted(seen))
    while frontier:
        node, depth = frontier.popleft()
        if depth == hops:
            continue
        for c in dataset.users[node].contacts:
            if c not in seen and c in dataset.users:
                seen.add(c)
                frontier.append((c, depth + 1))
    return seen


def reviewers(dataset: Dataset, query: Query) -> set:
    out = set()
    for pid in matching_places(dataset, query):
        out.update(r.user_id for r in dataset.reviews_by_place(pid) if r.user_id in dataset.users)
    return out


def build_global_graph(dataset: Dataset, query: Query) -> ReviewerGraph:
    """Reviewers of the matching places expanded by two contact hops.

    The result may be disconnected; reviewers without contacts stay as
    isolated nodes.
    """
    seeds = reviewers(dataset, query)
    return ReviewerGraph.induced(dataset, _within_hops(dataset, seeds), seeds, GLOBAL)


def build_pa_graph(dataset: Dataset, user_id: str, query: Query) -> ReviewerGraph:
    dataset.user(user_id)
    return ReviewerGraph.induced(dataset, _within_hops(dataset, [user_id]), [user_id], PA)


def components(graph: ReviewerGraph) -> list[list[str]]:
    """Connected components, each sorted, listed by smallest member id."""
    seen = set()
    out = []
    for start in graph.adjacency:
        if start in seen:
            continue
        seen.add(start)
        comp = [start]
        queue = deque([start])
        while queue:
            for b in graph.adjacency[queue.popleft()]:
                if b not in seen:
                    seen.add(b)
                    comp.append(b)
                    queue.append(b)
        out.append(sorted(comp))
    return out


def highest_degree_component(graph: ReviewerGraph) -> ReviewerGraph:
    comps = components(graph)
    if len(comps) <= 1:
        return graph

    def key(comp):
        total = sum(len(graph.adjacency[n]) for n in comp)
        return (-total, -len(comp), comp[0])

    return graph.subgraph(min(comps, key=key))


def write_edgelist(graph: ReviewerGraph, path) -> None:
    """Debug dump: one ``a b`` line per edge, isolated nodes on their own line."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for node, nbrs in graph.adjacency.items():
            if not nbrs:
                fh.write(f"{node}\n")
            for b in nbrs:
                if node < b:
                    fh.write(f"{node} {b}\n")
