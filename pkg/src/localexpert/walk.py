"""k-step plain and lazy random walks with per-source reproducible streams.

Every step consumes exactly one uniform draw ``u``.  A lazy walk stays when
``u < stay`` and otherwise rescales ``u`` onto the neighbour list, so a lazy
walk with ``stay = 0`` replays the plain walk draw for draw.

Each walk owns a SplitMix64 stream keyed by ``(master_seed, source, run)``.
The generator is counter based, so :func:`walk_batch` advances thousands of
walks in lockstep with numpy and still reproduces, draw for draw, what
:func:`random_walk` gives for a single ``SplitMix64(key)`` stream.
"""
from __future__ import annotations

import hashlib
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import DomainError, NotFoundError
from .graph import ReviewerGraph
from .model import Dataset, Query, is_candidate

RW = "rw"
LRW = "lrw"
WALK_METHODS = (RW, LRW)
DEFAULT_STAY = 0.5

_MASK = (1 << 64) - 1
_GAMMA = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB
_TO_UNIT = 2.0 ** -53


class SplitMix64:
    """Scalar SplitMix64; ``random()`` yields floats in [0, 1) like ``random.Random``."""

    def __init__(self, seed: int):
        self.state = seed & _MASK

    def next_u64(self) -> int:
        self.state = (self.state + _GAMMA) & _MASK
        z = self.state
        z = ((z ^ (z >> 30)) * _M1) & _MASK
        z = ((z ^ (z >> 27)) * _M2) & _MASK
        return z ^ (z >> 31)

    def random(self) -> float:
        return (self.next_u64() >> 11) * _TO_UNIT


def _uniforms(keys: np.ndarray, step: int) -> np.ndarray:
    """Draw number ``step`` (0-based) of every stream in ``keys``."""
    z = keys + np.uint64((_GAMMA * (step + 1)) & _MASK)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_M1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_M2)
    z = z ^ (z >> np.uint64(31))
    return (z >> np.uint64(11)).astype(np.float64) * _TO_UNIT


@dataclass(frozen=True)
class WalkResult:
    source: str
    path: tuple

    @property
    def terminal(self) -> str:
        return self.path[-1]


@dataclass(frozen=True)
class WalkConfig:
    method: str = LRW
    k: int = 5
    stay_probability: float = DEFAULT_STAY
    master_seed: int = 0

    def __post_init__(self):
        if self.method not in WALK_METHODS:
            raise DomainError(f"walk method must be one of {WALK_METHODS}, got {self.method!r}")
        if not isinstance(self.k, int) or self.k < 1:
            raise DomainError(f"k must be >= 1, got {self.k!r}")
        if not 0.0 <= self.stay_probability <= 1.0:
            raise DomainError(f"stay probability must lie in [0, 1], got {self.stay_probability!r}")

    @property
    def stay(self) -> float:
        return self.stay_probability if self.method == LRW else 0.0


def derive_seed(master_seed: int, source: str, run_index: int = 0) -> int:
    digest = hashlib.blake2b(
        f"{master_seed}\x1f{source}\x1f{run_index}".encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "big")


def stream(master_seed: int, source: str, run_index: int = 0) -> SplitMix64:
    """Random stream owned by one walk; independent of evaluation order."""
    return SplitMix64(derive_seed(master_seed, source, run_index))


def _walk(adjacency, start, k, stay, rng) -> tuple:
    path = [start]
    node = start
    draw = rng.random
    for _ in range(k):
        u = draw()
        nbrs = adjacency[node]
        if nbrs and u >= stay:
            d = len(nbrs)
            i = int((u - stay) / (1.0 - stay) * d)
            node = nbrs[i if i < d else d - 1]
        path.append(node)
    return tuple(path)


def random_walk(graph: ReviewerGraph, start: str, k: int, rng) -> WalkResult:
    """Move to a uniformly chosen neighbour ``k`` times; isolated nodes stay put.

    ``rng`` is anything with a ``random()`` method (``SplitMix64``,
    ``random.Random``).
    """
    if start not in graph.adjacency:
        raise NotFoundError("graph node", start)
    return WalkResult(start, _walk(graph.adjacency, start, k, 0.0, rng))


def lazy_random_walk(graph: ReviewerGraph, start: str, k: int, stay_probability: float, rng) -> WalkResult:
    if start not in graph.adjacency:
        raise NotFoundError("graph node", start)
    if not 0.0 <= stay_probability <= 1.0:
        raise DomainError(f"stay probability must lie in [0, 1], got {stay_probability!r}")
    return WalkResult(start, _walk(graph.adjacency, start, k, stay_probability, rng))


class CompiledGraph:
    """Integer CSR view of a graph for batched walks."""

    def __init__(self, graph: ReviewerGraph):
        self.nodes = graph.sorted_nodes()
        self.index = {n: i for i, n in enumerate(self.nodes)}
        degs = [len(graph.adjacency[n]) for n in self.nodes]
        self.indptr = np.zeros(len(self.nodes) + 1, dtype=np.int64)
        np.cumsum(degs, out=self.indptr[1:])
        self.indices = np.fromiter(
            (self.index[b] for n in self.nodes for b in graph.adjacency[n]),
            dtype=np.int64, count=int(self.indptr[-1]),
        )
        self.degree = np.asarray(degs, dtype=np.int64)


def walk_batch(cg: CompiledGraph, starts: np.ndarray, keys: np.ndarray, k: int, stay: float) -> np.ndarray:
    """Run one walk per ``(start, key)`` pair; returns node indices, shape ``(k + 1, n)``.

    Row ``j`` holds the position after ``j`` steps.
    """
    keys = np.asarray(keys, dtype=np.uint64)
    node = np.asarray(starts, dtype=np.int64).copy()
    out = np.empty((k + 1, len(node)), dtype=np.int64)
    out[0] = node
    span = 1.0 - stay
    for step in range(k):
        u = _uniforms(keys, step)
        d = cg.degree[node]
        move = (d > 0) & (u >= stay)
        if move.any():
            m_u, m_d = u[move], d[move]
            i = ((m_u - stay) / span * m_d).astype(np.int64)
            np.minimum(i, m_d - 1, out=i)
            node[move] = cg.indices[cg.indptr[node[move]] + i]
        out[step + 1] = node
    return out


def candidate_terminals(
    graph: ReviewerGraph,
    dataset: Dataset,
    query: Query,
    config: WalkConfig,
    run_index: int = 0,
    workers: Optional[int] = None,
) -> list[tuple[str, str, bool]]:
    """One walk from every node; returns ``(source, terminal, valid)`` by source id.

    ``workers`` > 1 spreads sources over a thread pool. Output does not depend
    on it since each source owns its stream.
    """
    if not graph.adjacency:
        return []
    cg = CompiledGraph(graph)
    n = len(cg.nodes)
    keys = np.fromiter(
        (derive_seed(config.master_seed, s, run_index) for s in cg.nodes), dtype=np.uint64, count=n
    )
    starts = np.arange(n, dtype=np.int64)
    if workers and workers > 1 and n > 1:
        size = -(-n // workers)
        bounds = [(lo, min(lo + size, n)) for lo in range(0, n, size)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = pool.map(
                lambda b: walk_batch(cg, starts[b[0]:b[1]], keys[b[0]:b[1]], config.k, config.stay)[-1],
                bounds,
            )
            terminals = np.concatenate(list(parts))
    else:
        terminals = walk_batch(cg, starts, keys, config.k, config.stay)[-1]
    valid = {}
    out = []
    for s, t_idx in zip(cg.nodes, terminals.tolist()):
        t = cg.nodes[t_idx]
        if t not in valid:
            valid[t] = is_candidate(dataset, t, query)
        out.append((s, t, valid[t]))
    return out
