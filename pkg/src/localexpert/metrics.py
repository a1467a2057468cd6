"""Evaluation: gold standards, R-score, E[R], MSE and precision@x."""
from __future__ import annotations

import math
import statistics
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .errors import DomainError
from .model import Dataset, Query, matching_places, pos_neg_counts
from .recommend import POOL, RankedPlace, TimingReport, rank, recommend
from .walk import WALK_METHODS, WalkConfig

DEFAULT_X = (1, 3, 5, 10, 15, 20, 30)


@dataclass(frozen=True)
class EvalConfig:
    m: int = 10
    x_values: tuple = DEFAULT_X
    k: int = 5

    def __post_init__(self):
        if self.m < 1:
            raise DomainError(f"m must be >= 1, got {self.m}")
        if any(x < 1 for x in self.x_values):
            raise DomainError(f"precision cutoffs must be >= 1, got {self.x_values}")
        if self.k < 3:
            raise DomainError(f"k must be >= 3 for the likelihood to be defined, got {self.k}")


@dataclass
class EvalReport:
    r_scores: list = field(default_factory=list)  # (R_u, R_u^max) per run
    expected_r: Optional[float] = None
    mse: Optional[float] = None
    precision: dict = field(default_factory=dict)
    timings: TimingReport = field(default_factory=TimingReport)
    degenerate: int = 0

    @property
    def normalized(self) -> list:
        return [r / rmax for r, rmax in self.r_scores if rmax != 0]


def _ids(items) -> list:
    return [p.place_id if isinstance(p, RankedPlace) else p for p in items]


def gold_standard(dataset: Dataset, query: Query) -> list[RankedPlace]:
    out = []
    for pid in matching_places(dataset, query):
        if dataset.reviews_by_place(pid):
            pos, neg = pos_neg_counts(dataset, pid)
            out.append(RankedPlace(pid, dataset.places[pid].name, pos, neg))
    return rank(out)


def likelihood(j: int, k: int) -> float:
    """Weight of gold rank ``j``: halves every ``k/2 - 1`` positions."""
    if k < 3:
        raise DomainError(f"likelihood needs k >= 3 (half-life k/2 must exceed 1), got k={k}")
    if j < 1:
        raise DomainError(f"gold rank is 1-based, got {j}")
    return 2.0 ** (-(j - 1) / (k / 2.0 - 1.0))


def utility(n_candidates: int, k: int) -> float:
    """``-ln(k / n_candidates)``; negative when the walk is longer than the pool."""
    if n_candidates < 1:
        raise DomainError("utility needs at least one candidate")
    return -math.log(k / n_candidates)


def r_score(recs: Sequence, gold: Sequence, k: int, n_candidates: int) -> tuple[float, float]:
    """Return ``(R_u, R_u^max)``.

    ``R_u^max`` scores the top-n gold places, n being the number of
    recommendations. Places missing from the gold list weigh zero.
    """
    rec_ids = _ids(recs)
    gold_ids = _ids(gold)
    u = utility(n_candidates, k)
    if not gold_ids:
        return 0.0, 0.0
    position = {pid: j for j, pid in enumerate(gold_ids, 1)}
    r = math.fsum(likelihood(position[p], k) for p in rec_ids if p in position) * u
    ideal = math.fsum(likelihood(j, k) for j in range(1, min(len(rec_ids), len(gold_ids)) + 1)) * u
    return r, ideal


def expected_r(normalized_scores: Sequence[float]) -> Optional[float]:
    """Mean normalised R-score; ``None`` when there is nothing to average."""
    scores = [s for s in normalized_scores if s is not None and not math.isnan(s)]
    if not scores:
        return None
    return math.fsum(scores) / len(scores)


def mse(normalized_scores: Sequence[float]) -> float:
    if not normalized_scores:
        raise DomainError("mse needs at least one score")
    # population variance around the run mean; exact arithmetic keeps ties at 0
    return float(statistics.pvariance(normalized_scores))


def precision_at(recs: Sequence, gold: Sequence, x: int) -> float:
    if x < 1:
        raise DomainError(f"cutoff must be >= 1, got {x}")
    return len(set(_ids(recs)[:x]) & set(_ids(gold)[:x])) / x


def evaluate_query(
    dataset: Dataset,
    query: Query,
    method: str,
    config: EvalConfig,
    master_seed: int = 0,
    stay_probability: float = 0.5,
    aggregation: str = POOL,
    workers: Optional[int] = None,
) -> EvalReport:
    """Repeat a recommendation ``m`` times and score it against the gold standard.

    Walk methods use run index ``i`` for repetition ``i``, so each repetition
    draws fresh streams from the same master seed.
    """
    EvalConfig(config.m, config.x_values, query.k)
    gold = gold_standard(dataset, query)
    walk_cfg = WalkConfig(method if method in WALK_METHODS else "lrw", query.k,
                          stay_probability, master_seed)
    report = EvalReport()
    precisions = {x: [] for x in config.x_values}
    t = [0.0, 0.0, 0.0, 0.0]
    for i in range(config.m):
        run = recommend(dataset, query, method, walk_cfg, aggregation, run_index=i, workers=workers)
        if run.graph_size:
            report.r_scores.append(r_score(run.ranked, gold, query.k, run.graph_size))
        else:
            report.r_scores.append((0.0, 0.0))
        for x in config.x_values:
            precisions[x].append(precision_at(run.ranked, gold, x))
        tm = run.timings
        t = [t[0] + tm.t_graph, t[1] + tm.t_algo, t[2] + tm.t_other, t[3] + tm.t_total]
    normalized = report.normalized
    report.degenerate = len(report.r_scores) - len(normalized)
    report.expected_r = expected_r(normalized)
    report.mse = mse(normalized) if normalized else None
    report.precision = {x: math.fsum(v) / len(v) for x, v in precisions.items()}
    report.timings = TimingReport(*(v / config.m for v in t))
    return report
