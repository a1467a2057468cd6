"""Seeded synthetic datasets shaped like a city-level check-in review log."""
from __future__ import annotations

import json
import random
from dataclasses import asdict, dataclass, fields
from pathlib import Path

from .errors import DomainError
from .ingest import write_dataset
from .model import DEFAULT_CATEGORIES

DEFAULT_CITIES = ("Jakarta", "Bandung", "Yogyakarta", "Palembang", "Bengkulu")
SAME_CITY_BIAS = 0.8

_POSITIVE_WORDS = ("good", "great", "cheap", "clean", "complete", "comfortable", "nyaman", "murah")
_NEGATIVE_WORDS = ("expensive", "dirty", "crowded", "rude", "mahal", "kotor", "sempit")
_FILLER = ("place", "shop", "visit", "weekend", "parking", "food", "staff", "tempat")


@dataclass(frozen=True)
class SynthParams:
    n_users: int = 14309
    n_places: int = 176
    n_reviews: int = 3844
    n_cities: int = 5
    categories: tuple = DEFAULT_CATEGORIES
    contact_degree_mean: float = 4.0
    review_skew: float = 1.0
    positive_ratio: float = 0.8
    seed: int = 7

    def __post_init__(self):
        for name in ("n_users", "n_places", "n_reviews", "n_cities"):
            if getattr(self, name) < 1:
                raise DomainError(f"{name} must be >= 1")
        if not self.categories:
            raise DomainError("need at least one category")
        if not 0.0 <= self.positive_ratio <= 1.0:
            raise DomainError("positive_ratio must lie in [0, 1]")
        if self.contact_degree_mean < 0 or self.review_skew < 0:
            raise DomainError("contact_degree_mean and review_skew must be non-negative")
        object.__setattr__(self, "categories", tuple(self.categories))

    @classmethod
    def from_file(cls, path) -> "SynthParams":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        known = {f.name for f in fields(cls)}
        unknown = set(raw) - known
        if unknown:
            raise DomainError(f"unknown synth parameter(s): {', '.join(sorted(unknown))}")
        return cls(**raw)


def city_names(n: int) -> list[str]:
    return list(DEFAULT_CITIES[:n]) + [f"City{i + 1}" for i in range(len(DEFAULT_CITIES), n)]


def popularity_counts(total: int, n: int, skew: float) -> list[int]:
    """Split ``total`` over ``n`` ranks proportionally to ``rank ** -skew``.

    Largest-remainder rounding keeps the counts non-increasing in rank.
    """
    weights = [(r + 1) ** -skew for r in range(n)]
    scale = total / sum(weights)
    raw = [w * scale for w in weights]
    counts = [int(x) for x in raw]
    order = sorted(range(n), key=lambda i: (-(raw[i] - counts[i]), i))
    for i in order[: total - sum(counts)]:
        counts[i] += 1
    # Rounding ties can only swap neighbours with equal floors.
    return sorted(counts, reverse=True)


def _review_text(rng: random.Random, label: str) -> str:
    words = [rng.choice(_FILLER) for _ in range(rng.randint(1, 3))]
    if label == "positive":
        words += rng.sample(_POSITIVE_WORDS, 2)
    elif label == "negative":
        words += rng.sample(_NEGATIVE_WORDS, 2)
    rng.shuffle(words)
    return " ".join(words)


def build_records(params: SynthParams):
    """Return ``(users, places, reviews)`` raw records for ``params``."""
    rng = random.Random(params.seed)
    cities = city_names(params.n_cities)
    cats = list(params.categories)
    uw = len(str(params.n_users))
    pw = len(str(params.n_places))

    user_city = [rng.randrange(len(cities)) for _ in range(params.n_users)]
    by_city = [[] for _ in cities]
    for u, c in enumerate(user_city):
        by_city[c].append(u)

    contacts = [set() for _ in range(params.n_users)]
    n_edges = int(round(params.n_users * params.contact_degree_mean / 2))
    if params.n_users > 1:
        for _ in range(n_edges):
            a = rng.randrange(params.n_users)
            pool = by_city[user_city[a]]
            if rng.random() < SAME_CITY_BIAS and len(pool) > 1:
                b = pool[rng.randrange(len(pool))]
            else:
                b = rng.randrange(params.n_users)
            if a != b:
                contacts[a].add(b)
                contacts[b].add(a)

    # Every (city, category) pair gets a place before the rest are drawn.
    pairs = [(c, k) for c in range(len(cities)) for k in range(len(cats))]
    rng.shuffle(pairs)
    place_meta = []
    for i in range(params.n_places):
        if i < len(pairs):
            place_meta.append(pairs[i])
        else:
            place_meta.append((rng.randrange(len(cities)), rng.randrange(len(cats))))
    popularity = list(range(params.n_places))
    rng.shuffle(popularity)
    counts = popularity_counts(params.n_reviews, params.n_places, params.review_skew)

    reviews = []
    for rank_pos, p in enumerate(popularity):
        city = place_meta[p][0]
        local = by_city[city]
        for _ in range(counts[rank_pos]):
            if local and rng.random() < SAME_CITY_BIAS:
                u = local[rng.randrange(len(local))]
            else:
                u = rng.randrange(params.n_users)
            draw = rng.random()
            if draw < params.positive_ratio:
                label = "positive"
            elif params.positive_ratio < 1.0 and (draw - params.positive_ratio) / (1.0 - params.positive_ratio) < 0.75:
                label = "negative"
            else:
                label = "neutral"
            reviews.append({
                "user_id": f"u{u:0{uw}d}",
                "place_id": f"p{p:0{pw}d}",
                "text": _review_text(rng, label),
                "label": label,
            })

    users = [
        {"id": f"u{u:0{uw}d}", "name": f"user {u}", "city": cities[user_city[u]],
         "contacts": [f"u{c:0{uw}d}" for c in sorted(contacts[u])]}
        for u in range(params.n_users)
    ]
    places = [
        {"id": f"p{p:0{pw}d}", "name": f"{cities[c]} {cats[k]} {p}", "city": cities[c], "category": cats[k]}
        for p, (c, k) in enumerate(place_meta)
    ]
    reviews.sort(key=lambda r: (r["place_id"], r["user_id"], r["text"]))
    return users, places, reviews


def generate(params: SynthParams, out_dir) -> Path:
    users, places, reviews = build_records(params)
    out = write_dataset(out_dir, users, places, reviews)
    with open(Path(out) / "synth_params.json", "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json.dumps(asdict(params), sort_keys=True) + "\n")
    return Path(out)
