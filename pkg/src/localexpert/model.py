"""Domain records, the immutable dataset store and the candidacy predicates."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field, replace
from types import MappingProxyType
from typing import Iterable, Mapping, Optional

from .errors import DomainError, NotFoundError

POSITIVE = "positive"
NEGATIVE = "negative"
NEUTRAL = "neutral"
LABELS = (POSITIVE, NEGATIVE, NEUTRAL)

GLOBAL = "global"
PA = "pa"
MODES = (GLOBAL, PA)

DEFAULT_CATEGORIES = (
    "shopping mall",
    "department store",
    "supermarket",
    "bookstore",
    "market",
)


def norm(text: Optional[str]) -> str:
    """Matching key for cities and categories: trimmed and case-folded."""
    return (text or "").strip().casefold()


@dataclass(frozen=True)
class User:
    id: str
    name: str = ""
    city: str = ""
    contacts: frozenset = frozenset()
    # Filled in by Dataset.from_records from the review list.
    categories: frozenset = frozenset()


@dataclass(frozen=True)
class Place:
    id: str
    name: str
    city: str
    category: str


@dataclass(frozen=True, order=True)
class Review:
    user_id: str
    place_id: str
    text: str = ""
    label: str = NEUTRAL


@dataclass(frozen=True)
class Query:
    text: str
    category: str
    city: str
    mode: str = GLOBAL
    k: int = 5
    user_id: Optional[str] = None

    def __post_init__(self):
        if not isinstance(self.k, int) or isinstance(self.k, bool) or self.k < 1:
            raise DomainError(f"walk length k must be a positive integer, got {self.k!r}")
        if self.mode not in MODES:
            raise DomainError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.mode == PA and not self.user_id:
            raise DomainError("mode 'pa' needs the requesting user id")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Read-only store of users, places and reviews plus lookup indexes.

    Build through :meth:`from_records` to get symmetric contacts, derived
    user categories and a canonical review order. The plain constructor keeps
    records as given, which lets validation see broken data.
    """

    users: Mapping[str, User]
    places: Mapping[str, Place]
    reviews: tuple
    _by_user: Mapping[str, tuple] = field(init=False, repr=False)
    _by_place: Mapping[str, tuple] = field(init=False, repr=False)
    _counts: Mapping[str, tuple] = field(init=False, repr=False)
    _user_keys: Mapping[str, tuple] = field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "users", MappingProxyType(dict(self.users)))
        object.__setattr__(self, "places", MappingProxyType(dict(self.places)))
        object.__setattr__(self, "reviews", tuple(self.reviews))
        by_user = defaultdict(list)
        by_place = defaultdict(list)
        counts = {pid: [0, 0, 0] for pid in self.places}
        for r in self.reviews:
            by_user[r.user_id].append(r)
            by_place[r.place_id].append(r)
            if r.place_id in counts and r.label in LABELS:
                counts[r.place_id][LABELS.index(r.label)] += 1
        object.__setattr__(self, "_by_user", MappingProxyType({u: tuple(v) for u, v in by_user.items()}))
        object.__setattr__(self, "_by_place", MappingProxyType({p: tuple(v) for p, v in by_place.items()}))
        object.__setattr__(self, "_counts", MappingProxyType({p: tuple(c) for p, c in counts.items()}))
        keys = {}
        for uid, u in self.users.items():
            keys[uid] = (norm(u.city), frozenset(norm(c) for c in u.categories))
        object.__setattr__(self, "_user_keys", MappingProxyType(keys))

    @classmethod
    def from_records(
        cls,
        users: Iterable[User],
        places: Iterable[Place],
        reviews: Iterable[Review],
        symmetrize: bool = True,
    ) -> "Dataset":
        users = {u.id: u for u in users}
        places = {p.id: p for p in places}
        reviews = sorted(reviews)
        contacts = {uid: set(u.contacts) for uid, u in users.items()}
        if symmetrize:
            for uid, u in users.items():
                for c in u.contacts:
                    if c in contacts:
                        contacts[c].add(uid)
        cats = defaultdict(set)
        for r in reviews:
            if r.place_id in places:
                cats[r.user_id].add(places[r.place_id].category)
        users = {
            uid: replace(u, contacts=frozenset(contacts[uid]), categories=frozenset(cats[uid]))
            for uid, u in users.items()
        }
        return cls(users, places, reviews)

    def __eq__(self, other):
        if not isinstance(other, Dataset):
            return NotImplemented
        return (
            dict(self.users) == dict(other.users)
            and dict(self.places) == dict(other.places)
            and sorted(self.reviews) == sorted(other.reviews)
        )

    __hash__ = None

    def user(self, user_id: str) -> User:
        try:
            return self.users[user_id]
        except KeyError:
            raise NotFoundError("user", user_id) from None

    def place(self, place_id: str) -> Place:
        try:
            return self.places[place_id]
        except KeyError:
            raise NotFoundError("place", place_id) from None

    def reviews_by_user(self, user_id: str) -> tuple:
        return self._by_user.get(user_id, ())

    def reviews_by_place(self, place_id: str) -> tuple:
        return self._by_place.get(place_id, ())

    def label_counts(self, place_id: str) -> tuple:
        """(positive, negative, neutral) review counts of a place."""
        self.place(place_id)
        return self._counts[place_id]

    def counts(self) -> dict:
        return {"users": len(self.users), "places": len(self.places), "reviews": len(self.reviews)}


def pos_neg_counts(dataset: Dataset, place_id: str) -> tuple[int, int]:
    pos, neg, _ = dataset.label_counts(place_id)
    return pos, neg


def is_candidate(dataset: Dataset, user_id: str, query: Query) -> bool:
    """Local authority (same city) and topic authority (reviewed the category)."""
    try:
        city, cats = dataset._user_keys[user_id]
    except KeyError:
        raise NotFoundError("user", user_id) from None
    return bool(city) and city == norm(query.city) and norm(query.category) in cats


def matching_places(dataset: Dataset, query: Query) -> list[str]:
    city, cat = norm(query.city), norm(query.category)
    return sorted(
        pid for pid, p in dataset.places.items() if norm(p.city) == city and norm(p.category) == cat
    )
