"""Reading and writing the line-delimited dataset directory format."""
from __future__ import annotations

import json
import logging
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .errors import IngestError
from .model import LABELS, NEGATIVE, NEUTRAL, POSITIVE, Dataset, Place, Review, User

log = logging.getLogger(__name__)

USERS_FILE = "users.jsonl"
PLACES_FILE = "places.jsonl"
REVIEWS_FILE = "reviews.jsonl"
LEXICON_FILE = "lexicon.txt"

_TOKEN = re.compile(r"[^\W\d_]+")


@dataclass(frozen=True)
class Lexicon:
    positive_terms: frozenset = frozenset()
    negative_terms: frozenset = frozenset()

    def __post_init__(self):
        pos = frozenset(t.lower() for t in self.positive_terms)
        neg = frozenset(t.lower() for t in self.negative_terms)
        if pos & neg:
            raise ValueError(f"terms listed as both positive and negative: {sorted(pos & neg)}")
        object.__setattr__(self, "positive_terms", pos)
        object.__setattr__(self, "negative_terms", neg)

    @classmethod
    def from_lines(cls, lines: Iterable[str]) -> "Lexicon":
        pos, neg = set(), set()
        for n, line in enumerate(lines, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            sign, term = line[0], line[1:].strip().lower()
            if sign not in "+-" or not term:
                raise IngestError(f"lexicon line {n}: expected '+term' or '-term', got {line!r}")
            (pos if sign == "+" else neg).add(term)
        return cls(frozenset(pos), frozenset(neg))

    @classmethod
    def from_file(cls, path) -> "Lexicon":
        with open(path, encoding="utf-8") as fh:
            return cls.from_lines(fh)


# English plus common Indonesian review vocabulary.
DEFAULT_LEXICON = Lexicon(
    frozenset({
        "good", "great", "nice", "cheap", "clean", "complete", "comfortable", "friendly",
        "love", "best", "recommended", "spacious", "affordable", "excellent", "cozy",
        "bagus", "murah", "bersih", "lengkap", "nyaman", "ramah", "enak", "mantap", "keren",
    }),
    frozenset({
        "bad", "expensive", "dirty", "crowded", "rude", "poor", "worst", "slow", "noisy",
        "hot", "small", "boring", "closed", "overpriced",
        "mahal", "kotor", "ramai", "sempit", "jelek", "panas", "macet", "lambat",
    }),
)


def label_review(text: str, lexicon: Lexicon = DEFAULT_LEXICON) -> str:
    tokens = [t.lower() for t in _TOKEN.findall(text or "")]
    pos = sum(t in lexicon.positive_terms for t in tokens)
    neg = sum(t in lexicon.negative_terms for t in tokens)
    if pos > neg:
        return POSITIVE
    if neg > pos:
        return NEGATIVE
    return NEUTRAL


@dataclass(frozen=True)
class Violation:
    locator: str
    rule: str
    message: str

    def __str__(self):
        return f"{self.locator}: [{self.rule}] {self.message}"


@dataclass
class ValidationReport:
    violations: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def add(self, locator, rule, message):
        self.violations.append(Violation(locator, rule, message))

    def __str__(self):
        return "\n".join(map(str, self.violations)) or "no violations"


def validate(dataset: Dataset, vocabulary: Optional[Iterable[str]] = None) -> ValidationReport:
    """Check every model invariant and report all violations found."""
    report = ValidationReport()
    vocab = None if vocabulary is None else {v.strip().casefold() for v in vocabulary}
    users, places = dataset.users, dataset.places

    for uid in sorted(users):
        u = users[uid]
        loc = f"user {uid}"
        if u.id != uid:
            report.add(loc, "id", f"record id {u.id!r} does not match its key")
        if uid in u.contacts:
            report.add(loc, "self-contact", "contacts include the user's own id")
        for c in sorted(u.contacts):
            if c == uid:
                continue
            if c not in users:
                report.add(loc, "contact-reference", f"contact {c!r} is not a known user")
            elif uid not in users[c].contacts:
                report.add(loc, "contact-symmetry", f"contact {c!r} does not list {uid!r} back")
        derived = {places[r.place_id].category for r in dataset.reviews_by_user(uid) if r.place_id in places}
        if set(u.categories) != derived:
            report.add(loc, "categories", "categories differ from the categories of reviewed places")

    for pid in sorted(places):
        p = places[pid]
        loc = f"place {pid}"
        if p.id != pid:
            report.add(loc, "id", f"record id {p.id!r} does not match its key")
        if not (p.city or "").strip():
            report.add(loc, "city", "place city is empty")
        if vocab is not None and p.category.strip().casefold() not in vocab:
            report.add(loc, "category", f"category {p.category!r} is not in the vocabulary")

    for n, r in enumerate(dataset.reviews):
        loc = f"review {n} ({r.user_id}->{r.place_id})"
        if r.user_id not in users:
            report.add(loc, "user-reference", f"unknown user {r.user_id!r}")
        if r.place_id not in places:
            report.add(loc, "place-reference", f"unknown place {r.place_id!r}")
        if r.label not in LABELS:
            report.add(loc, "label", f"label {r.label!r} is not one of {LABELS}")

    for pid in sorted(places):
        pos, neg, neu = dataset.label_counts(pid)
        labelled = sum(r.label in LABELS for r in dataset.reviews_by_place(pid))
        if pos + neg + neu != labelled:
            report.add(f"place {pid}", "label-counts", "label counts do not sum to the review count")
    return report


def _records(path: Path, required: tuple, report: ValidationReport):
    if not path.is_file():
        raise IngestError(f"missing dataset file: {path}")
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, 1):
            if not line.strip():
                continue
            loc = f"{path.name}:{n}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                report.add(loc, "json", str(exc))
                continue
            if not isinstance(rec, dict):
                report.add(loc, "record", "expected a JSON object")
                continue
            missing = [k for k in required if k not in rec]
            if missing:
                report.add(loc, "record", f"missing field(s): {', '.join(missing)}")
                continue
            out.append((loc, rec))
    return out


def load_dataset(directory, lexicon: Optional[Lexicon] = None) -> Dataset:
    """Load ``users.jsonl``, ``places.jsonl`` and ``reviews.jsonl`` from a directory.

    Reviews without a ``label`` are labelled with the lexicon: the one passed
    in, else ``lexicon.txt`` next to the data, else the built-in default.
    Any malformed line or dangling reference aborts with :class:`IngestError`.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise IngestError(f"dataset directory not found: {directory}")
    if lexicon is None:
        lex_path = directory / LEXICON_FILE
        lexicon = Lexicon.from_file(lex_path) if lex_path.is_file() else DEFAULT_LEXICON

    report = ValidationReport()
    user_recs = _records(directory / USERS_FILE, ("id",), report)
    place_recs = _records(directory / PLACES_FILE, ("id", "city", "category"), report)
    review_recs = _records(directory / REVIEWS_FILE, ("user_id", "place_id"), report)

    users, places, reviews = {}, {}, []
    for loc, rec in user_recs:
        uid = str(rec["id"])
        if uid in users:
            report.add(loc, "duplicate-id", f"user {uid!r} defined twice")
            continue
        contacts = rec.get("contacts") or []
        if not isinstance(contacts, list):
            report.add(loc, "record", "contacts must be a list")
            continue
        users[uid] = User(uid, str(rec.get("name", "")), str(rec.get("city") or ""),
                          frozenset(str(c) for c in contacts))
    for loc, rec in place_recs:
        pid = str(rec["id"])
        if pid in places:
            report.add(loc, "duplicate-id", f"place {pid!r} defined twice")
            continue
        places[pid] = Place(pid, str(rec.get("name", "")), str(rec["city"]), str(rec["category"]))
    for loc, rec in review_recs:
        uid, pid = str(rec["user_id"]), str(rec["place_id"])
        text = str(rec.get("text") or "")
        label = rec.get("label")
        label = label_review(text, lexicon) if label is None else str(label)
        if uid not in users:
            report.add(loc, "user-reference", f"unknown user {uid!r}")
        if pid not in places:
            report.add(loc, "place-reference", f"unknown place {pid!r}")
        if label not in LABELS:
            report.add(loc, "label", f"label {label!r} is not one of {LABELS}")
        reviews.append(Review(uid, pid, text, label))
    for loc, rec in user_recs:
        uid = str(rec["id"])
        for c in rec.get("contacts") or []:
            if str(c) == uid:
                report.add(loc, "self-contact", "contacts include the user's own id")
            elif str(c) not in users:
                report.add(loc, "contact-reference", f"contact {c!r} is not a known user")
    if not report.ok:
        raise IngestError(f"{len(report.violations)} problem(s) in {directory}:\n{report}", report)

    dataset = Dataset.from_records(users.values(), places.values(), reviews)
    final = validate(dataset)
    if not final.ok:
        raise IngestError(f"dataset in {directory} is inconsistent:\n{final}", final)
    log.debug("loaded %s from %s", dataset.counts(), directory)
    return dataset


def _dump(path: Path, records):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")


def write_dataset(directory, users: Iterable[dict], places: Iterable[dict], reviews: Iterable[dict]) -> Path:
    """Write raw records in the directory format; the inverse of :func:`load_dataset`."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _dump(directory / USERS_FILE, users)
    _dump(directory / PLACES_FILE, places)
    _dump(directory / REVIEWS_FILE, reviews)
    return directory
