"""Tweets, lexicons and mention-candidate generation.

Corpus files are line-delimited JSON, one tweet per line::

    {"id": "t1", "author": "u7", "tokens": ["red", "sox", "win"], "gold": [[0, 2, "boston_red_sox"]]}

Lexicon files are TSV with columns ``surface``, ``entity_id``, ``prior``.
Rows for one surface form are contiguous and sorted by descending prior.
"""

from __future__ import annotations

import csv
import json
import logging
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

logger = logging.getLogger(__name__)

DEFAULT_MAX_NGRAM = 5


class CorpusError(ValueError):
    """Malformed or inconsistent corpus/lexicon data."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


def tokenize(text: str) -> tuple[str, ...]:
    return tuple(text.lower().split())


def spans_overlap(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """Half-open token intervals share at least one token."""
    return a[0] < b[1] and b[0] < a[1]


@dataclass(frozen=True)
class Annotation:
    start: int
    end: int
    entity: str

    def __post_init__(self):
        if not 0 <= self.start < self.end:
            raise CorpusError(f"bad span [{self.start}, {self.end})")
        if not self.entity:
            raise CorpusError("gold annotation without entity id")

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)


@dataclass(frozen=True)
class Tweet:
    id: str
    author: str
    tokens: tuple[str, ...]
    gold: tuple[Annotation, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        object.__setattr__(self, "gold", tuple(sorted(self.gold, key=lambda a: (a.start, a.end))))
        n = len(self.tokens)
        for ann in self.gold:
            if ann.end > n:
                raise CorpusError(f"tweet {self.id}: gold span [{ann.start}, {ann.end}) exceeds {n} tokens")
        for a, b in zip(self.gold, self.gold[1:]):
            if spans_overlap(a.span, b.span):
                raise CorpusError(f"tweet {self.id}: overlapping gold spans {a.span} and {b.span}")

    def to_record(self) -> dict:
        return {
            "id": self.id,
            "author": self.author,
            "tokens": list(self.tokens),
            "gold": [[a.start, a.end, a.entity] for a in self.gold],
        }

    @classmethod
    def from_record(cls, rec: dict) -> "Tweet":
        try:
            gold = tuple(Annotation(int(s), int(e), str(ent)) for s, e, ent in rec.get("gold", []))
            return cls(str(rec["id"]), str(rec["author"]), tuple(str(t) for t in rec["tokens"]), gold)
        except (KeyError, TypeError) as exc:
            raise CorpusError(f"bad record: {exc!r}") from None


@dataclass(frozen=True)
class MentionCandidate:
    """One lexicon-matched n-gram; Nil is implicit and never stored in ``candidates``."""

    index: int
    start: int
    end: int
    surface: str
    candidates: tuple[str, ...]
    priors: tuple[float, ...]

    @property
    def span(self) -> tuple[int, int]:
        return (self.start, self.end)

    @property
    def words(self) -> tuple[str, ...]:
        return tuple(self.surface.split(" "))

    def prior(self, entity: str | None) -> float:
        if entity is None:
            return 0.0
        return self.priors[self.candidates.index(entity)]


@dataclass
class Lexicon:
    entries: dict[str, tuple[tuple[str, float], ...]] = field(default_factory=dict)
    max_ngram: int = DEFAULT_MAX_NGRAM

    def __post_init__(self):
        for surface, cands in self.entries.items():
            if not cands:
                raise CorpusError(f"surface {surface!r} has no candidates")
            priors = [p for _, p in cands]
            if any(not 0.0 <= p <= 1.0 for p in priors):
                raise CorpusError(f"surface {surface!r}: prior outside [0, 1]")
            if any(a < b for a, b in zip(priors, priors[1:])):
                raise CorpusError(f"surface {surface!r}: candidates not sorted by descending prior")

    def __contains__(self, surface: str) -> bool:
        return surface in self.entries

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, surface: str) -> tuple[tuple[str, float], ...] | None:
        return self.entries.get(surface)

    def entities(self) -> set[str]:
        return {e for cands in self.entries.values() for e, _ in cands}


def generate_candidates(tweet: Tweet, lexicon: Lexicon) -> list[MentionCandidate]:
    """All lexicon-matching n-grams, ordered by (end, start)."""
    tokens = tweet.tokens
    found = []
    for end in range(1, len(tokens) + 1):
        for start in range(end - 1, max(end - lexicon.max_ngram, 0) - 1, -1):
            surface = " ".join(tokens[start:end])
            cands = lexicon.get(surface)
            if cands is not None:
                found.append((end, start, surface, cands))
    found.sort(key=lambda item: (item[0], item[1]))
    return [
        MentionCandidate(
            index=t,
            start=start,
            end=end,
            surface=surface,
            candidates=tuple(e for e, _ in cands),
            priors=tuple(p for _, p in cands),
        )
        for t, (end, start, surface, cands) in enumerate(found)
    ]


def gold_assignment(tweet: Tweet, candidates: Sequence[MentionCandidate]) -> tuple[str | None, ...] | None:
    """Map gold annotations onto candidates; ``None`` if some gold item is unreachable.

    A gold item is reachable when a candidate has exactly its span and lists its
    entity. Unreachable gold makes the tweet infeasible for training.
    """
    by_span = {c.span: c for c in candidates}
    labels: list[str | None] = [None] * len(candidates)
    for ann in tweet.gold:
        cand = by_span.get(ann.span)
        if cand is None or ann.entity not in cand.candidates:
            return None
        labels[cand.index] = ann.entity
    return tuple(labels)


# -- file formats ----------------------------------------------------------


def save_corpus(tweets: Iterable[Tweet], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for tw in tweets:
            fh.write(json.dumps(tw.to_record(), ensure_ascii=False, sort_keys=False))
            fh.write("\n")


def load_corpus(path: str | Path) -> list[Tweet]:
    tweets = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"invalid JSON ({exc.msg})", line=lineno) from None
            if not isinstance(rec, dict):
                raise CorpusError("record is not an object", line=lineno)
            try:
                tweets.append(Tweet.from_record(rec))
            except CorpusError as exc:
                raise CorpusError(str(exc), line=lineno) from None
    return tweets


def save_lexicon(lexicon: Lexicon, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, delimiter="\t", lineterminator="\n")
        for surface in sorted(lexicon.entries):
            for entity, prior in lexicon.entries[surface]:
                writer.writerow([surface, entity, repr(float(prior))])


def load_lexicon(path: str | Path, max_ngram: int = DEFAULT_MAX_NGRAM) -> Lexicon:
    entries: dict[str, list[tuple[str, float]]] = {}
    last = None
    with open(path, encoding="utf-8", newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter="\t"), 1):
            if not row or (lineno == 1 and row[:3] == ["surface", "entity_id", "prior"]):
                continue
            if len(row) != 3:
                raise CorpusError(f"expected 3 columns, got {len(row)}", line=lineno)
            surface, entity, prior_text = row
            surface = " ".join(tokenize(surface))
            try:
                prior = float(prior_text)
            except ValueError:
                raise CorpusError(f"bad prior {prior_text!r}", line=lineno) from None
            if surface in entries and surface != last:
                raise CorpusError(f"rows for {surface!r} are not contiguous", line=lineno)
            entries.setdefault(surface, []).append((entity, prior))
            last = surface
    longest = max((len(s.split(" ")) for s in entries), default=1)
    if longest > max_ngram:
        logger.warning("lexicon has %d-token surfaces; max_ngram=%d will skip them", longest, max_ngram)
    return Lexicon({s: tuple(c) for s, c in entries.items()}, max_ngram=max_ngram)
