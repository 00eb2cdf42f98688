"""Question-archive ingestion: records, duplicate pairs, splits, stats.

Input is the StackExchange dump format: a Posts XML file whose ``<row>``
elements carry questions (PostTypeId 1) and answers (PostTypeId 2), and a
PostLinks XML file whose duplicate links have LinkTypeId 3.
"""

from __future__ import annotations

import html
import json
import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

QUESTIONS_FILE = "questions.jsonl"
PAIRS_FILE = "pairs.jsonl"
STATS_FILE = "stats.json"

_MARKUP_RE = re.compile(r"<[^>]*>")
_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_TOKEN_RE = re.compile(r"[a-z0-9]+")
_TAG_ITEM_RE = re.compile(r"<([^<>]+)>")
_FRACTION_RE = re.compile(r"\.\d+")

_DUPLICATE_LINK_TYPE = "3"

_stop_tokens: Optional[frozenset[str]] = None


def _markup_to_space(text: str) -> str:
    return _MARKUP_RE.sub(" ", text)


def stopword_tokens() -> frozenset[str]:
    """Effective stopword set: the shipped list run through the tokenizer."""
    global _stop_tokens
    if _stop_tokens is None:
        raw = resources.files(__package__).joinpath("stopwords_en.txt").read_text("utf-8")
        toks: set[str] = set()
        for line in raw.splitlines():
            toks.update(_TOKEN_RE.findall(line.strip().lower()))
        _stop_tokens = frozenset(toks)
    return _stop_tokens


def preprocess_text(raw: str, stopwords: Optional[frozenset[str]] = None) -> list[str]:
    """Normalizes raw title/body text to a token list.

    Markup tags and URLs are dropped, text is lowercased and split on
    anything outside [a-z0-9], stopwords are removed. Idempotent: feeding
    the joined output back in reproduces the same tokens.
    """
    if stopwords is None:
        stopwords = stopword_tokens()
    text = html.unescape(raw)
    text = _markup_to_space(text)
    text = _URL_RE.sub(" ", text)
    tokens = _TOKEN_RE.findall(text.lower())
    return [t for t in tokens if t not in stopwords]


def parse_timestamp(value: str) -> datetime:
    """Parses a dump timestamp to an aware UTC datetime at second precision."""
    text = value.strip()
    if text.endswith("Z"):
        text = text[:-1]
    text = _FRACTION_RE.sub("", text, count=1)
    moment = datetime.fromisoformat(text)
    if moment.tzinfo is None:
        return moment.replace(tzinfo=timezone.utc)
    return moment.astimezone(timezone.utc)


def format_timestamp(moment: datetime) -> str:
    return moment.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%SZ")


def parse_tags(tag_string: str) -> tuple[str, ...]:
    """Splits the dump's ``<t1><t2>`` tag attribute, order preserved."""
    return tuple(_TAG_ITEM_RE.findall(tag_string))


@dataclass(frozen=True)
class QuestionRecord:
    """One question, immutable after ingestion."""

    id: int
    title_raw: str
    body_raw: str
    title_tokens: tuple[str, ...]
    body_tokens: tuple[str, ...]
    tags: tuple[str, ...]
    created_at: datetime
    answer_count: int

    def __post_init__(self):
        if self.id <= 0:
            raise ValueError(f"question id must be positive, got {self.id}")
        if not self.tags:
            raise ValueError(f"question {self.id} has no tags")
        if self.answer_count < 0:
            raise ValueError(f"question {self.id} has negative answer count")

    @property
    def answered(self) -> bool:
        return self.answer_count >= 1


@dataclass(frozen=True)
class DuplicateLink:
    post_id: int
    related_post_id: int
    linked_at: datetime


@dataclass(frozen=True)
class DuplicatePair:
    """A closed duplicate: anchor is the newer question, master the older."""

    anchor: int
    master: int
    linked_at: datetime

    def __post_init__(self):
        if self.anchor == self.master:
            raise ValueError(f"pair links question {self.anchor} to itself")


@dataclass
class ParsedPosts:
    records: list[QuestionRecord]
    answer_counts: dict[int, int]
    malformed_rows: int = 0


@dataclass
class ParsedLinks:
    links: list[DuplicateLink]
    malformed_rows: int = 0


@dataclass
class PairStats:
    """Counters from resolving links into pairs; nothing silently dropped."""

    dropped_unresolved: int = 0
    dropped_self_links: int = 0
    deduplicated: int = 0
    backdated: int = 0  # linked before the anchor was posted; kept


def _iter_rows(source):
    for _, elem in ET.iterparse(source, events=("end",)):
        if elem.tag == "row":
            yield dict(elem.attrib)
            elem.clear()


def parse_posts(source) -> ParsedPosts:
    """Streams a Posts dump into question records plus an answer-count index.

    ``source`` is a path or a file object. Malformed rows are skipped and
    counted; a repeated question id raises, since the dump is corrupt.
    """
    pending: dict[int, dict] = {}
    explicit_counts: dict[int, Optional[int]] = {}
    counted: dict[int, int] = {}
    malformed = 0
    for attrs in _iter_rows(source):
        post_type = attrs.get("PostTypeId")
        if post_type == "1":
            try:
                qid = int(attrs["Id"])
                created = parse_timestamp(attrs["CreationDate"])
                title_raw = attrs["Title"]
                body_raw = attrs["Body"]
                tags = parse_tags(attrs["Tags"])
                if not tags:
                    raise ValueError("empty tag list")
                explicit = attrs.get("AnswerCount")
                explicit_counts[qid] = int(explicit) if explicit is not None else None
            except (KeyError, ValueError):
                malformed += 1
                continue
            if qid in pending:
                raise ValueError(f"duplicate question id {qid} in posts dump")
            pending[qid] = {
                "created": created,
                "title_raw": title_raw,
                "body_raw": body_raw,
                "tags": tags,
            }
        elif post_type == "2":
            try:
                parent = int(attrs["ParentId"])
            except (KeyError, ValueError):
                malformed += 1
                continue
            counted[parent] = counted.get(parent, 0) + 1
    records = []
    answer_counts: dict[int, int] = {}
    for qid, row in pending.items():
        explicit = explicit_counts[qid]
        count = explicit if explicit is not None else counted.get(qid, 0)
        answer_counts[qid] = count
        records.append(
            QuestionRecord(
                id=qid,
                title_raw=row["title_raw"],
                body_raw=row["body_raw"],
                title_tokens=tuple(preprocess_text(row["title_raw"])),
                body_tokens=tuple(preprocess_text(row["body_raw"])),
                tags=row["tags"],
                created_at=row["created"],
                answer_count=count,
            )
        )
    return ParsedPosts(records=records, answer_counts=answer_counts, malformed_rows=malformed)


def parse_links(source) -> ParsedLinks:
    """Streams a PostLinks dump, keeping duplicate-type links only."""
    links = []
    malformed = 0
    for attrs in _iter_rows(source):
        if attrs.get("LinkTypeId") != _DUPLICATE_LINK_TYPE:
            continue
        try:
            links.append(
                DuplicateLink(
                    post_id=int(attrs["PostId"]),
                    related_post_id=int(attrs["RelatedPostId"]),
                    linked_at=parse_timestamp(attrs["CreationDate"]),
                )
            )
        except (KeyError, ValueError):
            malformed += 1
    return ParsedLinks(links=links, malformed_rows=malformed)


def derive_pairs(
    links: Iterable[DuplicateLink], records: Iterable[QuestionRecord]
) -> tuple[list[DuplicatePair], PairStats]:
    """Resolves raw links into anchor/master pairs.

    The anchor is the newer question (larger id on a timestamp tie). Self
    links and links touching unknown ids are dropped; repeated unordered id
    pairs keep their first occurrence. Pairs linked before the anchor was
    posted are kept but counted as backdated.
    """
    by_id = {r.id: r for r in records}
    stats = PairStats()
    seen: set[tuple[int, int]] = set()
    pairs = []
    for link in links:
        a, b = link.post_id, link.related_post_id
        if a == b:
            stats.dropped_self_links += 1
            continue
        if a not in by_id or b not in by_id:
            stats.dropped_unresolved += 1
            continue
        key = (a, b) if a < b else (b, a)
        if key in seen:
            stats.deduplicated += 1
            continue
        seen.add(key)
        ra, rb = by_id[a], by_id[b]
        if (ra.created_at, ra.id) > (rb.created_at, rb.id):
            anchor, master = ra, rb
        else:
            anchor, master = rb, ra
        if link.linked_at < anchor.created_at:
            stats.backdated += 1
        pairs.append(DuplicatePair(anchor=anchor.id, master=master.id, linked_at=link.linked_at))
    return pairs, stats


def _utc(year: int, month: int, day: int) -> datetime:
    return datetime(year, month, day, tzinfo=timezone.utc)


@dataclass(frozen=True)
class SplitBounds:
    """Half-open [start, end) link-time windows for the retrieval task."""

    train_start: datetime = field(default_factory=lambda: _utc(2010, 1, 1))
    train_end: datetime = field(default_factory=lambda: _utc(2019, 1, 1))
    validation_start: datetime = field(default_factory=lambda: _utc(2019, 10, 1))
    validation_end: datetime = field(default_factory=lambda: _utc(2020, 1, 1))
    test_start: datetime = field(default_factory=lambda: _utc(2020, 10, 1))
    test_end: datetime = field(default_factory=lambda: _utc(2021, 1, 1))


@dataclass
class SplitAssignment:
    train: list[DuplicatePair]
    validation: list[DuplicatePair]
    test: list[DuplicatePair]


def split_pairs(pairs: Iterable[DuplicatePair], bounds: Optional[SplitBounds] = None) -> SplitAssignment:
    """Assigns pairs to train/validation/test by linked_at; others are unused."""
    if bounds is None:
        bounds = SplitBounds()
    out = SplitAssignment(train=[], validation=[], test=[])
    for pair in pairs:
        t = pair.linked_at
        if bounds.train_start <= t < bounds.train_end:
            out.train.append(pair)
        elif bounds.validation_start <= t < bounds.validation_end:
            out.validation.append(pair)
        elif bounds.test_start <= t < bounds.test_end:
            out.test.append(pair)
    return out


_HOUR = timedelta(hours=1)


def corpus_stats(records: list[QuestionRecord], pairs: list[DuplicatePair]) -> dict:
    """Descriptive counts plus the share of pairs confirmed fast/medium/slow."""
    n = len(records)
    tags = set()
    title_words = 0
    body_words = 0
    tag_slots = 0
    for r in records:
        tags.update(r.tags)
        title_words += len(r.title_tokens)
        body_words += len(r.body_tokens)
        tag_slots += len(r.tags)
    by_id = {r.id: r for r in records}
    within_12h = between_12h_5d = over_5d = 0
    for pair in pairs:
        hours = (pair.linked_at - by_id[pair.anchor].created_at) / _HOUR
        if hours <= 12:
            within_12h += 1
        elif hours <= 120:
            between_12h_5d += 1
        else:
            over_5d += 1
    n_pairs = len(pairs)
    return {
        "questions": n,
        "avg_title_words": title_words / n if n else 0.0,
        "avg_body_words": body_words / n if n else 0.0,
        "avg_tags": tag_slots / n if n else 0.0,
        "distinct_tags": len(tags),
        "duplicate_pairs": n_pairs,
        "confirmed_within_12h": within_12h / n_pairs if n_pairs else 0.0,
        "confirmed_12h_to_5d": between_12h_5d / n_pairs if n_pairs else 0.0,
        "confirmed_over_5d": over_5d / n_pairs if n_pairs else 0.0,
    }


def _record_to_json(r: QuestionRecord) -> str:
    return json.dumps(
        {
            "id": r.id,
            "title_raw": r.title_raw,
            "body_raw": r.body_raw,
            "title_tokens": list(r.title_tokens),
            "body_tokens": list(r.body_tokens),
            "tags": list(r.tags),
            "created_at": format_timestamp(r.created_at),
            "answer_count": r.answer_count,
        },
        sort_keys=True,
        separators=(",", ":"),
    )


def save_archive(
    directory,
    records: list[QuestionRecord],
    pairs: list[DuplicatePair],
    stats: Optional[dict] = None,
) -> None:
    """Writes questions.jsonl, pairs.jsonl and stats.json under ``directory``."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / QUESTIONS_FILE, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(_record_to_json(r) + "\n")
    with open(directory / PAIRS_FILE, "w", encoding="utf-8") as fh:
        for p in pairs:
            fh.write(
                json.dumps(
                    {"anchor": p.anchor, "master": p.master, "linked_at": format_timestamp(p.linked_at)},
                    sort_keys=True,
                    separators=(",", ":"),
                )
                + "\n"
            )
    if stats is None:
        stats = corpus_stats(records, pairs)
    with open(directory / STATS_FILE, "w", encoding="utf-8") as fh:
        json.dump(stats, fh, sort_keys=True, indent=2)
        fh.write("\n")


def load_archive(directory) -> tuple[list[QuestionRecord], list[DuplicatePair]]:
    directory = Path(directory)
    records = []
    with open(directory / QUESTIONS_FILE, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            records.append(
                QuestionRecord(
                    id=row["id"],
                    title_raw=row["title_raw"],
                    body_raw=row["body_raw"],
                    title_tokens=tuple(row["title_tokens"]),
                    body_tokens=tuple(row["body_tokens"]),
                    tags=tuple(row["tags"]),
                    created_at=parse_timestamp(row["created_at"]),
                    answer_count=row["answer_count"],
                )
            )
    pairs = []
    with open(directory / PAIRS_FILE, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            pairs.append(
                DuplicatePair(
                    anchor=row["anchor"],
                    master=row["master"],
                    linked_at=parse_timestamp(row["linked_at"]),
                )
            )
    return records, pairs


def load_stats(directory) -> dict:
    with open(Path(directory) / STATS_FILE, encoding="utf-8") as fh:
        return json.load(fh)
