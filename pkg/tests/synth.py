"""Synthetic corpora, dumps and planted-signal fixtures shared across tests."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone
from xml.sax.saxutils import quoteattr

import numpy as np

from duptriage.corpus import DuplicatePair, QuestionRecord

UTC = timezone.utc

FILLERS = [
    "install",
    "error",
    "boot",
    "update",
    "terminal",
    "package",
    "driver",
    "config",
    "network",
    "permission",
    "kernel",
    "desktop",
]


def topic_vocab(topic: int) -> list[str]:
    return [f"topic{topic}word{j}" for j in range(10)]


def make_record(
    qid: int,
    title_tokens,
    body_tokens,
    tags,
    created_at: datetime,
    answer_count: int = 1,
) -> QuestionRecord:
    return QuestionRecord(
        id=qid,
        title_raw=" ".join(title_tokens),
        body_raw=" ".join(body_tokens),
        title_tokens=tuple(title_tokens),
        body_tokens=tuple(body_tokens),
        tags=tuple(tags),
        created_at=created_at,
        answer_count=answer_count,
    )


def planted_corpus(seed: int = 0):
    """260 questions over 10 topics with 30 paraphrase duplicate pairs.

    Pair members share most tokens plus a rare signature token, so text
    similarity identifies the master.  Anchors land in the train (18),
    validation (4) and test (8) retrieval windows by link date.  Returns
    (records, pairs).
    """
    rng = random.Random(seed)
    records: list[QuestionRecord] = []
    pairs: list[DuplicatePair] = []
    qid = 100

    for topic in range(10):
        vocab = topic_vocab(topic)
        base = datetime(2015, 3, 1, tzinfo=UTC) + timedelta(days=20 * topic)
        for j in range(20):
            title = rng.sample(vocab, 4) + [rng.choice(FILLERS)]
            body = [rng.choice(vocab) for _ in range(7)] + rng.sample(FILLERS, 3)
            rng.shuffle(body)
            answered = 0 if j % 7 == 3 else 1 + rng.randrange(3)
            records.append(
                make_record(
                    qid,
                    title,
                    body,
                    ("common", f"topic-{topic}"),
                    base + timedelta(days=47 * j % 1100, hours=j),
                    answer_count=answered,
                )
            )
            qid += 1

    for index in range(30):
        topic = index % 10
        vocab = topic_vocab(topic)
        signature = f"sig{index:03d}"
        master_title = rng.sample(vocab, 4) + [signature]
        master_body = (
            [rng.choice(vocab) for _ in range(6)]
            + [signature, signature]
            + rng.sample(FILLERS, 2)
        )
        rng.shuffle(master_body)
        master_created = datetime(2015, 6, 1, tzinfo=UTC) + timedelta(days=13 * index)
        master = make_record(
            qid,
            master_title,
            master_body,
            ("common", f"topic-{topic}"),
            master_created,
            answer_count=1 + index % 3,
        )
        qid += 1

        anchor_title = list(master_title)
        swap = rng.randrange(4)
        anchor_title[swap] = rng.choice([w for w in vocab if w not in anchor_title])
        rng.shuffle(anchor_title)
        anchor_body = list(master_body)
        anchor_body[rng.randrange(len(anchor_body))] = rng.choice(vocab)
        rng.shuffle(anchor_body)

        if index < 18:
            created = datetime(2018, 2, 1, tzinfo=UTC) + timedelta(days=9 * index)
            linked = created + timedelta(hours=[0.5, 6.0, 48.0, 300.0, 1500.0, 90.0][index % 6])
        elif index < 22:
            j = index - 18
            created = datetime(2019, 7, 1, tzinfo=UTC) + timedelta(days=6 * j)
            linked = datetime(2019, 10, 5, tzinfo=UTC) + timedelta(days=16 * j, hours=j)
        else:
            j = index - 22
            created = datetime(2020, 6, 1, tzinfo=UTC) + timedelta(days=8 * j)
            linked = datetime(2020, 10, 10, tzinfo=UTC) + timedelta(days=8 * j, hours=3 * j)

        anchor = make_record(
            qid,
            anchor_title,
            anchor_body,
            ("common", f"topic-{topic}"),
            created,
            answer_count=1,
        )
        qid += 1
        records.append(master)
        records.append(anchor)
        pairs.append(DuplicatePair(anchor=anchor.id, master=master.id, linked_at=linked))

    return records, pairs


def random_corpus(n: int = 500, seed: int = 0, tag_pool: int = 12):
    """Loosely structured questions for filter/oracle tests."""
    rng = random.Random(seed)
    tags = [f"tag{i}" for i in range(tag_pool)]
    words = [f"w{i}" for i in range(60)]
    records = []
    start = datetime(2014, 1, 1, tzinfo=UTC)
    for qid in range(1, n + 1):
        k = rng.randint(1, 4)
        chosen = rng.sample(tags, k)
        title = [rng.choice(words) for _ in range(rng.randint(2, 6))]
        body = [rng.choice(words) for _ in range(rng.randint(4, 14))]
        records.append(
            make_record(
                qid,
                title,
                body,
                chosen,
                start + timedelta(hours=rng.randint(0, 60000)),
                answer_count=rng.choice([0, 0, 1, 1, 2, 5]),
            )
        )
    return records


def random_title_vectors(records, dim: int = 24, seed: int = 1, zero_every: int = 0):
    """Seeded dense title vectors; every ``zero_every``-th id gets a zero vector."""
    rng = np.random.default_rng(seed)
    out = {}
    for i, r in enumerate(records):
        if zero_every and i % zero_every == zero_every - 1:
            out[r.id] = np.zeros(dim)
        else:
            out[r.id] = rng.normal(size=dim)
    return out


def _dump_date(dt: datetime) -> str:
    return dt.strftime("%Y-%m-%dT%H:%M:%S.000")


def write_dump(dump_dir, records, pairs, extra_post_rows=(), extra_link_rows=()):
    """Writes Posts.xml / PostLinks.xml the way the archive parser expects.

    Bodies get wrapped in markup and tags use the ``<a><b>`` attribute
    encoding so parsing is exercised end to end.
    """
    dump_dir.mkdir(parents=True, exist_ok=True)
    post_lines = ['<?xml version="1.0" encoding="utf-8"?>', "<posts>"]
    answer_id = 900000
    for r in records:
        tags_attr = quoteattr("".join(f"<{t}>" for t in r.tags))
        body_attr = quoteattr(f"<p>{r.body_raw}</p>")
        title_attr = quoteattr(r.title_raw)
        post_lines.append(
            f'  <row Id="{r.id}" PostTypeId="1" CreationDate="{_dump_date(r.created_at)}" '
            f"Title={title_attr} Body={body_attr} Tags={tags_attr} "
            f'AnswerCount="{r.answer_count}" />'
        )
        for _ in range(min(r.answer_count, 1)):
            post_lines.append(
                f'  <row Id="{answer_id}" PostTypeId="2" ParentId="{r.id}" '
                f'CreationDate="{_dump_date(r.created_at)}" Body="ans" />'
            )
            answer_id += 1
    post_lines.extend(extra_post_rows)
    post_lines.append("</posts>")
    (dump_dir / "Posts.xml").write_text("\n".join(post_lines) + "\n", encoding="utf-8")

    link_lines = ['<?xml version="1.0" encoding="utf-8"?>', "<postlinks>"]
    for i, p in enumerate(pairs, start=1):
        link_lines.append(
            f'  <row Id="{i}" CreationDate="{_dump_date(p.linked_at)}" '
            f'PostId="{p.anchor}" RelatedPostId="{p.master}" LinkTypeId="3" />'
        )
    link_lines.extend(extra_link_rows)
    link_lines.append("</postlinks>")
    (dump_dir / "PostLinks.xml").write_text("\n".join(link_lines) + "\n", encoding="utf-8")
