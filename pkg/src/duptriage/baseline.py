"""Okapi BM25 over the same candidate sets the learned ranker sees.

Score of a document for a query:

    sum over query tokens t of
        IDF(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avglen))

with the smoothed, non-negative IDF(t) = ln((N - df + 0.5) / (df + 0.5) + 1).
Query tokens are summed as given, so a repeated token counts twice.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from datetime import datetime
from typing import Iterable, Mapping, Optional, Sequence

from .corpus import QuestionRecord
from .retrieval import CandidateSet, RankedList, rank_by_scores

DEFAULT_K1 = 1.5
DEFAULT_B = 0.75


@dataclass
class Bm25Index:
    doc_tf: dict[int, Counter]
    doc_len: dict[int, int]
    df: Counter
    n_docs: int
    avg_len: float
    k1: float = DEFAULT_K1
    b: float = DEFAULT_B


def index_corpus(records: Iterable[QuestionRecord], k1: float = DEFAULT_K1, b: float = DEFAULT_B) -> Bm25Index:
    """Indexes each question's title+body token stream as one document."""
    if k1 < 0 or not 0.0 <= b <= 1.0:
        raise ValueError("k1 must be >= 0 and b must lie in [0, 1]")
    doc_tf: dict[int, Counter] = {}
    doc_len: dict[int, int] = {}
    df: Counter = Counter()
    for record in records:
        tokens = list(record.title_tokens) + list(record.body_tokens)
        tf = Counter(tokens)
        doc_tf[record.id] = tf
        doc_len[record.id] = len(tokens)
        df.update(tf.keys())
    n = len(doc_tf)
    avg_len = sum(doc_len.values()) / n if n else 0.0
    return Bm25Index(doc_tf=doc_tf, doc_len=doc_len, df=df, n_docs=n, avg_len=avg_len, k1=k1, b=b)


def bm25_idf(index: Bm25Index, token: str) -> float:
    df = index.df.get(token, 0)
    return math.log((index.n_docs - df + 0.5) / (df + 0.5) + 1.0)


def bm25_score(query_tokens: Sequence[str], doc_id: int, index: Bm25Index) -> float:
    """Okapi score of one document; unknown doc ids raise."""
    tf = index.doc_tf.get(doc_id)
    if tf is None:
        raise ValueError(f"document {doc_id} is not in the index")
    length = index.doc_len[doc_id]
    norm_len = length / index.avg_len if index.avg_len > 0 else 0.0
    k1, b = index.k1, index.b
    score = 0.0
    for token in query_tokens:
        t = tf.get(token, 0)
        if t == 0:
            continue
        score += bm25_idf(index, token) * t * (k1 + 1.0) / (t + k1 * (1.0 - b + b * norm_len))
    return score


def bm25_rank(
    anchor: QuestionRecord,
    candidate_set: CandidateSet,
    index: Bm25Index,
    created_at: Mapping[int, datetime],
    gold: Optional[int] = None,
) -> RankedList:
    """Ranks a candidate set by BM25 with the shared tie-break policy."""
    query = list(anchor.title_tokens) + list(anchor.body_tokens)
    scored = [(qid, bm25_score(query, qid, index)) for qid in candidate_set.ids()]
    return rank_by_scores(anchor.id, scored, created_at, gold)
