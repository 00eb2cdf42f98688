"""BM25 indexing and scoring against hand-computed values."""

import math
from datetime import datetime, timedelta, timezone

import pytest

from duptriage.baseline import (
    Bm25Index,
    bm25_idf,
    bm25_rank,
    bm25_score,
    index_corpus,
)
from duptriage.retrieval import CandidateInfo, CandidateSet

import synth

BASE = datetime(2015, 1, 1, tzinfo=timezone.utc)


def _docs():
    mk = synth.make_record
    return [
        mk(1, ["mount", "drive"], ["mount", "usb", "drive", "fails"], ["disk"], BASE),
        mk(2, ["wifi", "drops"], ["wifi", "network", "drops"], ["net"], BASE + timedelta(days=1)),
        mk(3, ["mount", "network", "share"], ["nfs", "share"], ["net"], BASE + timedelta(days=2)),
    ]


@pytest.fixture()
def index():
    return index_corpus(_docs())


def test_index_counts(index):
    assert index.n_docs == 3
    assert index.doc_len == {1: 6, 2: 5, 3: 5}
    assert index.avg_len == pytest.approx(16 / 3)
    assert index.df["mount"] == 2
    assert index.df["share"] == 1
    assert index.doc_tf[1]["mount"] == 2
    assert index.doc_tf[3]["share"] == 2


def test_idf_hand_values(index):
    # ln((N - df + 0.5) / (df + 0.5) + 1)
    assert bm25_idf(index, "mount") == pytest.approx(math.log((3 - 2 + 0.5) / 2.5 + 1.0), abs=1e-15)
    assert bm25_idf(index, "drive") == pytest.approx(math.log((3 - 1 + 0.5) / 1.5 + 1.0), abs=1e-15)
    assert bm25_idf(index, "zebra") == pytest.approx(math.log(3.5 / 0.5 + 1.0), abs=1e-15)
    assert bm25_idf(index, "zebra") > 0.0


def test_score_matches_direct_formula(index):
    k1, b = 1.5, 0.75
    norm_len = 6 / (16 / 3)
    expected = 0.0
    for token, tf in (("mount", 2), ("drive", 2)):
        idf = math.log((3 - index.df[token] + 0.5) / (index.df[token] + 0.5) + 1.0)
        expected += idf * tf * (k1 + 1.0) / (tf + k1 * (1.0 - b + b * norm_len))
    got = bm25_score(["mount", "drive"], 1, index)
    assert got == pytest.approx(expected, abs=1e-12)


def test_repeated_query_token_counts_twice(index):
    once = bm25_score(["mount"], 3, index)
    twice = bm25_score(["mount", "mount"], 3, index)
    assert twice == pytest.approx(2.0 * once, abs=1e-12)
    assert once > 0.0


def test_query_without_matches_scores_zero(index):
    assert bm25_score(["zebra", "quagga"], 2, index) == 0.0


def test_unknown_document_raises(index):
    with pytest.raises(ValueError, match="not in the index"):
        bm25_score(["mount"], 999, index)


@pytest.mark.parametrize("k1,b", [(-0.1, 0.75), (1.5, -0.01), (1.5, 1.01)])
def test_parameter_validation(k1, b):
    with pytest.raises(ValueError):
        index_corpus(_docs(), k1=k1, b=b)


def test_edge_parameters_accepted():
    idx = index_corpus(_docs(), k1=0.0, b=0.0)
    assert idx.k1 == 0.0
    idx = index_corpus(_docs(), b=1.0)
    assert idx.b == 1.0


def test_all_empty_documents_score_zero():
    mk = synth.make_record
    docs = [mk(1, [], [], ["t"], BASE), mk(2, [], [], ["t"], BASE)]
    idx = index_corpus(docs)
    assert idx.avg_len == 0.0
    assert bm25_score(["mount"], 1, idx) == 0.0


def test_rank_orders_by_score_then_age_then_id(index):
    docs = _docs()
    created = {d.id: d.created_at for d in docs}
    anchor = synth.make_record(
        9, ["network"], ["network"], ["net"], BASE + timedelta(days=9)
    )
    cset = CandidateSet(
        anchor=9,
        candidates=[CandidateInfo(id=i, tag_jaccard=1.0, title_cosine=1.0) for i in (1, 2, 3)],
    )
    ranked = bm25_rank(anchor, cset, index, created, gold=3)
    # docs 2 and 3 tie exactly (tf 1, len 5); the older one (doc 2) wins,
    # doc 1 has no "network" at all and lands last
    assert ranked.anchor == 9
    assert [qid for qid, _ in ranked.ranking] == [2, 3, 1]
    assert ranked.ranking[0][1] == pytest.approx(ranked.ranking[1][1], abs=1e-15)
    assert ranked.ranking[2][1] == 0.0
    assert ranked.gold_id == 3
    assert ranked.gold_rank == 2


def test_rank_empty_candidates(index):
    anchor = _docs()[0]
    cset = CandidateSet(anchor=anchor.id, candidates=[])
    ranked = bm25_rank(anchor, cset, index, {}, gold=None)
    assert ranked.ranking == []
    assert ranked.gold_rank is None
