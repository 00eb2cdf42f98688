import math
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from duptriage import retrieval
from duptriage.corpus import DuplicatePair
from duptriage.retrieval import (
    CandidateGenerator,
    CandidateInfo,
    CandidateSet,
    EvalEntry,
    HeadTrainConfig,
    NegativeSampler,
    SiameseHead,
    Triplet,
    build_buckets,
    bucket_similarity,
    cosine,
    generate_candidates,
    head_scores,
    load_candidates,
    load_head,
    pnorm_distance,
    rank_by_scores,
    rank_candidates,
    save_candidates,
    save_head,
    tag_jaccard,
    train_head,
    triplet_loss,
    triplet_loss_grad,
    validation_mrr,
)

import synth

UTC = timezone.utc
T0 = datetime(2015, 1, 1, tzinfo=UTC)


def _pair(a, m, days=100):
    return DuplicatePair(anchor=a, master=m, linked_at=T0 + timedelta(days=days))


# --------------------------------------------------------------- distances


def test_pnorm_distance_degrees():
    u = np.array([1.0, 2.0])
    v = np.array([4.0, 6.0])
    assert pnorm_distance(u, v, 1.0) == 7.0
    assert pnorm_distance(u, v, 2.0) == 5.0
    assert pnorm_distance(u, v, 3.0) == pytest.approx((27 + 64) ** (1 / 3))
    with pytest.raises(ValueError):
        pnorm_distance(u, v, 0.5)


def test_cosine_zero_vector_scores_zero():
    assert cosine(np.zeros(3), np.array([1.0, 0.0, 0.0])) == 0.0
    assert cosine(np.array([1.0, 0.0]), np.array([1.0, 0.0])) == pytest.approx(1.0)
    assert cosine(np.array([1.0, 0.0]), np.array([-2.0, 0.0])) == pytest.approx(-1.0)


def test_tag_jaccard():
    assert tag_jaccard(["a", "b"], ["b", "c"]) == pytest.approx(1 / 3)
    assert tag_jaccard(["a"], ["a"]) == 1.0
    assert tag_jaccard([], ["a"]) == 0.0


# ----------------------------------------------------------------- buckets


def test_build_buckets_transitive_merge():
    vecs = {i: np.array([float(i), 1.0]) for i in range(1, 7)}
    pairs = [_pair(2, 1), _pair(3, 2), _pair(5, 4)]
    buckets = build_buckets(pairs, vecs)
    members = [b.members for b in buckets]
    assert members == [(1, 2, 3), (4, 5)]
    assert np.array_equal(buckets[0].centroid, np.array([2.0, 1.0]))
    assert np.array_equal(buckets[1].centroid, np.array([4.5, 1.0]))
    assert [b.id for b in buckets] == [0, 1]


def test_build_buckets_missing_vector_raises():
    with pytest.raises(ValueError):
        build_buckets([_pair(2, 1)], {1: np.array([1.0])})


def test_bucket_similarity_matrix():
    vecs = {
        1: np.array([1.0, 0.0]),
        2: np.array([1.0, 0.0]),
        3: np.array([0.0, 1.0]),
        4: np.array([0.0, 1.0]),
        5: np.array([0.0, 0.0]),
        6: np.array([0.0, 0.0]),
    }
    buckets = build_buckets([_pair(2, 1), _pair(4, 3), _pair(6, 5)], vecs)
    sims = bucket_similarity(buckets)
    assert sims.shape == (3, 3)
    assert sims[0, 1] == pytest.approx(0.0)
    assert np.all(np.diag(sims) == 1.0)
    # zero centroid: similarity to others defined as 0
    assert sims[0, 2] == 0.0
    assert sims[2, 1] == 0.0


def _sampler_fixture(alpha=0.5):
    # bucket A {1,2} topic x; bucket B {3,4} topic x-ish; bucket C {5,6} topic y
    records = [
        synth.make_record(1, ["w"], ["w"], ["x", "x2"], T0, 1),
        synth.make_record(2, ["w"], ["w"], ["x"], T0 + timedelta(days=1), 1),
        synth.make_record(3, ["w"], ["w"], ["x", "x2"], T0, 1),
        synth.make_record(4, ["w"], ["w"], ["z"], T0 + timedelta(days=1), 0),
        synth.make_record(5, ["w"], ["w"], ["y"], T0, 1),
        synth.make_record(6, ["w"], ["w"], ["y", "x"], T0 + timedelta(days=1), 1),
    ]
    vecs = {
        1: np.array([1.0, 0.0]),
        2: np.array([1.0, 0.1]),
        3: np.array([1.0, 0.2]),
        4: np.array([1.0, 0.3]),
        5: np.array([0.9, 0.05]),
        6: np.array([0.95, 0.0]),
    }
    pairs = [_pair(2, 1), _pair(4, 3), _pair(6, 5)]
    buckets = build_buckets(pairs, vecs)
    sims = bucket_similarity(buckets)
    return records, buckets, sims


def test_sampler_picks_best_tag_overlap_in_similar_buckets():
    records, buckets, sims = _sampler_fixture()
    sampler = NegativeSampler(buckets, sims, records, alpha=0.5, seed=0)
    # anchor 1 has tags {x, x2}; candidates outside bucket A: 3 (answered,
    # jaccard 1.0), 4 unanswered, 5 (0), 6 (1/3) -> 3 wins
    assert sampler.sample(1) == 3
    assert sampler.fallback_count == 0


def test_sampler_fallback_when_alpha_excludes_everything():
    records, buckets, sims = _sampler_fixture()
    sampler = NegativeSampler(buckets, sims, records, alpha=1.0, seed=3)
    picked = sampler.sample(1)
    assert picked in {3, 5, 6}  # answered, outside the anchor's bucket
    assert sampler.fallback_count == 1


def test_sampler_unknown_anchor_raises():
    records, buckets, sims = _sampler_fixture()
    sampler = NegativeSampler(buckets, sims, records)
    with pytest.raises(ValueError):
        sampler.sample(99)


def test_sampler_alpha_validated():
    records, buckets, sims = _sampler_fixture()
    with pytest.raises(ValueError):
        NegativeSampler(buckets, sims, records, alpha=1.5)


def test_triplet_members_distinct():
    with pytest.raises(ValueError):
        Triplet(anchor=1, positive=1, negative=2)


# -------------------------------------------------------------------- head


def test_head_forward_hand_value():
    head = SiameseHead(weight=np.array([[1.0, -1.0]]), bias=np.array([0.5]))
    x = np.array([2.0, 1.0])
    assert head.forward(x)[0] == pytest.approx(1.0 / (1.0 + math.exp(-1.5)))
    with pytest.raises(ValueError):
        head.forward(np.array([1.0]))


def test_head_shape_validation():
    with pytest.raises(ValueError):
        SiameseHead(weight=np.array([1.0, 2.0]), bias=np.array([0.0]))
    with pytest.raises(ValueError):
        SiameseHead(weight=np.eye(2), bias=np.array([0.0]))


def test_triplet_loss_hinge():
    a = np.array([0.0, 0.0])
    p = np.array([1.0, 0.0])
    n = np.array([0.0, 3.0])
    # d(a,p)=1, d(a,n)=3: margin 1 -> max(1-3+1, 0) = 0
    assert triplet_loss(a, p, n, margin=1.0) == 0.0
    # margin 3 -> 1
    assert triplet_loss(a, p, n, margin=3.0) == 1.0
    # margin 0 keeps the raw gap when positive
    assert triplet_loss(a, n, p, margin=0.0) == 2.0
    with pytest.raises(ValueError):
        triplet_loss(a, p, n, margin=-1.0)


def test_triplet_grad_zero_when_hinge_inactive():
    head = SiameseHead(weight=np.eye(2), bias=np.zeros(2), margin=0.0)
    loss, dw, db = triplet_loss_grad(head, np.array([0.0, 0.0]), np.array([0.1, 0.0]), np.array([5.0, 5.0]))
    assert loss == 0.0
    assert not dw.any()
    assert not db.any()


def _planted_training_setup(n_extra=40, dim=8, seed=4):
    """Features where each anchor is a noisy copy of its master."""
    rng = np.random.default_rng(seed)
    feats = {}
    records = []
    pairs = []
    qid = 1
    for k in range(10):
        base = rng.normal(size=dim)
        master, anchor = qid, qid + 1
        qid += 2
        feats[master] = base + 0.05 * rng.normal(size=dim)
        feats[anchor] = base + 0.05 * rng.normal(size=dim)
        for q, offset in ((master, 0), (anchor, 1)):
            records.append(
                synth.make_record(q, ["w"], ["w"], ["t"], T0 + timedelta(days=2 * k + offset), 1)
            )
        pairs.append(_pair(anchor, master, days=50 + k))
    for _ in range(n_extra):
        feats[qid] = rng.normal(size=dim)
        records.append(synth.make_record(qid, ["w"], ["w"], ["t"], T0, 1))
        qid += 1
    return records, pairs, feats


def test_train_head_improves_validation_mrr():
    records, pairs, feats = _planted_training_setup()
    train_pairs, val_pairs = pairs[:7], pairs[7:]
    vecs = {qid: feats[qid].copy() for qid in feats}
    buckets = build_buckets(train_pairs, vecs)
    sampler = NegativeSampler(buckets, bucket_similarity(buckets), records, alpha=0.0, seed=1)
    extras = [r.id for r in records if r.id > 20]
    entries = [
        EvalEntry(anchor=p.anchor, gold=p.master, candidates=tuple(sorted([p.master] + extras[:30])))
        for p in val_pairs
    ]
    cfg = HeadTrainConfig(output_dim=16, epochs=25, batch_size=4, seed=0, margin=1.0)

    calls = []

    def source(epoch):
        calls.append(epoch)
        return [Triplet(p.anchor, p.master, sampler.sample(p.anchor)) for p in train_pairs]

    head, history = train_head(source, feats, cfg, validation=entries)
    # the probe call doubles as epoch 0, so one call per epoch total
    assert calls == list(range(cfg.epochs))
    assert len(history.validation_mrr) == cfg.epochs
    assert max(history.validation_mrr) >= history.validation_mrr[0]
    assert history.best_epoch == int(np.argmax(history.validation_mrr))
    # returned weights are the checkpoint of the best epoch
    assert validation_mrr(head, feats, entries) == pytest.approx(max(history.validation_mrr))
    assert history.train_loss[-1] < history.train_loss[0]


def test_train_head_without_validation_keeps_final_weights():
    records, pairs, feats = _planted_training_setup(n_extra=5)
    trips = [Triplet(p.anchor, p.master, 21) for p in pairs[:5]]
    cfg = HeadTrainConfig(output_dim=8, epochs=2, batch_size=2, seed=0)
    head, history = train_head(trips, feats, cfg)
    assert history.validation_mrr == []
    assert head.output_dim == 8
    assert head.input_dim == 8


def test_train_head_empty_triplets_raises():
    with pytest.raises(ValueError):
        train_head([], {1: np.zeros(2)}, HeadTrainConfig(output_dim=2, epochs=1))


# -------------------------------------------------------------- candidates


def _candidate_fixture():
    mk = synth.make_record
    # tags of 2: the 3 shared ones plus 17 fillers -> jaccard exactly 3/20
    at_floor_tags = ["a", "b", "c"] + [f"x{i}" for i in range(17)]
    anchor = mk(10, ["w"], ["w"], ["a", "b", "c"], T0 + timedelta(days=50), 0)
    rows = [
        anchor,
        mk(1, ["w"], ["w"], ["a", "b"], T0, 2),  # passes all filters
        mk(2, ["w"], ["w"], at_floor_tags, T0, 2),  # jaccard exactly at floor
        mk(3, ["w"], ["w"], ["a", "b"], T0, 0),  # unanswered
        mk(4, ["w"], ["w"], ["a", "b"], T0 + timedelta(days=50), 2),  # same instant
        mk(5, ["w"], ["w"], ["a", "b"], T0 + timedelta(days=60), 2),  # newer
        mk(6, ["w"], ["w"], ["z"], T0, 2),  # no shared tag
        mk(7, ["w"], ["w"], ["a", "b"], T0, 2),  # cosine below floor
        mk(9, ["w"], ["w"], ["a", "b"], T0, 2),  # zero title vector
    ]
    base = np.array([1.0, 0.0])
    titles = {r.id: base.copy() for r in rows}
    theta_at = math.acos(0.27)
    titles[7] = np.array([math.cos(theta_at + 0.05), math.sin(theta_at + 0.05)])
    titles[9] = np.zeros(2)
    return rows, titles, anchor


def test_candidate_filters_each_boundary():
    rows, titles, anchor = _candidate_fixture()
    gen = CandidateGenerator(rows, titles)
    got = gen.for_anchor(anchor.id)
    # 1 passes; 2 jaccard == 0.15 not strict-greater; 3 unanswered; 4 not
    # strictly older; 5 newer; 6 disjoint tags; 7 cosine below the floor;
    # 9 zero vector scores 0 -> below floor
    assert got.ids() == [1]
    info = {c.id: c for c in got.candidates}
    assert info[1].tag_jaccard == pytest.approx(2 / 3)


def test_title_cosine_floor_is_inclusive():
    mk = synth.make_record
    anchor = mk(10, ["w"], ["w"], ["a"], T0 + timedelta(days=5), 0)
    cand = mk(1, ["w"], ["w"], ["a"], T0, 2)
    vec = np.array([0.27, 0.96])
    # the same float ops the generator runs, so equality is bit-exact
    floor = float(vec[0] / float(np.linalg.norm(vec)))
    titles = {10: np.array([1.0, 0.0]), 1: vec}
    gen = CandidateGenerator([anchor, cand], titles, tag_jaccard_floor=0.0, title_cosine_floor=floor)
    got = gen.for_anchor(10)
    assert got.ids() == [1]
    assert got.candidates[0].title_cosine == floor


def test_candidate_floor_overrides_accept_everything_answered_and_older():
    rows, titles, anchor = _candidate_fixture()
    gen = CandidateGenerator(rows, titles, tag_jaccard_floor=0.0, title_cosine_floor=-1.0)
    got = gen.for_anchor(anchor.id)
    assert got.ids() == [1, 2, 7, 9]  # sorted by (created_at, id)


def test_candidates_sorted_oldest_then_id():
    mk = synth.make_record
    anchor = mk(50, ["w"], ["w"], ["a"], T0 + timedelta(days=9), 1)
    rows = [
        anchor,
        mk(30, ["w"], ["w"], ["a"], T0 + timedelta(days=2), 1),
        mk(20, ["w"], ["w"], ["a"], T0 + timedelta(days=2), 1),
        mk(40, ["w"], ["w"], ["a"], T0, 1),
    ]
    titles = {r.id: np.array([1.0, 0.0]) for r in rows}
    got = CandidateGenerator(rows, titles, tag_jaccard_floor=0.0).for_anchor(50)
    assert got.ids() == [40, 20, 30]


def test_generate_candidates_one_shot_matches_generator():
    records = synth.random_corpus(60, seed=8)
    titles = synth.random_title_vectors(records, dim=6, seed=2)
    gen = CandidateGenerator(records, titles, tag_jaccard_floor=0.1, title_cosine_floor=0.0)
    for anchor in (records[5], records[20]):
        direct = generate_candidates(anchor, records, titles, tag_jaccard_floor=0.1, title_cosine_floor=0.0)
        assert direct.ids() == gen.for_anchor(anchor.id).ids()


def test_candidates_roundtrip(tmp_path):
    entry = EvalEntry(anchor=10, gold=3, candidates=(3, 5))
    cset = CandidateSet(
        anchor=10,
        candidates=[
            CandidateInfo(id=3, tag_jaccard=0.5, title_cosine=0.9),
            CandidateInfo(id=5, tag_jaccard=0.25, title_cosine=0.5),
        ],
    )
    path = tmp_path / "c.jsonl"
    save_candidates([(entry, cset)], path)
    loaded = load_candidates(path)
    assert len(loaded) == 1
    got_entry, got_set = loaded[0]
    assert got_entry == entry
    assert got_set.candidates == cset.candidates


# ----------------------------------------------------------------- ranking


def test_rank_by_scores_tie_breaks():
    created = {
        1: T0 + timedelta(days=3),
        2: T0 + timedelta(days=1),
        3: T0 + timedelta(days=1),
    }
    ranked = rank_by_scores(9, [(1, 0.5), (2, 0.5), (3, 0.5)], created, gold=1)
    assert [qid for qid, _ in ranked.ranking] == [2, 3, 1]
    assert ranked.gold_rank == 3
    ranked = rank_by_scores(9, [(1, 0.9), (2, 0.5)], created, gold=7)
    assert ranked.gold_rank is None


def test_head_scores_distance_and_cosine_agree_with_manual():
    head = SiameseHead(weight=np.eye(2), bias=np.zeros(2))
    feats = {1: np.array([1.0, 0.0]), 2: np.array([0.0, 1.0])}
    anchor_vec = np.array([1.0, 0.0])
    by_dist = dict(head_scores(head, feats, anchor_vec, [1, 2], score="distance"))
    h_a = head.forward(anchor_vec)
    assert by_dist[1] == pytest.approx(-pnorm_distance(h_a, head.forward(feats[1]), 2.0))
    by_cos = dict(head_scores(head, feats, anchor_vec, [1, 2], score="cosine"))
    assert by_cos[1] == pytest.approx(cosine(h_a, head.forward(feats[1])))
    assert by_cos[1] > by_cos[2]
    with pytest.raises(ValueError):
        head_scores(head, feats, anchor_vec, [1], score="dot")


def test_rank_candidates_uses_anchor_feature_fallback():
    head = SiameseHead(weight=np.eye(2), bias=np.zeros(2))
    feats = {1: np.array([1.0, 0.0]), 2: np.array([0.0, 1.0]), 9: np.array([1.0, 0.1])}
    created = {1: T0, 2: T0 + timedelta(days=1)}
    cset = CandidateSet(
        anchor=9,
        candidates=[CandidateInfo(1, 0.5, 0.9), CandidateInfo(2, 0.5, 0.8)],
    )
    ranked = rank_candidates(9, cset, head, feats, created, gold=1)
    assert ranked.ranking[0][0] == 1
    assert ranked.gold_rank == 1
    with pytest.raises(ValueError):
        rank_candidates(55, cset, head, feats, created)


# ------------------------------------------------------------- persistence


def test_head_roundtrip(tmp_path):
    rng = np.random.default_rng(3)
    head = SiameseHead(
        weight=rng.normal(size=(4, 6)),
        bias=rng.normal(size=4),
        norm_degree=3.0,
        margin=0.25,
        feature_mode="text+network",
    )
    p1, p2 = tmp_path / "h1.ckpt", tmp_path / "h2.ckpt"
    save_head(head, p1)
    save_head(head, p2)
    assert p1.read_bytes() == p2.read_bytes()
    loaded = load_head(p1)
    assert np.array_equal(loaded.weight, head.weight)
    assert np.array_equal(loaded.bias, head.bias)
    assert loaded.norm_degree == 3.0
    assert loaded.margin == 0.25
    assert loaded.feature_mode == "text+network"


def test_head_load_errors(tmp_path):
    path = tmp_path / "bad.ckpt"
    path.write_text("3 2 nope 1.0 text\n")
    with pytest.raises(ValueError):
        load_head(path)
    path.write_text("2 1 2.0 1.0 text\n1.0 2.0\n")
    with pytest.raises(ValueError):
        load_head(path)


def test_ranked_file_roundtrip(tmp_path):
    created = {1: T0, 2: T0 + timedelta(days=1), 3: T0 + timedelta(days=2)}
    lists = [
        rank_by_scores(9, [(1, 0.9), (2, 0.8), (3, 0.7)], created, gold=2),
        rank_by_scores(8, [(3, 0.9)], created, gold=7),
    ]
    path = tmp_path / "ranked.tsv"
    retrieval.write_ranked(lists, path, top_k=2)
    rows = retrieval.read_ranked(path)
    assert rows[0] == (9, 2, [1, 2])  # top_k truncates the id list
    assert rows[1] == (8, None, [3])
