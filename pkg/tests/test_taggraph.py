from collections import Counter
from datetime import datetime, timezone

import numpy as np
import pytest

from duptriage import taggraph
from duptriage.taggraph import (
    TagGraph,
    WalkConfig,
    build_graph,
    generate_walks,
    top_tag,
    transition_weights,
)

import synth

UTC = timezone.utc
T0 = datetime(2015, 1, 1, tzinfo=UTC)


def _rec(qid, tags):
    return synth.make_record(qid, ["w"], ["w"], tags, T0, 1)


def small_graph():
    # counts: a=3, b=2, c=2, d=1; co: ab=2, ac=1, bc=1, cd=1
    records = [
        _rec(1, ["a", "b"]),
        _rec(2, ["a", "b", "c"]),
        _rec(3, ["a"]),
        _rec(4, ["c", "d"]),
    ]
    return build_graph(records, threshold=0.005)


def test_build_graph_jaccard_weights():
    g = small_graph()
    assert g.weight("a", "b") == pytest.approx(2 / 3)  # 2 / (3 + 2 - 2)
    assert g.weight("a", "c") == pytest.approx(1 / 4)
    assert g.weight("b", "c") == pytest.approx(1 / 3)
    assert g.weight("c", "d") == pytest.approx(1 / 2)
    assert not g.has_edge("a", "d")
    assert not g.has_edge("b", "d")


def test_build_graph_threshold_is_strict():
    # co(a,b)=1 with counts 100 and 101 -> jaccard exactly 1/200
    records = [_rec(1, ["a", "b"])]
    records += [_rec(i, ["a"]) for i in range(2, 101)]
    records += [_rec(i, ["b"]) for i in range(101, 201)]
    g = build_graph(records, threshold=1 / 200)
    assert not g.has_edge("a", "b")
    g2 = build_graph(records, threshold=1 / 201)
    assert g2.has_edge("a", "b")


def test_nodes_include_edgeless_tags():
    records = [_rec(1, ["a", "b"]), _rec(2, ["loner"])]
    g = build_graph(records)
    assert "loner" in g.nodes
    assert g.neighbors("loner") == []


def test_duplicate_tag_on_one_question_counts_once():
    g = build_graph([_rec(1, ["a", "a", "b"])])
    assert g.tag_question_count["a"] == 1
    assert g.weight("a", "b") == 1.0


def test_neighbors_sorted_and_symmetric():
    g = small_graph()
    assert g.neighbors("a") == ["b", "c"]
    assert g.neighbors("c") == ["a", "b", "d"]
    assert g.weight("c", "a") == g.weight("a", "c")


def test_transition_weights_hand_example():
    g = small_graph()
    # standing at c, arrived from a: back to a scaled 1/p, b neighbors a -> 1,
    # d does not neighbor a -> 1/q
    nbrs, w = transition_weights(g, prev="a", current="c", p=2.0, q=0.5)
    assert nbrs == ["a", "b", "d"]
    assert w == pytest.approx([0.25 / 2.0, 1 / 3, 0.5 / 0.5])


def test_single_node_walk_stays_put():
    g = build_graph([_rec(1, ["solo"])])
    walks = generate_walks(g, WalkConfig(walks_per_node=2, walk_length=5, seed=0))
    assert walks == [["solo"], ["solo"]]


def test_generate_walks_shape_and_determinism():
    g = small_graph()
    cfg = WalkConfig(p=1.3, q=0.8, walks_per_node=4, walk_length=10, seed=7)
    walks_a = generate_walks(g, cfg)
    walks_b = generate_walks(g, cfg)
    assert walks_a == walks_b
    assert len(walks_a) == 4 * len(g.nodes)
    for walk in walks_a:
        assert len(walk) == 10
        for a, b in zip(walk, walk[1:]):
            assert g.has_edge(a, b)
    assert walks_a != generate_walks(g, WalkConfig(p=1.3, q=0.8, walks_per_node=4, walk_length=10, seed=8))


def test_walk_transitions_match_analytic_distribution():
    """Empirical second-order move frequencies vs the unnormalized weights."""
    g = small_graph()
    p, q = 1.3, 0.8
    cfg = WalkConfig(p=p, q=q, walks_per_node=250, walk_length=400, seed=3)
    walks = generate_walks(g, cfg)
    seen: Counter = Counter()
    outof: Counter = Counter()
    for walk in walks:
        for prev, cur, nxt in zip(walk, walk[1:], walk[2:]):
            seen[(prev, cur, nxt)] += 1
            outof[(prev, cur)] += 1
    checked = 0
    for (prev, cur), total in outof.items():
        if total < 20000:
            continue
        checked += 1
        nbrs, w = transition_weights(g, prev, cur, p, q)
        expect = w / w.sum()
        for tag, share in zip(nbrs, expect):
            got = seen[(prev, cur, tag)] / total
            assert abs(got - share) < 0.01, (prev, cur, tag)
    assert checked >= 5


def test_top_tag_prefers_frequent_then_lexicographic():
    g = small_graph()
    assert top_tag(_rec(9, ["b", "a"]), g) == "a"  # a appears on 3 questions
    assert top_tag(_rec(9, ["b", "c"]), g) == "b"  # both on 2 -> lexicographic
    assert top_tag(_rec(9, ["zzz"]), g) == taggraph.UNKNOWN_TAG


def test_graph_roundtrip(tmp_path):
    g = small_graph()
    e1, c1 = tmp_path / "e1.tsv", tmp_path / "c1.tsv"
    e2, c2 = tmp_path / "e2.tsv", tmp_path / "c2.tsv"
    taggraph.save_graph(g, e1, c1)
    taggraph.save_graph(g, e2, c2)
    assert e1.read_bytes() == e2.read_bytes()
    assert c1.read_bytes() == c2.read_bytes()
    loaded = taggraph.load_graph(e1, c1)
    assert loaded.nodes == g.nodes
    assert loaded.tag_question_count == g.tag_question_count
    for (a, b), w in g.edges.items():
        assert loaded.weight(a, b) == w  # repr floats survive exactly


def test_walk_config_validation():
    with pytest.raises(ValueError):
        WalkConfig(p=0.0)
    with pytest.raises(ValueError):
        WalkConfig(walk_length=0)
