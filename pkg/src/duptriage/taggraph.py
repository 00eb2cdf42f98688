"""Tag co-occurrence network: Jaccard-weighted edges and biased random walks."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .corpus import QuestionRecord

UNKNOWN_TAG = "unknown-tag"

EDGE_WEIGHT_FLOOR = 0.005


class TagGraph:
    """Undirected weighted tag graph plus per-tag question counts.

    Nodes are every tag seen in the source records, including tags whose
    edges all fell below the weight floor. Neighbor lists are kept sorted so
    sampling order is reproducible.
    """

    def __init__(self, edges: dict[tuple[str, str], float], tag_question_count: dict[str, int]):
        self.tag_question_count = dict(tag_question_count)
        self._weights: dict[tuple[str, str], float] = {}
        adjacency: dict[str, dict[str, float]] = {}
        for (a, b), w in edges.items():
            if a == b:
                raise ValueError(f"self edge on tag {a!r}")
            key = (a, b) if a < b else (b, a)
            self._weights[key] = w
            adjacency.setdefault(a, {})[b] = w
            adjacency.setdefault(b, {})[a] = w
        self._neighbors: dict[str, list[str]] = {}
        self._neighbor_weights: dict[str, np.ndarray] = {}
        for tag, nbrs in adjacency.items():
            ordered = sorted(nbrs)
            self._neighbors[tag] = ordered
            self._neighbor_weights[tag] = np.array([nbrs[x] for x in ordered], dtype=np.float64)

    @property
    def nodes(self) -> list[str]:
        return sorted(self.tag_question_count)

    @property
    def edges(self) -> dict[tuple[str, str], float]:
        return dict(self._weights)

    def neighbors(self, tag: str) -> list[str]:
        return self._neighbors.get(tag, [])

    def neighbor_weights(self, tag: str) -> np.ndarray:
        return self._neighbor_weights.get(tag, np.zeros(0))

    def has_edge(self, a: str, b: str) -> bool:
        key = (a, b) if a < b else (b, a)
        return key in self._weights

    def weight(self, a: str, b: str) -> float:
        key = (a, b) if a < b else (b, a)
        return self._weights.get(key, 0.0)


def build_graph(records: Iterable[QuestionRecord], threshold: float = EDGE_WEIGHT_FLOOR) -> TagGraph:
    """Builds the Jaccard co-occurrence graph over the given questions.

    Edge weight = |questions with both tags| / |questions with either|;
    edges at or below ``threshold`` are discarded.
    """
    tag_count: dict[str, int] = {}
    co_count: dict[tuple[str, str], int] = {}
    for record in records:
        tags = sorted(set(record.tags))
        for tag in tags:
            tag_count[tag] = tag_count.get(tag, 0) + 1
        for a, b in combinations(tags, 2):
            co_count[(a, b)] = co_count.get((a, b), 0) + 1
    edges = {}
    for (a, b), both in co_count.items():
        union = tag_count[a] + tag_count[b] - both
        w = both / union
        if w > threshold:
            edges[(a, b)] = w
    return TagGraph(edges, tag_count)


@dataclass
class WalkConfig:
    """Second-order walk parameters; p penalizes returns, q controls range."""

    p: float = 1.3
    q: float = 0.8
    walks_per_node: int = 5
    walk_length: int = 80
    seed: int = 0

    def __post_init__(self):
        if self.p <= 0 or self.q <= 0:
            raise ValueError("p and q must be positive")
        if self.walks_per_node < 1 or self.walk_length < 1:
            raise ValueError("walks_per_node and walk_length must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def transition_weights(graph: TagGraph, prev: str, current: str, p: float, q: float) -> tuple[list[str], np.ndarray]:
    """Unnormalized move weights out of ``current`` given the previous node.

    Each neighbor x of current gets w(current, x) scaled by 1/p when x is
    the previous node, 1 when x neighbors the previous node, 1/q otherwise.
    """
    nbrs = graph.neighbors(current)
    weights = graph.neighbor_weights(current).copy()
    for i, x in enumerate(nbrs):
        if x == prev:
            weights[i] /= p
        elif not graph.has_edge(x, prev):
            weights[i] /= q
    return nbrs, weights


def _pick(rng: np.random.Generator, weights: np.ndarray) -> int:
    total = float(weights.sum())
    cdf = np.cumsum(weights)
    r = rng.random() * total
    return min(int(np.searchsorted(cdf, r, side="right")), len(weights) - 1)


def _single_walk(graph: TagGraph, start: str, cfg: WalkConfig, rng: np.random.Generator) -> list[str]:
    walk = [start]
    nbrs = graph.neighbors(start)
    if not nbrs or cfg.walk_length == 1:
        return walk
    weights = graph.neighbor_weights(start)
    walk.append(nbrs[_pick(rng, weights)])
    while len(walk) < cfg.walk_length:
        prev, current = walk[-2], walk[-1]
        nbrs, weights = transition_weights(graph, prev, current, cfg.p, cfg.q)
        if not nbrs:
            break
        walk.append(nbrs[_pick(rng, weights)])
    return walk


def generate_walks(graph: TagGraph, cfg: WalkConfig) -> list[list[str]]:
    """Runs walks_per_node biased walks from every node.

    Each walk draws from its own random stream seeded by (seed, node index,
    walk index), so a given walk is reproducible in isolation. Isolated
    nodes yield single-node walks.
    """
    walks = []
    for node_index, node in enumerate(graph.nodes):
        for walk_index in range(cfg.walks_per_node):
            rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, node_index, walk_index]))
            walks.append(_single_walk(graph, node, cfg, rng))
    return walks


def top_tag(record: QuestionRecord, graph: TagGraph) -> str:
    """The record's most frequent tag in the graph's source period.

    Count ties break toward the lexicographically smaller tag; if no tag of
    the record was seen at all, the sentinel "unknown-tag" comes back.
    """
    best: Optional[tuple[tuple[int, str], str]] = None
    for tag in record.tags:
        count = graph.tag_question_count.get(tag)
        if count is None:
            continue
        key = (-count, tag)
        if best is None or key < best[0]:
            best = (key, tag)
    return best[1] if best else UNKNOWN_TAG


def save_graph(graph: TagGraph, edges_path, counts_path) -> None:
    """Writes the edge list (tab-separated, weights as decimals) + counts."""
    with open(edges_path, "w", encoding="utf-8") as fh:
        for (a, b), w in sorted(graph.edges.items()):
            fh.write(f"{a}\t{b}\t{w!r}\n")
    with open(counts_path, "w", encoding="utf-8") as fh:
        for tag, count in sorted(graph.tag_question_count.items()):
            fh.write(f"{tag}\t{count}\n")


def load_graph(edges_path, counts_path) -> TagGraph:
    edges = {}
    with open(edges_path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{edges_path}: line {n}: expected 'tag\\ttag\\tweight'")
            edges[(parts[0], parts[1])] = float(parts[2])
    counts = {}
    with open(counts_path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ValueError(f"{counts_path}: line {n}: expected 'tag\\tcount'")
            counts[parts[0]] = int(parts[1])
    return TagGraph(edges, counts)
