"""Per-question feature vectors shared by retrieval and time prediction."""

from __future__ import annotations

from typing import Iterable, Optional

import numpy as np

from .corpus import QuestionRecord
from .embed import EmbeddingStore, QuestionEncoder
from .taggraph import TagGraph, top_tag

FEATURE_MODES = ("text", "text+network")


def question_text_vector(record: QuestionRecord, encoder: QuestionEncoder) -> np.ndarray:
    """Concatenated title and body vectors."""
    title, body = encoder.encode(record)
    return np.concatenate([title, body])


def question_features(
    record: QuestionRecord,
    encoder: QuestionEncoder,
    tag_store: Optional[EmbeddingStore] = None,
    graph: Optional[TagGraph] = None,
) -> np.ndarray:
    """Title+body vector, with the top tag's embedding appended when given.

    A question whose top tag has no stored vector (including the
    unknown-tag sentinel) gets a zero tag block.
    """
    text = question_text_vector(record, encoder)
    if tag_store is None:
        return text
    if graph is None:
        raise ValueError("tag features need the tag graph to pick the top tag")
    tag_vec = tag_store.get(top_tag(record, graph))
    if tag_vec is None:
        tag_vec = np.zeros(tag_store.dimension)
    return np.concatenate([text, tag_vec])


def corpus_text_vectors(records: Iterable[QuestionRecord], encoder: QuestionEncoder) -> dict[int, np.ndarray]:
    return {r.id: question_text_vector(r, encoder) for r in records}


def corpus_features(
    records: Iterable[QuestionRecord],
    encoder: QuestionEncoder,
    tag_store: Optional[EmbeddingStore] = None,
    graph: Optional[TagGraph] = None,
) -> dict[int, np.ndarray]:
    return {r.id: question_features(r, encoder, tag_store, graph) for r in records}


def title_vectors(records: Iterable[QuestionRecord], encoder: QuestionEncoder) -> dict[int, np.ndarray]:
    return {r.id: encoder.encode(r)[0] for r in records}
