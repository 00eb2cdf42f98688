"""Skip-gram negative-sampling embeddings, vector stores, question encoders.

One SGNS engine serves both token sequences and tag walks. Training is plain
SGD on

    sum over (center, context) pairs of
        log sigmoid(u_ctx . v_center)
        + sum over k negatives of log sigmoid(-u_neg . v_center)

with negatives drawn from the unigram distribution raised to 0.75 and the
learning rate decaying linearly to 1e-4 of its initial value.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .corpus import QuestionRecord

TITLE_SUFFIX = "#title"
BODY_SUFFIX = "#body"

_PAIR_BATCH = 512
_FINAL_LR_FRACTION = 1e-4


class StoreFormatError(ValueError):
    """Raised when a vector-store file does not match the declared layout."""


class EmbeddingStore:
    """Fixed-dimension id -> float64 vector map."""

    def __init__(self, dimension: int, vectors: Optional[dict[str, np.ndarray]] = None):
        if dimension <= 0:
            raise ValueError(f"dimension must be positive, got {dimension}")
        self.dimension = dimension
        self.vectors: dict[str, np.ndarray] = {}
        if vectors:
            for key, vec in vectors.items():
                arr = np.asarray(vec, dtype=np.float64)
                if arr.shape != (dimension,):
                    raise ValueError(f"vector for {key!r} has shape {arr.shape}, expected ({dimension},)")
                if not np.all(np.isfinite(arr)):
                    raise ValueError(f"vector for {key!r} has non-finite components")
                self.vectors[key] = arr

    def __len__(self) -> int:
        return len(self.vectors)

    def __contains__(self, key: str) -> bool:
        return key in self.vectors

    def __getitem__(self, key: str) -> np.ndarray:
        return self.vectors[key]

    def get(self, key: str) -> Optional[np.ndarray]:
        return self.vectors.get(key)

    def ids(self) -> list[str]:
        return list(self.vectors)


def save_store(store: EmbeddingStore, path) -> None:
    """Writes ``<count> <dimension>`` then one ``<id> <components...>`` line each.

    Ids are written sorted so equal stores produce identical bytes; floats
    use repr, which round-trips exactly.
    """
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(store)} {store.dimension}\n")
        for key in sorted(store.vectors):
            if any(ch.isspace() for ch in key):
                raise ValueError(f"store id {key!r} contains whitespace")
            parts = " ".join(repr(float(x)) for x in store.vectors[key])
            fh.write(f"{key} {parts}\n")


def load_store(path) -> EmbeddingStore:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise StoreFormatError(f"{path}: line 1: expected '<count> <dimension>' header")
        try:
            count, dimension = int(parts[0]), int(parts[1])
        except ValueError:
            raise StoreFormatError(f"{path}: line 1: header fields must be integers") from None
        if dimension <= 0:
            raise StoreFormatError(f"{path}: line 1: dimension must be positive")
        vectors: dict[str, np.ndarray] = {}
        for n, line in enumerate(fh, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            fields = line.split()
            if len(fields) != dimension + 1:
                raise StoreFormatError(
                    f"{path}: line {n}: expected {dimension} components, got {len(fields) - 1}"
                )
            key = fields[0]
            if key in vectors:
                raise StoreFormatError(f"{path}: line {n}: duplicate id {key!r}")
            try:
                arr = np.array([float(x) for x in fields[1:]], dtype=np.float64)
            except ValueError:
                raise StoreFormatError(f"{path}: line {n}: non-numeric component") from None
            if not np.all(np.isfinite(arr)):
                raise StoreFormatError(f"{path}: line {n}: non-finite component")
            vectors[key] = arr
    if len(vectors) != count:
        raise StoreFormatError(f"{path}: header declares {count} vectors, file holds {len(vectors)}")
    return EmbeddingStore(dimension, vectors)


@dataclass
class Vocabulary:
    tokens: list[str]
    counts: dict[str, int]
    index: dict[str, int] = field(init=False)

    def __post_init__(self):
        self.index = {t: i for i, t in enumerate(self.tokens)}

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index


def build_vocab(sequences: Iterable[Sequence[str]], min_count: int = 1) -> Vocabulary:
    """Counts items and keeps those seen at least min_count times."""
    counts: dict[str, int] = {}
    for seq in sequences:
        for token in seq:
            counts[token] = counts.get(token, 0) + 1
    kept = {t: c for t, c in counts.items() if c >= min_count}
    ordered = sorted(kept, key=lambda t: (-kept[t], t))
    return Vocabulary(tokens=ordered, counts=kept)


@dataclass
class SgnsConfig:
    dimension: int = 100
    window: int = 10
    negatives_per_positive: int = 5
    epochs: int = 5
    initial_learning_rate: float = 0.025
    min_count: int = 1
    seed: int = 0
    # kept for config compatibility with common trainers; no effect here
    batch_words: int = 5

    def __post_init__(self):
        if self.dimension <= 0:
            raise ValueError(f"dimension must be positive, got {self.dimension}")
        if self.window < 1:
            raise ValueError("window must be at least 1")
        if self.negatives_per_positive < 1:
            raise ValueError("negatives_per_positive must be at least 1")
        if self.epochs < 1:
            raise ValueError("epochs must be at least 1")
        if self.initial_learning_rate <= 0:
            raise ValueError("initial_learning_rate must be positive")
        if self.min_count < 1:
            raise ValueError("min_count must be at least 1")
        if self.seed < 0:
            raise ValueError("seed must be non-negative")


def _sigmoid(x):
    out = np.empty_like(x, dtype=np.float64)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _log_sigmoid(x):
    # -log(1 + exp(-x)) computed without overflow on either side
    return np.where(x >= 0, -np.log1p(np.exp(-np.abs(x))), x - np.log1p(np.exp(-np.abs(x))))


def sgns_pair_loss(center: np.ndarray, context: np.ndarray, negatives: np.ndarray) -> float:
    """Negated per-pair objective (a loss to minimize)."""
    s_pos = float(center @ context)
    s_neg = negatives @ center
    return float(-_log_sigmoid(np.array([s_pos]))[0] - _log_sigmoid(-s_neg).sum())


def sgns_pair_grad(
    center: np.ndarray, context: np.ndarray, negatives: np.ndarray
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Analytic gradients of sgns_pair_loss wrt center, context, negatives."""
    g_pos = _sigmoid(np.array([center @ context]))[0] - 1.0
    g_neg = _sigmoid(negatives @ center)
    d_center = g_pos * context + g_neg @ negatives
    d_context = g_pos * center
    d_negatives = g_neg[:, None] * center[None, :]
    return d_center, d_context, d_negatives


class SgnsTrainer:
    """Fits SGNS vectors; keeps the running mean objective per epoch."""

    def __init__(self, cfg: SgnsConfig):
        self.cfg = cfg
        self.epoch_objectives: list[float] = []
        self.vocab: Optional[Vocabulary] = None

    def fit(self, sequences: Sequence[Sequence[str]]) -> EmbeddingStore:
        cfg = self.cfg
        vocab = build_vocab(sequences, cfg.min_count)
        if len(vocab) == 0:
            raise ValueError("vocabulary is empty after min_count filtering")
        self.vocab = vocab
        indexed = [[vocab.index[t] for t in seq if t in vocab.index] for seq in sequences]
        centers, contexts = _window_pairs(indexed, cfg.window)
        if centers.size == 0:
            raise ValueError("no training pairs: every sequence collapsed below length 2")
        rng = np.random.default_rng(cfg.seed)
        n_vocab, dim = len(vocab), cfg.dimension
        syn0 = (rng.random((n_vocab, dim)) - 0.5) / dim
        syn1 = np.zeros((n_vocab, dim))
        counts = np.array([vocab.counts[t] for t in vocab.tokens], dtype=np.float64)
        noise = counts**0.75
        noise_cdf = np.cumsum(noise / noise.sum())
        n_pairs = centers.size
        batches_per_epoch = (n_pairs + _PAIR_BATCH - 1) // _PAIR_BATCH
        total_batches = batches_per_epoch * cfg.epochs
        lr0 = cfg.initial_learning_rate
        done = 0
        for _ in range(cfg.epochs):
            order = rng.permutation(n_pairs)
            loss_sum = 0.0
            for start in range(0, n_pairs, _PAIR_BATCH):
                batch = order[start : start + _PAIR_BATCH]
                progress = done / total_batches
                lr = lr0 * ((1.0 - progress) + progress * _FINAL_LR_FRACTION)
                negs = _sample_negatives(rng, noise_cdf, (batch.size, cfg.negatives_per_positive))
                loss_sum += _apply_pairs(syn0, syn1, centers[batch], contexts[batch], negs, lr)
                done += 1
            self.epoch_objectives.append(-loss_sum / n_pairs)
        return EmbeddingStore(dim, {tok: syn0[i].copy() for i, tok in enumerate(vocab.tokens)})


def _window_pairs(indexed: list[list[int]], window: int) -> tuple[np.ndarray, np.ndarray]:
    centers: list[int] = []
    contexts: list[int] = []
    for seq in indexed:
        n = len(seq)
        for i in range(n):
            lo = max(0, i - window)
            hi = min(n, i + window + 1)
            for j in range(lo, hi):
                if j != i:
                    centers.append(seq[i])
                    contexts.append(seq[j])
    return np.array(centers, dtype=np.int64), np.array(contexts, dtype=np.int64)


def _sample_negatives(rng: np.random.Generator, cdf: np.ndarray, shape) -> np.ndarray:
    draws = np.searchsorted(cdf, rng.random(shape), side="right")
    return np.minimum(draws, len(cdf) - 1)


def _apply_pairs(syn0, syn1, c_idx, o_idx, negs, lr) -> float:
    """Updates a batch of pairs in row-disjoint chunks; returns summed loss.

    A chunk only holds pairs whose rows do not overlap, so its one vectorized
    step is exactly the result of per-pair SGD. Summing same-row gradients
    taken at stale values instead multiplies the effective step by the row's
    multiplicity, which diverges on tiny vocabularies such as tag walks.
    """
    n = c_idx.shape[0]
    if n == 0:
        return 0.0
    loss = 0.0
    start = 0
    used0: set[int] = set()
    used1: set[int] = set()
    for k in range(n):
        rows1 = {int(o_idx[k]), *map(int, negs[k])}
        if int(c_idx[k]) in used0 or used1 & rows1:
            loss += _batch_update(syn0, syn1, c_idx[start:k], o_idx[start:k], negs[start:k], lr)
            start = k
            used0 = set()
            used1 = set()
        used0.add(int(c_idx[k]))
        used1 |= rows1
    loss += _batch_update(syn0, syn1, c_idx[start:n], o_idx[start:n], negs[start:n], lr)
    return loss


def _batch_update(syn0, syn1, c_idx, o_idx, negs, lr) -> float:
    """One summed-gradient step; callers must pass row-disjoint pairs."""
    v = syn0[c_idx]
    u_o = syn1[o_idx]
    u_n = syn1[negs]
    s_pos = np.einsum("bd,bd->b", v, u_o)
    s_neg = np.einsum("bd,bkd->bk", v, u_n)
    loss = float(-(_log_sigmoid(s_pos).sum() + _log_sigmoid(-s_neg).sum()))
    g_pos = _sigmoid(s_pos) - 1.0
    g_neg = _sigmoid(s_neg)
    d_v = g_pos[:, None] * u_o + np.einsum("bk,bkd->bd", g_neg, u_n)
    d_uo = g_pos[:, None] * v
    d_un = g_neg[:, :, None] * v[:, None, :]
    np.add.at(syn0, c_idx, -lr * d_v)
    np.add.at(syn1, o_idx, -lr * d_uo)
    dim = syn1.shape[1]
    np.add.at(syn1, negs.reshape(-1), -lr * d_un.reshape(-1, dim))
    return loss


def train_sgns(sequences: Sequence[Sequence[str]], cfg: SgnsConfig) -> EmbeddingStore:
    """Trains center vectors for token sequences or walk sequences."""
    return SgnsTrainer(cfg).fit(sequences)


def encode_field(tokens: Sequence[str], store: EmbeddingStore) -> np.ndarray:
    """Mean of stored token vectors; zero vector when nothing is in store."""
    hits = [store.vectors[t] for t in tokens if t in store.vectors]
    if not hits:
        return np.zeros(store.dimension)
    return np.mean(hits, axis=0)


class QuestionEncoder:
    """Turns a question record into fixed-size (title, body) vectors."""

    title_dimension: int
    body_dimension: int

    def encode(self, record: QuestionRecord) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError


class MeanPoolEncoder(QuestionEncoder):
    """Averages corpus-trained token vectors over each field."""

    def __init__(self, token_store: EmbeddingStore):
        self.token_store = token_store
        self.title_dimension = token_store.dimension
        self.body_dimension = token_store.dimension

    def encode(self, record: QuestionRecord) -> tuple[np.ndarray, np.ndarray]:
        return (
            encode_field(record.title_tokens, self.token_store),
            encode_field(record.body_tokens, self.token_store),
        )


class PrecomputedEncoder(QuestionEncoder):
    """Looks up externally computed field vectors keyed ``<id>#title`` / ``<id>#body``."""

    def __init__(self, field_store: EmbeddingStore):
        self.field_store = field_store
        self.title_dimension = field_store.dimension
        self.body_dimension = field_store.dimension

    def encode(self, record: QuestionRecord) -> tuple[np.ndarray, np.ndarray]:
        title_key = f"{record.id}{TITLE_SUFFIX}"
        body_key = f"{record.id}{BODY_SUFFIX}"
        title = self.field_store.get(title_key)
        body = self.field_store.get(body_key)
        if title is None or body is None:
            raise ValueError(
                f"no stored vectors for question {record.id} "
                f"(expected ids {title_key!r} and {body_key!r})"
            )
        return title, body
