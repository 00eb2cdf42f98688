"""Duplicate retrieval: training buckets, hard negatives, the Siamese head,
candidate generation and ranking.

The head is one shared projection sigma(W x + b) applied to anchor,
positive and negative feature vectors alike; training minimizes the hinged
triplet loss max(d(a, p) - d(a, n) + margin, 0) with a p-norm distance d.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable, Iterable, Mapping, Optional, Sequence, Union

import numpy as np

from .corpus import DuplicatePair, QuestionRecord
from .embed import _sigmoid

DEFAULT_TAG_JACCARD = 0.15
DEFAULT_TITLE_COSINE = 0.27
DEFAULT_BUCKET_ALPHA = 0.5

SCORE_KINDS = ("distance", "cosine")


def pnorm_distance(u: np.ndarray, v: np.ndarray, degree: float = 2.0) -> float:
    if degree < 1:
        raise ValueError(f"norm degree must be >= 1, got {degree}")
    return float(np.sum(np.abs(u - v) ** degree) ** (1.0 / degree))


def cosine(u: np.ndarray, v: np.ndarray) -> float:
    """Cosine similarity with the zero-vector convention of 0."""
    nu = float(np.linalg.norm(u))
    nv = float(np.linalg.norm(v))
    if nu == 0.0 or nv == 0.0:
        return 0.0
    return float(u @ v) / (nu * nv)


def tag_jaccard(a: Iterable[str], b: Iterable[str]) -> float:
    sa, sb = set(a), set(b)
    union = sa | sb
    if not union:
        return 0.0
    return len(sa & sb) / len(union)


# ---------------------------------------------------------------- buckets


@dataclass(frozen=True)
class Bucket:
    """A connected component of training duplicate pairs."""

    id: int
    members: tuple[int, ...]
    centroid: np.ndarray


def build_buckets(pairs: Sequence[DuplicatePair], base_vectors: Mapping[int, np.ndarray]) -> list[Bucket]:
    """Groups training questions into duplicate buckets.

    Components of the pair graph, ordered by smallest member id; the
    centroid is the mean of members' concatenated title+body base vectors.
    """
    parent: dict[int, int] = {}

    def find(x: int) -> int:
        root = x
        while parent[root] != root:
            root = parent[root]
        while parent[x] != root:
            parent[x], x = root, parent[x]
        return root

    for pair in pairs:
        for qid in (pair.anchor, pair.master):
            parent.setdefault(qid, qid)
        ra, rb = find(pair.anchor), find(pair.master)
        if ra != rb:
            parent[max(ra, rb)] = min(ra, rb)
    groups: dict[int, list[int]] = {}
    for qid in parent:
        groups.setdefault(find(qid), []).append(qid)
    buckets = []
    for index, root in enumerate(sorted(groups)):
        members = tuple(sorted(groups[root]))
        missing = [m for m in members if m not in base_vectors]
        if missing:
            raise ValueError(f"no base vector for bucket member {missing[0]}")
        centroid = np.mean([base_vectors[m] for m in members], axis=0)
        buckets.append(Bucket(id=index, members=members, centroid=centroid))
    return buckets


def bucket_similarity(buckets: Sequence[Bucket]) -> np.ndarray:
    """Cosine matrix over bucket centroids, diagonal pinned to 1."""
    n = len(buckets)
    sims = np.zeros((n, n))
    if n == 0:
        return sims
    cents = np.stack([b.centroid for b in buckets])
    norms = np.linalg.norm(cents, axis=1)
    safe = np.where(norms == 0.0, 1.0, norms)
    sims = (cents @ cents.T) / np.outer(safe, safe)
    sims[norms == 0.0, :] = 0.0
    sims[:, norms == 0.0] = 0.0
    np.fill_diagonal(sims, 1.0)
    return sims


@dataclass(frozen=True)
class Triplet:
    anchor: int
    positive: int
    negative: int

    def __post_init__(self):
        if len({self.anchor, self.positive, self.negative}) != 3:
            raise ValueError(f"triplet members must be distinct: {self}")


class NegativeSampler:
    """Picks hard negatives from similar buckets, by tag overlap.

    Buckets with centroid similarity above alpha are scanned from most to
    least similar; the answered question with the highest tag Jaccard
    against the anchor wins, ties going to the more similar bucket and then
    the smaller id. When no similar bucket holds an answered question, a
    uniformly random answered question outside the anchor's bucket runs as
    fallback, and fallback_count records how often that happened.
    """

    def __init__(
        self,
        buckets: Sequence[Bucket],
        similarity: np.ndarray,
        records: Iterable[QuestionRecord],
        alpha: float = DEFAULT_BUCKET_ALPHA,
        seed: int = 0,
    ):
        if not 0.0 <= alpha <= 1.0:
            raise ValueError(f"alpha must lie in [0, 1], got {alpha}")
        self.buckets = list(buckets)
        self.similarity = np.asarray(similarity, dtype=np.float64)
        if self.similarity.shape != (len(self.buckets), len(self.buckets)):
            raise ValueError("similarity matrix does not match the bucket list")
        self.alpha = alpha
        self._by_id = {r.id: r for r in records} if not isinstance(records, Mapping) else dict(records)
        self._bucket_of: dict[int, int] = {}
        for bucket in self.buckets:
            for qid in bucket.members:
                self._bucket_of[qid] = bucket.id
        self._answered = sorted(
            qid for qid in self._bucket_of if qid in self._by_id and self._by_id[qid].answered
        )
        self._rng = np.random.default_rng(seed)
        self.fallback_count = 0

    def sample(self, anchor: int) -> int:
        own = self._bucket_of.get(anchor)
        if own is None:
            raise ValueError(f"anchor {anchor} is not in any training bucket")
        anchor_tags = set(self._by_id[anchor].tags)
        sims = self.similarity[own]
        candidates = [k for k in range(len(self.buckets)) if k != own and sims[k] > self.alpha]
        candidates.sort(key=lambda k: (-sims[k], k))
        best_key: Optional[tuple[float, float, int]] = None
        best_qid: Optional[int] = None
        for k in candidates:
            for qid in self.buckets[k].members:
                record = self._by_id.get(qid)
                if record is None or not record.answered:
                    continue
                key = (tag_jaccard(anchor_tags, record.tags), sims[k], -qid)
                if best_key is None or key > best_key:
                    best_key, best_qid = key, qid
        if best_qid is not None:
            return best_qid
        pool = [qid for qid in self._answered if self._bucket_of[qid] != own]
        if not pool:
            raise ValueError(f"no answered question outside the bucket of anchor {anchor}")
        self.fallback_count += 1
        return pool[int(self._rng.integers(len(pool)))]


# ---------------------------------------------------------------- the head


@dataclass
class SiameseHead:
    """Shared projection applied to every arm: sigma(W x + b)."""

    weight: np.ndarray
    bias: np.ndarray
    norm_degree: float = 2.0
    margin: float = 1.0
    feature_mode: str = "text"

    def __post_init__(self):
        self.weight = np.asarray(self.weight, dtype=np.float64)
        self.bias = np.asarray(self.bias, dtype=np.float64)
        if self.weight.ndim != 2:
            raise ValueError("weight must be a 2-d matrix")
        if self.bias.shape != (self.weight.shape[0],):
            raise ValueError("bias length must match the weight row count")

    @property
    def input_dim(self) -> int:
        return self.weight.shape[1]

    @property
    def output_dim(self) -> int:
        return self.weight.shape[0]

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != (self.input_dim,):
            raise ValueError(f"input has shape {x.shape}, head expects ({self.input_dim},)")
        return _sigmoid(self.weight @ x + self.bias)


def head_forward(record: Union[QuestionRecord, int], features: Mapping[int, np.ndarray], head: SiameseHead) -> np.ndarray:
    """Convenience lookup-then-project for a corpus question."""
    qid = record.id if isinstance(record, QuestionRecord) else record
    vec = features.get(qid)
    if vec is None:
        raise ValueError(f"no feature vector for question {qid}")
    return head.forward(vec)


def triplet_loss(
    a: np.ndarray, p: np.ndarray, n: np.ndarray, margin: float = 1.0, norm_degree: float = 2.0
) -> float:
    """Hinged ranking loss; margin 0 reproduces the bare distance gap."""
    if margin < 0:
        raise ValueError(f"margin must be non-negative, got {margin}")
    gap = pnorm_distance(a, p, norm_degree) - pnorm_distance(a, n, norm_degree) + margin
    return max(gap, 0.0)


def _distance_grad(delta: np.ndarray, dist: float, degree: float) -> np.ndarray:
    # gradient of ||delta||_degree wrt the first argument; zero at coincidence
    if dist == 0.0:
        return np.zeros_like(delta)
    return np.sign(delta) * np.abs(delta) ** (degree - 1.0) / dist ** (degree - 1.0)


def triplet_loss_grad(
    head: SiameseHead, x_a: np.ndarray, x_p: np.ndarray, x_n: np.ndarray
) -> tuple[float, np.ndarray, np.ndarray]:
    """Loss and analytic gradients wrt the head's weight and bias."""
    xs = [np.asarray(x, dtype=np.float64) for x in (x_a, x_p, x_n)]
    zs = [head.weight @ x + head.bias for x in xs]
    hs = [_sigmoid(z) for z in zs]
    h_a, h_p, h_n = hs
    deg = head.norm_degree
    d_ap = pnorm_distance(h_a, h_p, deg)
    d_an = pnorm_distance(h_a, h_n, deg)
    raw = d_ap - d_an + head.margin
    if raw <= 0.0:
        return 0.0, np.zeros_like(head.weight), np.zeros_like(head.bias)
    g_ap = _distance_grad(h_a - h_p, d_ap, deg)
    g_an = _distance_grad(h_a - h_n, d_an, deg)
    dh = [g_ap - g_an, -g_ap, g_an]
    d_weight = np.zeros_like(head.weight)
    d_bias = np.zeros_like(head.bias)
    for dh_i, h_i, x_i in zip(dh, hs, xs):
        dz = dh_i * h_i * (1.0 - h_i)
        d_weight += np.outer(dz, x_i)
        d_bias += dz
    return raw, d_weight, d_bias


@dataclass
class HeadTrainConfig:
    output_dim: int = 512
    learning_rate: float = 1e-3
    epsilon: float = 1e-8
    beta1: float = 0.9
    beta2: float = 0.999
    epochs: int = 40
    batch_size: int = 64
    margin: float = 1.0
    norm_degree: float = 2.0
    seed: int = 0
    feature_mode: str = "text"
    score: str = "distance"
    optimizer: str = "adam"

    def __post_init__(self):
        if self.output_dim < 1 or self.epochs < 1 or self.batch_size < 1:
            raise ValueError("output_dim, epochs and batch_size must be at least 1")
        if self.learning_rate <= 0 or self.epsilon <= 0:
            raise ValueError("learning_rate and epsilon must be positive")
        if self.margin < 0:
            raise ValueError("margin must be non-negative")
        if self.norm_degree < 1:
            raise ValueError("norm_degree must be >= 1")
        if self.score not in SCORE_KINDS:
            raise ValueError(f"score must be one of {SCORE_KINDS}")
        if self.optimizer not in ("adam", "sgd"):
            raise ValueError("optimizer must be 'adam' or 'sgd'")


@dataclass(frozen=True)
class EvalEntry:
    """One anchor with its gold master and filtered candidates.

    Candidates must be listed oldest first (creation time, then id); the
    rankers rely on that order to break score ties.
    """

    anchor: int
    gold: int
    candidates: tuple[int, ...]


@dataclass
class HeadTrainHistory:
    train_loss: list[float] = field(default_factory=list)
    validation_mrr: list[float] = field(default_factory=list)
    best_epoch: Optional[int] = None


class _Adam:
    def __init__(self, shapes, lr, eps, beta1, beta2):
        self.lr, self.eps, self.b1, self.b2 = lr, eps, beta1, beta2
        self.m = [np.zeros(s) for s in shapes]
        self.v = [np.zeros(s) for s in shapes]
        self.t = 0

    def step(self, params, grads):
        self.t += 1
        for i, (p, g) in enumerate(zip(params, grads)):
            self.m[i] = self.b1 * self.m[i] + (1 - self.b1) * g
            self.v[i] = self.b2 * self.v[i] + (1 - self.b2) * g * g
            m_hat = self.m[i] / (1 - self.b1**self.t)
            v_hat = self.v[i] / (1 - self.b2**self.t)
            p -= self.lr * m_hat / (np.sqrt(v_hat) + self.eps)


class _Sgd:
    def __init__(self, lr):
        self.lr = lr

    def step(self, params, grads):
        for p, g in zip(params, grads):
            p -= self.lr * g


TripletSource = Union[Sequence[Triplet], Callable[[int], Sequence[Triplet]]]


def train_head(
    triplets: TripletSource,
    features: Mapping[int, np.ndarray],
    cfg: HeadTrainConfig,
    validation: Optional[Sequence[EvalEntry]] = None,
) -> tuple[SiameseHead, HeadTrainHistory]:
    """Trains the shared projection on triplets with mini-batch updates.

    ``triplets`` is either a fixed sequence or a callable giving the
    triplets for each epoch (hard negatives are usually resampled). With a
    validation set the returned head carries the weights of the epoch with
    the best validation MRR; otherwise the final weights.
    """
    probe = triplets(0) if callable(triplets) else triplets
    if not probe:
        raise ValueError("no triplets to train on")
    in_dim = len(features[probe[0].anchor])
    rng = np.random.default_rng(cfg.seed)
    weight = rng.standard_normal((cfg.output_dim, in_dim)) / np.sqrt(in_dim)
    bias = np.zeros(cfg.output_dim)
    head = SiameseHead(
        weight=weight,
        bias=bias,
        norm_degree=cfg.norm_degree,
        margin=cfg.margin,
        feature_mode=cfg.feature_mode,
    )
    if cfg.optimizer == "adam":
        opt = _Adam([weight.shape, bias.shape], cfg.learning_rate, cfg.epsilon, cfg.beta1, cfg.beta2)
    else:
        opt = _Sgd(cfg.learning_rate)
    history = HeadTrainHistory()
    best: Optional[tuple[float, np.ndarray, np.ndarray]] = None
    for epoch in range(cfg.epochs):
        if callable(triplets):
            epoch_triplets = list(probe) if epoch == 0 else list(triplets(epoch))
        else:
            epoch_triplets = list(triplets)
        if not epoch_triplets:
            raise ValueError(f"no triplets for epoch {epoch}")
        order = rng.permutation(len(epoch_triplets))
        loss_sum = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = [epoch_triplets[i] for i in order[start : start + cfg.batch_size]]
            g_w = np.zeros_like(head.weight)
            g_b = np.zeros_like(head.bias)
            for trip in batch:
                loss, dw, db = triplet_loss_grad(
                    head, features[trip.anchor], features[trip.positive], features[trip.negative]
                )
                loss_sum += loss
                g_w += dw
                g_b += db
            g_w /= len(batch)
            g_b /= len(batch)
            opt.step([head.weight, head.bias], [g_w, g_b])
        history.train_loss.append(loss_sum / len(epoch_triplets))
        if validation is not None:
            score = validation_mrr(head, features, validation)
            history.validation_mrr.append(score)
            if best is None or score > best[0]:
                best = (score, head.weight.copy(), head.bias.copy())
                history.best_epoch = epoch
    if best is not None:
        head.weight, head.bias = best[1], best[2]
    return head, history


def _entry_gold_rank(head: SiameseHead, features: Mapping[int, np.ndarray], entry: EvalEntry, score: str) -> Optional[int]:
    if not entry.candidates:
        return None
    h_a = head.forward(features[entry.anchor])
    scores = []
    for qid in entry.candidates:
        h_c = head.forward(features[qid])
        if score == "cosine":
            scores.append(cosine(h_a, h_c))
        else:
            scores.append(-pnorm_distance(h_a, h_c, head.norm_degree))
    order = sorted(range(len(scores)), key=lambda i: -scores[i])
    for rank, i in enumerate(order, start=1):
        if entry.candidates[i] == entry.gold:
            return rank
    return None


def validation_mrr(
    head: SiameseHead,
    features: Mapping[int, np.ndarray],
    entries: Sequence[EvalEntry],
    score: str = "distance",
) -> float:
    """MRR of the head over pre-filtered candidate entries."""
    if not entries:
        raise ValueError("validation needs at least one entry")
    total = 0.0
    for entry in entries:
        rank = _entry_gold_rank(head, features, entry, score)
        if rank is not None:
            total += 1.0 / rank
    return total / len(entries)


# ------------------------------------------------------------- candidates


@dataclass(frozen=True)
class CandidateInfo:
    id: int
    tag_jaccard: float
    title_cosine: float


@dataclass
class CandidateSet:
    anchor: int
    candidates: list[CandidateInfo]

    def ids(self) -> list[int]:
        return [c.id for c in self.candidates]

    def contains(self, qid: int) -> bool:
        return any(c.id == qid for c in self.candidates)


class CandidateGenerator:
    """Filters the corpus down to plausible masters for an anchor.

    Filters, in order: posted strictly before the anchor and sharing at
    least one tag; tag Jaccard above the threshold; at least one answer;
    title cosine at or above the threshold. Candidates come back oldest
    first (creation time, then id).
    """

    def __init__(
        self,
        records: Iterable[QuestionRecord],
        title_vectors: Mapping[int, np.ndarray],
        tag_jaccard_floor: float = DEFAULT_TAG_JACCARD,
        title_cosine_floor: float = DEFAULT_TITLE_COSINE,
    ):
        self._by_id = {r.id: r for r in records}
        self._tag_index: dict[str, list[int]] = {}
        for r in self._by_id.values():
            for tag in set(r.tags):
                self._tag_index.setdefault(tag, []).append(r.id)
        self._unit_titles: dict[int, Optional[np.ndarray]] = {}
        for qid, vec in title_vectors.items():
            norm = float(np.linalg.norm(vec))
            self._unit_titles[qid] = None if norm == 0.0 else vec / norm
        self.tag_jaccard_floor = tag_jaccard_floor
        self.title_cosine_floor = title_cosine_floor

    def for_anchor(
        self,
        anchor: Union[QuestionRecord, int],
        anchor_title_vector: Optional[np.ndarray] = None,
    ) -> CandidateSet:
        if isinstance(anchor, int):
            record = self._by_id.get(anchor)
            if record is None:
                raise ValueError(f"unknown anchor id {anchor}")
        else:
            record = anchor
        if anchor_title_vector is None:
            unit_a = self._unit_titles.get(record.id)
            if record.id not in self._unit_titles:
                raise ValueError(f"no title vector for anchor {record.id}")
        else:
            norm = float(np.linalg.norm(anchor_title_vector))
            unit_a = None if norm == 0.0 else np.asarray(anchor_title_vector, dtype=np.float64) / norm
        anchor_tags = set(record.tags)
        pool: set[int] = set()
        for tag in anchor_tags:
            pool.update(self._tag_index.get(tag, ()))
        pool.discard(record.id)
        kept = []
        for qid in pool:
            other = self._by_id[qid]
            if other.created_at >= record.created_at:
                continue
            overlap = tag_jaccard(anchor_tags, other.tags)
            if overlap <= self.tag_jaccard_floor:
                continue
            if not other.answered:
                continue
            unit_c = self._unit_titles.get(qid)
            if unit_a is None or unit_c is None:
                sim = 0.0
            else:
                sim = float(unit_a @ unit_c)
            if sim < self.title_cosine_floor:
                continue
            kept.append(CandidateInfo(id=qid, tag_jaccard=overlap, title_cosine=sim))
        kept.sort(key=lambda c: (self._by_id[c.id].created_at, c.id))
        return CandidateSet(anchor=record.id, candidates=kept)


def generate_candidates(
    anchor: QuestionRecord,
    records: Iterable[QuestionRecord],
    title_vectors: Mapping[int, np.ndarray],
    tag_jaccard_floor: float = DEFAULT_TAG_JACCARD,
    title_cosine_floor: float = DEFAULT_TITLE_COSINE,
) -> CandidateSet:
    """One-shot candidate generation without keeping the generator."""
    gen = CandidateGenerator(records, title_vectors, tag_jaccard_floor, title_cosine_floor)
    vec = title_vectors.get(anchor.id)
    return gen.for_anchor(anchor, anchor_title_vector=vec)


def build_eval_entries(pairs: Sequence[DuplicatePair], generator: CandidateGenerator) -> list[EvalEntry]:
    """Candidate entries for a pair list; empty candidate sets are kept."""
    entries = []
    for pair in pairs:
        cset = generator.for_anchor(pair.anchor)
        entries.append(EvalEntry(anchor=pair.anchor, gold=pair.master, candidates=tuple(cset.ids())))
    return entries


def save_candidates(entries: Sequence[tuple[EvalEntry, CandidateSet]], path) -> None:
    """JSONL: anchor, gold and the filtered candidates with their stats."""
    with open(path, "w", encoding="utf-8") as fh:
        for entry, cset in entries:
            row = {
                "anchor": entry.anchor,
                "gold": entry.gold,
                "candidates": [[c.id, c.tag_jaccard, c.title_cosine] for c in cset.candidates],
            }
            fh.write(json.dumps(row, sort_keys=True, separators=(",", ":")) + "\n")


def load_candidates(path) -> list[tuple[EvalEntry, CandidateSet]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            infos = [CandidateInfo(id=c[0], tag_jaccard=c[1], title_cosine=c[2]) for c in row["candidates"]]
            cset = CandidateSet(anchor=row["anchor"], candidates=infos)
            out.append(
                (EvalEntry(anchor=row["anchor"], gold=row["gold"], candidates=tuple(cset.ids())), cset)
            )
    return out


# ---------------------------------------------------------------- ranking


@dataclass
class RankedList:
    """Descending-score candidate ranking for one anchor.

    Ties are broken toward the older question, then the smaller id.
    gold_rank is 1-based and None when the gold never made the candidates.
    """

    anchor: int
    ranking: list[tuple[int, float]]
    gold_id: Optional[int] = None
    gold_rank: Optional[int] = None


def rank_by_scores(
    anchor: int,
    scored: Sequence[tuple[int, float]],
    created_at: Mapping[int, datetime],
    gold: Optional[int] = None,
) -> RankedList:
    ordered = sorted(scored, key=lambda t: (-t[1], created_at[t[0]], t[0]))
    gold_rank = None
    if gold is not None:
        for position, (qid, _) in enumerate(ordered, start=1):
            if qid == gold:
                gold_rank = position
                break
    return RankedList(anchor=anchor, ranking=list(ordered), gold_id=gold, gold_rank=gold_rank)


def head_scores(
    head: SiameseHead,
    features: Mapping[int, np.ndarray],
    anchor_vector: np.ndarray,
    candidate_ids: Sequence[int],
    score: str = "distance",
) -> list[tuple[int, float]]:
    if score not in SCORE_KINDS:
        raise ValueError(f"score must be one of {SCORE_KINDS}")
    h_a = head.forward(anchor_vector)
    out = []
    for qid in candidate_ids:
        h_c = head.forward(features[qid])
        if score == "cosine":
            out.append((qid, cosine(h_a, h_c)))
        else:
            out.append((qid, -pnorm_distance(h_a, h_c, head.norm_degree)))
    return out


def rank_candidates(
    anchor: Union[QuestionRecord, int],
    candidate_set: CandidateSet,
    head: SiameseHead,
    features: Mapping[int, np.ndarray],
    created_at: Mapping[int, datetime],
    gold: Optional[int] = None,
    score: str = "distance",
    anchor_vector: Optional[np.ndarray] = None,
) -> RankedList:
    """Scores a candidate set with the head and orders it."""
    anchor_id = anchor.id if isinstance(anchor, QuestionRecord) else anchor
    if anchor_vector is None:
        vec = features.get(anchor_id)
        if vec is None:
            raise ValueError(f"no feature vector for anchor {anchor_id}")
        anchor_vector = vec
    scored = head_scores(head, features, anchor_vector, candidate_set.ids(), score)
    return rank_by_scores(anchor_id, scored, created_at, gold)


def gold_ranks(lists: Iterable[RankedList]) -> list[Optional[int]]:
    return [r.gold_rank for r in lists]


def reciprocal_ranks(lists: Iterable[RankedList]) -> list[float]:
    return [0.0 if r.gold_rank is None else 1.0 / r.gold_rank for r in lists]


# ------------------------------------------------------------ persistence


def save_head(head: SiameseHead, path) -> None:
    """Header (dims, norm degree, margin, feature mode) then W rows then b."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(
            f"{head.input_dim} {head.output_dim} {head.norm_degree!r} "
            f"{head.margin!r} {head.feature_mode}\n"
        )
        for row in head.weight:
            fh.write(" ".join(repr(float(x)) for x in row) + "\n")
        fh.write(" ".join(repr(float(x)) for x in head.bias) + "\n")


def load_head(path) -> SiameseHead:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 5:
            raise ValueError(f"{path}: line 1: expected 5 header fields, got {len(header)}")
        in_dim, out_dim = int(header[0]), int(header[1])
        norm_degree, margin = float(header[2]), float(header[3])
        feature_mode = header[4]
        rows = []
        for n, line in enumerate(fh, start=2):
            line = line.strip()
            if not line:
                continue
            values = [float(x) for x in line.split()]
            rows.append((n, values))
    if len(rows) != out_dim + 1:
        raise ValueError(f"{path}: expected {out_dim} weight rows plus a bias row, got {len(rows)}")
    weight = np.zeros((out_dim, in_dim))
    for i, (n, values) in enumerate(rows[:-1]):
        if len(values) != in_dim:
            raise ValueError(f"{path}: line {n}: expected {in_dim} values, got {len(values)}")
        weight[i] = values
    n, bias_values = rows[-1]
    if len(bias_values) != out_dim:
        raise ValueError(f"{path}: line {n}: expected {out_dim} bias values, got {len(bias_values)}")
    return SiameseHead(
        weight=weight,
        bias=np.array(bias_values),
        norm_degree=norm_degree,
        margin=margin,
        feature_mode=feature_mode,
    )


def write_ranked(lists: Sequence[RankedList], path, top_k: int = 500) -> None:
    """Tab-separated: anchor, gold rank (-1 when absent), top-k ids."""
    with open(path, "w", encoding="utf-8") as fh:
        for ranked in lists:
            rank = -1 if ranked.gold_rank is None else ranked.gold_rank
            ids = ",".join(str(qid) for qid, _ in ranked.ranking[:top_k])
            fh.write(f"{ranked.anchor}\t{rank}\t{ids}\n")


def read_ranked(path) -> list[tuple[int, Optional[int], list[int]]]:
    out = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise ValueError(f"{path}: line {n}: expected 3 tab-separated fields")
            anchor = int(parts[0])
            rank = int(parts[1])
            ids = [int(x) for x in parts[2].split(",")] if parts[2] else []
            out.append((anchor, None if rank == -1 else rank, ids))
    return out
