"""Duplicate-question triage toolkit.

Parses a Stack Exchange style dump, learns token and tag embeddings, trains
a siamese projection head that ranks earlier questions as likely duplicate
masters, compares against a BM25 baseline, and predicts how long a duplicate
takes to be confirmed so review queues can be ordered.
"""

from .corpus import (
    DuplicateLink,
    DuplicatePair,
    QuestionRecord,
    SplitBounds,
    corpus_stats,
    derive_pairs,
    load_archive,
    parse_links,
    parse_posts,
    preprocess_text,
    save_archive,
    split_pairs,
)
from .embed import (
    EmbeddingStore,
    MeanPoolEncoder,
    PrecomputedEncoder,
    SgnsConfig,
    build_vocab,
    load_store,
    save_store,
    train_sgns,
)
from .metrics import (
    compute_retrieval_report,
    mann_whitney_u,
    mrr,
    recall_at,
    rmse,
    spearman_rho,
    upper_bound,
)
from .retrieval import (
    CandidateGenerator,
    EvalEntry,
    HeadTrainConfig,
    NegativeSampler,
    SiameseHead,
    Triplet,
    build_buckets,
    bucket_similarity,
    generate_candidates,
    load_head,
    rank_candidates,
    save_head,
    train_head,
    triplet_loss,
)
from .taggraph import TagGraph, WalkConfig, build_graph, generate_walks
from .timepred import (
    RegressionTree,
    TimeMlp,
    TimeMlpConfig,
    build_time_samples,
    compute_gap,
    predict_and_rank,
    split_time_pairs,
    train_time_mlp,
    train_time_tree,
)

__version__ = "0.1.0"

__all__ = [
    "DuplicateLink",
    "DuplicatePair",
    "QuestionRecord",
    "SplitBounds",
    "corpus_stats",
    "derive_pairs",
    "load_archive",
    "parse_links",
    "parse_posts",
    "preprocess_text",
    "save_archive",
    "split_pairs",
    "EmbeddingStore",
    "MeanPoolEncoder",
    "PrecomputedEncoder",
    "SgnsConfig",
    "build_vocab",
    "load_store",
    "save_store",
    "train_sgns",
    "compute_retrieval_report",
    "mann_whitney_u",
    "mrr",
    "recall_at",
    "rmse",
    "spearman_rho",
    "upper_bound",
    "CandidateGenerator",
    "EvalEntry",
    "HeadTrainConfig",
    "NegativeSampler",
    "SiameseHead",
    "Triplet",
    "build_buckets",
    "bucket_similarity",
    "generate_candidates",
    "load_head",
    "rank_candidates",
    "save_head",
    "train_head",
    "triplet_loss",
    "TagGraph",
    "WalkConfig",
    "build_graph",
    "generate_walks",
    "RegressionTree",
    "TimeMlp",
    "TimeMlpConfig",
    "build_time_samples",
    "compute_gap",
    "predict_and_rank",
    "split_time_pairs",
    "train_time_mlp",
    "train_time_tree",
    "__version__",
]
