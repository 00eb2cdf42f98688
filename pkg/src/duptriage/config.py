"""Pipeline configuration: one flat dotted-key schema with typed defaults.

Config files are JSON, either nested or already dotted; every key can also
be set from the command line by a flag of the same dotted name. Unknown
keys are rejected rather than ignored.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Optional

from .corpus import parse_timestamp


class ConfigError(ValueError):
    pass


DEFAULTS: dict = {
    "seed": 13,
    "threads": 1,
    "feature_mode": "text",
    "paths.workdir": ".",
    "paths.dump_dir": "dump",
    "paths.archive_dir": "archive",
    "paths.stores_dir": "stores",
    "paths.candidates_dir": "candidates",
    "paths.checkpoints_dir": "checkpoints",
    "paths.reports_dir": "reports",
    "split.train_start": "2010-01-01",
    "split.train_end": "2019-01-01",
    "split.validation_start": "2019-10-01",
    "split.validation_end": "2020-01-01",
    "split.test_start": "2020-10-01",
    "split.test_end": "2021-01-01",
    "taggraph.edge_threshold": 0.005,
    "taggraph.period": "train",
    "node2vec.p": 1.3,
    "node2vec.q": 0.8,
    "node2vec.walks_per_node": 5,
    "node2vec.walk_length": 80,
    "node2vec.dimension": 64,
    "node2vec.window": 10,
    "node2vec.min_count": 3,
    "node2vec.epochs": 5,
    "node2vec.negatives": 5,
    "node2vec.learning_rate": 0.025,
    "node2vec.batch_words": 5,
    "word2vec.dimension": 100,
    "word2vec.window": 10,
    "word2vec.min_count": 1,
    "word2vec.epochs": 5,
    "word2vec.negatives": 5,
    "word2vec.learning_rate": 0.025,
    "word2vec.batch_words": 5,
    "encoder.kind": "word2vec",
    "encoder.field_vectors": "",
    "candidates.tag_jaccard": 0.15,
    "candidates.title_cosine": 0.27,
    "head.output_dim": 512,
    "head.learning_rate": 1e-3,
    "head.epsilon": 1e-8,
    "head.epochs": 40,
    "head.batch_size": 64,
    "head.margin": 1.0,
    "head.norm_degree": 2.0,
    "head.alpha": 0.5,
    "head.score": "distance",
    "head.optimizer": "adam",
    "bm25.k1": 1.5,
    "bm25.b": 0.75,
    "timepred.learning_rate": 2e-5,
    "timepred.batch_size": 64,
    "timepred.epochs": 40,
    "timepred.hidden1": 0,  # 0 picks the per-mode default width
    "timepred.hidden2": 64,
    "timepred.validation_fraction": 0.25,
    "timepred.train_cutoff": "2020-01-01",
    "timepred.gap_clamp_hours": 1e-3,
    "timepred.tree_max_depth": 7,
    "timepred.tree_min_samples_split": 2,
    "eval.recall_ks": [10, 20, 30, 50, 100, 500],
    "eval.top_k": 500,
    "query.top_k": 10,
}

_CHOICES = {
    "feature_mode": ("text", "text+network"),
    "taggraph.period": ("train", "all"),
    "encoder.kind": ("word2vec", "precomputed"),
    "head.score": ("distance", "cosine"),
    "head.optimizer": ("adam", "sgd"),
}

_UNIT_INTERVAL = (
    "taggraph.edge_threshold",
    "candidates.tag_jaccard",
    "head.alpha",
    "bm25.b",
)

_POSITIVE = (
    "node2vec.p",
    "node2vec.q",
    "node2vec.learning_rate",
    "word2vec.learning_rate",
    "head.learning_rate",
    "head.epsilon",
    "timepred.learning_rate",
    "timepred.gap_clamp_hours",
)

_AT_LEAST_ONE = (
    "threads",
    "node2vec.walks_per_node",
    "node2vec.walk_length",
    "node2vec.dimension",
    "node2vec.window",
    "node2vec.min_count",
    "node2vec.epochs",
    "node2vec.negatives",
    "word2vec.dimension",
    "word2vec.window",
    "word2vec.min_count",
    "word2vec.epochs",
    "word2vec.negatives",
    "head.output_dim",
    "head.epochs",
    "head.batch_size",
    "timepred.batch_size",
    "timepred.epochs",
    "timepred.hidden2",
    "eval.top_k",
    "query.top_k",
)

_DATES = (
    "split.train_start",
    "split.train_end",
    "split.validation_start",
    "split.validation_end",
    "split.test_start",
    "split.test_end",
    "timepred.train_cutoff",
)


def flatten_tree(tree: dict, prefix: str = "") -> dict:
    """Turns nested JSON into dotted keys; already-dotted keys pass through."""
    flat = {}
    for key, value in tree.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(flatten_tree(value, prefix=f"{name}."))
        else:
            flat[name] = value
    return flat


def coerce_value(key: str, value):
    """Casts a raw (possibly string) value to the key's schema type."""
    if key not in DEFAULTS:
        raise ConfigError(f"unknown config key {key!r}")
    default = DEFAULTS[key]
    if isinstance(default, bool):
        if isinstance(value, bool):
            return value
        if isinstance(value, str) and value.lower() in ("true", "false"):
            return value.lower() == "true"
        raise ConfigError(f"{key}: expected true/false, got {value!r}")
    if isinstance(default, int):
        if isinstance(value, bool):
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        if isinstance(value, int):
            return value
        if isinstance(value, float) and value.is_integer():
            return int(value)
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                raise ConfigError(f"{key}: expected an integer, got {value!r}") from None
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if isinstance(default, float):
        if isinstance(value, (int, float)) and not isinstance(value, bool):
            return float(value)
        if isinstance(value, str):
            try:
                return float(value)
            except ValueError:
                raise ConfigError(f"{key}: expected a number, got {value!r}") from None
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if isinstance(default, list):
        if isinstance(value, str):
            items = [v for v in value.split(",") if v.strip()]
        elif isinstance(value, (list, tuple)):
            items = list(value)
        else:
            raise ConfigError(f"{key}: expected a list, got {value!r}")
        try:
            return [int(v) for v in items]
        except (TypeError, ValueError):
            raise ConfigError(f"{key}: expected integers, got {value!r}") from None
    if isinstance(default, str):
        if isinstance(value, str):
            return value
        raise ConfigError(f"{key}: expected a string, got {value!r}")
    raise ConfigError(f"{key}: unsupported schema type {type(default).__name__}")


def validate_config(cfg: dict) -> None:
    for key, choices in _CHOICES.items():
        if cfg[key] not in choices:
            raise ConfigError(f"{key}: must be one of {choices}, got {cfg[key]!r}")
    for key in _UNIT_INTERVAL:
        if not 0.0 <= cfg[key] <= 1.0:
            raise ConfigError(f"{key}: must lie in [0, 1], got {cfg[key]}")
    if not -1.0 <= cfg["candidates.title_cosine"] <= 1.0:
        raise ConfigError(
            f"candidates.title_cosine: must lie in [-1, 1], got {cfg['candidates.title_cosine']}"
        )
    for key in _POSITIVE:
        if cfg[key] <= 0:
            raise ConfigError(f"{key}: must be positive, got {cfg[key]}")
    for key in _AT_LEAST_ONE:
        if cfg[key] < 1:
            raise ConfigError(f"{key}: must be at least 1, got {cfg[key]}")
    if cfg["seed"] < 0:
        raise ConfigError(f"seed: must be non-negative, got {cfg['seed']}")
    if cfg["head.margin"] < 0:
        raise ConfigError(f"head.margin: must be non-negative, got {cfg['head.margin']}")
    if cfg["head.norm_degree"] < 1:
        raise ConfigError(f"head.norm_degree: must be >= 1, got {cfg['head.norm_degree']}")
    if cfg["bm25.k1"] < 0:
        raise ConfigError(f"bm25.k1: must be non-negative, got {cfg['bm25.k1']}")
    if not 0.0 <= cfg["timepred.validation_fraction"] < 1.0:
        raise ConfigError("timepred.validation_fraction: must lie in [0, 1)")
    if cfg["timepred.hidden1"] < 0:
        raise ConfigError("timepred.hidden1: must be >= 0 (0 = per-mode default)")
    if cfg["timepred.tree_max_depth"] < 0:
        raise ConfigError("timepred.tree_max_depth: must be >= 0")
    if cfg["timepred.tree_min_samples_split"] < 2:
        raise ConfigError("timepred.tree_min_samples_split: must be >= 2")
    if not cfg["eval.recall_ks"] or any(k < 1 for k in cfg["eval.recall_ks"]):
        raise ConfigError("eval.recall_ks: must be a non-empty list of cutoffs >= 1")
    for key in _DATES:
        try:
            parse_timestamp(cfg[key])
        except ValueError:
            raise ConfigError(f"{key}: not a timestamp: {cfg[key]!r}") from None


def load_config_file(path) -> dict:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        try:
            tree = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(tree, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return flatten_tree(tree)


def resolve_config(config_path=None, overrides=None) -> dict:
    """Defaults, then the config file, then explicit overrides; validated."""
    cfg = {k: (list(v) if isinstance(v, list) else v) for k, v in DEFAULTS.items()}
    if config_path:
        for key, value in load_config_file(config_path).items():
            cfg[key] = coerce_value(key, value)
    for key, value in overrides or []:
        cfg[key] = coerce_value(key, value)
    validate_config(cfg)
    return cfg


def config_datetime(cfg: dict, key: str):
    return parse_timestamp(cfg[key])
