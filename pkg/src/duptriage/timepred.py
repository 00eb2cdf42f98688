"""Confirmation-time prediction: how long until a duplicate gets flagged.

The target is log10 of the gap in hours between the anchor's posting and
the duplicate link. Two regressors are provided: a two-arm feed-forward
network whose arms embed the two questions separately (ReLU layers, joint
TanhShrink output, L1 loss) and a squared-error CART regression tree.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .corpus import DuplicatePair, QuestionRecord
from .embed import QuestionEncoder
from .features import question_features

DEFAULT_GAP_CLAMP_HOURS = 1e-3
DEFAULT_TRAIN_CUTOFF = datetime(2020, 1, 1, tzinfo=timezone.utc)
DEFAULT_VALIDATION_FRACTION = 0.25

_HOUR = timedelta(hours=1)

MODE_HIDDEN = {"text": (256, 64), "text+network": (512, 64)}


def hidden_sizes_for_mode(feature_mode: str) -> tuple[int, int]:
    """Arm layer widths used with full-size features for each mode."""
    try:
        return MODE_HIDDEN[feature_mode]
    except KeyError:
        raise ValueError(f"unknown feature mode {feature_mode!r}") from None


def gap_hours(pair: DuplicatePair, records: Mapping[int, QuestionRecord]) -> float:
    """Raw signed hours from the anchor's posting to the duplicate link."""
    anchor = records[pair.anchor]
    return (pair.linked_at - anchor.created_at) / _HOUR


def compute_gap(
    pair: DuplicatePair,
    records: Mapping[int, QuestionRecord],
    clamp_hours: float = DEFAULT_GAP_CLAMP_HOURS,
) -> float:
    """Regression target: log10 of the clamped gap in hours."""
    if clamp_hours <= 0:
        raise ValueError("clamp_hours must be positive")
    return math.log10(max(gap_hours(pair, records), clamp_hours))


@dataclass
class TimeGapSample:
    """One training example: both questions' features and the log-gap."""

    pair: DuplicatePair
    features: np.ndarray  # anchor block then master block
    target: float


def build_time_samples(
    pairs: Sequence[DuplicatePair],
    records: Mapping[int, QuestionRecord],
    encoder: QuestionEncoder,
    tag_store=None,
    graph=None,
    clamp_hours: float = DEFAULT_GAP_CLAMP_HOURS,
) -> tuple[list[TimeGapSample], int]:
    """Assembles samples; returns them plus the count of clamped anomalies."""
    samples = []
    clamped = 0
    for pair in pairs:
        if gap_hours(pair, records) < clamp_hours:
            clamped += 1
        x = np.concatenate(
            [
                question_features(records[pair.anchor], encoder, tag_store, graph),
                question_features(records[pair.master], encoder, tag_store, graph),
            ]
        )
        samples.append(TimeGapSample(pair=pair, features=x, target=compute_gap(pair, records, clamp_hours)))
    return samples, clamped


def split_time_pairs(
    pairs: Sequence[DuplicatePair],
    records: Mapping[int, QuestionRecord],
    cutoff: datetime = DEFAULT_TRAIN_CUTOFF,
    validation_fraction: float = DEFAULT_VALIDATION_FRACTION,
) -> tuple[list[DuplicatePair], list[DuplicatePair], list[DuplicatePair]]:
    """Train/validation/test for the time task.

    Pairs whose anchor (the newer question, so every question in the pair)
    was posted before the cutoff are training material; the
    chronologically latest fraction of those, by link time, becomes
    validation. Pairs anchored at or after the cutoff are the test set.
    """
    if not 0.0 <= validation_fraction < 1.0:
        raise ValueError("validation_fraction must lie in [0, 1)")
    early = [p for p in pairs if records[p.anchor].created_at < cutoff]
    test = [p for p in pairs if records[p.anchor].created_at >= cutoff]
    early.sort(key=lambda p: (p.linked_at, p.anchor, p.master))
    n_val = int(len(early) * validation_fraction)
    if n_val == 0:
        return early, [], test
    return early[:-n_val], early[-n_val:], test


# -------------------------------------------------------------- the MLP


def tanh_shrink(x):
    """Output activation x - tanh(x); odd, flat near zero."""
    return x - np.tanh(x)


@dataclass
class TimeMlpConfig:
    input_dim: int  # per-question feature width
    hidden1: int = 256
    hidden2: int = 64
    learning_rate: float = 2e-5
    epsilon: float = 1e-8
    beta1: float = 0.9
    beta2: float = 0.999
    batch_size: int = 64
    epochs: int = 40
    seed: int = 0
    feature_mode: str = "text"

    def __post_init__(self):
        if self.input_dim < 1 or self.hidden1 < 1 or self.hidden2 < 1:
            raise ValueError("layer widths must be at least 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be at least 1")


_MLP_PARTS = ("w1_a", "b1_a", "w1_b", "b1_b", "w2_a", "b2_a", "w2_b", "b2_b", "w_out", "b_out")


class TimeMlp:
    """Two separate ReLU arms joined by one TanhShrink output unit.

    The arms do not share weights; each question passes through its own
    pair of layers before the concatenated codes meet the output layer.
    """

    def __init__(self, params: dict[str, np.ndarray], input_dim: int, feature_mode: str = "text"):
        for name in _MLP_PARTS:
            if name not in params:
                raise ValueError(f"missing parameter {name}")
        self.params = {k: np.asarray(v, dtype=np.float64) for k, v in params.items()}
        self.input_dim = input_dim
        self.feature_mode = feature_mode

    @classmethod
    def initialize(cls, cfg: TimeMlpConfig) -> "TimeMlp":
        rng = np.random.default_rng(cfg.seed)

        def layer(rows, cols):
            return rng.standard_normal((rows, cols)) / np.sqrt(cols)

        params = {
            "w1_a": layer(cfg.hidden1, cfg.input_dim),
            "b1_a": np.zeros(cfg.hidden1),
            "w1_b": layer(cfg.hidden1, cfg.input_dim),
            "b1_b": np.zeros(cfg.hidden1),
            "w2_a": layer(cfg.hidden2, cfg.hidden1),
            "b2_a": np.zeros(cfg.hidden2),
            "w2_b": layer(cfg.hidden2, cfg.hidden1),
            "b2_b": np.zeros(cfg.hidden2),
            "w_out": layer(1, 2 * cfg.hidden2),
            "b_out": np.zeros(1),
        }
        return cls(params, cfg.input_dim, cfg.feature_mode)

    def _split(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        if x.shape[1] != 2 * self.input_dim:
            raise ValueError(f"expected {2 * self.input_dim} features, got {x.shape[1]}")
        return x[:, : self.input_dim], x[:, self.input_dim :]

    def _forward(self, x: np.ndarray) -> dict[str, np.ndarray]:
        xa, xb = self._split(x)
        p = self.params
        z1a = xa @ p["w1_a"].T + p["b1_a"]
        a1a = np.maximum(z1a, 0.0)
        z1b = xb @ p["w1_b"].T + p["b1_b"]
        a1b = np.maximum(z1b, 0.0)
        z2a = a1a @ p["w2_a"].T + p["b2_a"]
        a2a = np.maximum(z2a, 0.0)
        z2b = a1b @ p["w2_b"].T + p["b2_b"]
        a2b = np.maximum(z2b, 0.0)
        joint = np.concatenate([a2a, a2b], axis=1)
        z_out = joint @ p["w_out"].T + p["b_out"]
        pred = tanh_shrink(z_out)[:, 0]
        return {
            "xa": xa, "xb": xb,
            "z1a": z1a, "a1a": a1a, "z1b": z1b, "a1b": a1b,
            "z2a": z2a, "a2a": a2a, "z2b": z2b, "a2b": a2b,
            "joint": joint, "z_out": z_out, "pred": pred,
        }

    def predict(self, x: np.ndarray) -> np.ndarray:
        return self._forward(x)["pred"]


def time_mlp_loss(mlp: TimeMlp, x: np.ndarray, y: np.ndarray) -> float:
    pred = mlp.predict(x)
    return float(np.mean(np.abs(pred - np.asarray(y, dtype=np.float64))))


def time_mlp_loss_grad(mlp: TimeMlp, x: np.ndarray, y: np.ndarray) -> tuple[float, dict[str, np.ndarray]]:
    """Mean L1 loss and its analytic gradients wrt every parameter."""
    cache = mlp._forward(x)
    y = np.asarray(y, dtype=np.float64)
    n = cache["pred"].size
    diff = cache["pred"] - y
    loss = float(np.mean(np.abs(diff)))
    d_pred = np.sign(diff) / n
    # d/dz of (z - tanh z) is tanh(z)^2
    d_zout = (d_pred[:, None]) * np.tanh(cache["z_out"]) ** 2
    p = mlp.params
    grads: dict[str, np.ndarray] = {}
    grads["w_out"] = d_zout.T @ cache["joint"]
    grads["b_out"] = d_zout.sum(axis=0)
    d_joint = d_zout @ p["w_out"]
    h2 = cache["a2a"].shape[1]
    for arm, x_arm in (("a", cache["xa"]), ("b", cache["xb"])):
        d_a2 = d_joint[:, :h2] if arm == "a" else d_joint[:, h2:]
        d_z2 = d_a2 * (cache[f"z2{arm}"] > 0.0)
        grads[f"w2_{arm}"] = d_z2.T @ cache[f"a1{arm}"]
        grads[f"b2_{arm}"] = d_z2.sum(axis=0)
        d_a1 = d_z2 @ p[f"w2_{arm}"]
        d_z1 = d_a1 * (cache[f"z1{arm}"] > 0.0)
        grads[f"w1_{arm}"] = d_z1.T @ x_arm
        grads[f"b1_{arm}"] = d_z1.sum(axis=0)
    return loss, grads


@dataclass
class TimeTrainHistory:
    train_loss: list[float] = field(default_factory=list)
    validation_mae: list[float] = field(default_factory=list)
    best_epoch: Optional[int] = None


def train_time_mlp(
    samples: Sequence[TimeGapSample],
    cfg: TimeMlpConfig,
    validation: Optional[Sequence[TimeGapSample]] = None,
) -> tuple[TimeMlp, TimeTrainHistory]:
    """Adam on the L1 loss; keeps the epoch with the best validation MAE."""
    if not samples:
        raise ValueError("no samples to train on")
    x = np.stack([s.features for s in samples])
    y = np.array([s.target for s in samples])
    if x.shape[1] != 2 * cfg.input_dim:
        raise ValueError(f"samples carry {x.shape[1]} features, config expects {2 * cfg.input_dim}")
    mlp = TimeMlp.initialize(cfg)
    names = list(_MLP_PARTS)
    m = {k: np.zeros_like(mlp.params[k]) for k in names}
    v = {k: np.zeros_like(mlp.params[k]) for k in names}
    t = 0
    rng = np.random.default_rng(cfg.seed + 1)
    history = TimeTrainHistory()
    best: Optional[tuple[float, dict[str, np.ndarray]]] = None
    x_val = y_val = None
    if validation:
        x_val = np.stack([s.features for s in validation])
        y_val = np.array([s.target for s in validation])
    for epoch in range(cfg.epochs):
        order = rng.permutation(len(samples))
        loss_sum = 0.0
        batches = 0
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss, grads = time_mlp_loss_grad(mlp, x[idx], y[idx])
            loss_sum += loss
            batches += 1
            t += 1
            for k in names:
                g = grads[k]
                m[k] = cfg.beta1 * m[k] + (1 - cfg.beta1) * g
                v[k] = cfg.beta2 * v[k] + (1 - cfg.beta2) * g * g
                m_hat = m[k] / (1 - cfg.beta1**t)
                v_hat = v[k] / (1 - cfg.beta2**t)
                mlp.params[k] -= cfg.learning_rate * m_hat / (np.sqrt(v_hat) + cfg.epsilon)
        history.train_loss.append(loss_sum / batches)
        if x_val is not None:
            mae = float(np.mean(np.abs(mlp.predict(x_val) - y_val)))
            history.validation_mae.append(mae)
            if best is None or mae < best[0]:
                best = (mae, {k: mlp.params[k].copy() for k in names})
                history.best_epoch = epoch
    if best is not None:
        mlp.params = best[1]
    return mlp, history


def save_time_mlp(mlp: TimeMlp, path) -> None:
    """Header (input dim, arm widths, feature mode) then each layer's rows."""
    p = mlp.params
    h1 = p["w1_a"].shape[0]
    h2 = p["w2_a"].shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{mlp.input_dim} {h1} {h2} {mlp.feature_mode}\n")
        for name in _MLP_PARTS:
            block = np.atleast_2d(p[name])
            for row in block:
                fh.write(" ".join(repr(float(x)) for x in row) + "\n")


def load_time_mlp(path) -> TimeMlp:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        if len(header) != 4:
            raise ValueError(f"{path}: line 1: expected 4 header fields")
        input_dim, h1, h2 = int(header[0]), int(header[1]), int(header[2])
        feature_mode = header[3]
        shapes = {
            "w1_a": (h1, input_dim), "b1_a": (1, h1),
            "w1_b": (h1, input_dim), "b1_b": (1, h1),
            "w2_a": (h2, h1), "b2_a": (1, h2),
            "w2_b": (h2, h1), "b2_b": (1, h2),
            "w_out": (1, 2 * h2), "b_out": (1, 1),
        }
        params = {}
        line_no = 1
        for name in _MLP_PARTS:
            rows, cols = shapes[name]
            block = np.zeros((rows, cols))
            for r in range(rows):
                line = fh.readline()
                line_no += 1
                values = line.split()
                if len(values) != cols:
                    raise ValueError(f"{path}: line {line_no}: expected {cols} values for {name}")
                block[r] = [float(x) for x in values]
            params[name] = block[0] if name.startswith("b") else block
    return TimeMlp(params, input_dim, feature_mode)


# ------------------------------------------------------------------ CART


@dataclass
class TreeNode:
    feature: Optional[int] = None
    threshold: Optional[float] = None
    left: Optional["TreeNode"] = None
    right: Optional["TreeNode"] = None
    value: Optional[float] = None

    @property
    def is_leaf(self) -> bool:
        return self.value is not None


class RegressionTree:
    """CART with squared-error splits; leaves say the mean of routed targets."""

    def __init__(self, root: TreeNode, n_features: int, max_depth: int):
        self.root = root
        self.n_features = n_features
        self.max_depth = max_depth

    def predict_one(self, x: np.ndarray) -> float:
        node = self.root
        while not node.is_leaf:
            node = node.left if x[node.feature] <= node.threshold else node.right
        return node.value

    def predict(self, x: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(np.asarray(x, dtype=np.float64))
        return np.array([self.predict_one(row) for row in x])

    def depth(self) -> int:
        def walk(node):
            if node.is_leaf:
                return 0
            return 1 + max(walk(node.left), walk(node.right))

        return walk(self.root)

    def leaf_count(self) -> int:
        def walk(node):
            if node.is_leaf:
                return 1
            return walk(node.left) + walk(node.right)

        return walk(self.root)


def _best_split(x: np.ndarray, y: np.ndarray) -> Optional[tuple[int, float, float]]:
    """Exhaustive (feature, threshold) search minimizing children's SSE.

    Thresholds are midpoints between consecutive distinct sorted values.
    Returns (feature, threshold, total_sse) or None when nothing splits.
    """
    n, d = x.shape
    best: Optional[tuple[float, int, float]] = None
    for feature in range(d):
        col = x[:, feature]
        order = np.argsort(col, kind="stable")
        xs = col[order]
        ys = y[order]
        csum = np.cumsum(ys)
        csq = np.cumsum(ys * ys)
        total_sum, total_sq = csum[-1], csq[-1]
        for i in range(n - 1):
            if xs[i + 1] == xs[i]:
                continue
            nl = i + 1
            nr = n - nl
            sl, ql = csum[i], csq[i]
            sr, qr = total_sum - sl, total_sq - ql
            sse = (ql - sl * sl / nl) + (qr - sr * sr / nr)
            threshold = (xs[i] + xs[i + 1]) / 2.0
            key = (sse, feature, threshold)
            if best is None or key < best:
                best = key
    if best is None:
        return None
    sse, feature, threshold = best
    return feature, float(threshold), float(sse)


def fit_regression_tree(
    x: np.ndarray,
    y: np.ndarray,
    max_depth: int = 7,
    min_samples_split: int = 2,
) -> RegressionTree:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64)
    if x.shape[0] != y.shape[0] or x.shape[0] == 0:
        raise ValueError("x and y must be non-empty and aligned")
    if max_depth < 0 or min_samples_split < 2:
        raise ValueError("max_depth must be >= 0 and min_samples_split >= 2")

    def build(idx: np.ndarray, depth: int) -> TreeNode:
        ys = y[idx]
        mean = float(np.mean(ys))
        if depth >= max_depth or idx.size < min_samples_split or np.all(ys == ys[0]):
            return TreeNode(value=mean)
        found = _best_split(x[idx], ys)
        if found is None:
            return TreeNode(value=mean)
        feature, threshold, sse = found
        parent_sse = float(ys @ ys - idx.size * mean * mean)
        if sse >= parent_sse - 1e-12:
            return TreeNode(value=mean)
        mask = x[idx, feature] <= threshold
        return TreeNode(
            feature=feature,
            threshold=threshold,
            left=build(idx[mask], depth + 1),
            right=build(idx[~mask], depth + 1),
        )

    root = build(np.arange(x.shape[0]), 0)
    return RegressionTree(root, n_features=x.shape[1], max_depth=max_depth)


def train_time_tree(
    samples: Sequence[TimeGapSample],
    max_depth: int = 7,
    min_samples_split: int = 2,
) -> RegressionTree:
    if not samples:
        raise ValueError("no samples to train on")
    x = np.stack([s.features for s in samples])
    y = np.array([s.target for s in samples])
    return fit_regression_tree(x, y, max_depth=max_depth, min_samples_split=min_samples_split)


def save_time_tree(tree: RegressionTree, path) -> None:
    """Header then the preorder node list: 'split f thr' / 'leaf value'."""
    lines = [f"{tree.n_features} {tree.max_depth}"]

    def walk(node: TreeNode):
        if node.is_leaf:
            lines.append(f"leaf {node.value!r}")
        else:
            lines.append(f"split {node.feature} {node.threshold!r}")
            walk(node.left)
            walk(node.right)

    walk(tree.root)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_time_tree(path) -> RegressionTree:
    with open(path, encoding="utf-8") as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise ValueError(f"{path}: empty tree file")
    header = lines[0].split()
    if len(header) != 2:
        raise ValueError(f"{path}: line 1: expected '<n_features> <max_depth>'")
    n_features, max_depth = int(header[0]), int(header[1])
    it = iter(enumerate(lines[1:], start=2))

    def read() -> TreeNode:
        try:
            n, line = next(it)
        except StopIteration:
            raise ValueError(f"{path}: truncated preorder node list") from None
        parts = line.split()
        if parts[0] == "leaf" and len(parts) == 2:
            return TreeNode(value=float(parts[1]))
        if parts[0] == "split" and len(parts) == 3:
            feature, threshold = int(parts[1]), float(parts[2])
            left = read()
            right = read()
            return TreeNode(feature=feature, threshold=threshold, left=left, right=right)
        raise ValueError(f"{path}: line {n}: expected 'split f thr' or 'leaf value'")

    root = read()
    remainder = sum(1 for _ in it)
    if remainder:
        raise ValueError(f"{path}: {remainder} trailing nodes after the preorder list")
    return RegressionTree(root, n_features=n_features, max_depth=max_depth)


# ----------------------------------------------------------------- output


@dataclass
class TimeRanking:
    """Pairs ordered by predicted log-gap, slowest-to-confirm first."""

    entries: list[tuple[int, int, float, float]]  # anchor, master, predicted, gold

    def predicted(self) -> list[float]:
        return [e[2] for e in self.entries]

    def gold(self) -> list[float]:
        return [e[3] for e in self.entries]


def predict_and_rank(model, samples: Sequence[TimeGapSample]) -> TimeRanking:
    """Runs any model with a predict(X) method over samples and sorts."""
    if not samples:
        raise ValueError("no samples to rank")
    x = np.stack([s.features for s in samples])
    preds = np.asarray(model.predict(x), dtype=np.float64)
    entries = [
        (s.pair.anchor, s.pair.master, float(p), s.target) for s, p in zip(samples, preds)
    ]
    entries.sort(key=lambda e: (-e[2], e[0], e[1]))
    return TimeRanking(entries=entries)


def write_time_ranking(ranking: TimeRanking, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for anchor, master, pred, gold in ranking.entries:
            fh.write(f"{anchor}\t{master}\t{pred!r}\t{gold!r}\n")


def read_time_ranking(path) -> TimeRanking:
    entries = []
    with open(path, encoding="utf-8") as fh:
        for n, line in enumerate(fh, start=1):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ValueError(f"{path}: line {n}: expected 4 tab-separated fields")
            entries.append((int(parts[0]), int(parts[1]), float(parts[2]), float(parts[3])))
    return TimeRanking(entries=entries)
