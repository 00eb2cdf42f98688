"""Ranking and regression metrics plus the rank-sum significance test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

DEFAULT_RECALL_KS = (10, 20, 30, 50, 100, 500)

_EXACT_LIMIT = 12  # combined sample size up to which the U test enumerates


def mrr(gold_ranks: Iterable[Optional[int]]) -> float:
    """Mean reciprocal rank; an absent gold contributes 0."""
    ranks = list(gold_ranks)
    if not ranks:
        raise ValueError("mrr needs at least one ranked list")
    total = 0.0
    for r in ranks:
        if r is not None:
            if r < 1:
                raise ValueError(f"gold rank must be >= 1, got {r}")
            total += 1.0 / r
    return total / len(ranks)


def recall_at(gold_ranks: Iterable[Optional[int]], k: int) -> float:
    """Fraction of lists whose gold sits in the top k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    ranks = list(gold_ranks)
    if not ranks:
        raise ValueError("recall_at needs at least one ranked list")
    hits = sum(1 for r in ranks if r is not None and r <= k)
    return hits / len(ranks)


def upper_bound(gold_present: Iterable[bool]) -> float:
    """Best reachable recall: fraction of anchors whose gold survived filtering."""
    flags = list(gold_present)
    if not flags:
        raise ValueError("upper_bound needs at least one anchor")
    return sum(bool(f) for f in flags) / len(flags)


def rmse(gold: Sequence[float], predicted: Sequence[float]) -> float:
    g = np.asarray(gold, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if g.shape != p.shape or g.ndim != 1:
        raise ValueError("gold and predicted must be 1-d and the same length")
    if g.size == 0:
        raise ValueError("rmse needs at least one pair")
    return float(np.sqrt(np.mean((g - p) ** 2)))


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties assigned the mean of their positions."""
    arr = np.asarray(values, dtype=np.float64)
    order = np.argsort(arr, kind="stable")
    ranks = np.empty(arr.size, dtype=np.float64)
    i = 0
    while i < arr.size:
        j = i
        while j + 1 < arr.size and arr[order[j + 1]] == arr[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(x: Sequence[float], y: Sequence[float]) -> float:
    """Rank correlation: average ranks, then the Pearson coefficient on them."""
    xa = np.asarray(x, dtype=np.float64)
    ya = np.asarray(y, dtype=np.float64)
    if xa.shape != ya.shape or xa.ndim != 1:
        raise ValueError("inputs must be 1-d and the same length")
    if xa.size < 2:
        raise ValueError("spearman_rho needs at least two observations")
    rx = average_ranks(xa)
    ry = average_ranks(ya)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    vx = float(dx @ dx)
    vy = float(dy @ dy)
    if vx == 0.0 or vy == 0.0:
        raise ValueError("rank variance is zero; correlation undefined")
    return float((dx @ dy) / math.sqrt(vx * vy))


def _rank_sum_u(a_size: int, ranks_a_sum: float, b_size: int) -> float:
    return ranks_a_sum - a_size * (a_size + 1) / 2.0


def mann_whitney_u(a: Sequence[float], b: Sequence[float]) -> tuple[float, float]:
    """Two-sided rank-sum test; returns (U of the first sample, p).

    Small samples (combined size <= 12) get the exact permutation p over all
    assignments of the statistic |U - n_a n_b / 2|, computed in scaled
    integers so ties cost no precision. Larger samples use the normal
    approximation with tie correction and a 0.5 continuity correction.
    """
    xa = [float(v) for v in a]
    xb = [float(v) for v in b]
    na, nb = len(xa), len(xb)
    if na == 0 or nb == 0:
        raise ValueError("both samples must be non-empty")
    combined = np.asarray(xa + xb, dtype=np.float64)
    ranks = average_ranks(combined)
    u_a = _rank_sum_u(na, float(ranks[:na].sum()), nb)
    n = na + nb
    if n <= _EXACT_LIMIT:
        p = _exact_two_sided_p(ranks, na, nb, u_a)
    else:
        p = _normal_two_sided_p(combined, ranks, na, nb, u_a)
    return u_a, p


def _exact_two_sided_p(ranks: np.ndarray, na: int, nb: int, u_obs: float) -> float:
    # work in doubled-rank integers: average ranks are multiples of 0.5
    r2 = np.rint(ranks * 2.0).astype(np.int64)
    center2 = na * nb  # 2 * (na * nb / 2)
    obs_dev = abs(int(round(2.0 * u_obs)) - center2)
    offset = na * (na + 1)  # 2 * na(na+1)/2
    hits = 0
    total = 0
    for subset in combinations(range(na + nb), na):
        u2 = int(r2[list(subset)].sum()) - offset
        if abs(u2 - center2) >= obs_dev:
            hits += 1
        total += 1
    return hits / total


def _normal_two_sided_p(combined: np.ndarray, ranks: np.ndarray, na: int, nb: int, u_a: float) -> float:
    n = na + nb
    mu = na * nb / 2.0
    _, tie_counts = np.unique(combined, return_counts=True)
    tie_term = float(((tie_counts**3 - tie_counts).sum())) / (n * (n - 1))
    var = na * nb / 12.0 * ((n + 1) - tie_term)
    if var <= 0:
        return 1.0
    dev = abs(u_a - mu) - 0.5
    if dev < 0:
        dev = 0.0
    z = dev / math.sqrt(var)
    p = math.erfc(z / math.sqrt(2.0))
    return min(1.0, p)


@dataclass
class RetrievalReport:
    """MRR, recall at the stated cutoffs, the filter ceiling, anchor count."""

    mrr: float
    rr_at: dict[int, float]
    upper_bound: float
    anchors: int


def compute_retrieval_report(
    gold_ranks: Sequence[Optional[int]],
    gold_present: Sequence[bool],
    ks: Sequence[int] = DEFAULT_RECALL_KS,
) -> RetrievalReport:
    if len(gold_ranks) != len(gold_present):
        raise ValueError("gold_ranks and gold_present must align")
    return RetrievalReport(
        mrr=mrr(gold_ranks),
        rr_at={k: recall_at(gold_ranks, k) for k in ks},
        upper_bound=upper_bound(gold_present),
        anchors=len(gold_ranks),
    )


def retrieval_report_kv(report: RetrievalReport) -> str:
    lines = [f"anchors\t{report.anchors}", f"mrr\t{report.mrr!r}"]
    for k in sorted(report.rr_at):
        lines.append(f"rr@{k}\t{report.rr_at[k]!r}")
    lines.append(f"upper_bound\t{report.upper_bound!r}")
    return "\n".join(lines) + "\n"


def retrieval_report_table(report: RetrievalReport) -> str:
    lines = [
        f"anchors      {report.anchors}",
        f"MRR          {100 * report.mrr:8.3f} %",
    ]
    for k in sorted(report.rr_at):
        lines.append(f"RR@{k:<4d}      {100 * report.rr_at[k]:8.3f} %")
    lines.append(f"upper bound  {100 * report.upper_bound:8.3f} %")
    return "\n".join(lines) + "\n"


@dataclass
class TimePredReport:
    rmse: float
    spearman_rho: float
    pairs: int


def time_report_kv(report: TimePredReport) -> str:
    return (
        f"pairs\t{report.pairs}\n"
        f"rmse\t{report.rmse!r}\n"
        f"spearman_rho\t{report.spearman_rho!r}\n"
    )


def time_report_table(report: TimePredReport) -> str:
    return (
        f"pairs         {report.pairs}\n"
        f"RMSE          {report.rmse:8.4f}\n"
        f"Spearman rho  {report.spearman_rho:8.4f}\n"
    )
