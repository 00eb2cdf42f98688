import math
import random

import numpy as np
import pytest
import scipy.stats

from duptriage import metrics
from duptriage.metrics import (
    average_ranks,
    compute_retrieval_report,
    mann_whitney_u,
    mrr,
    recall_at,
    rmse,
    spearman_rho,
    upper_bound,
)


def test_mrr_hand_values():
    assert mrr([1, 2, None, 4]) == pytest.approx((1 + 0.5 + 0 + 0.25) / 4, abs=1e-15)
    assert mrr([None]) == 0.0
    assert mrr([1]) == 1.0


def test_mrr_input_validation():
    with pytest.raises(ValueError):
        mrr([])
    with pytest.raises(ValueError):
        mrr([0])


def test_recall_at_hand_values():
    ranks = [1, 3, 7, None]
    assert recall_at(ranks, 1) == 0.25
    assert recall_at(ranks, 3) == 0.5
    assert recall_at(ranks, 7) == 0.75
    assert recall_at(ranks, 500) == 0.75
    with pytest.raises(ValueError):
        recall_at(ranks, 0)


def test_upper_bound():
    assert upper_bound([True, False, True, True]) == 0.75
    with pytest.raises(ValueError):
        upper_bound([])


def test_rmse_hand_value():
    assert rmse([1.0, 2.0, 3.0], [1.0, 2.0, 5.0]) == pytest.approx(math.sqrt(4 / 3), abs=1e-15)
    with pytest.raises(ValueError):
        rmse([], [])
    with pytest.raises(ValueError):
        rmse([1.0], [1.0, 2.0])


def test_average_ranks_ties():
    got = average_ranks([10.0, 20.0, 20.0, 5.0])
    assert np.array_equal(got, np.array([2.0, 3.5, 3.5, 1.0]))


def test_spearman_matches_scipy_with_ties():
    x = [3.0, 1.0, 1.0, 4.0, 2.0, 2.0, 5.0, 0.0]
    y = [2.5, 0.5, 1.5, 4.0, 1.5, 3.0, 5.0, 0.0]
    expected = scipy.stats.spearmanr(x, y).statistic
    assert spearman_rho(x, y) == pytest.approx(expected, abs=1e-12)


def test_spearman_rejects_degenerate():
    with pytest.raises(ValueError):
        spearman_rho([1.0], [1.0])
    with pytest.raises(ValueError):
        spearman_rho([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])


def test_mann_whitney_disjoint_samples():
    u, p = mann_whitney_u([1.0, 2.0, 3.0], [4.0, 5.0, 6.0])
    assert u == 0.0
    assert p == pytest.approx(0.1, abs=1e-15)


def test_mann_whitney_symmetry():
    a = [1.0, 5.0, 2.0, 8.0]
    b = [3.0, 3.0, 9.0]
    u_ab, p_ab = mann_whitney_u(a, b)
    u_ba, p_ba = mann_whitney_u(b, a)
    assert u_ab + u_ba == len(a) * len(b)
    assert p_ab == pytest.approx(p_ba, abs=1e-15)


def test_mann_whitney_exact_matches_scipy_without_ties():
    rng = random.Random(4)
    for _ in range(30):
        na = rng.randint(2, 6)
        nb = rng.randint(2, 6)
        pool = rng.sample(range(1000), na + nb)  # distinct -> tie-free
        a = [float(v) for v in pool[:na]]
        b = [float(v) for v in pool[na:]]
        u, p = mann_whitney_u(a, b)
        ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided", method="exact")
        assert u == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, abs=1e-12)


def test_mann_whitney_normal_approximation_matches_scipy():
    rng = random.Random(9)
    for _ in range(20):
        na = rng.randint(8, 20)
        nb = rng.randint(8, 20)
        if na + nb <= 12:
            continue
        a = [rng.choice([1.0, 2.0, 3.0, 5.0, 8.0, 13.0]) for _ in range(na)]
        b = [rng.choice([1.0, 2.0, 4.0, 5.0, 9.0, 13.0]) for _ in range(nb)]
        u, p = mann_whitney_u(a, b)
        ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided", method="asymptotic")
        assert u == pytest.approx(ref.statistic, abs=1e-12)
        assert p == pytest.approx(ref.pvalue, abs=1e-10)


def test_mann_whitney_identical_samples_p_is_one():
    u, p = mann_whitney_u([2.0, 2.0], [2.0, 2.0])
    assert u == 2.0  # half of na*nb
    assert p == 1.0


def test_report_kv_parses_back():
    report = compute_retrieval_report([1, 2, None], [True, True, False], ks=(1, 2))
    kv = metrics.retrieval_report_kv(report)
    parsed = dict(line.split("\t") for line in kv.strip().splitlines())
    assert float(parsed["mrr"]) == report.mrr
    assert float(parsed["rr@1"]) == report.rr_at[1]
    assert float(parsed["upper_bound"]) == report.upper_bound
    assert int(parsed["anchors"]) == 3


def test_report_alignment_checked():
    with pytest.raises(ValueError):
        compute_retrieval_report([1, 2], [True], ks=(1,))


def test_time_report_kv():
    report = metrics.TimePredReport(rmse=1.25, spearman_rho=-0.5, pairs=10)
    kv = metrics.time_report_kv(report)
    parsed = dict(line.split("\t") for line in kv.strip().splitlines())
    assert float(parsed["rmse"]) == 1.25
    assert float(parsed["spearman_rho"]) == -0.5
    assert int(parsed["pairs"]) == 10
