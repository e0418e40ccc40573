from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gslearn.core import devec_upper
from gslearn.metrics import (
    EvalReport, auprc, best_threshold_f1, edge_metrics, evaluate_estimates, relative_error,
)


def brute_force_ap(scores, truth):
    """Average precision by sweeping every distinct score as a threshold."""
    scores, truth = np.asarray(scores, float), np.asarray(truth, bool)
    ap, prev_recall = 0.0, 0.0
    for tau in sorted(set(scores), reverse=True):
        pred = scores >= tau
        tp = np.sum(pred & truth)
        recall, precision = tp / truth.sum(), tp / pred.sum()
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return ap


def test_edge_metric_examples():
    a = devec_upper(np.array([1.0, 2.0, 0.0]))
    assert edge_metrics(a, a, 0.5) == (1.0, 1.0, 1.0)
    target = devec_upper(np.array([1.0, 1.0, 0.0]))
    est = devec_upper(np.array([1.0, 0.0, 0.0]))
    p, r, f = edge_metrics(est, target, 0.5)
    assert (p, r) == (1.0, 0.5) and f == pytest.approx(2 / 3)
    assert edge_metrics(np.zeros((3, 3)), target, 0.5) == (0.0, 0.0, 0.0)
    assert edge_metrics(np.zeros((3, 3)), np.zeros((3, 3)), 0.5) == (1.0, 1.0, 1.0)


def test_diagonal_and_lower_triangle_ignored():
    target = devec_upper(np.array([1.0, 0.0, 0.0]))
    est = target.copy()
    est[0, 0] = est[2, 2] = 9.0
    assert edge_metrics(est, target, 0.5) == (1.0, 1.0, 1.0)


def test_auprc_examples():
    truth = devec_upper(np.array([1.0, 0.0, 1.0]))
    assert auprc(devec_upper(np.array([0.9, 0.1, 0.8])), truth) == 1.0
    frozen = 0.5 * 0.5 + 0.5 * (2 / 3)  # thresholds 0.9, 0.8, 0.1 enumerated by hand
    got = auprc(devec_upper(np.array([0.1, 0.9, 0.8])), truth)
    assert got == pytest.approx(frozen, abs=1e-15)
    assert got == pytest.approx(brute_force_ap([0.1, 0.9, 0.8], [1, 0, 1]), abs=1e-15)


def test_auprc_constant_scores_equal_prevalence():
    truth = devec_upper(np.array([1.0, 0.0, 1.0, 0.0, 1.0, 0.0]))
    assert auprc(devec_upper(np.full(6, 0.3)), truth) == pytest.approx(0.5)


def test_auprc_empty_target_convention():
    z = np.zeros((3, 3))
    assert auprc(z, z) == 1.0
    assert auprc(devec_upper(np.array([0.0, 0.1, 0.0])), z) == 0.0


scores_and_truth = st.integers(3, 7).flatmap(lambda n: st.tuples(
    st.lists(st.integers(0, 5), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2),
    st.lists(st.booleans(), min_size=n * (n - 1) // 2, max_size=n * (n - 1) // 2)
    .filter(any)))


@given(scores_and_truth)
def test_auprc_matches_brute_force(data):
    scores, truth = data
    got = auprc(devec_upper(np.array(scores, float)), devec_upper(np.array(truth, float)))
    assert got == pytest.approx(brute_force_ap(scores, truth), abs=1e-12)


@given(scores_and_truth)
def test_auprc_invariant_under_monotone_transforms(data):
    scores, truth = data
    s, t = devec_upper(np.array(scores, float)), devec_upper(np.array(truth, float))
    assert auprc(np.exp(s) * 3 + 1, t) == pytest.approx(auprc(s, t), abs=1e-12)


@settings(max_examples=50)
@given(scores_and_truth, st.floats(0.1, 10), st.floats(0, 5))
def test_edge_metrics_scale_invariance_and_harmonic_mean(data, c, tau):
    scores, truth = data
    s, t = devec_upper(np.array(scores, float)), devec_upper(np.array(truth, float))
    p, r, f = edge_metrics(s, t, tau)
    assert edge_metrics(c * s, t, c * tau) == (p, r, f)
    pred = np.array(scores) > tau
    tp = np.sum(pred & np.array(truth))
    p_ref = tp / pred.sum() if pred.sum() else 0.0
    r_ref = tp / np.sum(truth)
    assert (p, r) == pytest.approx((p_ref, r_ref))
    assert f == pytest.approx(2 * p * r / (p + r) if p + r else 0.0)


def test_relative_error_examples():
    a = devec_upper(np.array([1.0, 0.0, 2.0]))
    assert relative_error(a, a) == 0.0
    assert relative_error(np.zeros_like(a), a) == 1.0
    assert relative_error(2 * a, a) == 1.0


def test_best_threshold_f1_picks_optimum():
    truth = devec_upper(np.array([1.0, 1.0, 0.0, 0.0, 1.0, 0.0]))
    est = devec_upper(np.array([0.9, 0.3, 0.5, 0.1, 0.7, 0.2]))
    f1, tau = best_threshold_f1(est, truth)
    sweep = max(edge_metrics(est, truth, t)[2] for t in np.linspace(-1, 1, 2001))
    assert f1 == pytest.approx(sweep)
    assert edge_metrics(est, truth, tau)[2] == f1


def test_report_serialization():
    truth = np.stack([devec_upper(np.array(v, float)) for v in ([1, 0, 1], [0, 1, 1])])
    rep = evaluate_estimates(truth, truth, 0.5)
    assert rep == EvalReport(1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.5, 2)
    assert rep.to_dict()["count"] == 2
    assert EvalReport.csv_header() == ("precision,recall,f1,auprc,relative_frobenius_error,mse,"
                                       "threshold,count")
    assert rep.csv_row() == "1,1,1,1,0,0,0.5,2"
    with pytest.raises(ValueError):
        evaluate_estimates([], [], 0.5)


def test_pairs_counted_once():
    n = 5
    truth = np.zeros((n, n))
    for i, j in combinations(range(n), 2):
        if (i + j) % 2:
            truth[i, j] = truth[j, i] = 1.0
    rep = evaluate_estimates([truth * 0.9], [truth], 0.5)
    assert rep.precision == rep.recall == 1.0
    assert rep.mse == pytest.approx(0.01 * truth[np.triu_indices(n, 1)].mean())
