"""Edge-recovery and reconstruction metrics.

Graphs are undirected and hollow, so every metric looks only at the strict
upper triangle: each unordered pair is counted once, self-loops never.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .core import vec_upper

REPORT_FIELDS = ("precision", "recall", "f1", "auprc", "relative_frobenius_error", "mse",
                 "threshold", "count")
# metrics where smaller is better
LOWER_IS_BETTER = {"relative_frobenius_error", "mse", "relative_error"}


def _pairs(estimate, target):
    e, t = np.asarray(estimate, dtype=float), np.asarray(target, dtype=float)
    if e.shape != t.shape:
        raise ValueError(f"shape mismatch: estimate {e.shape} vs target {t.shape}")
    return vec_upper(e), vec_upper(t) > 0


def edge_metrics(estimate, target, tau: float) -> tuple[float, float, float]:
    """Precision, recall and F1 of edges ``estimate > tau`` against ``target > 0``.

    With no predicted edges precision is 0 (1 if the target is empty too);
    with an empty target recall is 1 only when nothing is predicted.
    """
    scores, truth = _pairs(estimate, target)
    pred = scores > tau
    tp = int(np.sum(pred & truth))
    n_pred, n_true = int(pred.sum()), int(truth.sum())
    if n_pred == 0 and n_true == 0:
        return 1.0, 1.0, 1.0
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_true if n_true else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return precision, recall, f1


def auprc(estimate, target) -> float:
    """Average precision: sum over distinct score levels (descending) of
    ``(R_k - R_{k-1}) * P_k``, i.e. step interpolation of the PR curve.

    An empty target scores 1 if the estimate is all zero, else 0.
    """
    scores, truth = _pairs(estimate, target)
    n_true = int(truth.sum())
    if n_true == 0:
        return 1.0 if np.all(scores == 0) else 0.0
    order = np.argsort(-scores, kind="stable")
    s, y = scores[order], truth[order]
    tp = np.cumsum(y)
    # last index of each run of tied scores
    ends = np.flatnonzero(np.r_[s[1:] != s[:-1], True])
    tp_at = tp[ends]
    precision = tp_at / (ends + 1)
    recall = tp_at / n_true
    prev = np.r_[0.0, recall[:-1]]
    return float(np.sum((recall - prev) * precision))


def relative_error(estimate, target) -> float:
    e, t = np.asarray(estimate, dtype=float), np.asarray(target, dtype=float)
    return float(np.linalg.norm(e - t) / max(np.linalg.norm(t), 1e-12))


def pair_mse(estimate, target) -> float:
    scores, _ = _pairs(estimate, target)
    t = vec_upper(np.asarray(target, dtype=float))
    return float(np.mean((scores - t) ** 2)) if t.size else 0.0


@dataclass
class EvalReport:
    precision: float
    recall: float
    f1: float
    auprc: float
    relative_frobenius_error: float
    mse: float
    threshold: float
    count: int

    def to_dict(self) -> dict:
        return asdict(self)

    @staticmethod
    def csv_header() -> str:
        return ",".join(REPORT_FIELDS)

    def csv_row(self) -> str:
        vals = [getattr(self, k) for k in REPORT_FIELDS]
        return ",".join(str(v) if isinstance(v, int) else format(v, ".17g") for v in vals)


def sample_metrics(estimate, target, tau: float) -> dict:
    p, r, f = edge_metrics(estimate, target, tau)
    return {"precision": p, "recall": r, "f1": f, "auprc": auprc(estimate, target),
            "relative_frobenius_error": relative_error(estimate, target),
            "mse": pair_mse(estimate, target)}


def evaluate_estimates(estimates, targets, tau: float = 0.5) -> EvalReport:
    """Mean of the per-sample metrics over a stack of estimates."""
    rows = [sample_metrics(e, t, tau) for e, t in zip(estimates, targets)]
    if not rows:
        raise ValueError("cannot evaluate an empty split")
    mean = {k: float(np.mean([r[k] for r in rows])) for k in rows[0]}
    return EvalReport(threshold=float(tau), count=len(rows), **mean)


def best_threshold_f1(estimate, target, taus=None) -> tuple[float, float]:
    """Highest F1 over candidate thresholds (default: every distinct score)."""
    scores, _ = _pairs(estimate, target)
    if taus is None:
        taus = np.r_[np.unique(scores), -np.inf]
    best = (-1.0, 0.0)
    for tau in taus:
        f1 = edge_metrics(estimate, target, float(tau) if np.isfinite(tau) else -np.inf)[2]
        # strict '>' keeps the first (lowest) threshold among ties
        if f1 > best[0]:
            best = (f1, float(tau))
    return best
