"""Scoring estimated total-effect matrices against the truth.

Every ordered off-diagonal pair is one candidate. A pair is positive when
its true effect exceeds ``zero_tol`` in magnitude; ROC and PR rank pairs by
``|estimated|`` while Spearman and MSE use the signed values.
"""
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
from scipy.stats import rankdata, spearmanr

ZERO_TOL = 1e-12


@dataclass
class EvaluationReport:
    auroc: float
    auprc: float
    spearman: float
    mse: float
    n_pairs: int
    notes: list = field(default_factory=list)

    def to_dict(self):
        return asdict(self)

    def write(self, path):
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def off_diagonal(M):
    M = np.asarray(M, dtype=np.float64)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise ValueError("effect matrices must be square")
    return M[~np.eye(M.shape[0], dtype=bool)]


def _check_labels(labels):
    n_pos = int(labels.sum())
    if n_pos == 0 or n_pos == labels.size:
        kind = "positive" if n_pos else "negative"
        return f"all pairs are {kind}; ROC/PR undefined"
    return None


def auroc(scores, labels):
    """Mann-Whitney AUROC with average ranks for tied scores."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if _check_labels(labels):
        return math.nan
    ranks = rankdata(scores)
    n_pos = labels.sum()
    n_neg = labels.size - n_pos
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2) / (n_pos * n_neg))


def _threshold_counts(scores, labels):
    order = np.argsort(-scores, kind="mergesort")
    s, y = scores[order], labels[order]
    tp = np.cumsum(y)
    fp = np.cumsum(~y)
    last = np.r_[np.flatnonzero(np.diff(s) != 0), s.size - 1]
    return tp[last], fp[last], s[last]


def average_precision(scores, labels):
    """Step-wise area under the precision-recall curve (no interpolation)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=bool)
    if _check_labels(labels):
        return math.nan
    tp, fp, _ = _threshold_counts(scores, labels)
    precision = tp / (tp + fp)
    recall = tp / labels.sum()
    return float(np.sum(np.diff(np.r_[0.0, recall]) * precision))


def roc_pr_curves(estimated, truth, zero_tol=ZERO_TOL):
    """ROC points ``(fpr, tpr)`` and PR points ``(recall, precision)`` over all thresholds."""
    scores = np.abs(off_diagonal(estimated))
    labels = np.abs(off_diagonal(truth)) > zero_tol
    reason = _check_labels(labels)
    if reason:
        raise ValueError(reason)
    tp, fp, _ = _threshold_counts(scores, labels)
    n_pos, n_neg = labels.sum(), labels.size - labels.sum()
    roc = np.column_stack([np.r_[0.0, fp / n_neg], np.r_[0.0, tp / n_pos]])
    pr = np.column_stack([np.r_[0.0, tp / n_pos], np.r_[1.0, tp / (tp + fp)]])
    return roc, pr


def evaluate(estimated, truth, zero_tol=ZERO_TOL):
    est = off_diagonal(estimated)
    true = off_diagonal(truth)
    if est.shape != true.shape:
        raise ValueError("estimated and true effect matrices differ in size")
    labels = np.abs(true) > zero_tol
    notes = []
    reason = _check_labels(labels)
    if reason:
        notes.append(reason)
    roc = auroc(np.abs(est), labels)
    ap = average_precision(np.abs(est), labels)
    if np.ptp(est) == 0 or np.ptp(true) == 0:
        rho = 0.0
        notes.append("constant input; Spearman correlation set to 0")
    else:
        rho = float(spearmanr(est, true).statistic)
    mse = float(np.mean((est - true) ** 2))
    return EvaluationReport(roc, ap, rho, mse, int(est.size), notes)


def write_curve(path, points, header):
    lines = ["\t".join(header)] + [f"{float(a)!r}\t{float(b)!r}" for a, b in points]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
