# label_uncertainty/metrics.py
"""
Ranking metrics: ROC AUC as a midrank Mann-Whitney statistic, ROC curve
points, and Spearman correlation as Pearson correlation of midranks.
"""
from __future__ import annotations

from typing import Tuple

import numpy as np
from scipy.stats import rankdata

from label_uncertainty.errors import (
    AUCUndefinedError,
    CorrelationUndefinedError,
    NonFiniteInputError,
    ShapeMismatchError,
)
from label_uncertainty.models import RankingReport


def _paired(a, b) -> Tuple[np.ndarray, np.ndarray]:
    a = np.asarray(a, dtype=float).ravel()
    b = np.asarray(b, dtype=float).ravel()
    if len(a) != len(b):
        raise ShapeMismatchError("inputs have different lengths", data={"a": len(a), "b": len(b)})
    if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
        raise NonFiniteInputError("inputs must be finite")
    return a, b


def _binary_targets(scores, targets) -> Tuple[np.ndarray, np.ndarray]:
    scores, targets = _paired(scores, targets)
    if not np.all((targets == 0.0) | (targets == 1.0)):
        raise ShapeMismatchError("targets must be 0/1")
    positives = int(targets.sum())
    if positives == 0 or positives == len(targets):
        raise AUCUndefinedError("AUC undefined", data={"n": len(targets), "positives": positives})
    return scores, targets


def roc_auc(scores, targets) -> float:
    """P(score+ > score-) + 0.5 P(tie), from the midranks of the scores."""
    scores, targets = _binary_targets(scores, targets)
    positive = targets == 1.0
    n_pos = int(positive.sum())
    n_neg = len(targets) - n_pos
    ranks = rankdata(scores, method="average")
    u = ranks[positive].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_curve(scores, targets) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(fpr, tpr, threshold) at every distinct score, highest first.

    The first point is (0, 0) at threshold +inf; a point at threshold t
    counts scores >= t as positive.
    """
    scores, targets = _binary_targets(scores, targets)
    order = np.argsort(-scores, kind="mergesort")
    scores, targets = scores[order], targets[order]
    last_of_run = np.flatnonzero(np.diff(scores) != 0.0)
    cut = np.r_[last_of_run, len(scores) - 1]
    tp = np.cumsum(targets)[cut]
    fp = (cut + 1) - tp
    tpr = np.r_[0.0, tp / targets.sum()]
    fpr = np.r_[0.0, fp / (len(targets) - targets.sum())]
    thresholds = np.r_[np.inf, scores[cut]]
    return fpr, tpr, thresholds


def spearman(a, b) -> float:
    """Pearson correlation of midranks, clipped to [-1, 1]."""
    a, b = _paired(a, b)
    if len(a) < 2:
        raise CorrelationUndefinedError("correlation undefined", data={"n": len(a)})
    ra = rankdata(a, method="average")
    rb = rankdata(b, method="average")
    ra -= ra.mean()
    rb -= rb.mean()
    denom = np.sqrt(np.sum(ra * ra) * np.sum(rb * rb))
    if denom == 0.0:
        raise CorrelationUndefinedError("correlation undefined")
    return float(np.clip(np.sum(ra * rb) / denom, -1.0, 1.0))


def ranking_report(scores, targets, binary: bool) -> RankingReport:
    """AUC for binary targets, Spearman for continuous ones."""
    scores, targets = _paired(scores, targets)
    return RankingReport(
        scores=tuple(scores.tolist()),
        targets=tuple(targets.tolist()),
        auc=roc_auc(scores, targets) if binary else None,
        spearman=None if binary else spearman(scores, targets),
        n=len(scores),
    )
