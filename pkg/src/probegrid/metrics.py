"""Held-out scoring of probe predictions: AUC for binary targets, R^2 for
continuous ones.

Both metrics return ``None`` (the undefined marker) instead of raising when
the evaluation set cannot support them: a single-class label vector, fewer
than 2 rows, or zero variance in the truths. Callers must propagate the
marker; it must never be collapsed to 0 or NaN.
"""

from __future__ import annotations

import numpy as np
from scipy.stats import rankdata

from .errors import ValidationError


def auc(scores: np.ndarray, labels: np.ndarray) -> float | None:
    """Area under the ROC curve via the Mann-Whitney rank statistic.

    AUC = (sum of positive midranks - n_pos*(n_pos+1)/2) / (n_pos * n_neg).
    Tied scores get midranks, so each tied positive/negative pair
    contributes exactly 1/2, matching brute-force pairwise counting.

    Returns None when there are fewer than 2 rows or only one class.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if scores.shape != labels.shape or scores.ndim != 1:
        raise ValidationError(f"scores {scores.shape} and labels {labels.shape} must be equal-length vectors")
    if np.any((labels != 0.0) & (labels != 1.0)):
        raise ValidationError("labels must be 0/1")
    m = scores.size
    if m < 2:
        return None
    n_pos = int(labels.sum())
    n_neg = m - n_pos
    if n_pos == 0 or n_neg == 0:
        return None
    # Midranks are integers or half-integers, so the rank sum is exact in
    # float64 for any realistic m.
    ranks = rankdata(scores, method="average")
    rank_sum = float(ranks[labels == 1.0].sum())
    return (rank_sum - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg)


def r_squared(predictions: np.ndarray, truths: np.ndarray) -> float | None:
    """Coefficient of determination about the evaluation-set mean.

    R^2 = 1 - sum((y - yhat)^2) / sum((y - mean(y))^2), where mean(y) is
    taken over the evaluated rows themselves, so a predictor that outputs
    that mean scores exactly 0. Values below 0 are reported as-is: a probe
    worse than the mean is a finding, not an error.

    Returns None when there are fewer than 2 rows or the truths have zero
    variance.
    """
    predictions = np.asarray(predictions, dtype=np.float64)
    truths = np.asarray(truths, dtype=np.float64)
    if predictions.shape != truths.shape or predictions.ndim != 1:
        raise ValidationError(
            f"predictions {predictions.shape} and truths {truths.shape} must be equal-length vectors"
        )
    if truths.size < 2:
        return None
    mean = truths.mean()
    ss_tot = float(np.sum((truths - mean) ** 2))
    if ss_tot == 0.0:
        return None
    ss_res = float(np.sum((truths - predictions) ** 2))
    return 1.0 - ss_res / ss_tot
