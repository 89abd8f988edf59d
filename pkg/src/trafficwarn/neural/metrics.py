"""Binary classification metrics."""

from __future__ import annotations

import numpy as np

from ..errors import DataError, UndefinedMetricError


def classification_metrics(predictions, labels, threshold: float = 0.5) -> dict:
    """Accuracy, precision, recall and F1 on thresholded probabilities; RMSE on raw ones."""
    p = np.asarray(predictions, dtype=float)
    y = np.asarray(labels)
    if p.shape != y.shape:
        raise DataError(f"predictions {p.shape} and labels {y.shape} differ in shape")
    if not np.isin(y, (0, 1)).all():
        raise DataError("labels must be binary")
    if not (y == 1).any():
        raise UndefinedMetricError("recall is undefined without positive labels")
    hard = (p >= threshold).astype(int)
    tp = int(((hard == 1) & (y == 1)).sum())
    fp = int(((hard == 1) & (y == 0)).sum())
    fn = int(((hard == 0) & (y == 1)).sum())
    tn = int(((hard == 0) & (y == 0)).sum())
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn)
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return {
        "accuracy": (tp + tn) / len(y),
        "precision": precision,
        "recall": recall,
        "f1": f1,
        "rmse": float(np.sqrt(np.mean((p - y) ** 2))),
        "tp": tp, "fp": fp, "fn": fn, "tn": tn,
    }
