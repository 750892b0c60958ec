"""Confusion counts and the derived indicators.

Any indicator whose denominator is zero is reported as None (serialized as
the string "undefined"), never as 0: a recall nobody could measure is not
a recall of zero.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError

INDICATOR_NAMES = ("accuracy", "precision", "recall", "specificity", "f1")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self) -> None:
        for name in ("tp", "fp", "fn", "tn"):
            if getattr(self, name) < 0:
                raise DataError(f"confusion count {name} is negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def _check_label_vector(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.int64).reshape(-1)
    if arr.size == 0:
        raise DataError(f"{name} is empty")
    if not np.all(np.isin(arr, (-1, 1))):
        bad = sorted(set(arr[~np.isin(arr, (-1, 1))].tolist()))
        raise DataError(f"{name} must contain only +1/-1, got {bad}")
    return arr


def confusion(y_true, y_pred) -> ConfusionMatrix:
    """Counts with +1 as the positive class."""
    t = _check_label_vector(y_true, "y_true")
    p = _check_label_vector(y_pred, "y_pred")
    if t.shape[0] != p.shape[0]:
        raise DataError(
            f"length mismatch: {t.shape[0]} true labels, {p.shape[0]} predictions"
        )
    return ConfusionMatrix(
        tp=int(np.sum((t == 1) & (p == 1))),
        fp=int(np.sum((t == -1) & (p == 1))),
        fn=int(np.sum((t == 1) & (p == -1))),
        tn=int(np.sum((t == -1) & (p == -1))),
    )


def _ratio(num: int, den: int) -> float | None:
    return None if den == 0 else num / den


def indicators(cm: ConfusionMatrix) -> dict[str, float | None]:
    """accuracy, precision, recall, specificity, f1 (None when undefined)."""
    if cm.total == 0:
        raise DataError("empty confusion matrix")
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    if precision is None or recall is None or precision + recall == 0:
        f1 = None
    else:
        f1 = 2.0 * precision * recall / (precision + recall)
    return {
        "accuracy": (cm.tp + cm.tn) / cm.total,
        "precision": precision,
        "recall": recall,
        "specificity": _ratio(cm.tn, cm.tn + cm.fp),
        "f1": f1,
    }
