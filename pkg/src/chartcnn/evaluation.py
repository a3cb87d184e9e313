"""Confusion matrices and the metrics report.

Class order everywhere is (Sell, Hold, Buy), matching the dense class
indices 0, 1, 2. Rows of the confusion matrix are true labels, columns
are predictions. Precision and recall with an empty denominator are
reported as 0.0 with an explicit undefined flag rather than NaN.
"""

import json
from dataclasses import dataclass
from typing import Dict, List, Sequence, Union

import numpy as np

from .errors import ParameterError
from .labeler import CLASS_NAMES, Label


@dataclass
class ConfusionMatrix:
    counts: np.ndarray

    def __post_init__(self):
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.counts.shape != (3, 3):
            raise ParameterError(f"counts must be 3x3, got {self.counts.shape}")
        if (self.counts < 0).any():
            raise ParameterError("counts must be non-negative")

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    @property
    def accuracy(self) -> float:
        return float(np.trace(self.counts) / self.total) if self.total else 0.0

    def support(self, index: int) -> int:
        return int(self.counts[index].sum())

    def predicted(self, index: int) -> int:
        return int(self.counts[:, index].sum())


def _as_index(value: Union[Label, int]) -> int:
    if isinstance(value, Label):
        return value.class_index
    if value in (0, 1, 2):
        return int(value)
    raise ParameterError(f"expected a Label or class index 0..2, got {value!r}")


def confusion(
    predictions: Sequence[Union[Label, int]], truths: Sequence[Union[Label, int]]
) -> ConfusionMatrix:
    """Tally (true, predicted) pairs; inputs may be Labels or class indices."""
    if len(predictions) != len(truths):
        raise ParameterError(
            f"{len(predictions)} predictions vs {len(truths)} truths"
        )
    counts = np.zeros((3, 3), dtype=np.int64)
    for pred, true in zip(predictions, truths):
        counts[_as_index(true), _as_index(pred)] += 1
    return ConfusionMatrix(counts)


def metrics_report(matrix: ConfusionMatrix) -> dict:
    """Accuracy plus per-class precision/recall with undefined flags."""
    per_class: Dict[str, dict] = {}
    for i, name in enumerate(CLASS_NAMES):
        support = matrix.support(i)
        predicted = matrix.predicted(i)
        tp = int(matrix.counts[i, i])
        per_class[name] = {
            "precision": tp / predicted if predicted else 0.0,
            "precision_undefined": predicted == 0,
            "recall": tp / support if support else 0.0,
            "recall_undefined": support == 0,
            "support": support,
            "predicted": predicted,
        }
    return {
        "counts": matrix.counts.tolist(),
        "total": matrix.total,
        "accuracy": matrix.accuracy,
        "per_class": per_class,
    }


def write_report(report: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(report, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path) as fh:
        return json.load(fh)


def matrix_from_report(report: dict) -> ConfusionMatrix:
    return ConfusionMatrix(np.asarray(report["counts"]))
