"""Clustering quality metrics: optimal-matching accuracy and best-match F-score."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .fission import Partition

__all__ = ["EvalReport", "accuracy", "f_score", "evaluate"]


@dataclass
class EvalReport:
    """Evaluation of a predicted partition against ground-truth classes."""

    accuracy: float
    f_score: float
    predicted_k: int
    true_k: int
    matching: dict

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f_score": self.f_score,
            "predicted_k": self.predicted_k,
            "true_k": self.true_k,
            "matching": {str(c): int(s) for c, s in sorted(self.matching.items())},
        }


def _labels_of(pred) -> np.ndarray:
    lab = pred.labels if isinstance(pred, Partition) else np.asarray(pred, dtype=np.int64)
    if lab.ndim != 1:
        raise ValueError(f"labels must be 1-D, got shape {lab.shape}")
    return lab.astype(np.int64, copy=False)


def _contingency(pred, truth):
    pred = _labels_of(pred)
    truth = _labels_of(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"length mismatch: {pred.shape[0]} predictions vs {truth.shape[0]} labels")
    n_clusters = int(pred.max()) + 1
    n_classes = int(truth.max()) + 1
    table = np.zeros((n_clusters, n_classes), dtype=np.int64)
    np.add.at(table, (pred, truth), 1)
    return table, pred.shape[0]


def accuracy(pred, truth):
    """Best one-to-one matching accuracy of clusters against classes.

    The cluster/class matching maximizes the total overlap count (excess
    clusters or classes stay unmatched); accuracy is the matched overlap
    divided by n. Among equally heavy matchings, lower id pairs win.

    Returns
    -------
    (float, dict)
        The accuracy in [0, 1] and the matching {cluster id: class id}.
    """
    table, n = _contingency(pred, truth)
    r, c = table.shape
    side = max(r, c)
    # One unit of overlap outweighs any value the id-alignment term can
    # reach (its totals stay below side^3), so the matching first maximizes
    # overlap and then, among equally heavy matchings, pairs low cluster
    # ids with low class ids (rearrangement inequality).
    big = float(side**3 + 1)
    weight = np.zeros((side, side), dtype=np.float64)
    weight[:r, :c] = table * big
    if n * big + side * side < 2**53:
        weight += np.multiply.outer(np.arange(side), np.arange(side))
    rows, cols = linear_sum_assignment(weight, maximize=True)
    matched = 0
    matching = {}
    for i, j in zip(rows, cols):
        if i < r and j < c and table[i, j] > 0:
            matched += int(table[i, j])
            matching[int(i)] = int(j)
    return matched / n, matching


def f_score(pred, truth) -> float:
    """Class-weighted best-match F-measure.

    Every true class takes the best harmonic mean of precision and recall
    over all predicted clusters; the result is the class-size-weighted
    average.
    """
    table, n = _contingency(pred, truth)
    cluster_sizes = table.sum(axis=1, keepdims=True).astype(np.float64)
    class_sizes = table.sum(axis=0).astype(np.float64)
    with np.errstate(divide="ignore", invalid="ignore"):
        precision = table / cluster_sizes
        recall = table / class_sizes[np.newaxis, :]
        f = 2 * precision * recall / (precision + recall)
    f = np.nan_to_num(f, nan=0.0)
    best = f.max(axis=0)
    return float((class_sizes / n) @ best)


def evaluate(pred, truth) -> EvalReport:
    """Full report: accuracy, F-score, cluster counts, and the matching."""
    table, _ = _contingency(pred, truth)
    acc, matching = accuracy(pred, truth)
    return EvalReport(
        accuracy=acc,
        f_score=f_score(pred, truth),
        predicted_k=table.shape[0],
        true_k=table.shape[1],
        matching=matching,
    )
