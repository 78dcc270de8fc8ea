"""Clustering-accuracy protocols for a finished stream.

Predictions are cluster indices over the final prototype memory; truths
are dataset labels. Before matching, the cluster list is cut down to the
|Y_Q| largest clusters (ties broken by smaller cluster id) and samples in
dropped clusters count as wrong everywhere. Two protocols are reported:

* strict: one global one-to-one matching between retained clusters and
  the full label set,
* greedy: independent matchings for base-labeled and novel-labeled
  samples, allowing one cluster to represent a base label for the old
  subset and a novel label for the new subset simultaneously.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import EmptyInput, LengthMismatch


@dataclass(frozen=True)
class StreamResult:
    """Predicted cluster ids and ground truth for one evaluated stream."""

    predictions: np.ndarray
    truths: np.ndarray
    num_total_labels: int
    base_label_set: frozenset

    def __post_init__(self) -> None:
        preds = np.asarray(self.predictions, dtype=np.int64)
        truths = np.asarray(self.truths, dtype=np.int64)
        if preds.ndim != 1 or truths.ndim != 1:
            raise ValueError("predictions and truths must be 1-D")
        if preds.shape[0] != truths.shape[0]:
            raise LengthMismatch(
                f"{preds.shape[0]} predictions vs {truths.shape[0]} truths"
            )
        if preds.shape[0] == 0:
            raise EmptyInput("cannot evaluate an empty stream")
        if self.num_total_labels < 1:
            raise ValueError("num_total_labels must be >= 1")
        base = frozenset(int(b) for b in self.base_label_set)
        object.__setattr__(self, "predictions", preds)
        object.__setattr__(self, "truths", truths)
        object.__setattr__(self, "base_label_set", base)

    @property
    def size(self) -> int:
        return self.predictions.shape[0]


def retain_top_clusters(result: StreamResult) -> tuple:
    """Keep the num_total_labels largest clusters (size desc, id asc).

    Returns (retained cluster ids in retention order, boolean mask of
    samples falling in dropped clusters).
    """
    ids, sizes = np.unique(result.predictions, return_counts=True)
    order = np.lexsort((ids, -sizes))
    retained = ids[order[: result.num_total_labels]]
    dropped_mask = ~np.isin(result.predictions, retained)
    return [int(c) for c in retained], dropped_mask


def hungarian_assign(profit) -> list:
    """Maximum-profit one-to-one assignment on a rectangular matrix.

    Implemented as cost minimization on (max entry - profit) after
    zero-padding to square, which preserves the optimum because padded
    pairings contribute a constant. Returns min(R, C) (row, col) pairs
    sorted by row index.
    """
    matrix = np.asarray(profit, dtype=np.float64)
    if matrix.ndim != 2:
        raise ValueError("profit matrix must be 2-D")
    rows, cols = matrix.shape
    if rows == 0 or cols == 0:
        return []
    if not np.all(np.isfinite(matrix)):
        raise ValueError("profit matrix must be finite")
    n = max(rows, cols)
    padded = np.zeros((n, n), dtype=np.float64)
    padded[:rows, :cols] = matrix
    cost = padded.max() - padded
    row_ind, col_ind = linear_sum_assignment(cost)
    pairs = [
        (int(r), int(c))
        for r, c in zip(row_ind, col_ind)
        if r < rows and c < cols
    ]
    pairs.sort()
    return pairs


def _contingency(
    preds: np.ndarray, truths: np.ndarray, cluster_ids: list, label_ids: list
) -> np.ndarray:
    cluster_pos = {c: i for i, c in enumerate(cluster_ids)}
    label_pos = {l: j for j, l in enumerate(label_ids)}
    table = np.zeros((len(cluster_ids), len(label_ids)), dtype=np.float64)
    for p, t in zip(preds, truths):
        i = cluster_pos.get(int(p))
        j = label_pos.get(int(t))
        if i is not None and j is not None:
            table[i, j] += 1.0
    return table


def _subset_masks(result: StreamResult) -> tuple:
    old_mask = np.isin(result.truths, sorted(result.base_label_set))
    return old_mask, ~old_mask


def strict_accuracy(result: StreamResult, retained: list, dropped_mask: np.ndarray) -> tuple:
    """(all, old, new) accuracy under a single global matching."""
    labels = sorted(set(int(t) for t in result.truths))
    table = _contingency(
        result.predictions[~dropped_mask],
        result.truths[~dropped_mask],
        retained,
        labels,
    )
    mapping = {
        retained[r]: labels[c] for r, c in hungarian_assign(table)
    }
    correct = np.zeros(result.size, dtype=bool)
    for j in range(result.size):
        if dropped_mask[j]:
            continue
        assigned = mapping.get(int(result.predictions[j]))
        correct[j] = assigned is not None and assigned == int(result.truths[j])
    old_mask, new_mask = _subset_masks(result)

    def _mean(mask: np.ndarray) -> float:
        total = int(mask.sum())
        return float(correct[mask].sum() / total) if total else 0.0

    return (
        float(correct.mean()),
        _mean(old_mask),
        _mean(new_mask),
    )


def greedy_accuracy(result: StreamResult, retained: list, dropped_mask: np.ndarray) -> tuple:
    """(all, old, new) accuracy under independent old/new matchings.

    Both matchings draw from the same globally retained cluster pool, so
    one cluster may be matched on both sides. The combined accuracy is the
    subset-size weighted mean of the two subset accuracies.
    """
    old_mask, new_mask = _subset_masks(result)
    retained_set = set(retained)
    novel_labels = sorted(set(int(t) for t in result.truths) - result.base_label_set)
    base_labels = sorted(result.base_label_set)

    def _subset(mask: np.ndarray, label_space: list) -> tuple:
        total = int(mask.sum())
        if total == 0:
            return 0.0, 0
        usable = mask & ~dropped_mask
        preds = result.predictions[usable]
        truths = result.truths[usable]
        clusters = sorted(set(int(p) for p in preds) & retained_set)
        if not clusters or not label_space:
            return 0.0, total
        table = _contingency(preds, truths, clusters, label_space)
        mapping = {
            clusters[r]: label_space[c] for r, c in hungarian_assign(table)
        }
        hits = sum(
            1
            for p, t in zip(preds, truths)
            if mapping.get(int(p)) == int(t)
        )
        return float(hits / total), total

    old_acc, n_old = _subset(old_mask, base_labels)
    new_acc, n_new = _subset(new_mask, novel_labels)
    combined = (n_old * old_acc + n_new * new_acc) / result.size
    return float(combined), old_acc, new_acc


@dataclass(frozen=True)
class EvalReport:
    """Both protocol results plus retention bookkeeping."""

    strict_all: float
    strict_old: float
    strict_new: float
    greedy_all: float
    greedy_old: float
    greedy_new: float
    estimated_cluster_count: int
    retained_count: int
    dropped_sample_count: int

    def __post_init__(self) -> None:
        for name in (
            "strict_all",
            "strict_old",
            "strict_new",
            "greedy_all",
            "greedy_old",
            "greedy_new",
        ):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name}={value} outside [0, 1]")

    def to_json_dict(self) -> dict:
        return {
            "strict": {
                "all": self.strict_all,
                "old": self.strict_old,
                "new": self.strict_new,
            },
            "greedy": {
                "all": self.greedy_all,
                "old": self.greedy_old,
                "new": self.greedy_new,
            },
            "estimated_cluster_count": self.estimated_cluster_count,
            "retained_count": self.retained_count,
            "dropped_sample_count": self.dropped_sample_count,
        }


def evaluate_stream(result: StreamResult) -> EvalReport:
    """Run retention plus both matching protocols on one stream result."""
    retained, dropped_mask = retain_top_clusters(result)
    strict = strict_accuracy(result, retained, dropped_mask)
    greedy = greedy_accuracy(result, retained, dropped_mask)
    return EvalReport(
        strict_all=strict[0],
        strict_old=strict[1],
        strict_new=strict[2],
        greedy_all=greedy[0],
        greedy_old=greedy[1],
        greedy_new=greedy[2],
        estimated_cluster_count=int(np.unique(result.predictions).size),
        retained_count=len(retained),
        dropped_sample_count=int(dropped_mask.sum()),
    )
