"""External clustering validation: pair-counting F-score/precision/recall,
normalized mutual information, and adjusted Rand index.

All five are computed from a single contingency table and are invariant
under relabeling of either partition.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import InvalidInputError, ShapeMismatchError


@dataclass(frozen=True)
class ContingencyTable:
    """counts[a, b] = number of samples with true label a and predicted
    label b."""

    counts: np.ndarray
    n: int


@dataclass(frozen=True)
class MetricReport:
    f_score: float
    precision: float
    recall: float
    nmi: float
    ari: float

    def as_dict(self) -> dict:
        return asdict(self)


def contingency(true_labels, pred_labels) -> ContingencyTable:
    """Cross-tabulate two dense 0-based label vectors."""
    t = np.asarray(true_labels, dtype=np.int64)
    p = np.asarray(pred_labels, dtype=np.int64)
    if t.shape != p.shape or t.ndim != 1:
        raise ShapeMismatchError(
            f"label vectors must be 1-d and equal length, got {t.shape} vs {p.shape}"
        )
    if t.size == 0:
        raise InvalidInputError("empty label vectors")
    if t.min() < 0 or p.min() < 0:
        raise InvalidInputError("labels must be nonnegative")
    kt = int(t.max()) + 1
    kp = int(p.max()) + 1
    counts = np.zeros((kt, kp), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ContingencyTable(counts=counts, n=int(t.size))


def _pairs(x) -> int:
    """Sum over entries of C(x, 2), in exact integer arithmetic."""
    total = 0
    for v in np.asarray(x, dtype=np.int64).ravel():
        total += int(v) * (int(v) - 1) // 2
    return total


def pairwise_metrics(ct: ContingencyTable) -> tuple[float, float, float]:
    """Pair-counting (f_score, precision, recall) with the 0/0 -> 0
    convention."""
    if ct.n < 2:
        raise InvalidInputError("pair counting needs at least 2 samples")
    tp = _pairs(ct.counts)
    pred_pairs = _pairs(ct.counts.sum(axis=0))
    true_pairs = _pairs(ct.counts.sum(axis=1))
    precision = tp / pred_pairs if pred_pairs > 0 else 0.0
    recall = tp / true_pairs if true_pairs > 0 else 0.0
    denom = precision + recall
    f_score = 2.0 * precision * recall / denom if denom > 0 else 0.0
    return f_score, precision, recall


def _identical_partitions(counts: np.ndarray) -> bool:
    """True when the two labelings induce the same set partition, i.e. the
    nonzero pattern of the table is (a sub-pattern of) a permutation."""
    nz = counts > 0
    return bool(np.all(nz.sum(axis=1) == 1) and np.all(nz.sum(axis=0) <= 1))


def _entropy(marginal: np.ndarray, n: int) -> float:
    p = marginal[marginal > 0] / n
    return float(-np.sum(p * np.log(p)))


def nmi(ct: ContingencyTable) -> float:
    """Mutual information normalized by the geometric mean of the two
    entropies (natural log)."""
    counts = ct.counts
    n = ct.n
    if _identical_partitions(counts):
        return 1.0
    h_true = _entropy(counts.sum(axis=1), n)
    h_pred = _entropy(counts.sum(axis=0), n)
    if h_true == 0.0 or h_pred == 0.0:
        return 0.0
    a = counts.sum(axis=1).astype(np.float64)
    b = counts.sum(axis=0).astype(np.float64)
    mask = counts > 0
    nij = counts[mask].astype(np.float64)
    outer = np.outer(a, b)[mask]
    info = float(np.sum((nij / n) * np.log(nij * n / outer)))
    return float(min(max(info / math.sqrt(h_true * h_pred), 0.0), 1.0))


def ari(ct: ContingencyTable) -> float:
    """Chance-adjusted Rand index (expected index subtracted, max index
    normalized); 0/0 -> 1 for two structureless equal partitions."""
    sum_cells = _pairs(ct.counts)
    sum_true = _pairs(ct.counts.sum(axis=1))
    sum_pred = _pairs(ct.counts.sum(axis=0))
    total = ct.n * (ct.n - 1) // 2
    if total == 0:
        raise InvalidInputError("ARI needs at least 2 samples")
    expected = sum_true * sum_pred / total
    denom = 0.5 * (sum_true + sum_pred) - expected
    if denom == 0.0:
        return 1.0
    return float((sum_cells - expected) / denom)


def score(true_labels, pred_labels) -> MetricReport:
    """All five metrics for a predicted-vs-true partition pair."""
    ct = contingency(true_labels, pred_labels)
    f_score, precision, recall = pairwise_metrics(ct)
    return MetricReport(
        f_score=f_score,
        precision=precision,
        recall=recall,
        nmi=nmi(ct),
        ari=ari(ct),
    )
