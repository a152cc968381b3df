"""Partition comparison metrics."""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import linear_sum_assignment

from .errors import InputError
from .types import Assignment

__all__ = ["ContingencyTable", "contingency", "adjusted_rand_index", "misclustering_count", "abs_error_k"]


def _labels(a) -> np.ndarray:
    if isinstance(a, Assignment):
        return a.labels
    lab = np.asarray(a)
    if lab.ndim != 1:
        raise InputError("labels must be 1-D")
    return lab


@dataclass(frozen=True)
class ContingencyTable:
    counts: np.ndarray
    n: int


def contingency(a, b) -> ContingencyTable:
    la, lb = _labels(a), _labels(b)
    if la.size != lb.size:
        raise InputError(f"label lengths differ: {la.size} != {lb.size}")
    _, ia = np.unique(la, return_inverse=True)
    _, ib = np.unique(lb, return_inverse=True)
    counts = np.zeros((ia.max() + 1, ib.max() + 1), dtype=np.int64)
    np.add.at(counts, (ia.ravel(), ib.ravel()), 1)
    return ContingencyTable(counts=counts, n=int(la.size))


def _pairs(x) -> int:
    return sum(int(c) * (int(c) - 1) // 2 for c in np.asarray(x).ravel())


def adjusted_rand_index(a, b) -> float:
    """Hubert-Arabie adjusted Rand index.

    Pair counts are exact Python integers and the ratio is formed as a
    rational before the final rounding to float.
    """
    table = contingency(a, b)
    if table.n < 2:
        raise InputError("ARI needs at least 2 items")
    index = _pairs(table.counts)
    sum_a = _pairs(table.counts.sum(axis=1))
    sum_b = _pairs(table.counts.sum(axis=0))
    total = table.n * (table.n - 1) // 2
    expected = Fraction(sum_a * sum_b, total)
    denom = Fraction(sum_a + sum_b, 2) - expected
    if denom == 0:
        return 1.0
    return float((index - expected) / denom)


def misclustering_count(truth, est) -> int:
    """Minimum number of disagreements over one-to-one label matchings.

    Solved as a maximum-weight assignment on the contingency table; the
    smaller side is implicitly padded with empty classes.
    """
    table = contingency(truth, est)
    rows, cols = linear_sum_assignment(table.counts, maximize=True)
    return int(table.n - table.counts[rows, cols].sum())


def abs_error_k(k_hat: int, k_true: int) -> int:
    return abs(int(k_hat) - int(k_true))
