"""Estimating the number of joint clusters.

Spectrum-based estimators (largest gap, Zhu-Ghodsi profile likelihood) and
the merge-height estimator for complete-linkage dendrograms.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import NamedTuple, Tuple

import numpy as np

from .errors import InputError, LowConfidenceWarning
from .types import Dendrogram, Spectrum

__all__ = [
    "ElbowEstimate",
    "HeightElbow",
    "largest_gap",
    "profile_likelihood_scores",
    "profile_likelihood_elbow",
    "merge_height_elbow",
]


def _values(s) -> np.ndarray:
    return (s if isinstance(s, Spectrum) else Spectrum(s)).values


def largest_gap(s) -> int:
    """1-based position ``i`` maximizing ``values[i-1] - values[i]``.

    Ties go to the smallest position.
    """
    v = _values(s)
    if v.size < 2:
        raise InputError("largest_gap needs at least 2 values")
    return int(np.argmax(v[:-1] - v[1:])) + 1


def profile_likelihood_scores(values) -> np.ndarray:
    """Two-segment Gaussian profile log-likelihood for every split.

    Entry ``q - 1`` scores the split into ``values[:q]`` and ``values[q:]``
    with separate means and a pooled maximum-likelihood variance.  The
    variance is floored at ``(1e-12 * max|v|)**2`` so perfectly flat
    segments give a finite (maximal) score.
    """
    v = np.asarray(values, dtype=np.float64)
    d = v.size
    if d < 2:
        raise InputError("profile likelihood needs at least 2 values")
    scale = float(np.max(np.abs(v)))
    floor = (1e-12 * scale) ** 2 if scale > 0 else np.finfo(float).tiny
    scores = np.empty(d - 1)
    for q in range(1, d):
        head, tail = v[:q], v[q:]
        ss = np.sum((head - head.mean()) ** 2) + np.sum((tail - tail.mean()) ** 2)
        var = max(ss / d, floor)
        scores[q - 1] = -0.5 * d * np.log(2 * np.pi * var) - ss / (2 * var)
    return scores


@dataclass(frozen=True)
class ElbowEstimate:
    k_hat: int
    which_elbow: int
    profile: Tuple[float, ...]
    elbows: Tuple[int, ...]


def profile_likelihood_elbow(s, which: int = 2) -> ElbowEstimate:
    """Zhu-Ghodsi scree elbow; ``which > 1`` repeats the search on the tail.

    The ``w``-th elbow is found by rerunning the split search on the
    values after the ``(w-1)``-th elbow; the returned index accumulates
    over all stages.  ``profile`` holds the scores of the last stage.
    """
    v = _values(s)
    if v.size < 3:
        raise InputError("profile_likelihood_elbow needs at least 3 values")
    which = int(which)
    if which < 1:
        raise InputError("which must be >= 1")
    offset = 0
    elbows = []
    tail = v
    scores = None
    for stage in range(which):
        if tail.size < 2:
            raise InputError(
                f"elbow {stage + 1} requested but only {tail.size} value(s) remain after elbow {stage}"
            )
        scores = profile_likelihood_scores(tail)
        q = int(np.argmax(scores)) + 1
        offset += q
        elbows.append(offset)
        tail = tail[q:]
    return ElbowEstimate(
        k_hat=offset, which_elbow=which, profile=tuple(float(x) for x in scores), elbows=tuple(elbows)
    )


class HeightElbow(NamedTuple):
    k_hat: int
    step: int
    gap: float
    low_confidence: bool


def merge_height_elbow(d: Dendrogram) -> HeightElbow:
    """Number of clusters from the largest jump in merge heights.

    With heights ``h(t)``, ``t = 2..n``, finds ``t* = argmax h(t+1) - h(t)``
    (ties to the largest ``t``) and returns ``K = n - t* + 1``.
    """
    n = d.n
    if n < 3:
        raise InputError("merge_height_elbow needs n >= 3")
    jumps = np.diff(d.heights)  # jumps[t - 2] = h(t + 1) - h(t)
    best = jumps.max()
    t_star = int(np.flatnonzero(jumps == best)[-1]) + 2
    low = bool(np.ptp(d.heights) == 0)
    if low:
        warnings.warn("all merge heights are equal; estimate is arbitrary", LowConfidenceWarning, stacklevel=2)
    return HeightElbow(k_hat=n - t_star + 1, step=t_star, gap=float(best), low_confidence=low)
