import itertools
from fractions import Fraction
from math import comb

import numpy as np
import pytest

from krafty import Assignment

# Five joint clusters over a 3 x 3 grid: one shared cluster, the others mixed.
FIG1_CELLS = ((0, 0), (1, 1), (1, 2), (2, 1), (2, 2))
FIG1_SIZES = (352, 172, 165, 156, 155)

# Cell counts of an independent 3 x 3 design (n = 1000), rows = view 1.
INDEPENDENT_GRID = np.array([[89, 97, 113], [119, 122, 112], [125, 115, 108]])


def grid_assignments(cells, sizes):
    joint = np.repeat(np.arange(len(cells)), sizes)
    z1 = np.array([cells[j][0] for j in joint])
    z2 = np.array([cells[j][1] for j in joint])
    return Assignment(joint), Assignment(z1), Assignment(z2)


def independent_assignments():
    cells, sizes = [], []
    for a in range(3):
        for b in range(3):
            cells.append((a, b))
            sizes.append(int(INDEPENDENT_GRID[a, b]))
    return grid_assignments(cells, sizes)


def flip_labels(z, count, rng):
    """Move ``count`` distinct items to a different cluster of the same view."""
    labels = np.array(z.labels)
    idx = rng.choice(labels.size, size=count, replace=False)
    for i in idx:
        labels[i] = (labels[i] + rng.integers(1, z.k)) % z.k
    return Assignment(labels, z.k)


def colwise_khatri_rao(a, b):
    """Column-wise Khatri-Rao product: column j is kron(a[:, j], b[:, j])."""
    return np.column_stack([np.kron(a[:, j], b[:, j]) for j in range(a.shape[1])])


def pair_count_ari(a, b):
    """ARI from an explicit enumeration of all item pairs."""
    n = len(a)
    both = same_a = same_b = 0
    for i, j in itertools.combinations(range(n), 2):
        sa, sb = a[i] == a[j], b[i] == b[j]
        both += sa and sb
        same_a += sa
        same_b += sb
    total = comb(n, 2)
    expected = Fraction(same_a * same_b, total)
    denom = Fraction(same_a + same_b, 2) - expected
    return 1.0 if denom == 0 else float((both - expected) / denom)


def enumerate_matchings(truth, est):
    """Minimum disagreements over all injective relabelings (K! search)."""
    ta, eb = np.unique(truth), np.unique(est)
    k = max(len(ta), len(eb))
    best = len(truth)
    for perm in itertools.permutations(range(k), len(ta)):
        mapped = np.array([perm[np.searchsorted(ta, t)] for t in truth])
        est_idx = np.searchsorted(eb, est)
        best = min(best, int(np.sum(mapped != est_idx)))
    return best


@pytest.fixture
def fig1():
    return grid_assignments(FIG1_CELLS, FIG1_SIZES)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
