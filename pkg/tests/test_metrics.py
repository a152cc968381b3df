
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import enumerate_matchings, pair_count_ari
from krafty import InputError, abs_error_k, adjusted_rand_index, contingency, misclustering_count


class TestAri:
    def test_identical(self):
        assert adjusted_rand_index([0, 0, 1, 2], [0, 0, 1, 2]) == 1.0

    def test_renamed(self):
        assert adjusted_rand_index([0, 0, 1, 2], [5, 5, 3, 9]) == 1.0

    def test_crossed_pairs(self):
        a, b = [0, 0, 1, 1], [0, 1, 0, 1]
        assert adjusted_rand_index(a, b) == pair_count_ari(a, b)
        assert adjusted_rand_index(a, b) == -0.5

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            adjusted_rand_index([0, 1], [0, 1, 1])

    def test_too_few(self):
        with pytest.raises(InputError):
            adjusted_rand_index([0], [0])

    def test_large_n_no_overflow(self):
        n = 3_000_000
        a = np.arange(n) % 3
        assert adjusted_rand_index(a, a) == 1.0

    def test_random_pairs_equal_enumeration(self):
        g = np.random.default_rng(8)
        for _ in range(100):
            n = int(g.integers(2, 13))
            a = g.integers(0, 4, n)
            b = g.integers(0, 4, n)
            assert adjusted_rand_index(a, b) == pair_count_ari(a, b)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 4), st.integers(0, 4)), min_size=2, max_size=40))
def test_ari_symmetric_and_invariant(pairs):
    a = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    v = adjusted_rand_index(a, b)
    assert -1 <= v <= 1
    assert v == pytest.approx(adjusted_rand_index(b, a), abs=1e-12)
    assert v == pytest.approx(adjusted_rand_index((a * 7 + 3) % 11, b), abs=1e-12)


class TestMisclustering:
    def test_identical(self):
        assert misclustering_count([0, 1, 2, 2], [0, 1, 2, 2]) == 0

    def test_one_flip(self):
        a = np.repeat([0, 1], 50)
        b = a.copy()
        b[7] = 1
        assert misclustering_count(a, b) == 1

    def test_small_enumeration(self):
        g = np.random.default_rng(2)
        a, b = g.integers(0, 3, 9), g.integers(0, 3, 9)
        assert misclustering_count(a, b) == enumerate_matchings(a, b)

    def test_random_pairs_equal_enumeration(self):
        g = np.random.default_rng(5)
        for _ in range(100):
            k = int(g.integers(1, 6))
            n = int(g.integers(k, 15))
            a = g.integers(0, k, n)
            b = g.integers(0, int(g.integers(1, 6)), n)
            assert misclustering_count(a, b) == enumerate_matchings(a, b)

    def test_unequal_cluster_counts(self):
        assert misclustering_count([0, 0, 1, 1, 2, 2], [0, 0, 0, 0, 1, 1]) == 2


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 3), st.integers(0, 3)), min_size=1, max_size=30))
def test_misclustering_bounds_and_relabel(pairs):
    a = np.array([p[0] for p in pairs])
    b = np.array([p[1] for p in pairs])
    m = misclustering_count(a, b)
    assert misclustering_count(a, a) == 0
    assert 0 <= m <= len(a)
    assert m == misclustering_count(3 - a, b) == misclustering_count(a, (b + 1) % 4)


def test_contingency_sums():
    t = contingency([0, 1, 1, 2], [1, 1, 0, 0])
    assert t.counts.sum() == t.n == 4


@pytest.mark.parametrize("k_hat,k_true,expected", [(5, 5, 0), (9, 15, 6), (16, 4, 12)])
def test_abs_error_k(k_hat, k_true, expected):
    assert abs_error_k(k_hat, k_true) == expected
