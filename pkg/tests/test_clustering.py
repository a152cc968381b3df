import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.cluster.hierarchy import linkage

from krafty import InputError, adjusted_rand_index, cut_dendrogram, hierarchical_complete, kmeans
from krafty._backend import get_kernels


def brute_force_complete(x):
    """Rescan every pair of current clusters at every step.

    Returns the merged pairs as (min member, min member) and the diameters.
    """
    d = np.linalg.norm(x[:, None, :] - x[None, :, :], axis=2)
    clusters = [[i] for i in range(len(x))]
    pairs, heights = [], []
    while len(clusters) > 1:
        best = None
        for a in range(len(clusters)):
            for b in range(a + 1, len(clusters)):
                link = d[np.ix_(clusters[a], clusters[b])].max()
                key = (link, min(clusters[a]), min(clusters[b]))
                if best is None or key < best[0]:
                    best = (key, a, b)
        (_, _, _), a, b = best
        merged = clusters[a] + clusters[b]
        pairs.append((min(clusters[a]), min(clusters[b])))
        heights.append(d[np.ix_(merged, merged)].max())
        clusters[a] = merged
        del clusters[b]
        clusters.sort(key=min)
    return pairs, np.array(heights)


def members(d):
    out = {i: [i] for i in range(d.n)}
    for i, j, c in zip(d.left, d.right, d.new_id):
        out[int(c)] = out[int(i)] + out[int(j)]
    return out


class TestKmeans:
    def test_two_groups_1d(self):
        res = kmeans(np.array([[0.0], [0.0], [0.0], [100.0], [100.0]]), 2)
        assert res.objective == 0
        assert len(set(res.assignment.labels[:3])) == 1 and res.assignment.labels[0] != res.assignment.labels[3]

    def test_n_equals_k(self, rng):
        x = rng.standard_normal((6, 2))
        res = kmeans(x, 6)
        assert res.objective == pytest.approx(0, abs=1e-20)
        assert sorted(res.assignment.labels) == list(range(6))

    def test_planted_blobs(self):
        truth = np.repeat([0, 1, 2], 4)
        centers = np.array([[0.0, 0.0], [100.0, 0.0], [0.0, 100.0]])
        for seed in range(20):
            g = np.random.default_rng(seed)
            x = centers[truth] + g.uniform(-0.5, 0.5, (12, 2))
            # oracle: nearest true center
            oracle = np.argmin(((x[:, None] - centers[None]) ** 2).sum(2), axis=1)
            res = kmeans(x, 3, seed=seed)
            assert adjusted_rand_index(oracle, res.assignment) == 1.0

    def test_objective_matches_labels(self, rng):
        x = rng.standard_normal((80, 3))
        res = kmeans(x, 4, seed=3)
        obj = np.sum((x - res.centers[res.assignment.labels]) ** 2)
        assert res.objective == pytest.approx(obj, rel=1e-8)

    def test_reproducible(self, rng):
        x = rng.standard_normal((60, 2))
        a, b = kmeans(x, 5, seed=11), kmeans(x, 5, seed=11)
        np.testing.assert_array_equal(a.assignment.labels, b.assignment.labels)

    def test_k_too_large(self):
        with pytest.raises(InputError):
            kmeans(np.zeros((3, 1)), 4)

    def test_duplicates_no_empty_clusters(self):
        x = np.zeros((10, 2))
        x[:2] = 1.0
        res = kmeans(x, 4)
        assert res.assignment.k == 4 and np.all(res.assignment.sizes > 0)


@settings(max_examples=30, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), k=st.integers(1, 5))
def test_lloyd_monotone(seed, k):
    x = np.random.default_rng(seed).standard_normal((40, 2))
    res = kmeans(x, k, restarts=1, seed=seed)
    h = np.array(res.history)
    assert np.all(np.diff(h) <= 1e-9 * max(1.0, h[0]))


class TestHierarchical:
    def test_two_pairs(self):
        x = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]])
        d = hierarchical_complete(x)
        np.testing.assert_allclose(d.heights[:2], [0.1, 0.1])
        assert d.heights[2] >= 10
        lab = cut_dendrogram(d, 2).labels
        np.testing.assert_array_equal(lab, [0, 0, 1, 1])

    def test_duplicates_zero_heights(self):
        x = np.array([[1.0, 1.0], [1.0, 1.0], [5.0, 5.0]])
        d = hierarchical_complete(x)
        assert d.heights[0] == 0.0

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_brute_force(self, seed):
        x = np.random.default_rng(seed).standard_normal((8, 2))
        d = hierarchical_complete(x)
        pairs, heights = brute_force_complete(x)
        mem = members(d)
        got = [(min(mem[int(i)]), min(mem[int(j)])) for i, j in zip(d.left, d.right)]
        assert got == pairs
        np.testing.assert_allclose(d.heights, heights, rtol=1e-14)

    def test_tie_break_smallest_pair(self):
        # unit square: four equal nearest distances, (0,1) wins
        x = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]])
        pairs, _ = brute_force_complete(x)
        d = hierarchical_complete(x)
        assert (int(d.left[0]), int(d.right[0])) == pairs[0] == (0, 1)

    def test_heights_match_scipy(self, rng):
        x = rng.standard_normal((120, 3))
        ours = hierarchical_complete(x).heights
        ref = linkage(x, method="complete")[:, 2]
        np.testing.assert_allclose(ours, ref, rtol=1e-12)

    def test_needs_two_points(self):
        with pytest.raises(InputError):
            hierarchical_complete(np.zeros((1, 2)))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(2, 25))
def test_heights_monotone_and_cuts_nested(seed, n):
    x = np.random.default_rng(seed).standard_normal((n, 2))
    d = hierarchical_complete(x)
    assert np.all(np.diff(d.heights) >= 0)
    prev = cut_dendrogram(d, n).labels
    np.testing.assert_array_equal(prev, np.arange(n))
    for k in range(n - 1, 0, -1):
        cur = cut_dendrogram(d, k).labels
        assert cur.max() + 1 == k
        # each finer cluster sits inside one coarser cluster
        for c in np.unique(prev):
            assert len(set(cur[prev == c])) == 1
        prev = cur


class TestCut:
    def test_out_of_range(self, rng):
        d = hierarchical_complete(rng.standard_normal((4, 2)))
        for k in (0, 5):
            with pytest.raises(InputError):
                cut_dendrogram(d, k)


class TestBackends:
    @pytest.mark.parametrize("seed", range(3))
    def test_linkage_parity(self, seed):
        from krafty.clustering import pairwise_distances

        pytest.importorskip("krafty._kernels")
        x = np.random.default_rng(seed).standard_normal((150, 4))
        x[10] = x[3]  # an exact tie
        dist = pairwise_distances(x)
        fast = get_kernels("cython").complete_linkage(dist)
        slow = get_kernels("python").complete_linkage(dist)
        for a, b in zip(fast, slow):
            np.testing.assert_array_equal(a, b)

    def test_assign_parity(self, rng):
        pytest.importorskip("krafty._kernels")
        x, c = rng.standard_normal((300, 5)), rng.standard_normal((7, 5))
        lf, df = get_kernels("cython").assign_nearest(x, c)
        ls, ds = get_kernels("python").assign_nearest(x, c)
        np.testing.assert_array_equal(lf, ls)
        np.testing.assert_allclose(df, ds, rtol=1e-12)

    def test_tkr_parity(self, rng):
        pytest.importorskip("krafty._kernels")
        a, b = rng.standard_normal((40, 3)), rng.standard_normal((40, 4))
        np.testing.assert_array_equal(get_kernels("cython").tkr(a, b), get_kernels("python").tkr(a, b))

    def test_forced_fallback(self):
        import subprocess
        import sys

        out = subprocess.run(
            [sys.executable, "-c", "import krafty; print(krafty.BACKEND)"],
            env={"KRAFTY_PURE_PYTHON": "1", "PATH": ""},
            capture_output=True,
            text=True,
            check=True,
        )
        assert out.stdout.strip() == "python"

    def test_unknown_backend(self):
        with pytest.raises(ValueError):
            get_kernels("fortran")
