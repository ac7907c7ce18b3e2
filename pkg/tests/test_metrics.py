import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from fastcm.metrics import (
    EnsembleReport,
    degree_and_strength,
    log_degree_mse,
    measure,
    rich_club_density,
    top_group,
    triangle_count,
    z_score,
)
from fastcm.model_core import EdgeList, InvalidArgumentError


def _complete(n):
    i, j = np.triu_indices(n, 1)
    return EdgeList(n, i, j)


def _triangles_bruteforce(n, src, dst):
    adj = np.zeros((n, n), dtype=bool)
    adj[src, dst] = adj[dst, src] = True
    return sum(
        1 for a, b, c in itertools.combinations(range(n), 3)
        if adj[a, b] and adj[b, c] and adj[a, c]
    )


@st.composite
def graphs(draw):
    n = draw(st.integers(3, 30))
    pairs = list(itertools.combinations(range(n), 2))
    mask = draw(st.lists(st.booleans(), min_size=len(pairs), max_size=len(pairs)))
    chosen = [p for p, m in zip(pairs, mask) if m]
    src = np.array([p[0] for p in chosen], dtype=np.int64)
    dst = np.array([p[1] for p in chosen], dtype=np.int64)
    return n, src, dst


class TestLogDegreeMse:
    def test_examples(self):
        assert log_degree_mse([1, 2, 3], [1, 2, 3]) == 0.0
        assert log_degree_mse([0], [math.e - 1]) == pytest.approx(1.0)

    def test_length_mismatch(self):
        with pytest.raises(InvalidArgumentError):
            log_degree_mse([1, 2], [1])

    @given(st.lists(st.integers(0, 50), min_size=1, max_size=20),
           st.lists(st.integers(0, 50), min_size=1, max_size=20))
    def test_nonnegative(self, a, b):
        m = min(len(a), len(b))
        v = log_degree_mse(a[:m], b[:m])
        assert v >= 0
        assert (v == 0) == (a[:m] == b[:m])


class TestRichClub:
    def test_complete_and_empty(self):
        k = np.full(10, 9.0)
        for a in (0.2, 0.5, 1.0):
            assert rich_club_density(_complete(10), k, a) == 1.0
            assert rich_club_density(EdgeList(10, [], []), k, a) == 0.0

    def test_star(self):
        star = EdgeList(6, [0] * 5, [1, 2, 3, 4, 5])
        k, _ = degree_and_strength(star)
        # top ceil(alpha * 6) = 2: hub and leaf 1 (lowest id among ties)
        np.testing.assert_array_equal(top_group(k, 2 / 6), [0, 1])
        assert rich_club_density(star, k, 2 / 6) == 1.0

    def test_group_too_small(self):
        with pytest.raises(InvalidArgumentError):
            rich_club_density(_complete(10), np.ones(10), 0.1)
        with pytest.raises(InvalidArgumentError):
            top_group(np.ones(10), 0.0)

    def test_relabel_invariance(self):
        gen = np.random.default_rng(3)
        n = 20
        i, j = np.triu_indices(n, 1)
        keep = gen.random(i.size) < 0.3
        e = EdgeList(n, i[keep], j[keep])
        k = gen.permutation(n).astype(float)  # distinct degrees, no ties
        perm = gen.permutation(n)
        inv = np.argsort(perm)
        e2 = EdgeList(n, np.minimum(inv[e.src], inv[e.dst]), np.maximum(inv[e.src], inv[e.dst]))
        k2 = k[perm]
        for a in (0.1, 0.25, 0.5):
            assert rich_club_density(e, k, a) == rich_club_density(e2, k2, a)


class TestTriangles:
    def test_examples(self):
        assert triangle_count(_complete(3)) == 1
        assert triangle_count(_complete(4)) == 4
        assert triangle_count(EdgeList(5, [], [])) == 0

    def test_weights_ignored(self):
        e = EdgeList(3, [0, 0, 1], [1, 2, 2], [5, 1, 2], weighted=True)
        assert triangle_count(e) == 1

    @settings(max_examples=60, deadline=None)
    @given(graphs())
    def test_matches_enumeration(self, g):
        n, src, dst = g
        assert triangle_count(EdgeList(n, src, dst)) == _triangles_bruteforce(n, src, dst)

    def test_random_n10(self):
        gen = np.random.default_rng(10)
        i, j = np.triu_indices(10, 1)
        keep = gen.random(i.size) < 0.5
        assert triangle_count(EdgeList(10, i[keep], j[keep])) == \
            _triangles_bruteforce(10, i[keep], j[keep])


class TestDegreeStrength:
    def test_single_edge(self):
        k, s = degree_and_strength(EdgeList(2, [0], [1], [3], weighted=True))
        np.testing.assert_array_equal(k, [1, 1])
        np.testing.assert_array_equal(s, [3, 3])

    def test_empty(self):
        k, s = degree_and_strength(EdgeList(4, [], []))
        assert not k.any() and not s.any()


class TestEnsemble:
    def test_measure_and_report(self):
        ref = np.array([3.0, 2.0, 2.0, 1.0])
        e1 = EdgeList(4, [0, 0, 1], [1, 2, 2])
        e2 = EdgeList(4, [0, 0, 0], [1, 2, 3])
        recs = [measure(e, ref, (0.5, 1.0), sample_id=i, seed=7, wall_time=0.1)
                for i, e in enumerate((e1, e2))]
        rep = EnsembleReport(recs, (0.5, 1.0))
        assert len(rep) == 2
        np.testing.assert_array_equal(rep.triangles(), [1, 0])
        np.testing.assert_array_equal(rep.richclub(0.5), [1.0, 1.0])
        assert rep.degree_matrix().shape == (2, 4)

    def test_z_score(self):
        assert z_score(3.0, [1.0, 2.0, 3.0]) == pytest.approx(1.0)
        assert z_score(2.0, [1.0, 1.0]) == math.inf
