import numpy as np
import pytest
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from fastcm.metrics import degree_and_strength, triangle_count
from fastcm.model_core import EdgeList, InvalidArgumentError
from fastcm.samplers import RngStream
from fastcm.synth import common_neighbor_weights, holme_kim


def _avg_clustering(e):
    n = e.n_nodes
    adj = coo_matrix((np.ones(len(e)), (e.src, e.dst)), shape=(n, n)).tocsr()
    adj = adj + adj.T
    tri = np.asarray((adj @ adj).multiply(adj).sum(axis=1)).ravel() / 2
    k = np.asarray(adj.sum(axis=1)).ravel()
    with np.errstate(invalid="ignore", divide="ignore"):
        c = np.where(k > 1, 2 * tri / (k * (k - 1)), 0.0)
    return c.mean()


class TestHolmeKim:
    def test_edge_count_exact(self):
        g = holme_kim(5000, 10, 0.1, RngStream(0))
        assert len(g) == 10 * 9 // 2 + (5000 - 10) * 10 == 49945

    def test_simple_and_connected(self):
        g = holme_kim(800, 3, 0.5, RngStream(1))
        g.check()
        adj = coo_matrix((np.ones(len(g)), (g.src, g.dst)), shape=(800, 800))
        assert connected_components(adj, directed=False)[0] == 1

    def test_deterministic(self):
        assert holme_kim(300, 4, 0.3, RngStream(2)) == holme_kim(300, 4, 0.3, RngStream(2))

    def test_heavy_tail_without_triads(self):
        g = holme_kim(3000, 3, 0.0, RngStream(3))
        k, _ = degree_and_strength(g)
        assert k.min() >= 3
        assert k.max() > 10 * np.median(k)

    def test_triads_raise_clustering(self):
        lo = [_avg_clustering(holme_kim(500, 4, 0.0, RngStream(s))) for s in range(20)]
        hi = [_avg_clustering(holme_kim(500, 4, 1.0, RngStream(s))) for s in range(20)]
        assert np.mean(hi) > np.mean(lo)
        assert all(h > l for h, l in zip(hi, lo))

    @pytest.mark.parametrize("args", [(5, 5, 0.1), (5, 0, 0.1), (10, 2, 1.5)])
    def test_rejects(self, args):
        with pytest.raises(InvalidArgumentError):
            holme_kim(*args)


class TestCommonNeighbourWeights:
    def test_triangle(self):
        e = common_neighbor_weights(EdgeList(3, [0, 0, 1], [1, 2, 2]))
        np.testing.assert_array_equal(e.weight, 2)

    def test_star(self):
        e = common_neighbor_weights(EdgeList(5, [0] * 4, [1, 2, 3, 4]))
        np.testing.assert_array_equal(e.weight, 1)

    def test_k4(self):
        i, j = np.triu_indices(4, 1)
        np.testing.assert_array_equal(common_neighbor_weights(EdgeList(4, i, j)).weight, 3)

    def test_topology_preserved(self):
        g = holme_kim(200, 3, 0.5, RngStream(4))
        w = common_neighbor_weights(g)
        assert w.weighted and np.all(w.weight >= 1)
        np.testing.assert_array_equal(w.src, g.src)
        np.testing.assert_array_equal(w.dst, g.dst)
        # each triangle contributes one common neighbour to each of its edges
        assert (w.weight - 1).sum() == 3 * triangle_count(g)

    def test_rejects_weighted(self):
        with pytest.raises(InvalidArgumentError):
            common_neighbor_weights(EdgeList(2, [0], [1], [2], weighted=True))
