"""Synthetic inputs: Holme-Kim growth and common-neighbour weights."""
from __future__ import annotations

import numpy as np
from scipy import sparse

from .model_core import EdgeList, InvalidArgumentError
from .samplers import as_generator


def holme_kim(n: int, m: int, p_triad: float, rng=None) -> EdgeList:
    """Grow a Holme-Kim network.

    Starts from a complete graph on ``m`` nodes. Each new node adds ``m``
    edges: the first by preferential attachment, each later one by triad
    formation with probability ``p_triad`` (link to a random neighbour of
    the last preferentially attached target) and by preferential attachment
    otherwise. Triad steps with no eligible neighbour fall back to
    preferential attachment; repeated targets are redrawn.

    Preferential attachment picks a uniform endpoint of a uniform edge,
    which is exactly degree-proportional.
    """
    if not (1 <= m < n):
        raise InvalidArgumentError("holme_kim needs 1 <= m < n")
    if not 0 <= p_triad <= 1:
        raise InvalidArgumentError("p_triad must lie in [0, 1]")
    gen = as_generator(rng)
    adj = [set() for _ in range(n)]
    ends = []
    src, dst = [], []

    def link(u, v):
        adj[u].add(v)
        adj[v].add(u)
        ends.extend((u, v))
        src.append(min(u, v))
        dst.append(max(u, v))

    for u in range(m):
        for v in range(u + 1, m):
            link(u, v)

    for v in range(m, n):
        def preferential():
            while True:
                if ends:
                    t = ends[int(gen.integers(len(ends)))]
                else:
                    t = int(gen.integers(v))
                if t != v and t not in adj[v]:
                    return t

        anchor = preferential()
        link(v, anchor)
        for _ in range(m - 1):
            target = None
            if gen.random() < p_triad:
                pool = [w for w in adj[anchor] if w != v and w not in adj[v]]
                if pool:
                    pool.sort()
                    target = pool[int(gen.integers(len(pool)))]
            if target is None:
                target = preferential()
                anchor = target
            link(v, target)
    return EdgeList(n, np.array(src), np.array(dst)).check()


def common_neighbor_weights(edges: EdgeList) -> EdgeList:
    """Weight every edge by ``1 + |N(i) & N(j)|``; topology is unchanged."""
    if edges.weighted:
        raise InvalidArgumentError("expects an unweighted edge list")
    if edges.directed:
        raise InvalidArgumentError("expects an undirected edge list")
    n = edges.n_nodes
    ones = np.ones(len(edges), dtype=np.int64)
    adj = sparse.coo_matrix((ones, (edges.src, edges.dst)), shape=(n, n)).tocsr()
    adj = adj + adj.T
    common = np.asarray(adj[edges.src].multiply(adj[edges.dst]).sum(axis=1)).reshape(-1)
    return EdgeList(
        n, edges.src, edges.dst, 1 + common.astype(np.int64),
        weighted=True, labels=edges.labels,
    )
