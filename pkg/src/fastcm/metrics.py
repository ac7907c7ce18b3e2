"""Network statistics for comparing sampled ensembles with a reference."""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from numba import njit

from .model_core import EdgeList, InvalidArgumentError


def log_degree_mse(k_ref, k_sampled) -> float:
    """``mean((log(k_ref + 1) - log(k_sampled + 1))**2)``, natural log."""
    k_ref = np.asarray(k_ref, dtype=np.float64)
    k_sampled = np.asarray(k_sampled, dtype=np.float64)
    if k_ref.shape != k_sampled.shape:
        raise InvalidArgumentError("sequences differ in length")
    return float(np.mean((np.log1p(k_ref) - np.log1p(k_sampled)) ** 2))


def degree_and_strength(edges: EdgeList):
    """Realised degree and strength of every node.

    For directed lists these are total (in + out) values.
    """
    n = edges.n_nodes
    k = np.bincount(edges.src, minlength=n) + np.bincount(edges.dst, minlength=n)
    s = (np.bincount(edges.src, weights=edges.weight, minlength=n)
         + np.bincount(edges.dst, weights=edges.weight, minlength=n))
    return k.astype(np.float64), s


def top_group(k_ref, alpha: float) -> np.ndarray:
    """Ids of the ``ceil(alpha * N)`` largest-degree nodes (ties: lower id)."""
    if not 0 < alpha <= 1:
        raise InvalidArgumentError("alpha must lie in (0, 1]")
    k_ref = np.asarray(k_ref, dtype=np.float64)
    size = math.ceil(alpha * k_ref.size - 1e-9)
    if size < 2:
        raise InvalidArgumentError("rich-club group needs at least 2 nodes")
    order = np.lexsort((np.arange(k_ref.size), -k_ref))
    return order[:size]


def rich_club_density(edges: EdgeList, k_ref, alpha: float) -> float:
    """Edge density inside the top-``alpha`` group of the reference degrees.

    The group is fixed by ``k_ref`` rather than by the sample, so every
    member of an ensemble is measured on the same node set.
    """
    group = top_group(k_ref, alpha)
    if np.asarray(k_ref).size != edges.n_nodes:
        raise InvalidArgumentError("k_ref does not match the edge list")
    member = np.zeros(edges.n_nodes, dtype=bool)
    member[group] = True
    inside = np.count_nonzero(member[edges.src] & member[edges.dst])
    g = group.size
    return inside / (g * (g - 1) / 2)


@njit(cache=True)
def _forward_triangles(indptr, indices):
    n = indptr.size - 1
    mark = np.full(n, -1, np.int64)
    total = 0
    for u in range(n):
        for e in range(indptr[u], indptr[u + 1]):
            mark[indices[e]] = u
        for e in range(indptr[u], indptr[u + 1]):
            v = indices[e]
            for f in range(indptr[v], indptr[v + 1]):
                if mark[indices[f]] == u:
                    total += 1
    return total


def triangle_count(edges: EdgeList) -> int:
    """Number of triangles, ignoring weights.

    Each edge is oriented from the lower-ranked endpoint (by degree, then
    id) to the higher one; every triangle is then found exactly once from
    its lowest-ranked node.
    """
    if edges.directed:
        raise InvalidArgumentError("triangle_count expects an undirected list")
    n = edges.n_nodes
    if len(edges) == 0:
        return 0
    deg = np.bincount(edges.src, minlength=n) + np.bincount(edges.dst, minlength=n)
    rank = np.empty(n, dtype=np.int64)
    rank[np.lexsort((np.arange(n), deg))] = np.arange(n)
    swap = rank[edges.src] > rank[edges.dst]
    lo = np.where(swap, edges.dst, edges.src)
    hi = np.where(swap, edges.src, edges.dst)
    order = np.argsort(lo, kind="stable")
    indices = hi[order]
    indptr = np.zeros(n + 1, dtype=np.int64)
    np.cumsum(np.bincount(lo, minlength=n), out=indptr[1:])
    return int(_forward_triangles(indptr, indices))


@dataclass
class SampleRecord:
    sample_id: int
    seed: int
    wall_time: float
    n_edges: int
    degrees: np.ndarray
    strengths: np.ndarray | None
    triangles: int
    richclub: dict[float, float] = field(default_factory=dict)


@dataclass
class EnsembleReport:
    """Per-sample statistics of an ensemble."""

    records: list[SampleRecord]
    alphas: tuple[float, ...] = ()

    def __len__(self):
        return len(self.records)

    def degree_matrix(self) -> np.ndarray:
        return np.vstack([r.degrees for r in self.records])

    def strength_matrix(self) -> np.ndarray:
        return np.vstack([r.strengths for r in self.records])

    def triangles(self) -> np.ndarray:
        return np.array([r.triangles for r in self.records], dtype=np.float64)

    def richclub(self, alpha: float) -> np.ndarray:
        return np.array([r.richclub[alpha] for r in self.records])


def measure(edges: EdgeList, k_ref, alphas=(), *, sample_id=0, seed=0,
            wall_time=0.0, weighted=None) -> SampleRecord:
    """Compute one :class:`SampleRecord`."""
    k, s = degree_and_strength(edges)
    weighted = edges.weighted if weighted is None else weighted
    rc = {a: rich_club_density(edges, k_ref, a) for a in alphas}
    return SampleRecord(
        sample_id=sample_id,
        seed=seed,
        wall_time=wall_time,
        n_edges=len(edges),
        degrees=k,
        strengths=s if weighted else None,
        triangles=triangle_count(edges),
        richclub=rc,
    )


def z_score(observed: float, ensemble) -> float:
    """``(observed - mean) / std`` over an ensemble (ddof=1)."""
    ensemble = np.asarray(ensemble, dtype=np.float64)
    sd = ensemble.std(ddof=1)
    if sd == 0:
        return math.inf if observed > ensemble.mean() else (
            -math.inf if observed < ensemble.mean() else 0.0)
    return float((observed - ensemble.mean()) / sd)
