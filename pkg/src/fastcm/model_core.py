"""Probability kernels and parameter containers for the canonical
configuration models.

Two maximum-entropy models are covered:

* UBCM, the binary model, with per-node multipliers ``alpha`` and edge
  probability ``sigmoid(-alpha_i - alpha_j)``.
* UECM, the enhanced (integer-weighted) model, with per-node pairs
  ``(alpha, beta)``. An edge exists with probability

      exp(-t) / (1 - exp(-b) + exp(-t)),    t = a_i + a_j + b_i + b_j,
                                            b = b_i + b_j

  and, given it exists, its weight is geometric on ``w >= 1`` with ratio
  ``exp(-b)``.

The public functions are vectorised over numpy arrays and validate their
arguments. The ``_nb_*`` scalar kernels are the numba versions used by the
samplers and the solver; both families share the same branch-on-sign
evaluation so they never overflow.
"""
from __future__ import annotations

from dataclasses import dataclass, field
import math

import numpy as np
from numba import njit


class InvalidArgumentError(ValueError):
    """Raised when an input violates a documented precondition."""


class ContractViolationError(RuntimeError):
    """Raised when an internal invariant (e.g. ``p <= q``) is broken."""


# ---------------------------------------------------------------------------
# Parameter containers
# ---------------------------------------------------------------------------


def _as_vector(x, name):
    arr = np.array(x, dtype=np.float64, copy=True).reshape(-1)
    arr.setflags(write=False)
    if np.isnan(arr).any():
        raise InvalidArgumentError(f"{name} contains NaN")
    return arr


@dataclass(frozen=True)
class ParamsUBCM:
    """Per-node multipliers of the binary configuration model.

    ``+inf`` is accepted as the sentinel for nodes that can never connect
    (zero target degree); ``-inf`` and NaN are rejected.
    """

    alpha: np.ndarray

    def __post_init__(self):
        alpha = _as_vector(self.alpha, "alpha")
        if alpha.size < 2:
            raise InvalidArgumentError("ParamsUBCM needs at least 2 nodes")
        if np.isneginf(alpha).any():
            raise InvalidArgumentError("alpha must not be -inf")
        object.__setattr__(self, "alpha", alpha)

    @property
    def n_nodes(self) -> int:
        return self.alpha.size

    def sort_key(self) -> np.ndarray:
        return self.alpha


@dataclass(frozen=True)
class ParamsUECM:
    """Per-node ``(alpha, beta)`` multipliers of the enhanced model.

    Every ``beta`` must be strictly positive and finite.
    """

    alpha: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = _as_vector(self.alpha, "alpha")
        beta = _as_vector(self.beta, "beta")
        if alpha.size != beta.size:
            raise InvalidArgumentError("alpha and beta must have equal length")
        if alpha.size < 2:
            raise InvalidArgumentError("ParamsUECM needs at least 2 nodes")
        if np.isneginf(alpha).any():
            raise InvalidArgumentError("alpha must not be -inf")
        if not np.all(np.isfinite(beta)) or not np.all(beta > 0):
            raise InvalidArgumentError("beta entries must be finite and > 0")
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "beta", beta)

    @property
    def n_nodes(self) -> int:
        return self.alpha.size

    def sort_key(self) -> np.ndarray:
        return self.alpha + self.beta


def degree_sequence(k) -> np.ndarray:
    """Validate and return an expected-degree sequence as a float array."""
    k = np.asarray(k, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(k)):
        raise InvalidArgumentError("degree sequence must be finite")
    if np.any(k < 0):
        raise InvalidArgumentError("degree sequence must be non-negative")
    if np.count_nonzero(k > 0) < 2:
        raise InvalidArgumentError("need at least two positive degrees")
    return k


def strength_sequence(s, k=None) -> np.ndarray:
    """Validate a strength sequence, optionally against its degrees."""
    s = np.asarray(s, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(s)) or np.any(s < 0):
        raise InvalidArgumentError("strengths must be finite and non-negative")
    if k is not None:
        k = np.asarray(k, dtype=np.float64).reshape(-1)
        if k.shape != s.shape:
            raise InvalidArgumentError("degree/strength length mismatch")
        if np.any(s < k):
            raise InvalidArgumentError(
                "strength below degree: every edge weighs at least 1"
            )
    return s


# ---------------------------------------------------------------------------
# Edge lists
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class EdgeList:
    """A sampled or loaded network.

    Undirected lists keep ``src < dst``; directed lists store arcs as
    ``src -> dst``. Bipartite lists number the ``+`` set first, so
    ``bipartite=(n_plus, n_minus)`` and ``src < n_plus <= dst``.

    Construction only checks shapes. Call :meth:`check` to verify the
    simple-graph invariants (it costs a sort, so samplers skip it).
    """

    n_nodes: int
    src: np.ndarray
    dst: np.ndarray
    weight: np.ndarray | None = None
    weighted: bool = False
    directed: bool = False
    bipartite: tuple[int, int] | None = None
    labels: tuple[str, ...] | None = field(default=None)

    def __post_init__(self):
        src = np.ascontiguousarray(self.src, dtype=np.int64).reshape(-1)
        dst = np.ascontiguousarray(self.dst, dtype=np.int64).reshape(-1)
        if src.shape != dst.shape:
            raise InvalidArgumentError("src and dst differ in length")
        if self.weight is None:
            w = np.ones(src.size, dtype=np.int64)
        else:
            w = np.ascontiguousarray(self.weight, dtype=np.int64).reshape(-1)
            if w.shape != src.shape:
                raise InvalidArgumentError("weight length differs from src")
        object.__setattr__(self, "src", src)
        object.__setattr__(self, "dst", dst)
        object.__setattr__(self, "weight", w)
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        if self.labels is not None:
            object.__setattr__(self, "labels", tuple(self.labels))
            if len(self.labels) != self.n_nodes:
                raise InvalidArgumentError("labels must cover every node")

    def __len__(self):
        return self.src.size

    @property
    def n_edges(self) -> int:
        return self.src.size

    def check(self) -> "EdgeList":
        """Raise :class:`ContractViolationError` unless the list is simple."""
        n = self.n_nodes
        if self.src.size:
            if self.src.min() < 0 or self.dst.min() < 0:
                raise ContractViolationError("negative node id")
            if self.src.max() >= n or self.dst.max() >= n:
                raise ContractViolationError("node id out of range")
        if np.any(self.src == self.dst):
            raise ContractViolationError("self-loop present")
        if not self.directed and np.any(self.src > self.dst):
            raise ContractViolationError("undirected edge with src > dst")
        if np.any(self.weight < 1):
            raise ContractViolationError("weight below 1")
        key = self.src * n + self.dst
        if np.unique(key).size != key.size:
            raise ContractViolationError("duplicate pair")
        if self.bipartite is not None:
            n_plus, n_minus = self.bipartite
            if n_plus + n_minus != n:
                raise ContractViolationError("bipartite sizes do not sum to N")
            if np.any(self.src >= n_plus) or np.any(self.dst < n_plus):
                raise ContractViolationError("edge inside one bipartite side")
        return self

    def sorted(self) -> "EdgeList":
        """Return a copy with edges ordered by ``(src, dst)``."""
        order = np.lexsort((self.dst, self.src))
        return EdgeList(
            self.n_nodes,
            self.src[order],
            self.dst[order],
            self.weight[order],
            weighted=self.weighted,
            directed=self.directed,
            bipartite=self.bipartite,
            labels=self.labels,
        )

    def __eq__(self, other):
        if not isinstance(other, EdgeList):
            return NotImplemented
        if (
            self.n_nodes != other.n_nodes
            or self.weighted != other.weighted
            or self.directed != other.directed
            or self.bipartite != other.bipartite
            or len(self) != len(other)
        ):
            return False
        a, b = self.sorted(), other.sorted()
        same = (
            np.array_equal(a.src, b.src)
            and np.array_equal(a.dst, b.dst)
        )
        if self.weighted:
            same = same and np.array_equal(a.weight, b.weight)
        return bool(same)

    __hash__ = None


# ---------------------------------------------------------------------------
# Scalar numba kernels
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _nb_sigmoid_neg(t):
    # exp(-t) / (1 + exp(-t)) without overflow; t may be +-inf
    if t >= 0.0:
        e = math.exp(-t)
        return e / (1.0 + e)
    e = math.exp(t)
    return 1.0 / (1.0 + e)


@njit(cache=True, inline="always")
def _nb_ubcm_p(a_i, a_j):
    return _nb_sigmoid_neg(a_i + a_j)


@njit(cache=True, inline="always")
def _nb_ratio(t, c):
    # exp(-t) / (c + exp(-t)) for c in [0, 1]
    if t >= 0.0:
        e = math.exp(-t)
        return e / (c + e)
    e = math.exp(t)
    return 1.0 / (c * e + 1.0)


@njit(cache=True, inline="always")
def _nb_uecm_p(a_i, a_j, b_i, b_j):
    b = b_i + b_j
    return _nb_ratio(a_i + a_j + b, -math.expm1(-b))


@njit(cache=True, inline="always")
def _nb_uecm_ub(a_i, a_j, b_i, b_j, beta_min):
    return _nb_ratio(a_i + a_j + b_i + b_j, -math.expm1(-beta_min))


@njit(cache=True, inline="always")
def _nb_uecm_ew(a_i, a_j, b_i, b_j):
    b = b_i + b_j
    c = -math.expm1(-b)
    return _nb_ratio(a_i + a_j + b, c) / c


# ---------------------------------------------------------------------------
# Public vectorised kernels
# ---------------------------------------------------------------------------


def _ratio(t, c):
    t = np.asarray(t, dtype=np.float64)
    if np.isnan(t).any():
        raise InvalidArgumentError("non-finite parameter combination")
    e = np.exp(-np.abs(t))
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(t >= 0.0, e / (c + e), 1.0 / (c * e + 1.0))
    return out[()] if out.ndim == 0 else out


def chung_lu_rate(k_i, k_j, M):
    """Expected number of edges ``k_i k_j / 2M`` between two nodes.

    The value is a Poisson rate, not a probability; callers that need a
    probability clamp it themselves.
    """
    k_i, k_j, M = (np.asarray(v, dtype=np.float64) for v in (k_i, k_j, M))
    if not (np.all(np.isfinite(k_i)) and np.all(np.isfinite(k_j))
            and np.all(np.isfinite(M))):
        raise InvalidArgumentError("chung_lu_rate needs finite inputs")
    if np.any(M <= 0):
        raise InvalidArgumentError("M must be positive")
    if np.any(k_i < 0) or np.any(k_j < 0):
        raise InvalidArgumentError("degrees must be non-negative")
    out = k_i * k_j / (2.0 * M)
    return out[()] if out.ndim == 0 else out


def ubcm_edge_prob(alpha_i, alpha_j):
    """Connection probability of the binary model."""
    t = np.add(alpha_i, alpha_j, dtype=np.float64)
    return _ratio(t, 1.0)


def _beta_sum(beta_i, beta_j):
    b = np.add(beta_i, beta_j, dtype=np.float64)
    if np.isnan(b).any() or np.any(b <= 0):
        raise InvalidArgumentError("beta_i + beta_j must be > 0")
    return b


def uecm_edge_prob(alpha_i, alpha_j, beta_i, beta_j):
    """Probability that a pair is connected (any weight) in the UECM."""
    b = _beta_sum(beta_i, beta_j)
    t = np.add(alpha_i, alpha_j, dtype=np.float64) + b
    return _ratio(t, -np.expm1(-b))


def uecm_weight_pmf(w, beta_i, beta_j):
    """Conditional weight law ``r**(w-1) * (1-r)`` with ``r = exp(-b)``."""
    w = np.asarray(w)
    if np.any(w < 1) or not np.all(np.equal(np.mod(w, 1), 0)):
        raise InvalidArgumentError("weight must be an integer >= 1")
    b = _beta_sum(beta_i, beta_j)
    out = np.exp(-(w - 1) * b) * -np.expm1(-b)
    return out[()] if np.ndim(out) == 0 else out


def uecm_upper_bound_prob(alpha_i, alpha_j, beta_i, beta_j, beta_min):
    """Proposal probability that dominates :func:`uecm_edge_prob`.

    ``exp(-b)`` in the denominator is replaced by ``exp(-beta_min)``. The
    bound holds only when ``beta_min <= beta_i + beta_j``; anything else is
    a contract violation.
    """
    b = _beta_sum(beta_i, beta_j)
    beta_min = np.asarray(beta_min, dtype=np.float64)
    if np.isnan(beta_min).any() or np.any(beta_min <= 0):
        raise InvalidArgumentError("beta_min must be > 0")
    if np.any(beta_min > b):
        raise ContractViolationError("beta_min exceeds beta_i + beta_j")
    t = np.add(alpha_i, alpha_j, dtype=np.float64) + b
    return _ratio(t, -np.expm1(-beta_min))


def uecm_expected_weight(alpha_i, alpha_j, beta_i, beta_j):
    """Mean weight of a pair, counting absent edges as zero."""
    b = _beta_sum(beta_i, beta_j)
    c = -np.expm1(-b)
    t = np.add(alpha_i, alpha_j, dtype=np.float64) + b
    return _ratio(t, c) / c
