"""Network samplers.

Reference samplers visit every pair. The fast samplers sort nodes so that
connection probabilities decrease along the candidate list, then jump
between candidates with geometric skips drawn from an upper-bound proposal
``q`` and accept each reached candidate with probability ``p / q``. Every
candidate, the first one included, is reached through a skip, so each pair
ends up included with probability exactly ``p``.

All samplers take ``rng`` as an :class:`RngStream`, an integer seed, a
``numpy.random.Generator`` or ``None``.
"""
from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from numba import njit

from .model_core import (
    ContractViolationError,
    EdgeList,
    InvalidArgumentError,
    ParamsUBCM,
    ParamsUECM,
    _nb_ubcm_p,
    _nb_uecm_p,
    _nb_uecm_ub,
    degree_sequence,
)

# p/q may exceed 1 by rounding only
_RATIO_SLACK = 1e-12
_MAX_SKIP = 1 << 62


@dataclass(frozen=True)
class RngStream:
    """A reproducible random stream identified by ``(seed, stream)``."""

    seed: int
    stream: int = 0

    def generator(self) -> np.random.Generator:
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream),))
        return np.random.Generator(np.random.PCG64(ss))


def as_generator(rng) -> np.random.Generator:
    if isinstance(rng, np.random.Generator):
        return rng
    if isinstance(rng, RngStream):
        return rng.generator()
    if rng is None:
        return np.random.default_rng()
    if isinstance(rng, (int, np.integer)):
        return RngStream(int(rng)).generator()
    raise InvalidArgumentError(f"cannot build a generator from {rng!r}")


# ---------------------------------------------------------------------------
# Small numba helpers
# ---------------------------------------------------------------------------


@njit(cache=True)
def _nb_geometric(q, rng):
    if q >= 1.0:
        return 1
    u = 1.0 - rng.random()  # (0, 1]
    # compare as float: floor() yields int64 under numba and would wrap
    x = math.log(u) / math.log1p(-q)
    if x >= _MAX_SKIP:
        return _MAX_SKIP
    return 1 + int(math.floor(x))


@njit(cache=True)
def _nb_weight(b, rng):
    # 1 + Geometric on {0, 1, ...} with ratio exp(-b)
    u = 1.0 - rng.random()
    x = math.log(u) / -b
    if x >= _MAX_SKIP:
        return _MAX_SKIP
    return 1 + int(math.floor(x))


@njit(cache=True)
def _grow(buf, size):
    out = np.empty(max(2 * buf.size, 16), dtype=buf.dtype)
    out[:size] = buf[:size]
    return out


# ---------------------------------------------------------------------------
# Kernels. All work on positions in the sorted order; the Python wrappers
# map them back to node ids.
# ---------------------------------------------------------------------------


@njit(cache=True)
def _ubcm_fast_kernel(a, rng):
    n = a.size
    cap = max(16, 2 * n)
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    m = 0
    for i in range(n - 1):
        ai = a[i]
        q = _nb_ubcm_p(ai, ai)
        j = i
        while True:
            if q <= 0.0:
                break
            j += _nb_geometric(q, rng)
            if j >= n:
                break
            p = _nb_ubcm_p(ai, a[j])
            if p > q * (1.0 + _RATIO_SLACK):
                raise ContractViolationError("acceptance ratio above 1")
            if rng.random() * q < p:
                if m == src.size:
                    src = _grow(src, m)
                    dst = _grow(dst, m)
                src[m] = i
                dst[m] = j
                m += 1
            q = p
    return src[:m], dst[:m]


@njit(cache=True)
def _ubcm_bf_exact(a, rng):
    n = a.size
    cap = max(16, 2 * n)
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    m = 0
    for i in range(n - 1):
        ai = a[i]
        for j in range(i + 1, n):
            if rng.random() < _nb_ubcm_p(ai, a[j]):
                if m == src.size:
                    src = _grow(src, m)
                    dst = _grow(dst, m)
                src[m] = i
                dst[m] = j
                m += 1
    return src[:m], dst[:m]


@njit(cache=True)
def _suffix_min(x):
    n = x.size
    out = np.empty(n + 1, np.float64)
    out[n] = np.inf
    for t in range(n - 1, -1, -1):
        out[t] = min(x[t], out[t + 1])
    return out


@njit(cache=True)
def _uecm_fast_kernel(a, b, suffix, rng):
    # suffix[t] = min(b[t:]) bounds the beta of every remaining candidate
    n = a.size
    cap = max(16, 2 * n)
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    wts = np.empty(cap, np.int64)
    m = 0
    for i in range(n - 1):
        ai = a[i]
        bi = b[i]
        beta_min = bi + suffix[i + 1]
        q = _nb_uecm_ub(ai, ai, bi, bi, beta_min)
        j = i
        while True:
            if q <= 0.0:
                break
            j += _nb_geometric(q, rng)
            if j >= n:
                break
            p = _nb_uecm_p(ai, a[j], bi, b[j])
            if p > q * (1.0 + _RATIO_SLACK):
                raise ContractViolationError("acceptance ratio above 1")
            if rng.random() * q < p:
                if m == src.size:
                    src = _grow(src, m)
                    dst = _grow(dst, m)
                    wts = _grow(wts, m)
                src[m] = i
                dst[m] = j
                wts[m] = _nb_weight(bi + b[j], rng)
                m += 1
            q = _nb_uecm_ub(ai, a[j], bi, b[j], beta_min)
    return src[:m], dst[:m], wts[:m]


@njit(cache=True)
def _uecm_bf_exact(a, b, rng):
    n = a.size
    cap = max(16, 2 * n)
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    wts = np.empty(cap, np.int64)
    m = 0
    for i in range(n - 1):
        ai = a[i]
        bi = b[i]
        for j in range(i + 1, n):
            if rng.random() < _nb_uecm_p(ai, a[j], bi, b[j]):
                if m == src.size:
                    src = _grow(src, m)
                    dst = _grow(dst, m)
                    wts = _grow(wts, m)
                src[m] = i
                dst[m] = j
                wts[m] = _nb_weight(bi + b[j], rng)
                m += 1
    return src[:m], dst[:m], wts[:m]


# Brute force with per-node factors x = exp(-alpha), z = exp(-alpha-beta):
# one product per pair instead of an exp. Used when every alpha (+ beta)
# exceeds -_BF_SAFE, so no product of two factors can overflow.
_BF_SAFE = 300.0


@njit(cache=True)
def _ubcm_bf_kernel(a, rng):
    n = a.size
    x = np.exp(-a)
    cap = max(16, 2 * n)
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    m = 0
    for i in range(n - 1):
        xi = x[i]
        for j in range(i + 1, n):
            e = xi * x[j]
            # u < e / (1 + e)
            if rng.random() * (1.0 + e) < e:
                if m == src.size:
                    src = _grow(src, m)
                    dst = _grow(dst, m)
                src[m] = i
                dst[m] = j
                m += 1
    return src[:m], dst[:m]


@njit(cache=True)
def _uecm_bf_kernel(a, b, rng):
    n = a.size
    z = np.exp(-(a + b))
    y = np.exp(-b)
    cap = max(16, 2 * n)
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    wts = np.empty(cap, np.int64)
    m = 0
    for i in range(n - 1):
        zi = z[i]
        yi = y[i]
        bi = b[i]
        for j in range(i + 1, n):
            e = zi * z[j]
            r = yi * y[j]
            c = 1.0 - r if r < 0.5 else -math.expm1(-(bi + b[j]))
            if rng.random() * (c + e) < e:
                if m == src.size:
                    src = _grow(src, m)
                    dst = _grow(dst, m)
                    wts = _grow(wts, m)
                src[m] = i
                dst[m] = j
                wts[m] = _nb_weight(bi + b[j], rng)
                m += 1
    return src[:m], dst[:m], wts[:m]


@njit(cache=True)
def _chunglu_mh_kernel(k, two_m, rng):
    # k sorted by decreasing degree
    n = k.size
    cap = max(16, 2 * n)
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    m = 0
    for i in range(n - 1):
        ki = k[i]
        q = min(1.0, ki * ki / two_m)
        j = i
        while True:
            if q <= 0.0:
                break
            j += _nb_geometric(q, rng)
            if j >= n:
                break
            p = min(1.0, ki * k[j] / two_m)
            if rng.random() * q < p:
                if m == src.size:
                    src = _grow(src, m)
                    dst = _grow(dst, m)
                src[m] = i
                dst[m] = j
                m += 1
            q = p
    return src[:m], dst[:m]


@njit(cache=True)
def _bip_ubcm_fast_kernel(a_plus, a_minus, excl, rng):
    n_plus = a_plus.size
    n_minus = a_minus.size
    cap = max(16, 2 * (n_plus + n_minus))
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    m = 0
    for i in range(n_plus):
        ai = a_plus[i]
        q = _nb_ubcm_p(ai, a_minus[0])
        j = -1
        while True:
            if q <= 0.0:
                break
            j += _nb_geometric(q, rng)
            if j >= n_minus:
                break
            p = _nb_ubcm_p(ai, a_minus[j])
            if p > q * (1.0 + _RATIO_SLACK):
                raise ContractViolationError("acceptance ratio above 1")
            if j != excl[i] and rng.random() * q < p:
                if m == src.size:
                    src = _grow(src, m)
                    dst = _grow(dst, m)
                src[m] = i
                dst[m] = j
                m += 1
            q = p
    return src[:m], dst[:m]


@njit(cache=True)
def _bip_uecm_fast_kernel(a_plus, b_plus, a_minus, b_minus, excl, rng):
    n_plus = a_plus.size
    n_minus = a_minus.size
    b_floor = b_minus.min()
    cap = max(16, 2 * (n_plus + n_minus))
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    wts = np.empty(cap, np.int64)
    m = 0
    for i in range(n_plus):
        ai = a_plus[i]
        bi = b_plus[i]
        beta_min = bi + b_floor
        q = _nb_uecm_ub(ai, a_minus[0], bi, b_minus[0], beta_min)
        j = -1
        while True:
            if q <= 0.0:
                break
            j += _nb_geometric(q, rng)
            if j >= n_minus:
                break
            p = _nb_uecm_p(ai, a_minus[j], bi, b_minus[j])
            if p > q * (1.0 + _RATIO_SLACK):
                raise ContractViolationError("acceptance ratio above 1")
            if j != excl[i] and rng.random() * q < p:
                if m == src.size:
                    src = _grow(src, m)
                    dst = _grow(dst, m)
                    wts = _grow(wts, m)
                src[m] = i
                dst[m] = j
                wts[m] = _nb_weight(bi + b_minus[j], rng)
                m += 1
            q = _nb_uecm_ub(ai, a_minus[j], bi, b_minus[j], beta_min)
    return src[:m], dst[:m], wts[:m]


@njit(cache=True)
def _bip_ubcm_bf_kernel(a_plus, a_minus, skip_diag, rng):
    cap = 16
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    m = 0
    for i in range(a_plus.size):
        for j in range(a_minus.size):
            if skip_diag and i == j:
                continue
            if rng.random() < _nb_ubcm_p(a_plus[i], a_minus[j]):
                if m == src.size:
                    src = _grow(src, m)
                    dst = _grow(dst, m)
                src[m] = i
                dst[m] = j
                m += 1
    return src[:m], dst[:m]


@njit(cache=True)
def _bip_uecm_bf_kernel(a_plus, b_plus, a_minus, b_minus, skip_diag, rng):
    cap = 16
    src = np.empty(cap, np.int64)
    dst = np.empty(cap, np.int64)
    wts = np.empty(cap, np.int64)
    m = 0
    for i in range(a_plus.size):
        for j in range(a_minus.size):
            if skip_diag and i == j:
                continue
            if rng.random() < _nb_uecm_p(a_plus[i], a_minus[j], b_plus[i], b_minus[j]):
                if m == src.size:
                    src = _grow(src, m)
                    dst = _grow(dst, m)
                    wts = _grow(wts, m)
                src[m] = i
                dst[m] = j
                wts[m] = _nb_weight(b_plus[i] + b_minus[j], rng)
                m += 1
    return src[:m], dst[:m], wts[:m]


# ---------------------------------------------------------------------------
# Public API
# ---------------------------------------------------------------------------


def sorted_order(key) -> np.ndarray:
    """Permutation sorting ``key`` ascending, ties broken by node id."""
    return np.argsort(np.asarray(key, dtype=np.float64), kind="stable")


def beta_suffix_min(beta_sorted) -> np.ndarray:
    """``m[t] = min(beta_sorted[t:])``, with ``m[N] = inf``."""
    return _suffix_min(np.ascontiguousarray(beta_sorted, dtype=np.float64))


def geometric_skip(q: float, rng=None) -> int:
    """Draw ``L >= 1`` with ``P(L) = q (1-q)**(L-1)``."""
    if not (q > 0.0) or q > 1.0:
        raise InvalidArgumentError("geometric_skip needs 0 < q <= 1")
    return int(_nb_geometric(float(q), as_generator(rng)))


def _undirected(n, order, i, j, w=None, weighted=False):
    u = order[i]
    v = order[j]
    return EdgeList(
        n, np.minimum(u, v), np.maximum(u, v), w, weighted=weighted
    )


def _kind(params):
    if isinstance(params, ParamsUECM):
        return "uecm"
    if isinstance(params, ParamsUBCM):
        return "ubcm"
    raise InvalidArgumentError(f"unsupported parameter type {type(params)!r}")


def sample_ubcm_bruteforce(params: ParamsUBCM, rng=None) -> EdgeList:
    """Test every pair independently; O(N^2)."""
    a = params.alpha
    kernel = _ubcm_bf_kernel if a.min() > -_BF_SAFE else _ubcm_bf_exact
    src, dst = kernel(a, as_generator(rng))
    return EdgeList(params.n_nodes, src, dst)


def sample_ubcm_fast(params: ParamsUBCM, rng=None) -> EdgeList:
    """Skip-and-reject UBCM sampler, linear in the number of edges."""
    gen = as_generator(rng)
    order = sorted_order(params.alpha)
    i, j = _ubcm_fast_kernel(params.alpha[order], gen)
    return _undirected(params.n_nodes, order, i, j)


def sample_uecm_bruteforce(params: ParamsUECM, rng=None) -> EdgeList:
    """Test every pair, then draw a geometric weight for present edges."""
    a, b = params.alpha, params.beta
    kernel = _uecm_bf_kernel if (a + b).min() > -_BF_SAFE else _uecm_bf_exact
    src, dst, w = kernel(a, b, as_generator(rng))
    return EdgeList(params.n_nodes, src, dst, w, weighted=True)


def sample_uecm_fast(params: ParamsUECM, rng=None) -> EdgeList:
    """Skip-and-reject UECM sampler.

    Nodes are scanned by increasing ``alpha + beta``. For focal position
    ``i`` the proposal uses ``beta_min = beta[i] + min(beta[i+1:])``, which
    lower-bounds ``beta_i + beta_j`` for every remaining candidate.
    """
    gen = as_generator(rng)
    order = sorted_order(params.alpha + params.beta)
    a, b = params.alpha[order], params.beta[order]
    i, j, w = _uecm_fast_kernel(a, b, _suffix_min(b), gen)
    return _undirected(params.n_nodes, order, i, j, w, weighted=True)


def sample_chunglu_mh(k, rng=None) -> EdgeList:
    """Chung-Lu sampler with ``min(1, k_i k_j / 2M)`` as edge probability.

    This is the clamped form practitioners use; it oversamples hub pairs.
    """
    k = degree_sequence(k)
    gen = as_generator(rng)
    order = np.lexsort((np.arange(k.size), -k))
    i, j = _chunglu_mh_kernel(k[order], float(k.sum()), gen)
    return _undirected(k.size, order, i, j)


def sample_chunglu_stub(k, s=None, rng=None) -> EdgeList:
    """Weighted Chung-Lu by stub matching.

    Draws ``C ~ Poisson(sum(s) / 2)`` endpoint pairs with each endpoint
    chosen proportionally to strength, redraws self-pairs, and aggregates
    repeated pairs into integer weights. ``s`` defaults to ``k``.
    """
    s = np.asarray(k if s is None else s, dtype=np.float64).reshape(-1)
    if not np.all(np.isfinite(s)) or np.any(s < 0):
        raise InvalidArgumentError("strengths must be finite and non-negative")
    total = s.sum()
    if not total > 0:
        raise InvalidArgumentError("stub matching needs sum(s) > 0")
    if np.count_nonzero(s) < 2:
        raise InvalidArgumentError("stub matching needs two nodes with s > 0")
    gen = as_generator(rng)
    n = s.size
    c = int(gen.poisson(total / 2.0))
    prob = s / total
    u = gen.choice(n, size=c, p=prob)
    v = gen.choice(n, size=c, p=prob)
    loops = np.flatnonzero(u == v)
    while loops.size:
        u[loops] = gen.choice(n, size=loops.size, p=prob)
        v[loops] = gen.choice(n, size=loops.size, p=prob)
        loops = loops[u[loops] == v[loops]]
    key = np.minimum(u, v).astype(np.int64) * n + np.maximum(u, v)
    key, counts = np.unique(key, return_counts=True)
    return EdgeList(n, key // n, key % n, counts, weighted=True)


def _bipartite_positions(params_plus, params_minus, excl_nodes=None):
    kind = _kind(params_plus)
    if _kind(params_minus) != kind:
        raise InvalidArgumentError("both sides must use the same model")
    op = sorted_order(params_plus.sort_key())
    om = sorted_order(params_minus.sort_key())
    if excl_nodes is None:
        excl = np.full(op.size, -1, dtype=np.int64)
    else:
        pos_minus = np.empty(om.size, dtype=np.int64)
        pos_minus[om] = np.arange(om.size)
        excl = pos_minus[op]
    return kind, op, om, excl


def _bipartite_kernels(kind, params_plus, params_minus, op, om, excl, gen):
    if kind == "ubcm":
        i, j = _bip_ubcm_fast_kernel(
            params_plus.alpha[op], params_minus.alpha[om], excl, gen
        )
        return op[i], om[j], None
    i, j, w = _bip_uecm_fast_kernel(
        params_plus.alpha[op], params_plus.beta[op],
        params_minus.alpha[om], params_minus.beta[om], excl, gen,
    )
    return op[i], om[j], w


def sample_bipartite_fast(params_plus, params_minus, rng=None) -> EdgeList:
    """Fast sampler between a ``+`` and a ``-`` node set.

    Both sides are sorted by their key (``alpha`` or ``alpha + beta``);
    every ``+`` node scans the sorted ``-`` list. In the UECM case the
    bound uses ``beta_plus[i] + min(beta_minus)``.
    """
    kind, op, om, excl = _bipartite_positions(params_plus, params_minus)
    u, v, w = _bipartite_kernels(
        kind, params_plus, params_minus, op, om, excl, as_generator(rng)
    )
    n_plus, n_minus = params_plus.n_nodes, params_minus.n_nodes
    return EdgeList(
        n_plus + n_minus, u, v + n_plus, w,
        weighted=kind == "uecm", bipartite=(n_plus, n_minus),
    )


def sample_bipartite_bruteforce(params_plus, params_minus, rng=None) -> EdgeList:
    """Reference sampler testing every cross-set pair."""
    kind = _kind(params_plus)
    if _kind(params_minus) != kind:
        raise InvalidArgumentError("both sides must use the same model")
    gen = as_generator(rng)
    if kind == "ubcm":
        u, v = _bip_ubcm_bf_kernel(params_plus.alpha, params_minus.alpha, False, gen)
        w = None
    else:
        u, v, w = _bip_uecm_bf_kernel(
            params_plus.alpha, params_plus.beta,
            params_minus.alpha, params_minus.beta, False, gen,
        )
    n_plus, n_minus = params_plus.n_nodes, params_minus.n_nodes
    return EdgeList(
        n_plus + n_minus, u, v + n_plus, w,
        weighted=kind == "uecm", bipartite=(n_plus, n_minus),
    )


def _check_directed(params_out, params_in):
    if params_out.n_nodes != params_in.n_nodes:
        raise InvalidArgumentError("out and in parameters differ in length")


def sample_directed_fast(params_out, params_in, rng=None) -> EdgeList:
    """Directed sampler via the out/in bipartite representation.

    Arc ``i -> j`` is the edge between out-node ``i`` and in-node ``j``;
    the pair ``(out_i, in_i)`` is never accepted.
    """
    _check_directed(params_out, params_in)
    kind, op, om, excl = _bipartite_positions(params_out, params_in, excl_nodes=True)
    u, v, w = _bipartite_kernels(
        kind, params_out, params_in, op, om, excl, as_generator(rng)
    )
    return EdgeList(params_out.n_nodes, u, v, w, weighted=kind == "uecm", directed=True)


def sample_directed_bruteforce(params_out, params_in, rng=None) -> EdgeList:
    """Reference directed sampler over all ordered pairs ``i != j``."""
    _check_directed(params_out, params_in)
    kind = _kind(params_out)
    if _kind(params_in) != kind:
        raise InvalidArgumentError("both sides must use the same model")
    gen = as_generator(rng)
    if kind == "ubcm":
        u, v = _bip_ubcm_bf_kernel(params_out.alpha, params_in.alpha, True, gen)
        w = None
    else:
        u, v, w = _bip_uecm_bf_kernel(
            params_out.alpha, params_out.beta,
            params_in.alpha, params_in.beta, True, gen,
        )
    return EdgeList(params_out.n_nodes, u, v, w, weighted=kind == "uecm", directed=True)


SAMPLERS = {
    ("ubcm", "fast"): sample_ubcm_fast,
    ("ubcm", "bruteforce"): sample_ubcm_bruteforce,
    ("uecm", "fast"): sample_uecm_fast,
    ("uecm", "bruteforce"): sample_uecm_bruteforce,
}
