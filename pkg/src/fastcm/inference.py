"""Maximum-likelihood fitting of UBCM / UECM multipliers.

Nodes with identical targets share one unknown ("classes"), zero-degree
nodes are pinned at ``alpha = +inf`` and left out of the system. Two
solvers work on the class system:

* ``fixed-point``: the multiplicative update ``x <- x * k / E[k]`` written
  in log space, ``alpha += d * log(E[k] / k)`` (same for ``beta`` with
  strengths), with the damping ``d`` halved whenever the residual grows.
  Cost per sweep is O(U^2) time and O(U) memory.
* ``newton``: Newton steps on the negative log-likelihood, which is convex
  in ``(alpha, beta)``, with a backtracking line search. Up to
  ``DENSE_LIMIT`` classes the Hessian is factorised densely (with a
  Levenberg shift if needed); beyond that the step comes from conjugate
  gradients on Hessian-vector products, so memory stays O(U).

``auto`` means Newton, continuing with fixed-point sweeps if a line search
ever stalls.
"""
from __future__ import annotations

from dataclasses import dataclass, asdict
import math
import time

import numpy as np
from numba import njit
from scipy import linalg
from scipy.sparse import linalg as sparse_linalg

from .model_core import (
    InvalidArgumentError,
    ParamsUBCM,
    ParamsUECM,
    _nb_ratio,
    _nb_ubcm_p,
    _nb_uecm_ew,
    _nb_uecm_p,
    degree_sequence,
    strength_sequence,
)

DENSE_LIMIT = 1500
BETA_FLOOR = 1e-12
# beta for nodes whose strength equals their degree (unit weights only);
# exp(-2 * 50) is far below any residual tolerance
BETA_UNIT = 50.0


@dataclass
class SolverOptions:
    max_iterations: int = 10000
    tolerance: float = 1e-8
    damping: float = 1.0
    method: str = "auto"

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InvalidArgumentError("tolerance must be > 0")
        if self.max_iterations < 1:
            raise InvalidArgumentError("max_iterations must be >= 1")
        if not 0 < self.damping <= 1:
            raise InvalidArgumentError("damping must lie in (0, 1]")
        if self.method not in ("auto", "newton", "fixed-point"):
            raise InvalidArgumentError(f"unknown solver method {self.method!r}")


@dataclass
class FitReport:
    iterations: int
    residual: float
    converged: bool
    wall_time: float
    method: str = ""
    n_classes: int = 0

    def to_dict(self, timing=True):
        d = asdict(self)
        if not timing:
            d.pop("wall_time")
        return d


# ---------------------------------------------------------------------------
# Node-level expectations (O(N^2) reference path)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _ubcm_expected_degrees(a):
    n = a.size
    out = np.zeros(n)
    for i in range(n):
        for j in range(i + 1, n):
            p = _nb_ubcm_p(a[i], a[j])
            out[i] += p
            out[j] += p
    return out


@njit(cache=True)
def _uecm_expectations(a, b):
    n = a.size
    k = np.zeros(n)
    s = np.zeros(n)
    for i in range(n):
        for j in range(i + 1, n):
            p = _nb_uecm_p(a[i], a[j], b[i], b[j])
            w = _nb_uecm_ew(a[i], a[j], b[i], b[j])
            k[i] += p
            k[j] += p
            s[i] += w
            s[j] += w
    return k, s


def expected_degrees(params) -> np.ndarray:
    """Sum of connection probabilities per node, by direct summation."""
    if isinstance(params, ParamsUECM):
        return _uecm_expectations(params.alpha, params.beta)[0]
    if isinstance(params, ParamsUBCM):
        return _ubcm_expected_degrees(params.alpha)
    raise InvalidArgumentError(f"unsupported parameter type {type(params)!r}")


def expected_strengths(params: ParamsUECM) -> np.ndarray:
    """Sum of expected pair weights per node (UECM only)."""
    return _uecm_expectations(params.alpha, params.beta)[1]


# ---------------------------------------------------------------------------
# Class-level expectations used by the fixed-point sweep
# ---------------------------------------------------------------------------


@njit(cache=True)
def _class_ubcm(a, n):
    u = a.size
    e = np.zeros(u)
    for c in range(u):
        acc = 0.0
        for d in range(u):
            w = n[d] - 1.0 if c == d else n[d]
            if w > 0:
                acc += w * _nb_ubcm_p(a[c], a[d])
        e[c] = acc
    return e


@njit(cache=True)
def _class_uecm(a, b, n):
    u = a.size
    ek = np.zeros(u)
    es = np.zeros(u)
    for c in range(u):
        acc_k = 0.0
        acc_s = 0.0
        for d in range(u):
            w = n[d] - 1.0 if c == d else n[d]
            if w > 0:
                acc_k += w * _nb_uecm_p(a[c], a[d], b[c], b[d])
                acc_s += w * _nb_uecm_ew(a[c], a[d], b[c], b[d])
        ek[c] = acc_k
        es[c] = acc_s
    return ek, es


# ---------------------------------------------------------------------------
# The class system
# ---------------------------------------------------------------------------


class _System:
    """Deduplicated constraint system for one fit."""

    def __init__(self, k, s=None):
        self.weighted = s is not None
        rows = k[:, None] if s is None else np.column_stack([k, s])
        uniq, inv, counts = np.unique(rows, axis=0, return_inverse=True, return_counts=True)
        self.inverse = inv.reshape(-1)
        self.k = uniq[:, 0].copy()
        self.s = uniq[:, 1].copy() if self.weighted else None
        self.n = counts.astype(np.float64)
        if self.weighted:
            self.unit = self.s <= self.k
        else:
            self.unit = np.zeros(self.k.size, dtype=bool)

    @property
    def size(self):
        return self.k.size

    # -- packing of (alpha, free beta) into one vector -----------------------

    def pack(self, a, b=None):
        if not self.weighted:
            return a.copy()
        return np.concatenate([a, b[~self.unit]])

    def unpack(self, z):
        u = self.size
        a = z[:u]
        if not self.weighted:
            return a, None
        b = np.full(u, BETA_UNIT)
        b[~self.unit] = z[u:]
        return a, b

    # -- expectations / residuals ------------------------------------------

    def expectations(self, a, b=None):
        if self.weighted:
            return _class_uecm(a, b, self.n)
        return _class_ubcm(a, self.n), None

    def residual(self, a, b=None):
        ek, es = self.expectations(a, b)
        r = np.abs(ek - self.k) / np.maximum(self.k, 1.0)
        if self.weighted:
            rs = np.abs(es - self.s) / np.maximum(self.s, 1.0)
            r = np.maximum(r, np.where(self.unit, 0.0, rs))
        return float(r.max()) if r.size else 0.0

    # -- convex objective and its derivatives ------------------------------

    def _args(self, z):
        a, b = self.unpack(z)
        if b is None:
            b = np.zeros_like(a)
        return a, b

    def objective(self, z):
        a, b = self._args(z)
        s = self.s if self.weighted else self.k
        return _nll(a, b, self.n, self.k, s, self.unit, self.weighted)

    def gradient(self, z):
        a, b = self._args(z)
        s = self.s if self.weighted else self.k
        g_a, g_b = _nll_grad(a, b, self.n, self.k, s, self.weighted)
        if not self.weighted:
            return g_a
        return np.concatenate([g_a, g_b[~self.unit]])

    def hessian(self, z):
        """Dense Hessian of the negative log-likelihood."""
        a, b = self._args(z)
        h11, h12, h22 = _nll_hess_blocks(a, b, self.n, self.weighted)
        if not self.weighted:
            return h11
        free = ~self.unit
        return np.block([
            [h11, h12[:, free]],
            [h12[:, free].T, h22[np.ix_(free, free)]],
        ])

    def hess_operator(self, z):
        """Matrix-free Hessian as a ``LinearOperator`` plus its diagonal."""
        a, b = self._args(z)
        u = self.size
        free = ~self.unit
        nz = z.size

        def matvec(v):
            v = np.asarray(v, dtype=np.float64).reshape(-1)
            vb = np.zeros(u)
            if self.weighted:
                vb[free] = v[u:]
            ha, hb = _nll_hvp(a, b, self.n, self.weighted, v[:u].copy(), vb)
            if not self.weighted:
                return ha
            return np.concatenate([ha, hb[free]])

        da, db = _nll_hess_diag(a, b, self.n, self.weighted)
        diag = da if not self.weighted else np.concatenate([da, db[free]])
        return sparse_linalg.LinearOperator((nz, nz), matvec=matvec), diag

    def feasible(self, z):
        if not np.all(np.isfinite(z)):
            return False
        if self.weighted:
            return bool(np.all(z[self.size:] >= BETA_FLOOR))
        return True


# ---------------------------------------------------------------------------
# Negative log-likelihood kernels over classes. Pair (c, d) carries
# multiplicity n_c n_d (c != d) or n_c (n_c - 1) (c == d), counted as
# ordered pairs, hence the factor 1/2 in the objective.
# ---------------------------------------------------------------------------


@njit(cache=True, inline="always")
def _pair_mult(n, c, d):
    if c == d:
        return n[c] * (n[c] - 1.0)
    return n[c] * n[d]


@njit(cache=True, inline="always")
def _softplus(x):
    if x > 0.0:
        return x + math.log1p(math.exp(-x))
    return math.log1p(math.exp(x))


@njit(cache=True, inline="always")
def _pair_stats(ac, ad, bc, bd, weighted):
    # p, E[w], Var(edge), Cov(edge, w), Var(w)
    if not weighted:
        p = _nb_ubcm_p(ac, ad)
        return p, 0.0, p * (1.0 - p), 0.0, 0.0
    bb = bc + bd
    c = -math.expm1(-bb)
    p = _nb_ratio(ac + ad + bb, c)
    ew = p / c
    return p, ew, p * (1.0 - p), ew * (1.0 - p), p * (2.0 - c) / (c * c) - ew * ew


@njit(cache=True)
def _nll(a, b, n, k, s, unit, weighted):
    u = a.size
    lin = 0.0
    for c in range(u):
        lin += n[c] * k[c] * a[c]
        if weighted and not unit[c]:
            lin += n[c] * s[c] * b[c]
    pair = 0.0
    for c in range(u):
        for d in range(u):
            m = _pair_mult(n, c, d)
            if m <= 0.0:
                continue
            x = -(a[c] + a[d])
            if weighted:
                bb = b[c] + b[d]
                x = x - bb - math.log(-math.expm1(-bb))
            pair += m * _softplus(x)
    return lin + 0.5 * pair


@njit(cache=True)
def _nll_grad(a, b, n, k, s, weighted):
    u = a.size
    g_a = np.empty(u)
    g_b = np.zeros(u)
    for c in range(u):
        ek = 0.0
        es = 0.0
        for d in range(u):
            w = n[d] - 1.0 if c == d else n[d]
            if w <= 0.0:
                continue
            p, ew, _, _, _ = _pair_stats(a[c], a[d], b[c], b[d], weighted)
            ek += w * p
            es += w * ew
        g_a[c] = n[c] * (k[c] - ek)
        if weighted:
            g_b[c] = n[c] * (s[c] - es)
    return g_a, g_b


@njit(cache=True)
def _nll_hess_blocks(a, b, n, weighted):
    u = a.size
    h11 = np.zeros((u, u))
    h12 = np.zeros((u, u))
    h22 = np.zeros((u, u))
    for c in range(u):
        for d in range(u):
            m = _pair_mult(n, c, d)
            if m <= 0.0:
                continue
            _, _, v11, v12, v22 = _pair_stats(a[c], a[d], b[c], b[d], weighted)
            h11[c, d] += m * v11
            h11[c, c] += m * v11
            h12[c, d] += m * v12
            h12[c, c] += m * v12
            h22[c, d] += m * v22
            h22[c, c] += m * v22
    return h11, h12, h22


@njit(cache=True)
def _nll_hvp(a, b, n, weighted, va, vb):
    u = a.size
    ha = np.zeros(u)
    hb = np.zeros(u)
    for c in range(u):
        for d in range(u):
            m = _pair_mult(n, c, d)
            if m <= 0.0:
                continue
            _, _, v11, v12, v22 = _pair_stats(a[c], a[d], b[c], b[d], weighted)
            ya = va[c] + va[d]
            yb = vb[c] + vb[d]
            ha[c] += m * (v11 * ya + v12 * yb)
            hb[c] += m * (v12 * ya + v22 * yb)
    return ha, hb


@njit(cache=True)
def _nll_hess_diag(a, b, n, weighted):
    u = a.size
    da = np.zeros(u)
    db = np.zeros(u)
    for c in range(u):
        for d in range(u):
            m = _pair_mult(n, c, d)
            if m <= 0.0:
                continue
            _, _, v11, _, v22 = _pair_stats(a[c], a[d], b[c], b[d], weighted)
            f = 2.0 if c == d else 1.0
            da[c] += f * m * v11
            db[c] += f * m * v22
    return da, db


def _dense_direction(system, z, grad):
    hess = system.hessian(z)
    d = np.diag(hess).copy()
    d[d <= 0] = 1.0
    shift = 0.0
    for _ in range(60):
        try:
            cf = linalg.cho_factor(hess + shift * np.diag(d), check_finite=False)
            step = -linalg.cho_solve(cf, grad, check_finite=False)
            if np.all(np.isfinite(step)):
                return step
        except linalg.LinAlgError:
            pass
        shift = 1e-10 if shift == 0.0 else shift * 10.0
    return -grad / d


def _cg_direction(system, z, grad):
    op, diag = system.hess_operator(z)
    diag = np.where(diag > 0, diag, 1.0)
    precond = sparse_linalg.LinearOperator(op.shape, matvec=lambda v: v / diag)
    # inexact Newton: forcing term shrinks with the gradient
    rtol = min(0.5, math.sqrt(np.abs(grad / diag).max()))
    step, _ = sparse_linalg.cg(op, -grad, rtol=rtol, maxiter=500, M=precond)
    if not np.all(np.isfinite(step)) or grad @ step >= 0:
        return -grad / diag
    return step


def _newton(system, z, opts, iterations, direction):
    a, b = system.unpack(z)
    res = system.residual(a, b)
    f = system.objective(z)
    while res > opts.tolerance and iterations < opts.max_iterations:
        grad = system.gradient(z)
        step = direction(system, z, grad)
        slope = float(grad @ step)
        gnorm = np.abs(grad).max()
        t = 1.0
        accepted = False
        for _ in range(60):
            z_new = z + t * step
            if system.feasible(z_new):
                f_new = system.objective(z_new)
                if np.isfinite(f_new) and f_new <= f + 1e-4 * t * slope:
                    accepted = True
                    break
                # near the optimum f is flat to rounding; use the gradient
                # as merit instead
                if np.isfinite(f_new) and f_new <= f + 1e-12 * abs(f):
                    if np.abs(system.gradient(z_new)).max() < gnorm:
                        accepted = True
                        break
            t *= 0.5
        iterations += 1
        if not accepted:
            break
        z, f = z_new, f_new
        a, b = system.unpack(z)
        res = system.residual(a, b)
    return z, res, iterations


def _fixed_point(system, z, opts, iterations, limit):
    a, b = system.unpack(z)
    a = a.copy()
    b = None if b is None else b.copy()
    damping = opts.damping
    ek, es = system.expectations(a, b)
    res = system.residual(a, b)
    free = ~system.unit
    while res > opts.tolerance and iterations < limit:
        with np.errstate(divide="ignore"):
            a_new = a + damping * np.log(ek / system.k)
        b_new = None
        if system.weighted:
            b_new = b.copy()
            with np.errstate(divide="ignore"):
                step_b = np.log(es[free] / system.s[free])
            b_new[free] = np.maximum(b[free] + damping * step_b, BETA_FLOOR)
        iterations += 1
        if not (np.all(np.isfinite(a_new)) and (b_new is None or np.all(np.isfinite(b_new)))):
            damping = max(damping * 0.5, 1e-4)
            continue
        ek_new, es_new = system.expectations(a_new, b_new)
        a_chk = ek_new
        res_new = float(np.max(np.abs(a_chk - system.k) / np.maximum(system.k, 1.0)))
        if system.weighted:
            rs = np.abs(es_new - system.s) / np.maximum(system.s, 1.0)
            res_new = max(res_new, float(np.max(np.where(free, rs, 0.0))))
        if not np.isfinite(res_new) or res_new > res:
            damping = max(damping * 0.5, 1e-4)
            if not np.isfinite(res_new):
                continue
        else:
            damping = min(opts.damping, damping * 1.1)
        a, b, ek, es, res = a_new, b_new, ek_new, es_new, res_new
    return system.pack(a, b), res, iterations


def _solve(system, z0, opts):
    t0 = time.perf_counter()
    method = opts.method
    if method == "auto":
        method = "newton"
    z, it = z0, 0
    if method == "newton":
        direction = _dense_direction if system.size <= DENSE_LIMIT else _cg_direction
        z, res, it = _newton(system, z, opts, it, direction)
        if res > opts.tolerance:
            z, res, it = _fixed_point(system, z, opts, it, opts.max_iterations)
    else:
        z, res, it = _fixed_point(system, z, opts, it, opts.max_iterations)
    report = FitReport(
        iterations=it,
        residual=res,
        converged=bool(res <= opts.tolerance),
        wall_time=time.perf_counter() - t0,
        method=method,
        n_classes=system.size,
    )
    return z, report


def _check_degrees(k):
    k = degree_sequence(k)
    if np.any(k >= k.size - 1):
        raise InvalidArgumentError("every expected degree must be below N - 1")
    return k


def _class_start(system, values):
    # one representative node per class
    first = np.zeros(system.size, dtype=np.int64)
    first[system.inverse[::-1]] = np.arange(system.inverse.size)[::-1]
    return np.asarray(values, dtype=np.float64)[first]


def solve_ubcm(k, opts: SolverOptions | None = None, init: ParamsUBCM | None = None):
    """Fit ``alpha`` so that expected degrees match ``k``.

    Returns ``(ParamsUBCM, FitReport)``. Non-convergence is reported with
    ``converged=False``, never raised. ``init`` overrides the default
    Chung-Lu style starting point.
    """
    opts = opts or SolverOptions()
    k = _check_degrees(k)
    active = k > 0
    system = _System(k[active])
    z0 = -np.log(system.k / math.sqrt(k.sum()))
    if init is not None:
        z0 = _class_start(system, init.alpha[active])
    z, report = _solve(system, z0, opts)
    alpha = np.full(k.size, np.inf)
    alpha[active] = z[system.inverse]
    return ParamsUBCM(alpha), report


def solve_uecm(k, s, opts: SolverOptions | None = None, init: ParamsUECM | None = None):
    """Fit ``(alpha, beta)`` to expected degrees ``k`` and strengths ``s``.

    Nodes with ``s_i == k_i`` can only carry unit weights; their ``beta`` is
    pinned at a large constant and their strength equation drops out.
    """
    opts = opts or SolverOptions()
    k = _check_degrees(k)
    s = strength_sequence(s, k)
    if np.any((k == 0) & (s > 0)):
        raise InvalidArgumentError("positive strength on a zero-degree node")
    active = k > 0
    system = _System(k[active], s[active])
    a0 = -np.log(system.k / math.sqrt(k.sum()))
    b0 = np.log(system.s / (system.s - system.k + 1e-6))
    b0 = np.where(system.unit, BETA_UNIT, np.maximum(b0, BETA_FLOOR))
    # pinned nodes only see alpha + beta; start that sum where it belongs
    a0 = np.where(system.unit, a0 - BETA_UNIT, a0)
    if init is not None:
        a0 = _class_start(system, init.alpha[active])
        b0 = np.where(system.unit, BETA_UNIT, _class_start(system, init.beta[active]))
    z, report = _solve(system, system.pack(a0, b0), opts)
    a, b = system.unpack(z)
    alpha = np.full(k.size, np.inf)
    alpha[active] = a[system.inverse]
    beta = np.full(k.size, float(b.max()))
    beta[active] = b[system.inverse]
    return ParamsUECM(alpha, beta), report
