"""Experiment drivers: ensembles, the Chung-Lu bias comparison and the
CPU-time sweep.

Sample ``i`` of a run seeded with ``seed`` always uses
``RngStream(seed, i)``, so results do not depend on how samples are
spread over workers. CPU time is measured around the sampler call only;
parameter fitting is never included.
"""
from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
import functools
import os
import time

import numpy as np

from . import samplers
from .inference import SolverOptions, solve_ubcm, solve_uecm
from .metrics import EnsembleReport, measure, degree_and_strength, triangle_count, z_score
from .model_core import InvalidArgumentError
from .samplers import RngStream
from .synth import holme_kim

MODELS = ("ubcm", "uecm", "chung-lu", "chung-lu-stub")
DEFAULT_ALPHAS = (0.01, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0)


def default_workers() -> int:
    try:
        return len(os.sched_getaffinity(0))
    except AttributeError:  # pragma: no cover
        return os.cpu_count() or 1


def _call_chunglu(target, rng):
    return samplers.sample_chunglu_mh(target, rng)


def _call_stub(target, rng):
    k, s = target
    return samplers.sample_chunglu_stub(k, s, rng)


def get_sampler(model: str, kind: str = "fast"):
    """Return ``f(target, rng) -> EdgeList`` for a model/sampler pair.

    ``target`` is the parameter object for ``ubcm``/``uecm``, the degree
    sequence for ``chung-lu`` and ``(k, s)`` for ``chung-lu-stub``.
    """
    if model in ("ubcm", "uecm"):
        if kind not in ("fast", "bruteforce"):
            raise InvalidArgumentError(f"unknown sampler {kind!r}")
        return samplers.SAMPLERS[model, kind]
    if kind != "fast":
        raise InvalidArgumentError(f"{model} has no {kind} sampler")
    if model == "chung-lu":
        return _call_chunglu
    if model == "chung-lu-stub":
        return _call_stub
    raise InvalidArgumentError(f"unknown model {model!r}")


def timed_sample(model, kind, target, seed, stream):
    fn = get_sampler(model, kind)
    t0 = time.process_time()
    edges = fn(target, RngStream(seed, stream))
    return edges, time.process_time() - t0


def _ensemble_member(model, kind, target, seed, k_ref, s_ref, alphas, keep, i):
    edges, cpu = timed_sample(model, kind, target, seed, i)
    rec = measure(edges, k_ref, alphas, sample_id=i, seed=seed,
                  wall_time=max(cpu, 1e-9), weighted=s_ref is not None)
    return rec, (edges if keep else None)


def run_ensemble(model, kind, target, n_samples, seed, k_ref, s_ref=None,
                 alphas=(), workers=1, keep_edges=False):
    """Generate ``n_samples`` networks and measure each one.

    Returns ``(EnsembleReport, edges)``; ``edges`` is a list only when
    ``keep_edges`` is set.
    """
    if n_samples < 1:
        raise InvalidArgumentError("ensemble size must be >= 1")
    job = functools.partial(_ensemble_member, model, kind, target, seed,
                            k_ref, s_ref, tuple(alphas), keep_edges)
    if workers > 1 and n_samples > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(job, range(n_samples)))
    else:
        out = [job(i) for i in range(n_samples)]
    report = EnsembleReport([r for r, _ in out], tuple(alphas))
    edges = [e for _, e in out] if keep_edges else None
    return report, edges


def percentile_interval(x, level=0.95):
    lo = (1 - level) / 2 * 100
    return tuple(float(v) for v in np.percentile(x, [lo, 100 - lo]))


# ---------------------------------------------------------------------------
# Chung-Lu bias on a Holme-Kim network
# ---------------------------------------------------------------------------


@dataclass
class BiasResult:
    network: object
    degrees: np.ndarray
    params: object
    fit: object
    reports: dict
    observed_triangles: int
    alphas: tuple

    def summary(self) -> dict:
        out = {"observed_triangles": self.observed_triangles, "models": {}}
        for name, rep in self.reports.items():
            tri = rep.triangles()
            lo, hi = percentile_interval(tri)
            entry = {
                "triangles_mean": float(tri.mean()),
                "triangles_sd": float(tri.std(ddof=1)) if len(tri) > 1 else 0.0,
                "triangles_ci95": [lo, hi],
                "triangle_z": z_score(self.observed_triangles, tri),
                "richclub": [],
            }
            for a in self.alphas:
                d = rep.richclub(a)
                lo, hi = percentile_interval(d)
                entry["richclub"].append(
                    {"alpha": a, "mean": float(d.mean()), "ci95": [lo, hi]}
                )
            out["models"][name] = entry
        return out


def bias_experiment(n=5000, m=10, p_triad=0.1, n_samples=100, seed=0,
                    alphas=DEFAULT_ALPHAS, workers=1, opts=None):
    """Holme-Kim network, UBCM fit, then Chung-Lu-MH vs fast UBCM ensembles."""
    graph = holme_kim(n, m, p_triad, RngStream(seed, 1 << 32))
    k, _ = degree_and_strength(graph)
    params, fit = solve_ubcm(k, opts or SolverOptions())
    reports = {}
    reports["chung-lu"], _ = run_ensemble(
        "chung-lu", "fast", k, n_samples, seed, k, alphas=alphas, workers=workers)
    reports["ubcm"], _ = run_ensemble(
        "ubcm", "fast", params, n_samples, seed, k, alphas=alphas, workers=workers)
    return BiasResult(graph, k, params, fit, reports, triangle_count(graph), tuple(alphas))


# ---------------------------------------------------------------------------
# CPU-time sweep
# ---------------------------------------------------------------------------


def planted_uecm_targets(n, mean_degree, rng=None, betas=(0.5, 1.0, 2.0)):
    """Expected ``(k, s)`` of a UECM with planted parameters.

    Each node draws a propensity ``d ~ max(1, Poisson(mean_degree))`` and a
    ``beta`` from ``betas``; ``alpha`` is set Chung-Lu style from ``d`` and a
    common shift tuned by bisection so the mean expected degree equals
    ``mean_degree``. The targets are therefore always reachable with
    positive ``beta``, which raw ``(k, s)`` draws do not guarantee.
    """
    from .inference import _class_uecm

    gen = samplers.as_generator(rng)
    d = np.maximum(gen.poisson(mean_degree, n), 1).astype(np.float64)
    beta = gen.choice(np.asarray(betas, dtype=np.float64), n)
    rows, inv, counts = np.unique(np.column_stack([d, beta]), axis=0,
                                  return_inverse=True, return_counts=True)
    inv = inv.reshape(-1)
    cnt = counts.astype(np.float64)
    base = -np.log(rows[:, 0] / np.sqrt(n * mean_degree)) - rows[:, 1]

    def mean_k(shift):
        ek, _ = _class_uecm(base + shift, rows[:, 1], cnt)
        return float(ek @ cnt) / n

    lo, hi = -20.0, 20.0
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if mean_k(mid) > mean_degree:
            lo = mid
        else:
            hi = mid
    ek, es = _class_uecm(base + 0.5 * (lo + hi), rows[:, 1], cnt)
    return ek[inv], es[inv]


def er_like_instance(n, mean_degree, model, seed, opts=None):
    """Erdos-Renyi-like fitted instance.

    Binary: target degrees ``k ~ Poisson(mean_degree)`` capped at ``n - 2``.
    Weighted: planted targets from :func:`planted_uecm_targets`.
    Returns ``(k, s, params, fit_report)``.
    """
    stream = RngStream(seed, 1 << 33)
    opts = opts or SolverOptions()
    if model == "ubcm":
        gen = stream.generator()
        k = np.minimum(gen.poisson(mean_degree, n), n - 2).astype(np.float64)
        params, rep = solve_ubcm(k, opts)
        return k, None, params, rep
    k, s = planted_uecm_targets(n, mean_degree, stream)
    params, rep = solve_uecm(k, s, opts)
    return k, s, params, rep


BENCH_METHODS = {
    "ubcm": (("ubcm-fast", "ubcm", "fast"), ("ubcm-bruteforce", "ubcm", "bruteforce"),
             ("chung-lu-mh", "chung-lu", "fast")),
    "uecm": (("uecm-fast", "uecm", "fast"), ("uecm-bruteforce", "uecm", "bruteforce"),
             ("chung-lu-stub", "chung-lu-stub", "fast")),
}


def bench(model="ubcm", sizes=(1000, 10000), runs=40, mean_degree=10.0, seed=0,
          methods=None, bf_max_n=100_000, bf_runs=None, progress=None):
    """Time each sampler over a size sweep.

    Yields rows ``(method, n_nodes, n_edges, run_index, cpu_seconds, seed)``.
    Brute-force methods run only up to ``bf_max_n`` nodes and ``bf_runs``
    times (default ``runs``).
    """
    if model not in BENCH_METHODS:
        raise InvalidArgumentError(f"bench supports {sorted(BENCH_METHODS)}")
    table = BENCH_METHODS[model]
    if methods is not None:
        table = tuple(t for t in table if t[0] in methods)
    bf_runs = runs if bf_runs is None else bf_runs
    # compile kernels outside the timed region
    _, _, warm, _ = er_like_instance(50, 3.0, model, seed)
    kw = np.full(50, 3.0)
    warm_targets = {"ubcm": warm, "uecm": warm, "chung-lu": kw, "chung-lu-stub": (kw, 2 * kw)}
    for _, mdl, kind in table:
        get_sampler(mdl, kind)(warm_targets[mdl], RngStream(0))
    for n in sizes:
        k, s, params, rep = er_like_instance(n, mean_degree, model, seed)
        if not rep.converged:
            raise InvalidArgumentError(f"fit did not converge for n={n} (residual {rep.residual:.2e})")
        for name, mdl, kind in table:
            if kind == "bruteforce" and n > bf_max_n:
                continue
            target = {"ubcm": params, "uecm": params, "chung-lu": k,
                      "chung-lu-stub": (k, s if s is not None else k)}[mdl]
            reps = bf_runs if kind == "bruteforce" else runs
            for r in range(reps):
                edges, cpu = timed_sample(mdl, kind, target, seed, r)
                row = (name, n, len(edges), r, cpu, seed)
                if progress:
                    progress(row)
                yield row
