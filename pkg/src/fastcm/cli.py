"""Command-line interface: ``fastcm {infer,sample,bench,metrics,demo-bias}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 non-convergence.
Every output directory or CSV gets a JSON sidecar holding the run
configuration and seed. Timings only appear in the bench CSV; everything
else is byte-for-byte reproducible for a fixed seed.
"""
from __future__ import annotations

import argparse
from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import asdict, dataclass, field
import functools
import json
import logging
from pathlib import Path
import sys

import numpy as np

from . import __version__
from .fileio import (
    read_edgelist, read_params, read_sequences, write_edgelist, write_labels,
    write_params,
)
from .harness import (
    BENCH_METHODS, DEFAULT_ALPHAS, bench, bias_experiment, default_workers,
    get_sampler,
)
from .inference import SolverOptions, solve_ubcm, solve_uecm
from .metrics import degree_and_strength, log_degree_mse, measure
from .model_core import ContractViolationError, InvalidArgumentError, ParamsUECM
from .samplers import RngStream

log = logging.getLogger("fastcm")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NOCONV = 0, 1, 2, 3


class UsageError(Exception):
    pass


class NotConverged(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


@dataclass
class RunConfig:
    """Everything needed to rerun a command."""

    command: str
    model: str = "ubcm"
    sampler: str = "fast"
    n_samples: int = 1
    seed: int = 0
    inputs: dict = field(default_factory=dict)
    output: str = ""
    alphas: tuple = DEFAULT_ALPHAS
    solver: dict = field(default_factory=dict)
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_samples < 1:
            raise UsageError("ensemble size must be >= 1")
        for a in self.alphas:
            if not 0 < a <= 1:
                raise UsageError(f"rich-club level {a} outside (0, 1]")

    def to_dict(self):
        d = asdict(self)
        d["alphas"] = list(self.alphas)
        d["version"] = __version__
        return d


def _dump_json(obj, path):
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _solver_options(args) -> SolverOptions:
    return SolverOptions(max_iterations=args.max_iter, tolerance=args.tol,
                         damping=args.damping, method=args.method)


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _int_list(text):
    try:
        return tuple(int(float(x)) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


# ---------------------------------------------------------------------------
# shared input handling
# ---------------------------------------------------------------------------


def _load_targets(args, model):
    """Return ``(k, s_or_None, labels)`` from --network or --sequences."""
    if getattr(args, "network", None):
        edges = read_edgelist(args.network)
        k, s = degree_and_strength(edges)
        weighted = model in ("uecm", "chung-lu-stub")
        return k, (s if weighted else None), edges.labels
    if getattr(args, "sequences", None):
        k, s = read_sequences(args.sequences)
        if model in ("uecm", "chung-lu-stub") and s is None:
            if model == "uecm":
                raise InvalidArgumentError(f"{args.sequences}: uecm needs a strength column")
            s = k
        return k, (s if model in ("uecm", "chung-lu-stub") else None), None
    raise UsageError("one of --network or --sequences is required")


def _fit(model, k, s, opts):
    if model == "ubcm":
        return solve_ubcm(k, opts)
    if model == "uecm":
        return solve_uecm(k, s, opts)
    raise UsageError(f"cannot fit model {model!r}")


def _write_fit(outdir, params, report, config, labels):
    write_params(params, outdir / "params.csv")
    if labels is not None:
        write_labels(labels, outdir / "labels.csv")
    _dump_json({"config": config.to_dict(), "fit": report.to_dict(timing=False)},
               outdir / "fit.json")
    log.info("fit: %d iterations, residual %.3e, %.3f s wall",
             report.iterations, report.residual, report.wall_time)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_infer(args):
    config = RunConfig("infer", model=args.model, seed=0, output=str(args.output),
                       inputs={"network": args.network, "sequences": args.sequences},
                       solver=asdict(_solver_options(args)))
    k, s, labels = _load_targets(args, args.model)
    params, report = _fit(args.model, k, s, _solver_options(args))
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    _write_fit(outdir, params, report, config, labels)
    if not report.converged:
        raise NotConverged(f"solver stopped at residual {report.residual:.3e}")
    return EXIT_OK


def _sample_job(model, kind, target, seed, outdir, width, i):
    # runs inside the worker that owns the output file
    edges = get_sampler(model, kind)(target, RngStream(seed, i))
    name = f"sample_{i:0{width}d}.tsv"
    write_edgelist(edges, outdir / name)
    return {"sample_id": i, "stream": i, "file": name, "n_edges": len(edges)}


def cmd_sample(args):
    opts = _solver_options(args)
    config = RunConfig("sample", model=args.model, sampler=args.sampler,
                       n_samples=args.samples, seed=args.seed, output=str(args.output),
                       inputs={"params": args.params, "network": args.network,
                               "sequences": args.sequences},
                       solver=asdict(opts))
    outdir = Path(args.output)
    labels = None
    target = None
    if args.model in ("ubcm", "uecm"):
        if args.params:
            target = read_params(args.params)
            if isinstance(target, ParamsUECM) != (args.model == "uecm"):
                raise InvalidArgumentError(f"{args.params}: parameters do not match --model {args.model}")
        else:
            k, s, labels = _load_targets(args, args.model)
            target, report = _fit(args.model, k, s, opts)
            outdir.mkdir(parents=True, exist_ok=True)
            _write_fit(outdir, target, report, config, labels)
            if not report.converged:
                raise NotConverged(f"solver stopped at residual {report.residual:.3e}")
    else:
        if args.sampler != "fast":
            raise UsageError(f"{args.model} has only a fast sampler")
        k, s, labels = _load_targets(args, args.model)
        target = k if args.model == "chung-lu" else (k, s)
        if labels is not None:
            outdir.mkdir(parents=True, exist_ok=True)
            write_labels(labels, outdir / "labels.csv")
    outdir.mkdir(parents=True, exist_ok=True)
    width = max(5, len(str(args.samples - 1)))
    jobs = range(args.samples)
    workers = min(args.workers, args.samples)
    job = functools.partial(_sample_job, args.model, args.sampler, target,
                            args.seed, outdir, width)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            entries = list(pool.map(job, jobs))
    else:
        entries = [job(i) for i in jobs]
    _dump_json({"config": config.to_dict(), "samples": entries}, outdir / "manifest.json")
    return EXIT_OK


def cmd_bench(args):
    sizes = args.sizes
    config = RunConfig("bench", model=args.model, seed=args.seed, output=str(args.output),
                       extra={"sizes": list(sizes), "runs": args.runs,
                              "bf_runs": args.bf_runs, "bf_max_n": args.bf_max_n,
                              "mean_degree": args.mean_degree,
                              "methods": list(args.methods) if args.methods else None})
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "n_nodes", "n_edges", "run_index", "cpu_seconds", "seed"])
        for row in bench(args.model, sizes, runs=args.runs, mean_degree=args.mean_degree,
                         seed=args.seed, methods=args.methods, bf_max_n=args.bf_max_n,
                         bf_runs=args.bf_runs):
            method, n, m, r, cpu, seed = row
            writer.writerow([method, n, m, r, f"{cpu:.9f}", seed])
            fh.flush()
            log.info("%s n=%d run=%d: %.4f s", method, n, r, cpu)
    _dump_json(config.to_dict(), out.with_suffix(".json"))
    return EXIT_OK


def _metrics_rows(records, k_ref, s_ref, alphas):
    for rec in records:
        mse_k = log_degree_mse(k_ref, rec.degrees)
        head = [rec.sample_id, rec.seed, rec.n_edges, rec.triangles, repr(mse_k)]
        if s_ref is not None:
            head.append(repr(log_degree_mse(s_ref, rec.strengths)))
        for a in alphas:
            yield head + [repr(a), repr(float(rec.richclub[a]))]


def _write_metrics(path, records, k_ref, s_ref, alphas):
    header = ["sample_id", "seed", "n_edges", "triangles", "log_degree_mse"]
    if s_ref is not None:
        header.append("log_strength_mse")
    header += ["richclub_alpha", "richclub_density"]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(_metrics_rows(records, k_ref, s_ref, alphas))


def cmd_metrics(args):
    config = RunConfig("metrics", output=str(args.output), alphas=args.alphas,
                       inputs={"reference": args.reference, "manifest": args.manifest,
                               "samples": list(args.samples)},
                       extra={"weighted": args.weighted})
    ref = read_edgelist(args.reference)
    k_ref, s_ref = degree_and_strength(ref)
    files = []
    seed = 0
    if args.manifest:
        man = json.loads(Path(args.manifest).read_text())
        seed = int(man["config"]["seed"])
        base = Path(args.manifest).parent
        files = [(e["sample_id"], base / e["file"]) for e in man["samples"]]
    files += [(len(files) + i, Path(p)) for i, p in enumerate(args.samples)]
    if not files:
        raise UsageError("no samples given (use --manifest or list edge files)")
    ensemble = []
    for sid, path in files:
        edges = read_edgelist(path)
        if edges.n_nodes != ref.n_nodes:
            raise InvalidArgumentError(f"{path}: {edges.n_nodes} nodes, reference has {ref.n_nodes}")
        ensemble.append((sid, edges))
    weighted = args.weighted
    if weighted is None:
        # strengths only make sense when both sides carry weights
        weighted = ref.weighted and all(e.weighted for _, e in ensemble)
    records = [measure(e, k_ref, args.alphas, sample_id=sid, seed=seed, weighted=weighted)
               for sid, e in ensemble]
    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    _write_metrics(out, records, k_ref, s_ref if weighted else None, args.alphas)
    if args.node_stats:
        deg = np.vstack([r.degrees for r in records])
        with open(args.node_stats, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["node", "target_degree", "mean_degree", "sd_degree"])
            sd = deg.std(axis=0, ddof=1) if len(records) > 1 else np.zeros(ref.n_nodes)
            for i in range(ref.n_nodes):
                writer.writerow([i, repr(float(k_ref[i])), repr(float(deg[:, i].mean())),
                                 repr(float(sd[i]))])
    _dump_json(config.to_dict(), out.with_suffix(".json"))
    return EXIT_OK


def cmd_demo_bias(args):
    opts = _solver_options(args)
    config = RunConfig("demo-bias", model="ubcm", n_samples=args.samples, seed=args.seed,
                       output=str(args.output), alphas=args.alphas, solver=asdict(opts),
                       extra={"n": args.n, "m": args.m, "p_triad": args.p})
    res = bias_experiment(args.n, args.m, args.p, args.samples, args.seed,
                          alphas=args.alphas, workers=args.workers, opts=opts)
    outdir = Path(args.output)
    outdir.mkdir(parents=True, exist_ok=True)
    write_edgelist(res.network, outdir / "network.tsv")
    _write_fit(outdir, res.params, res.fit, config, None)
    if not res.fit.converged:
        raise NotConverged(f"solver stopped at residual {res.fit.residual:.3e}")
    for name, rep in res.reports.items():
        _write_metrics(outdir / f"metrics_{name}.csv", rep.records, res.degrees, None, args.alphas)
    summary = res.summary()
    with open(outdir / "richclub.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "alpha", "mean", "ci_low", "ci_high"])
        for name, entry in summary["models"].items():
            for rc in entry["richclub"]:
                writer.writerow([name, repr(rc["alpha"]), repr(rc["mean"]),
                                 repr(rc["ci95"][0]), repr(rc["ci95"][1])])
    with open(outdir / "triangles.csv", "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "observed", "mean", "sd", "ci_low", "ci_high", "z"])
        for name, entry in summary["models"].items():
            writer.writerow([name, summary["observed_triangles"], repr(entry["triangles_mean"]),
                             repr(entry["triangles_sd"]), repr(entry["triangles_ci95"][0]),
                             repr(entry["triangles_ci95"][1]), repr(entry["triangle_z"])])
    _dump_json({"config": config.to_dict(), **summary}, outdir / "summary.json")
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def _add_solver(p):
    g = p.add_argument_group("solver")
    g.add_argument("--tol", type=float, default=1e-8, help="max relative residual")
    g.add_argument("--max-iter", type=int, default=10000)
    g.add_argument("--damping", type=float, default=1.0, help="fixed-point damping")
    g.add_argument("--method", choices=("auto", "newton", "fixed-point"), default="auto")


def _add_targets(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--network", help="edge-list file to take degrees/strengths from")
    src.add_argument("--sequences", help="CSV with node,degree[,strength]")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="fastcm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"fastcm {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    p = sub.add_parser("infer", help="fit model parameters to degrees/strengths")
    p.add_argument("--model", choices=("ubcm", "uecm"), default="ubcm")
    _add_targets(p)
    p.add_argument("-o", "--output", required=True, help="output directory")
    _add_solver(p)
    p.set_defaults(func=cmd_infer)

    p = sub.add_parser("sample", help="generate an ensemble of networks")
    p.add_argument("--model", choices=("ubcm", "uecm", "chung-lu", "chung-lu-stub"), default="ubcm")
    p.add_argument("--sampler", choices=("fast", "bruteforce"), default="fast")
    p.add_argument("--params", help="parameter file written by 'infer'")
    _add_targets(p)
    p.add_argument("-n", "--samples", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("-o", "--output", required=True, help="output directory")
    _add_solver(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("bench", help="CPU-time sweep of fast vs brute-force samplers")
    p.add_argument("--model", choices=tuple(BENCH_METHODS), default="ubcm")
    p.add_argument("--sizes", type=_int_list, default=(1000, 10000, 100000))
    p.add_argument("--runs", type=int, default=40)
    p.add_argument("--bf-runs", type=int, default=None,
                   help="runs per size for brute-force methods (default: --runs)")
    p.add_argument("--bf-max-n", type=int, default=100000,
                   help="skip brute-force methods above this size")
    p.add_argument("--mean-degree", type=float, default=10.0)
    p.add_argument("--methods", type=lambda t: tuple(t.split(",")), default=None)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", required=True, help="CSV path")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("metrics", help="ensemble statistics against a reference network")
    p.add_argument("--reference", required=True, help="reference edge list")
    p.add_argument("--manifest", help="manifest.json written by 'sample'")
    p.add_argument("samples", nargs="*", help="extra sample edge lists")
    p.add_argument("--alphas", type=_float_list, default=DEFAULT_ALPHAS)
    p.add_argument("--weighted", action=argparse.BooleanOptionalAction, default=None)
    p.add_argument("--node-stats", help="optional per-node degree CSV")
    p.add_argument("-o", "--output", required=True, help="CSV path")
    p.set_defaults(func=cmd_metrics)

    p = sub.add_parser("demo-bias", help="Holme-Kim network: Chung-Lu vs UBCM ensembles")
    p.add_argument("--n", type=int, default=5000)
    p.add_argument("--m", type=int, default=10)
    p.add_argument("--p", type=float, default=0.1, help="triad-formation probability")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alphas", type=_float_list, default=DEFAULT_ALPHAS)
    p.add_argument("--workers", type=int, default=default_workers())
    p.add_argument("-o", "--output", required=True, help="output directory")
    _add_solver(p)
    p.set_defaults(func=cmd_demo_bias)
    return parser


def _mark_partial(args, message):
    """Flag an output left incomplete by a failed run."""
    out = getattr(args, "output", None)
    if not out:
        return
    out = Path(out)
    if out.is_dir():
        target = out / "PARTIAL"
    elif out.exists():
        target = out.with_name(out.name + ".PARTIAL")
    else:
        return
    try:
        target.write_text(message + "\n")
    except OSError:
        pass


def main(argv=None) -> int:
    parser = build_parser()
    args = None
    try:
        args = parser.parse_args(argv)
        logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                            format="%(levelname)s %(name)s: %(message)s")
        samples = getattr(args, "samples", 1)
        if isinstance(samples, int) and samples < 1:
            raise UsageError("--samples must be >= 1")
        if getattr(args, "workers", 1) < 1:
            raise UsageError("--workers must be >= 1")
        return args.func(args)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NotConverged as exc:
        print(f"error: {exc}", file=sys.stderr)
        _mark_partial(args, f"not converged: {exc}")
        return EXIT_NOCONV
    except (InvalidArgumentError, ContractViolationError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        if args is not None:
            _mark_partial(args, f"failed: {exc}")
        return EXIT_DATA


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
