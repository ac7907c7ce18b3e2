"""Edge-list, sequence and parameter files."""
from __future__ import annotations

import csv
import logging
import math
import re
from pathlib import Path

import numpy as np

from .model_core import EdgeList, InvalidArgumentError, ParamsUBCM, ParamsUECM

log = logging.getLogger(__name__)

_SPLIT = re.compile(r"[,\s]+")
_HEADER = re.compile(r"#\s*(\w+)=(\S+)")


class ParseError(InvalidArgumentError):
    """Malformed input file; the message carries the line number."""


def _parse_weight(tok, path, lineno):
    try:
        w = float(tok)
    except ValueError:
        raise ParseError(f"{path}:{lineno}: bad weight {tok!r}") from None
    if not math.isfinite(w):
        raise ParseError(f"{path}:{lineno}: non-finite weight {tok!r}")
    if w < 0:
        raise ParseError(f"{path}:{lineno}: negative weight {tok!r}")
    return w


def read_edgelist(path, weighted: bool | None = None, directed: bool | None = None) -> EdgeList:
    """Parse ``src dst [weight]`` lines (whitespace or comma separated).

    ``#`` lines are comments, except ``# key=value`` headers written by
    :func:`write_edgelist` (``nodes``, ``directed``, ``weighted``,
    ``bipartite``). Self-loops are dropped. Duplicate pairs are merged:
    weights summed in weighted mode, deduplicated otherwise. Fractional
    weights are rounded to the nearest integer; pairs whose weight rounds
    to 0 are dropped.

    Node ids are used as-is when every id is a non-negative integer;
    otherwise ids are treated as labels and numbered by first appearance
    (kept in ``EdgeList.labels``).

    ``weighted=None`` means: weighted iff any line has a third column.
    """
    path = Path(path)
    meta = {}
    rows = []
    has_weight = False
    with path.open() as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                for key, val in _HEADER.findall(line):
                    meta[key] = val
                continue
            toks = [t for t in _SPLIT.split(line) if t]
            if len(toks) not in (2, 3):
                raise ParseError(f"{path}:{lineno}: expected 'src dst [weight]'")
            w = 1.0
            if len(toks) == 3:
                has_weight = True
                w = _parse_weight(toks[2], path, lineno)
            rows.append((toks[0], toks[1], w, lineno))

    if weighted is None:
        weighted = has_weight or meta.get("weighted") == "1"
    if directed is None:
        directed = meta.get("directed") == "1"

    ids = [t for r in rows for t in r[:2]]
    numeric = all(t.isdigit() for t in ids)
    labels = None
    if numeric:
        src = np.array([int(r[0]) for r in rows], dtype=np.int64)
        dst = np.array([int(r[1]) for r in rows], dtype=np.int64)
        n = int(max(src.max(initial=-1), dst.max(initial=-1))) + 1
    else:
        index = {}
        for t in ids:
            index.setdefault(t, len(index))
        src = np.array([index[r[0]] for r in rows], dtype=np.int64)
        dst = np.array([index[r[1]] for r in rows], dtype=np.int64)
        labels = tuple(index)
        n = len(index)
    if "nodes" in meta:
        declared = int(meta["nodes"])
        if declared < n:
            raise ParseError(f"{path}: header declares {declared} nodes, found ids up to {n - 1}")
        if labels is None:
            n = declared

    w = np.array([r[2] for r in rows], dtype=np.float64)
    if weighted:
        rounded = np.rint(w)
        if np.any(rounded != w):
            log.warning("%s: non-integer weights rounded to nearest integer", path)
    else:
        rounded = np.ones_like(w)

    keep = src != dst
    if not keep.all():
        log.info("%s: dropped %d self-loops", path, int((~keep).sum()))
    src, dst, rounded = src[keep], dst[keep], rounded[keep]
    if not directed:
        src, dst = np.minimum(src, dst), np.maximum(src, dst)
    key = src * max(n, 1) + dst
    uniq, inv = np.unique(key, return_inverse=True)
    if weighted:
        wsum = np.bincount(inv.reshape(-1), weights=rounded, minlength=uniq.size)
    else:
        wsum = np.ones(uniq.size)
    nonzero = wsum > 0
    uniq, wsum = uniq[nonzero], wsum[nonzero]

    bipartite = None
    if "bipartite" in meta:
        a, b = meta["bipartite"].split(",")
        bipartite = (int(a), int(b))
    return EdgeList(
        n, uniq // max(n, 1), uniq % max(n, 1), wsum.astype(np.int64),
        weighted=bool(weighted), directed=bool(directed),
        bipartite=bipartite, labels=labels,
    )


def write_edgelist(edges: EdgeList, path) -> None:
    """Write ``src<TAB>dst[<TAB>weight]`` lines sorted by ``(src, dst)``.

    The first line is ``# nodes=N``; further ``# key=value`` lines record
    directedness, weighting and bipartite sizes when they apply. Node ids
    are always the integer ids; see :func:`write_labels` for the mapping.
    """
    e = edges.sorted()
    lines = [f"# nodes={e.n_nodes}"]
    if e.directed:
        lines.append("# directed=1")
    if e.weighted:
        lines.append("# weighted=1")
    if e.bipartite is not None:
        lines.append(f"# bipartite={e.bipartite[0]},{e.bipartite[1]}")
    if e.weighted:
        body = [f"{u}\t{v}\t{w}" for u, v, w in zip(e.src.tolist(), e.dst.tolist(), e.weight.tolist())]
    else:
        body = [f"{u}\t{v}" for u, v in zip(e.src.tolist(), e.dst.tolist())]
    Path(path).write_text("\n".join(lines + body) + "\n")


def write_labels(labels, path) -> None:
    """Write the ``node,label`` table for string-labelled inputs."""
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["node", "label"])
        for i, lab in enumerate(labels):
            out.writerow([i, lab])


def read_sequences(path):
    """Read ``node,degree[,strength]`` CSV; returns ``(k, s_or_None)``."""
    with open(path, newline="") as fh:
        reader = csv.reader(row for row in fh if row.strip() and not row.startswith("#"))
        header = [h.strip() for h in next(reader)]
        if header[:2] != ["node", "degree"]:
            raise ParseError(f"{path}:1: header must start with 'node,degree'")
        has_s = len(header) > 2
        k, s = [], []
        for lineno, row in enumerate(reader, 2):
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                k.append(float(row[1]))
                if has_s:
                    s.append(float(row[2]))
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric value") from None
    return np.array(k), (np.array(s) if has_s else None)


def write_sequences(path, k, s=None) -> None:
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["node", "degree"] + (["strength"] if s is not None else []))
        for i in range(len(k)):
            row = [i, repr(float(k[i]))]
            if s is not None:
                row.append(repr(float(s[i])))
            out.writerow(row)


def write_params(params, path) -> None:
    """Write ``node,alpha[,beta]`` with round-trip float formatting."""
    uecm = isinstance(params, ParamsUECM)
    with open(path, "w", newline="") as fh:
        out = csv.writer(fh, lineterminator="\n")
        out.writerow(["node", "alpha", "beta"] if uecm else ["node", "alpha"])
        for i in range(params.n_nodes):
            row = [i, repr(float(params.alpha[i]))]
            if uecm:
                row.append(repr(float(params.beta[i])))
            out.writerow(row)


def read_params(path):
    """Inverse of :func:`write_params`; returns ParamsUBCM or ParamsUECM."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = [h.strip() for h in next(reader)]
        if header not in (["node", "alpha"], ["node", "alpha", "beta"]):
            raise ParseError(f"{path}:1: header must be 'node,alpha[,beta]'")
        rows = []
        for lineno, row in enumerate(reader, 2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{lineno}: expected {len(header)} fields")
            try:
                rows.append([int(row[0])] + [float(x) for x in row[1:]])
            except ValueError:
                raise ParseError(f"{path}:{lineno}: non-numeric value") from None
    rows.sort(key=lambda r: r[0])
    if [r[0] for r in rows] != list(range(len(rows))):
        raise ParseError(f"{path}: node ids must be 0..N-1")
    arr = np.array([r[1:] for r in rows], dtype=np.float64)
    if len(header) == 3:
        return ParamsUECM(arr[:, 0], arr[:, 1])
    return ParamsUBCM(arr[:, 0])
