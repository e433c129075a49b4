"""Command-line entry point: file ingestion, seeded runs, JSON output.

Subcommands: sample (spanning trees as JSON lines), reff (batch
effective-resistance estimates), validate (chi-square check of a tree
stream against the enumerated distribution), bench (timing and recursion
counters across graph sizes), and schur (approximate Schur complement of
a graph onto a kept vertex set).

Every flag with a default can also be set through an environment
variable named SCHURTREE_<FLAG> (dashes become underscores, e.g.
SCHURTREE_EPS_MODE); explicit flags win.  All randomness flows from the
--seed flag through a counter-based generator, so identical inputs and
seeds give byte-identical outputs.  Diagnostics go to stderr; stdout
carries only data.

Exit codes: 0 success, 1 validation verdict failed, 2 unusable input
(file parse errors, bad parameters), 3 disconnected graph, 4 internal
invariant failure, 5 bad vertex pair.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from contextlib import nullcontext
from dataclasses import dataclass

import numpy as np

from .chol import approx_schur
from .config import DEFAULT_SEED, SamplerConfig
from .errors import (
    BadPair,
    Disconnected,
    GraphFileError,
    InternalError,
    SchurTreeError,
)
from .graph import build_graph
from .oracle import schur_exact
from .reff import estimate_reff
from .rng import derive_seed, make_rng
from .sampler import generate_spanning_tree
from .stats import DEFAULT_ALPHA, tree_distribution_test


@dataclass
class RunConfig:
    """One resolved CLI invocation."""

    command: str
    input: str = None
    pairs: str = None
    seed: int = DEFAULT_SEED
    delta: float = 1e-3
    epsilon: float = 0.25
    eps_mode: str = "auto"
    n_samples: int = 1
    output: str = None
    c_sp: float = 16.0
    c_jl: float = 48.0
    wilson_budget: int = 10 ** 8
    alpha: float = DEFAULT_ALPHA
    trees_file: str = None
    sizes: tuple = (8, 16, 32)
    no_timings: bool = False
    keep: str = None


# -- file formats ------------------------------------------------------------


def _data_lines(path):
    """Yield (line_number, fields) for payload lines of a text file."""
    try:
        with open(path, encoding="utf-8") as fh:
            raw = fh.readlines()
    except OSError as exc:
        raise GraphFileError(f"{path}: {exc.strerror or exc}") from exc
    for lineno, line in enumerate(raw, start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        yield lineno, stripped.split()


def _parse_vertex(path, lineno, tok):
    if not tok.isdigit():
        raise GraphFileError(
            f"{path}:{lineno}: vertex id must be a non-negative integer, "
            f"got {tok!r}")
    return int(tok)


def read_graph_file(path):
    """Parse a "u v w" edge-list file into a graph."""
    edges = []
    for lineno, fields in _data_lines(path):
        if len(fields) != 3:
            raise GraphFileError(
                f"{path}:{lineno}: expected 'u v w', got {len(fields)} fields")
        u = _parse_vertex(path, lineno, fields[0])
        v = _parse_vertex(path, lineno, fields[1])
        try:
            w = float(fields[2])
        except ValueError as exc:
            raise GraphFileError(
                f"{path}:{lineno}: weight {fields[2]!r} is not a number"
            ) from exc
        if not math.isfinite(w) or w <= 0.0:
            raise GraphFileError(
                f"{path}:{lineno}: weight must be positive and finite")
        edges.append((u, v, w))
    if not edges:
        raise GraphFileError(f"{path}: no edges found")
    try:
        return build_graph(edges)
    except SchurTreeError as exc:
        raise GraphFileError(f"{path}: {exc}") from exc


def read_pairs_file(path):
    """Parse a "u v" pair file; an empty file is an empty pair list."""
    pairs = []
    for lineno, fields in _data_lines(path):
        if len(fields) != 2:
            raise GraphFileError(
                f"{path}:{lineno}: expected 'u v', got {len(fields)} fields")
        pairs.append((_parse_vertex(path, lineno, fields[0]),
                      _parse_vertex(path, lineno, fields[1])))
    return pairs


def read_keep_file(path):
    """Parse a vertex-set file: whitespace-separated non-negative ids."""
    keep = []
    for lineno, fields in _data_lines(path):
        keep.extend(_parse_vertex(path, lineno, tok) for tok in fields)
    if not keep:
        raise GraphFileError(f"{path}: no vertices found")
    return keep


def _out_stream(path):
    return open(path, "w", encoding="utf-8") if path else nullcontext(sys.stdout)


# -- subcommands -------------------------------------------------------------


def _sampler_config(cfg: RunConfig) -> SamplerConfig:
    return SamplerConfig(delta=cfg.delta, eps_mode=cfg.eps_mode,
                         c_sp=cfg.c_sp, c_jl=cfg.c_jl,
                         wilson_budget=cfg.wilson_budget, seed=cfg.seed)


def cmd_sample(cfg: RunConfig) -> int:
    """Write one JSON line per sampled spanning tree."""
    g = read_graph_file(cfg.input)
    config = _sampler_config(cfg)
    with _out_stream(cfg.output) as out:
        for i in range(cfg.n_samples):
            s = generate_spanning_tree(g, config=config,
                                       seed=derive_seed(cfg.seed, i))
            out.write(json.dumps({
                "edges": s.edges,
                "seed": s.seed,
                "climb_hist": s.stats["climb_hist"],
                "root_fallbacks": s.stats["root_fallbacks"],
            }, sort_keys=True) + "\n")
    return 0


def cmd_reff(cfg: RunConfig) -> int:
    """Write a JSON array of resistance estimates in input pair order."""
    g = read_graph_file(cfg.input)
    pairs = read_pairs_file(cfg.pairs)
    res = estimate_reff(g, pairs, cfg.epsilon, config=_sampler_config(cfg),
                        seed=cfg.seed)
    doc = [{"reff": float(r), "u": int(u), "v": int(v)}
           for (u, v), r in zip(pairs, res.values)]
    with _out_stream(cfg.output) as out:
        json.dump(doc, out, sort_keys=True)
        out.write("\n")
    return 0


def _read_tree_stream(cfg: RunConfig):
    stream = open(cfg.trees_file, encoding="utf-8") if cfg.trees_file \
        else nullcontext(sys.stdin)
    trees = []
    with stream as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                trees.append(json.loads(line)["edges"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                where = cfg.trees_file or "<stdin>"
                raise GraphFileError(
                    f"{where}:{lineno}: not a tree record: {exc}") from exc
    return trees


def cmd_validate(cfg: RunConfig) -> int:
    """Chi-square a stream of sampled trees against the enumerated law."""
    g = read_graph_file(cfg.input)
    trees = _read_tree_stream(cfg)
    if not trees:
        raise GraphFileError("tree stream is empty")
    it = iter(trees)
    report = tree_distribution_test(g, lambda: next(it), len(trees),
                                    alpha=cfg.alpha)
    with _out_stream(cfg.output) as out:
        json.dump(report.to_jsonable(), out, sort_keys=True)
        out.write("\n")
    return 0 if report.passed else 1


def _random_connected(n, m, rng):
    """Random connected multigraph used by the benchmark family."""
    perm = rng.permutation(n)
    edges = [(int(a), int(b), float(w)) for a, b, w in
             zip(perm[:-1], perm[1:], 1.0 + rng.random(n - 1))]
    seen = set(frozenset((u, v)) for u, v, _ in edges)
    while len(edges) < m:
        u, v = int(rng.integers(n)), int(rng.integers(n))
        if u == v or frozenset((u, v)) in seen:
            continue
        seen.add(frozenset((u, v)))
        edges.append((u, v, float(1.0 + rng.random())))
    return build_graph(edges)


def cmd_bench(cfg: RunConfig) -> int:
    """Time the sampler and report its recursion counters per graph size."""
    rows = []
    for n in cfg.sizes:
        m = min(3 * n, n * (n - 1) // 2)
        g = _random_connected(n, m, make_rng(derive_seed(cfg.seed, n)))
        for mode in ("exact", "auto"):
            config = _sampler_config(cfg).with_(eps_mode=mode)
            node_max = []
            climb = []
            fallbacks = 0
            alarms = 0
            bound_ok = True
            t0 = time.perf_counter()
            for i in range(cfg.n_samples):
                s = generate_spanning_tree(g, config=config,
                                           seed=derive_seed(cfg.seed, i))
                counts = s.stats["node_counts"]
                for lvl, c in enumerate(counts):
                    if c > 4 ** (lvl + 1) - 2 ** lvl:
                        bound_ok = False
                    while len(node_max) <= lvl:
                        node_max.append(0)
                    node_max[lvl] = max(node_max[lvl], c)
                hist = s.stats["climb_hist"]
                while len(climb) < len(hist):
                    climb.append(0)
                for k, c in enumerate(hist):
                    climb[k] += c
                fallbacks += s.stats["root_fallbacks"]
                alarms += s.stats["run_alarms"]
            wall = time.perf_counter() - t0
            rows.append({
                "n": n,
                "m": g.m,
                "mode": mode,
                "trees": cfg.n_samples,
                "wall_ms": None if cfg.no_timings else round(wall * 1e3, 3),
                "node_counts_max": node_max,
                "node_bound_ok": bound_ok,
                "climb_hist": climb,
                "root_fallbacks": fallbacks,
                "run_alarms": alarms,
            })
    with _out_stream(cfg.output) as out:
        json.dump({"seed": cfg.seed, "rows": rows}, out, sort_keys=True)
        out.write("\n")
    return 0


def cmd_schur(cfg: RunConfig) -> int:
    """Write the (approximate) Schur complement as an edge-list file."""
    g = read_graph_file(cfg.input)
    keep = read_keep_file(cfg.keep)
    bad = [v for v in keep if v >= g.n]
    if bad:
        raise GraphFileError(
            f"{cfg.keep}: keep set references missing vertex {bad[0]}")
    if cfg.eps_mode == "exact":
        keep_sorted = np.unique(np.asarray(keep, dtype=np.int64))
        S = schur_exact(g, keep_sorted)
        iu, iv = np.triu_indices(keep_sorted.size, k=1)
        w = -S[iu, iv]
        sel = w > 1e-12 * max(float(np.abs(S).max()), 1.0)
        eu, ev, ew = keep_sorted[iu[sel]], keep_sorted[iv[sel]], w[sel]
    else:
        h = approx_schur(g, keep, cfg.epsilon, cfg.delta,
                         rng=make_rng(cfg.seed), config=_sampler_config(cfg))
        eu, ev, ew = h.eu, h.ev, h.ew
    with _out_stream(cfg.output) as out:
        out.write(f"# schur complement onto {len(set(keep))} vertices, "
                  f"mode={cfg.eps_mode}, seed={cfg.seed}\n")
        for u, v, w in zip(eu, ev, ew):
            out.write(f"{int(u)} {int(v)} {float(w)!r}\n")
    return 0


# -- argument plumbing -------------------------------------------------------


def _env_default(name, cast, fallback):
    raw = os.environ.get("SCHURTREE_" + name)
    if raw is None:
        return fallback
    try:
        return cast(raw)
    except ValueError:
        raise SystemExit(
            f"environment variable SCHURTREE_{name}={raw!r} is not valid")


def _parse_sizes(text):
    try:
        sizes = tuple(int(tok) for tok in text.split(",") if tok)
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}")
    if not sizes or any(s < 2 for s in sizes):
        raise argparse.ArgumentTypeError("sizes must be integers >= 2")
    return sizes


def _add_common(p, *, eps=False, delta=False, trees=False):
    p.add_argument("--seed", type=int,
                   default=_env_default("SEED", int, DEFAULT_SEED),
                   help="base RNG seed (default 0x%(default)X)")
    p.add_argument("--eps-mode", dest="eps_mode",
                   choices=("auto", "sparse", "dense", "exact"),
                   default=_env_default("EPS_MODE", str, "auto"),
                   help="approximation schedule (default %(default)s)")
    p.add_argument("--c-sp", dest="c_sp", type=float,
                   default=_env_default("C_SP", float, 16.0),
                   help="sparsifier oversampling constant")
    p.add_argument("--c-jl", dest="c_jl", type=float,
                   default=_env_default("C_JL", float, 48.0),
                   help="sketch width constant")
    p.add_argument("--wilson-budget", dest="wilson_budget", type=int,
                   default=_env_default("WILSON_BUDGET", int, 10 ** 8),
                   help="step budget of the walk-based baseline")
    p.add_argument("--output", "-o", default=None,
                   help="write to this file instead of stdout")
    if eps:
        p.add_argument("--eps", dest="epsilon", type=float,
                       default=_env_default("EPS", float, 0.25),
                       help="multiplicative tolerance (default %(default)s)")
    if delta:
        p.add_argument("--delta", type=float,
                       default=_env_default("DELTA", float, 1e-3),
                       help="failure probability budget (default %(default)s)")
    if trees:
        p.add_argument("--trees", dest="n_samples", type=int,
                       default=_env_default("TREES", int, 1),
                       help="number of trees to sample (default %(default)s)")


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="schurtree",
        description="Spanning-tree sampling and effective-resistance "
                    "estimation on weighted graphs.",
        epilog="Flag defaults can be set via SCHURTREE_* environment "
               "variables (e.g. SCHURTREE_SEED, SCHURTREE_EPS_MODE).")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="sample spanning trees as JSON lines")
    p.add_argument("input", help="graph file ('u v w' per line)")
    _add_common(p, delta=True, trees=True)

    p = sub.add_parser("reff", help="estimate effective resistances of pairs")
    p.add_argument("input", help="graph file")
    p.add_argument("pairs", help="pair file ('u v' per line)")
    _add_common(p, eps=True, delta=True)

    p = sub.add_parser("validate",
                       help="chi-square a tree stream against the exact law")
    p.add_argument("input", help="graph file")
    p.add_argument("--trees-file", dest="trees_file", default=None,
                   help="JSON-lines tree stream (default: stdin)")
    p.add_argument("--alpha", type=float,
                   default=_env_default("ALPHA", float, DEFAULT_ALPHA),
                   help="significance level (default %(default)s)")
    p.add_argument("--output", "-o", default=None)

    p = sub.add_parser("bench", help="time the sampler across graph sizes")
    p.add_argument("--sizes", type=_parse_sizes,
                   default=_env_default("SIZES", _parse_sizes, (8, 16, 32)),
                   help="comma-separated vertex counts (default 8,16,32)")
    p.add_argument("--no-timings", dest="no_timings", action="store_true",
                   help="omit wall times so the report is seed-reproducible")
    _add_common(p, delta=True, trees=True)

    p = sub.add_parser("schur",
                       help="Schur complement onto a kept vertex set")
    p.add_argument("input", help="graph file")
    p.add_argument("keep", help="kept-vertex file (ids, whitespace-separated)")
    _add_common(p, eps=True, delta=True)

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    fields = {f for f in RunConfig.__dataclass_fields__}
    cfg = RunConfig(**{k: v for k, v in vars(args).items() if k in fields})
    handler = {"sample": cmd_sample, "reff": cmd_reff,
               "validate": cmd_validate, "bench": cmd_bench,
               "schur": cmd_schur}[cfg.command]
    try:
        return handler(cfg)
    except GraphFileError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BadPair as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 5
    except Disconnected as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InternalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except (SchurTreeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
