"""Command-line interface.

Exit codes: 0 success, 2 usage error, 3 construction error, 4 I/O error.
"""
import argparse
import re
import sys
import time
import warnings

import numpy as np

from .diagnostics import qmc_study, stats_report
from .errors import LintSampleError
from .grid import build_grid, export_vertex_file, ingest_vertex_file
from .pdfs import CountingPdf, make_pdf, parse_params
from .sampler import LintSampler, read_samples
from .streams import make_stream
from .tree import DensityTree

EXIT_USAGE = 2
EXIT_BUILD = 3
EXIT_IO = 4


class UsageError(Exception):
    pass


def parse_grid(text):
    """``"lo:hi:n[,lo:hi:n...]"`` -> list of ``linspace(lo, hi, n)`` arrays."""
    edges = []
    for part in text.split(","):
        fields = part.strip().split(":")
        if len(fields) != 3:
            raise UsageError(f"grid spec {part!r} is not lo:hi:n")
        try:
            lo, hi, n = float(fields[0]), float(fields[1]), int(fields[2])
        except ValueError:
            raise UsageError(f"grid spec {part!r} is not lo:hi:n") from None
        if n < 2 or not hi > lo:
            raise UsageError(f"grid spec {part!r} needs hi > lo and n >= 2")
        edges.append(np.linspace(lo, hi, n))
    return edges


def parse_domain(text):
    """``"lo:hi[,lo:hi...]"`` -> (mins, maxs)."""
    mins, maxs = [], []
    for part in text.split(","):
        fields = part.strip().split(":")
        try:
            lo, hi = (float(f) for f in fields)
        except ValueError:
            raise UsageError(f"domain spec {part!r} is not lo:hi") from None
        mins.append(lo)
        maxs.append(hi)
    return np.array(mins), np.array(maxs)


def read_edges_file(path):
    """One dimension per line; values separated by commas or whitespace."""
    edges = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if line:
                edges.append(np.array([float(v) for v in re.split(r"[,\s]+", line)]))
    return edges


def _add_structure_flags(p, grid=True):
    p.add_argument("--pdf", help="built-in density: gmm1d, doughnut2d, powerlaw1d, "
                                 "gauss_kd, uniform_kd")
    p.add_argument("--param", action="append", default=[], metavar="NAME=V[,V...]",
                   help="override a pdf parameter (repeatable)")
    p.add_argument("--dim", type=int, help="dimension for gauss_kd / uniform_kd")
    if grid:
        p.add_argument("--grid", help="uniform edges lo:hi:n[,lo:hi:n...]")
        p.add_argument("--edges-file", help="file of edge arrays, one dimension per line")
        p.add_argument("--density-file", help="precomputed vertex densities")
        p.add_argument("--density-format", choices=("text", "raw"), default="text")


def _add_sampling_flags(p, n_required):
    p.add_argument("--n", type=int, required=n_required, default=0, help="number of samples")
    p.add_argument("--seed", type=int, default=0, help="seed for all randomness")
    p.add_argument("--qmc", choices=("none", "sobol", "halton"), default="none")
    p.add_argument("--out", help="sample output file (default: standard output)")
    p.add_argument("--format", choices=("csv", "raw"), default="csv")
    p.add_argument("--threads", type=int, default=1)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="lintsample",
        description="Sample densities through their piecewise multilinear interpolant.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="build a grid and draw samples")
    _add_structure_flags(p)
    _add_sampling_flags(p, n_required=True)

    p = sub.add_parser("tree", help="build an adaptive tree, optionally dump and sample")
    _add_structure_flags(p, grid=False)
    p.add_argument("--domain", required=True, help="root box lo:hi[,lo:hi...]")
    p.add_argument("--tol", type=float, default=1e-3, help="relative error tolerance")
    p.add_argument("--max-depth", type=int, default=20)
    p.add_argument("--max-leaves", type=int, default=100_000)
    p.add_argument("--min-depth", type=int, default=2)
    p.add_argument("--dump", help="write leaves to this file")
    _add_sampling_flags(p, n_required=False)

    p = sub.add_parser("qmc-study", help="RMSE of the sample mean, MC vs scrambled Sobol")
    _add_structure_flags(p)
    p.add_argument("--n-list", default=",".join(str(2**m) for m in range(8, 15)),
                   help="comma-separated sample sizes (powers of two)")
    p.add_argument("--repeats", type=int, default=32)
    p.add_argument("--statistic", choices=("mean",), default="mean")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("stats", help="report statistics of a sample file")
    _add_structure_flags(p)
    p.add_argument("--in", dest="infile", required=True, help="sample file (csv or raw)")

    p = sub.add_parser("dump-grid", help="evaluate a pdf on a grid and write vertex densities")
    _add_structure_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--format", choices=("text", "raw"), default="text")
    return parser


def _pdf_from_args(args, dim=None):
    if not args.pdf:
        raise UsageError("--pdf is required")
    try:
        params = parse_params(args.param)
        return make_pdf(args.pdf, dim=args.dim if args.dim is not None else dim, params=params)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _edges_from_args(args):
    if args.edges_file:
        return read_edges_file(args.edges_file)
    if args.grid:
        return parse_grid(args.grid)
    raise UsageError("one of --grid or --edges-file is required")


def _grid_from_args(args):
    edges = _edges_from_args(args)
    if args.density_file:
        return ingest_vertex_file(edges, args.density_file, args.density_format)
    pdf = CountingPdf(_pdf_from_args(args, dim=len(edges)))
    grid = build_grid(edges, pdf)
    grid.n_evaluations = pdf.evaluations
    return grid


def _write_samples(args, batch, out):
    if args.out:
        batch.save(args.out, args.format)
    elif args.format == "raw":
        batch.to_raw(out.buffer)
    else:
        batch.to_csv(out)


def _sample_and_report(args, structure, build_seconds, out, err):
    stream = make_stream(args.qmc, structure.dim + 1, args.seed)
    sampler = LintSampler(structure, stream)
    t0 = time.perf_counter()
    batch = sampler.sample(args.n, threads=args.threads)
    sample_seconds = time.perf_counter() - t0
    _write_samples(args, batch, out)
    report = stats_report(structure, batch.points, timings={
        "build_seconds": build_seconds, "sample_seconds": sample_seconds,
    })
    print(report.to_text(), file=out if args.out else err)


def cmd_sample(args, out, err):
    t0 = time.perf_counter()
    grid = _grid_from_args(args)
    _sample_and_report(args, grid, time.perf_counter() - t0, out, err)
    return 0


def cmd_tree(args, out, err):
    mins, maxs = parse_domain(args.domain)
    pdf = CountingPdf(_pdf_from_args(args, dim=mins.size))
    t0 = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        tree = DensityTree(mins, maxs, pdf, tol_rel=args.tol, max_depth=args.max_depth,
                           max_leaves=args.max_leaves, min_depth=args.min_depth)
    build_seconds = time.perf_counter() - t0
    if not tree.converged:
        print(tree.status_message(), file=err)
    if args.dump:
        tree.dump(args.dump)
    summary = (f"leaves {len(tree.leaves)}\n"
               f"err_over_mass {tree.achieved_tol!r}\n"
               f"converged {str(tree.converged).lower()}\n"
               f"total_mass {tree.total_mass!r}\n"
               f"pdf_evaluations {tree.n_evaluations}")
    sampling_to_stdout = args.n > 0 and not args.out
    print(summary, file=err if sampling_to_stdout else out)
    if args.n > 0:
        _sample_and_report(args, tree, build_seconds, out, err)
    return 0


def cmd_qmc_study(args, out, err):
    grid = _grid_from_args(args)
    try:
        n_list = [int(v) for v in args.n_list.split(",")]
    except ValueError:
        raise UsageError("--n-list must be comma-separated integers") from None
    if any(n < 1 or n & (n - 1) for n in n_list) or len(n_list) < 2:
        raise UsageError("--n-list needs at least two powers of two")
    if args.repeats < 2:
        raise UsageError("--repeats must be at least 2")
    study = qmc_study(grid, n_list, repeats=args.repeats, seed=args.seed)
    print(study.to_text(), file=out)
    return 0


def cmd_stats(args, out, err):
    grid = _grid_from_args(args)
    points = read_samples(args.infile)
    if points.shape[1] != grid.dim:
        raise UsageError(f"sample file is {points.shape[1]}D, grid is {grid.dim}D")
    print(stats_report(grid, points).to_text(), file=out)
    return 0


def cmd_dump_grid(args, out, err):
    grid = _grid_from_args(args)
    export_vertex_file(grid, args.out, args.format)
    print(f"wrote {grid.n_vertices} vertex densities to {args.out}", file=out)
    return 0


COMMANDS = {
    "sample": cmd_sample,
    "tree": cmd_tree,
    "qmc-study": cmd_qmc_study,
    "stats": cmd_stats,
    "dump-grid": cmd_dump_grid,
}

# options whose values may legitimately start with '-'
_SIGNED_VALUE_OPTS = {"--grid", "--domain", "--param"}


def _join_signed_values(argv):
    # argparse mistakes "-7:7:100" for an option; rewrite as --grid=-7:7:100
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _SIGNED_VALUE_OPTS and i + 1 < len(argv) and argv[i + 1].startswith("-") \
                and not argv[i + 1].startswith("--"):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def main(argv=None, out=None, err=None):
    out = sys.stdout if out is None else out
    err = sys.stderr if err is None else err
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_join_signed_values(argv))
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return COMMANDS[args.command](args, out, err)
    except UsageError as exc:
        print(f"lintsample {args.command}: error: {exc}", file=err)
        return EXIT_USAGE
    except OSError as exc:
        print(f"lintsample {args.command}: I/O error: {exc}", file=err)
        return EXIT_IO
    except (LintSampleError, ValueError) as exc:
        print(f"lintsample {args.command}: error: {exc}", file=err)
        return EXIT_BUILD


if __name__ == "__main__":
    sys.exit(main())
