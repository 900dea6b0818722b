"""``polyrlt`` command-line tool.

Exit codes: 0 success, 1 usage or other errors, 2 when a scheme hits its
resource cap, 3 when an input file cannot be parsed.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bench
from .bnb import SolveOptions, solve
from .exceptions import (
    EmptyObjective,
    NegativeLowerBound,
    PolyRLTError,
    ProblemSyntaxError,
    ResourceLimit,
    UnknownVariable,
)
from .problem import GeneratorConfig, generate_instance, load_problem, random_base, serialize_problem
from .reduction import DEFAULT_CAP, SCHEMES, reduce_program, serialize_reduced
from .rlt import build_relaxation, write_mps

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_RESOURCE = 2
EXIT_PARSE = 3
PARSE_ERRORS = (ProblemSyntaxError, NegativeLowerBound, EmptyObjective, UnknownVariable, json.JSONDecodeError)

log = logging.getLogger("polyrlt")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_ERROR, f"{self.prog}: error: {message}\n")


def _write(text: str, path: str | None):
    if path in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def _scheme_args(p: argparse.ArgumentParser, cap: bool = True):
    p.add_argument("--scheme", choices=SCHEMES, default="quadrlt")
    p.add_argument("--degree", type=int, default=2, help="target degree d (default 2)")
    if cap:
        p.add_argument("--cap", type=int, default=DEFAULT_CAP, help="max generated variables")


def cmd_solve(args) -> int:
    prog = load_problem(args.file)
    if args.threads != 1:
        log.warning("only single-threaded search is implemented; ignoring --threads %d", args.threads)
    opts = SolveOptions(
        scheme=args.scheme,
        degree=args.degree,
        time_limit=args.time_limit,
        rel_gap=args.rel_gap,
        node_limit=args.nodes,
        cap=args.cap,
        backend=args.backend,
        threads=args.threads,
    )
    rep = solve(prog, opts)
    if args.report:
        Path(args.report).write_text(json.dumps(rep.to_dict(), indent=2) + "\n")
    gap = "NA" if rep.gap is None else f"{rep.gap:.3e}"
    ub = "NA" if rep.upper_bound is None else f"{rep.upper_bound:.10g}"
    print(f"status {rep.status}")
    print(f"objective {ub}")
    print(f"lower_bound {rep.lower_bound:.10g}")
    print(f"gap {gap}")
    print(f"nodes {rep.nodes}")
    if rep.lp_failures:
        print(f"lp_failures {rep.lp_failures}")
    print(f"time {rep.wall_time:.3f}")
    if rep.incumbent is not None:
        print("x " + " ".join(f"{v:.10g}" for v in rep.incumbent))
    return EXIT_OK


def cmd_quadrify(args) -> int:
    prog = load_problem(args.file)
    red = reduce_program(prog, args.scheme, args.degree, args.cap)
    _write(serialize_reduced(red), args.out)
    return EXIT_OK


def cmd_stats(args) -> int:
    prog = load_problem(args.file)
    schemes = args.schemes or ["baseline", "s1", "s2", "s3", "quadrlt"]
    rows = []
    hit_cap = False
    for scheme in schemes:
        st = bench.root_stats_or_na(prog, scheme, args.degree, args.cap, args.backend)
        hit_cap |= not st.available
        rows.append(st)
    if args.mps:
        rel = build_relaxation(reduce_program(prog, schemes[0], args.degree, args.cap))
        Path(args.mps).write_text(write_mps(rel))
    if args.json:
        print(json.dumps([r.__dict__ for r in rows], indent=2))
    else:
        print(f"{'scheme':<10} {'d':>2} {'Nvars':>8} {'Ncons':>8} {'root':>14} {'build s':>8} {'LP s':>8}")
        for r in rows:
            na = lambda v, f: "NA" if v is None else format(v, f)
            print(
                f"{r.scheme:<10} {r.d:>2} {na(r.nvars, 'd'):>8} {na(r.ncons, 'd'):>8} "
                f"{na(r.root_value, '.8g'):>14} {r.build_time:>8.3f} {r.solve_time:>8.3f}"
            )
    return EXIT_RESOURCE if hit_cap else EXIT_OK


def cmd_generate(args) -> int:
    if args.base:
        base = load_problem(args.base)
    else:
        try:
            n_str, dens_str = args.random_base.split(",")
            n, density = int(n_str), float(dens_str)
        except ValueError:
            return _usage_exit("--random-base expects 'n,density'")
        base = random_base(n, density, seed=args.seed, multilinear=args.multilinear)
    cfg = GeneratorConfig(base, args.delta, args.k, args.seed, multilinear=args.multilinear)
    _write(serialize_problem(generate_instance(cfg)), args.out)
    return EXIT_OK


def _usage_exit(msg: str) -> int:
    sys.stderr.write(f"polyrlt: error: {msg}\n")
    return EXIT_ERROR


def load_manifest(path: str):
    """Instances and configurations listed in a JSON manifest.

    Keys: ``instances`` (paths, relative to the manifest), optional
    ``generate`` (``{"count", "n", "density", "delta", "k", "seed",
    "multilinear"}``), ``configs`` (``[scheme, d]`` pairs), ``budget``,
    ``rel_gap``, ``cap``, ``node_limit``.
    """
    mpath = Path(path)
    data = json.loads(mpath.read_text())
    instances = []
    for entry in data.get("instances", []):
        ipath = (mpath.parent / entry).resolve()
        instances.append((Path(entry).stem, load_problem(ipath)))
    gen = data.get("generate")
    if gen:
        for i in range(int(gen.get("count", 1))):
            seed = int(gen.get("seed", 0)) + i
            base = random_base(int(gen["n"]), float(gen.get("density", 0.5)), seed=seed, multilinear=bool(gen.get("multilinear", False)))
            cfg = GeneratorConfig(base, int(gen["delta"]), int(gen.get("k", 1)), seed, multilinear=bool(gen.get("multilinear", False)))
            instances.append((f"gen{seed}", generate_instance(cfg)))
    configs = [(c[0], int(c[1]) if len(c) > 1 else 2) for c in data.get("configs", [])]
    if not configs:
        configs = [("baseline", 0)] + [(s, 2) for s in ("s1", "s2", "s3", "quadrlt")]
    return instances, configs, data


def cmd_compare(args) -> int:
    instances, configs, data = load_manifest(args.manifest)
    budget = args.budget if args.budget is not None else float(data.get("budget", 3600.0))
    rel_gap = float(data.get("rel_gap", 1e-3))
    cap = int(data.get("cap", DEFAULT_CAP))
    node_limit = data.get("node_limit")
    result = bench.compare(instances, configs, budget=budget, rel_gap=rel_gap, cap=cap, backend=args.backend, node_limit=node_limit)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    Path(f"{out}.csv").write_text(result.to_csv())
    Path(f"{out}.json").write_text(result.to_json() + "\n")
    Path(f"{out}.txt").write_text(result.to_text())
    sys.stdout.write(result.to_text())
    hit_cap = any(r["status"] == "ResourceLimit" for r in result.runs)
    return EXIT_RESOURCE if hit_cap else EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="polyrlt", description="RLT global optimization of box-constrained polynomial programs")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="branch-and-bound to global optimality")
    p.add_argument("file")
    _scheme_args(p)
    p.add_argument("--time-limit", type=float, default=3600.0)
    p.add_argument("--rel-gap", type=float, default=1e-3)
    p.add_argument("--nodes", type=int, default=None, help="node limit")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--backend", choices=("highs", "simplex"), default=None)
    p.add_argument("--report", help="write the JSON report here")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("quadrify", help="reduce a program to degree d")
    p.add_argument("file")
    _scheme_args(p)
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_quadrify)

    p = sub.add_parser("stats", help="root relaxation sizes and bounds")
    p.add_argument("file")
    p.add_argument("--scheme", dest="schemes", action="append", choices=SCHEMES, help="repeatable; default all")
    p.add_argument("--degree", type=int, default=2)
    p.add_argument("--cap", type=int, default=DEFAULT_CAP)
    p.add_argument("--backend", choices=("highs", "simplex"), default=None)
    p.add_argument("--mps", help="export the first scheme's relaxation as MPS")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("generate", help="random instance from a degree-2 base")
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--base")
    src.add_argument("--random-base", metavar="N,DENSITY")
    p.add_argument("--delta", type=int, required=True)
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--multilinear", action="store_true")
    p.add_argument("--out", default="-")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("compare", help="benchmark schemes over a manifest")
    p.add_argument("manifest")
    p.add_argument("--out", default="comparison", help="output prefix for .csv/.json/.txt")
    p.add_argument("--budget", type=float, default=None, help="per-run time limit (s)")
    p.add_argument("--backend", choices=("highs", "simplex"), default=None)
    p.set_defaults(func=cmd_compare)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return args.func(args)
    except ResourceLimit as exc:
        sys.stderr.write(f"polyrlt: resource limit: {exc}\n")
        return EXIT_RESOURCE
    except PARSE_ERRORS as exc:
        sys.stderr.write(f"polyrlt: parse error: {exc}\n")
        return EXIT_PARSE
    except (PolyRLTError, OSError, ValueError) as exc:
        sys.stderr.write(f"polyrlt: error: {exc}\n")
        return EXIT_ERROR


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
