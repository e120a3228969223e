"""Command-line entry point: ``maxcon {gen,solve,bench,oracle}``.

Exit codes: 0 success (OPTIMAL for ``solve``), 2 usage error, 3 TIMEOUT,
4 NO_SOLUTION, 5 unreadable or malformed instance file, 6 oracle mismatch.
The default output directory is taken from ``$MAXCON_OUT`` (else ``./maxcon_out``).
"""

from __future__ import annotations

import argparse
import logging
import os
import re
import sys
from pathlib import Path

from . import bench
from .dataio import GeneratorSpec, ParseError, atomic_write, generate_synthetic, load_instance, save_instance
from .oracle import InstanceTooLarge, enumerate_optimal, lo_ransac
from .search import SearchConfig, Status, Variant, search
from .solver import warm_up

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_TIMEOUT = 3
EXIT_NO_SOLUTION = 4
EXIT_PARSE = 5
EXIT_ORACLE_MISMATCH = 6

OUT_ENV = "MAXCON_OUT"

log = logging.getLogger("maxcon")

_UNITS = {"": 1.0, "s": 1.0, "m": 60.0, "h": 3600.0}


def parse_duration(text: str) -> float:
    """'90', '90s', '10m' or '1.5h' -> seconds."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*([smh]?)\s*", text)
    if not m or float(m.group(1)) <= 0:
        raise argparse.ArgumentTypeError(f"invalid duration {text!r} (use e.g. 60, 60s, 10m)")
    return float(m.group(1)) * _UNITS[m.group(2)]


def default_out() -> Path:
    return Path(os.environ.get(OUT_ENV, "maxcon_out"))


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="maxcon", description="Exact consensus maximization by A* tree search.")
    p.add_argument("-v", "--verbose", action="store_true", help="progress messages on stderr")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate synthetic instance files")
    g.add_argument("--d", type=int, default=8, help="model dimension (ignored with --suite)")
    g.add_argument("--n", type=int, default=200, help="number of points")
    g.add_argument("--o", type=int, default=10, help="planted outliers (ignored with --suite)")
    g.add_argument("--epsilon", type=float, default=0.1)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--suite", choices=sorted(bench.SUITES), help="generate a whole named suite")
    g.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3], help="seeds for --suite")
    g.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./maxcon_out)")

    s = sub.add_parser("solve", help="solve one instance file, print one CSV row")
    s.add_argument("instance", type=Path)
    s.add_argument("--variant", choices=bench.ALL_VARIANTS, default=Variant.ASTAR_NAPA_DIBP.value)
    s.add_argument("--epsilon", type=float, help="override the threshold stored in the file")
    s.add_argument("--time-limit", type=parse_duration, default=600.0, metavar="DURATION")
    s.add_argument("--node-limit", type=int)
    s.add_argument("--check-oracle", action="store_true", help="compare with exhaustive enumeration (small instances)")
    s.add_argument("--out", type=Path, help="also write the row to this CSV file")

    b = sub.add_parser("bench", help="run variants over a directory of instance files")
    b.add_argument("suite_dir", type=Path)
    b.add_argument("--variant", dest="variants", choices=bench.ALL_VARIANTS, nargs="+", default=list(bench.ALL_VARIANTS))
    b.add_argument("--time-limit", type=parse_duration, default=600.0, metavar="DURATION")
    b.add_argument("--jobs", type=int, default=1, help="worker processes")
    b.add_argument("--out", type=Path, help=f"output directory (default ${OUT_ENV} or ./maxcon_out)")

    o = sub.add_parser("oracle", help="exhaustive optimum and LO-RANSAC for a small instance")
    o.add_argument("instance", type=Path)
    o.add_argument("--epsilon", type=float)
    o.add_argument("--seed", type=int, default=0, help="LO-RANSAC seed")
    o.add_argument("--iterations", type=int, default=100, help="LO-RANSAC iterations")
    o.add_argument("--max-subsets", type=int, help="enumeration budget")
    return p


def _load(path: Path, epsilon):
    inst, truth = load_instance(path)
    if epsilon is not None:
        inst = inst.with_epsilon(epsilon)
    return inst, truth


def cmd_gen(args) -> int:
    out = args.out or default_out()
    if args.suite:
        paths = bench.write_suite(out, args.suite, n=args.n, seeds=args.seeds, epsilon=args.epsilon)
    else:
        spec = GeneratorSpec(n=args.n, d=args.d, o=args.o, epsilon=args.epsilon, seed=args.seed)
        inst, truth = generate_synthetic(spec)
        path = out / f"inst_d{args.d}_n{args.n}_o{args.o}_s{args.seed}.json"
        save_instance(path, inst, truth)
        paths = [path]
    for p in paths:
        print(p)
    return EXIT_OK


def cmd_solve(args) -> int:
    inst, _ = _load(args.instance, args.epsilon)
    warm_up()
    config = SearchConfig(args.variant, time_limit=args.time_limit, node_limit=args.node_limit)
    result = search(inst, config)
    row = bench.make_row(args.instance.stem, args.variant, result)
    text = bench.rows_to_csv([row])
    sys.stdout.write(text)
    sys.stdout.flush()
    if args.out:
        atomic_write(args.out, text)
    if args.check_oracle:
        ref = enumerate_optimal(inst)
        match = result.status == Status.OPTIMAL and ref.consensus == result.consensus
        print(f"oracle consensus {ref.consensus} ({'match' if match else 'MISMATCH'})", file=sys.stderr)
        if not match:
            return EXIT_ORACLE_MISMATCH
    return {Status.OPTIMAL: EXIT_OK, Status.TIMEOUT: EXIT_TIMEOUT, Status.NO_SOLUTION: EXIT_NO_SOLUTION}[result.status]


def cmd_bench(args) -> int:
    suite = bench.load_suite(args.suite_dir)
    rows = bench.run_bench(
        suite,
        args.variants,
        time_limit=args.time_limit,
        jobs=args.jobs,
        progress=lambda r: log.info("%s %s %s %.0f ms", r.instance_id, r.variant, r.status, r.runtime_ms),
    )
    paths = bench.write_results(args.out or default_out(), rows, bench.planted_outliers(suite))
    for p in paths.values():
        print(p)
    sys.stdout.write(paths["speedup"].read_text())
    return EXIT_OK


def cmd_oracle(args) -> int:
    inst, _ = _load(args.instance, args.epsilon)
    ref = enumerate_optimal(inst, args.max_subsets)
    lo = lo_ransac(inst, iterations=args.iterations, seed=args.seed)
    print(f"optimal consensus {ref.consensus}")
    print(f"lo-ransac consensus {lo.consensus}")
    print(f"witness theta {bench.format_theta(ref.witness_model)}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "solve": cmd_solve, "bench": cmd_bench, "oracle": cmd_oracle}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ParseError, FileNotFoundError, IsADirectoryError) as exc:
        print(f"maxcon: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except (ValueError, InstanceTooLarge) as exc:
        print(f"maxcon: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
