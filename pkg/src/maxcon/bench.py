"""Benchmark harness: run variants over a suite and tabulate the results.

Rows come out in a fixed order (instances sorted by id, then variants in the
order requested) whatever the number of workers, so two runs with the same
seeds differ only in the ``runtime_ms`` column.
"""

from __future__ import annotations

import csv
import io
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import astuple, dataclass, fields
from pathlib import Path

import numpy as np

from .dataio import GeneratorSpec, atomic_write, generate_synthetic, load_instance, save_instance
from .search import SearchConfig, SearchResult, Variant, search
from .solver import warm_up

ALL_VARIANTS = tuple(v.value for v in Variant)
# variants that predate the two accelerations; the speedup summary compares
# the faster of these against napa-dibp
PREVIOUS_VARIANTS = ("astar", "tod")

SUITES = {
    "fig5": dict(d=8, outliers=(2, 4, 6, 8, 10)),
}


@dataclass(frozen=True)
class BenchRow:
    instance_id: str
    variant: str
    status: str
    consensus: int
    outliers: int
    nun: int
    nobp: int
    nodes_expanded: int
    runtime_ms: float
    theta_star: str


FIELDS = tuple(f.name for f in fields(BenchRow))


def format_theta(theta) -> str:
    if theta is None:
        return ""
    return " ".join(format(float(x), ".17g") for x in np.asarray(theta).reshape(-1))


def make_row(instance_id: str, variant: str, result: SearchResult) -> BenchRow:
    return BenchRow(
        instance_id,
        variant,
        result.status.value,
        result.consensus,
        result.outliers,
        result.nun,
        result.nobp,
        result.nodes_expanded,
        round(result.runtime * 1000.0, 3),
        format_theta(result.theta_star),
    )


def rows_to_csv(rows, columns=FIELDS) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow(astuple(r) if isinstance(r, BenchRow) else r)
    return buf.getvalue()


def read_rows(path) -> list[BenchRow]:
    with open(path, newline="") as fh:
        rd = csv.DictReader(fh)
        out = []
        for rec in rd:
            out.append(
                BenchRow(
                    rec["instance_id"],
                    rec["variant"],
                    rec["status"],
                    int(rec["consensus"]),
                    int(rec["outliers"]),
                    int(rec["nun"]),
                    int(rec["nobp"]),
                    int(rec["nodes_expanded"]),
                    float(rec["runtime_ms"]),
                    rec["theta_star"],
                )
            )
        return out


# -- suites ------------------------------------------------------------------------


def suite_specs(name: str, n: int = 200, seeds=(1, 2, 3), epsilon: float = 0.1) -> list[tuple[str, GeneratorSpec]]:
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; known: {', '.join(SUITES)}")
    cfg = SUITES[name]
    specs = []
    for o in cfg["outliers"]:
        for seed in seeds:
            spec = GeneratorSpec(n=n, d=cfg["d"], o=o, epsilon=epsilon, seed=seed)
            specs.append((f"{name}_o{o:02d}_s{seed}", spec))
    return specs


def write_suite(out_dir, name: str, n: int = 200, seeds=(1, 2, 3), epsilon: float = 0.1) -> list[Path]:
    paths = []
    for instance_id, spec in suite_specs(name, n, seeds, epsilon):
        inst, truth = generate_synthetic(spec)
        path = Path(out_dir) / f"{instance_id}.json"
        save_instance(path, inst, truth)
        paths.append(path)
    return paths


def load_suite(suite_dir) -> list[tuple[str, Path]]:
    paths = sorted(Path(suite_dir).glob("*.json"))
    if not paths:
        raise FileNotFoundError(f"no instance files in {suite_dir}")
    return [(p.stem, p) for p in paths]


# -- running -----------------------------------------------------------------------


def _run_one(job):
    instance_id, path, variant, time_limit = job
    inst, _ = load_instance(path)
    result = search(inst, SearchConfig(variant, time_limit=time_limit))
    return make_row(instance_id, variant, result)


def run_bench(suite, variants=ALL_VARIANTS, time_limit: float = 600.0, jobs: int = 1, progress=None) -> list[BenchRow]:
    """Run every variant on every ``(instance_id, path)`` of ``suite``."""
    warm_up()
    variants = [Variant(v).value for v in variants]
    work = [(iid, str(path), v, time_limit) for iid, path in sorted(suite) for v in variants]
    if jobs <= 1:
        rows = []
        for job in work:
            rows.append(_run_one(job))
            if progress:
                progress(rows[-1])
        return rows
    with ProcessPoolExecutor(max_workers=jobs, initializer=warm_up) as pool:
        rows = []
        for row in pool.map(_run_one, work):
            rows.append(row)
            if progress:
                progress(row)
        return rows


def planted_outliers(suite) -> dict[str, int | None]:
    """Number of planted outliers per instance id (None without ground truth)."""
    out = {}
    for iid, path in suite:
        _, truth = load_instance(path)
        out[iid] = None if truth is None else len(truth.outlier_indices)
    return out


def aggregate(rows, o_of: dict) -> list[tuple]:
    """(variant, o, median runtime in ms, #OPTIMAL, #runs) per (variant, o)."""
    groups: dict = {}
    for r in rows:
        groups.setdefault((r.variant, o_of.get(r.instance_id)), []).append(r)
    order = {v: i for i, v in enumerate(ALL_VARIANTS)}
    table = []
    for (variant, o), rs in sorted(groups.items(), key=lambda kv: (order.get(kv[0][0], 99), kv[0][1] is None, kv[0][1] or 0)):
        med = statistics.median(r.runtime_ms for r in rs)
        table.append((variant, "" if o is None else o, round(med, 3), sum(r.status == "OPTIMAL" for r in rs), len(rs)))
    return table


AGGREGATE_FIELDS = ("variant", "o", "median_runtime_ms", "optimal", "runs")
SPEEDUP_FIELDS = ("o", "fastest_previous", "previous_ms", "napa_dibp_ms", "speedup")


def speedup_summary(agg) -> list[tuple]:
    """Per o: the faster previous variant against napa-dibp (median runtimes)."""
    med = {(v, o): m for v, o, m, _, _ in agg}
    out = []
    for o in sorted({o for _, o, *_ in agg}, key=lambda x: (x == "", x or 0)):
        prev = [(med[(v, o)], v) for v in PREVIOUS_VARIANTS if (v, o) in med]
        if not prev or ("napa-dibp", o) not in med:
            continue
        best_ms, best_v = min(prev)
        dibp_ms = med[("napa-dibp", o)]
        ratio = best_ms / dibp_ms if dibp_ms > 0 else float("inf")
        out.append((o, best_v, best_ms, dibp_ms, round(ratio, 3)))
    return out


def write_results(out_dir, rows, o_of) -> dict[str, Path]:
    out_dir = Path(out_dir)
    agg = aggregate(rows, o_of)
    paths = {
        "results": out_dir / "results.csv",
        "aggregate": out_dir / "aggregate.csv",
        "speedup": out_dir / "speedup.csv",
    }
    atomic_write(paths["results"], rows_to_csv(rows))
    atomic_write(paths["aggregate"], rows_to_csv(agg, AGGREGATE_FIELDS))
    atomic_write(paths["speedup"], rows_to_csv(speedup_summary(agg), SPEEDUP_FIELDS))
    return paths
