"""A* tree search over the bases of the minimax problem.

Nodes are bases, keyed by their violation sets; the level of a node is the
number of points it violates and its priority is ``level + h_ins``. The first
feasible node popped is globally optimal. Five variants are supported:

========== ===============================================================
astar      plain A* with repeated-basis checks
tod        A* plus true outlier detection (single-point branch pruning)
napa       A* that discards generated children not one level deeper
napa-tod   napa plus true outlier detection
napa-dibp  napa plus subset-based branch pruning, interleaved with expansion
========== ===============================================================
"""

from __future__ import annotations

import enum
import heapq
import itertools
import math
import time
from dataclasses import dataclass, field

import numpy as np

from .heuristic import HeuristicCache, HeuristicResult, compute_hins, compute_hins_constrained
from .model import LINEAR, ProblemInstance
from .solver import MinimaxSolution, solve_minimax, violation_set


class Variant(str, enum.Enum):
    ASTAR = "astar"
    ASTAR_TOD = "tod"
    ASTAR_NAPA = "napa"
    ASTAR_NAPA_TOD = "napa-tod"
    ASTAR_NAPA_DIBP = "napa-dibp"

    @property
    def napa(self) -> bool:
        return self in (Variant.ASTAR_NAPA, Variant.ASTAR_NAPA_TOD, Variant.ASTAR_NAPA_DIBP)

    @property
    def tod(self) -> bool:
        return self in (Variant.ASTAR_TOD, Variant.ASTAR_NAPA_TOD)

    @property
    def dibp(self) -> bool:
        return self is Variant.ASTAR_NAPA_DIBP


class Status(str, enum.Enum):
    OPTIMAL = "OPTIMAL"
    TIMEOUT = "TIMEOUT"
    NO_SOLUTION = "NO_SOLUTION"


@dataclass(frozen=True)
class SearchConfig:
    variant: Variant = Variant.ASTAR_NAPA_DIBP
    time_limit: float = 600.0  # seconds
    node_limit: int | None = None  # maximum number of expansions
    adaptive_start: bool = True
    trace: bool = False

    def __post_init__(self):
        object.__setattr__(self, "variant", Variant(self.variant))
        if not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if self.node_limit is not None and self.node_limit < 1:
            raise ValueError("node_limit must be positive")


@dataclass
class SearchNode:
    basis: tuple[int, ...]
    violation: tuple[int, ...]
    f_value: float
    theta: np.ndarray
    coverage: np.ndarray
    heuristic: HeuristicResult | None = None

    @property
    def level(self) -> int:
        return len(self.violation)

    @property
    def evaluation(self) -> float:
        return self.level + self.heuristic.h_ins


@dataclass
class ExpansionRecord:
    """What happened while expanding one node (kept when tracing)."""

    level: int
    evaluation: float
    basis: tuple[int, ...]
    branch: tuple[int, ...] = ()  # B_r for TOD, S_B for DIBP, B otherwise
    pruned: bool = False  # TOD found a true outlier / DIBP stopped early
    admitted: list = field(default_factory=list)  # (s, child level, adjacent?)
    discarded: list = field(default_factory=list)  # (s, child level), NAPA rejects
    repeated: list = field(default_factory=list)  # s whose key was already hashed
    checks: list = field(default_factory=list)  # (|S_B| or s, h_ins(B|.), g(B))
    coverage: np.ndarray | None = None


@dataclass
class SearchResult:
    status: Status
    basis_star: tuple[int, ...]
    theta_star: np.ndarray | None
    consensus: int
    outliers: int
    nun: int
    nobp: int
    nodes_expanded: int
    runtime: float  # seconds
    f_star: float | None = None
    trace: list | None = None


class TreeSearch:
    """One search over one instance; owns the queue, hash table and heuristic memo."""

    def __init__(self, instance: ProblemInstance, config: SearchConfig | None = None, cache: HeuristicCache | None = None):
        self.instance = instance
        self.config = config or SearchConfig()
        self.cache = cache if cache is not None else HeuristicCache()
        self.dedup: set[tuple[int, ...]] = set()
        self.expanded: set[tuple[int, ...]] = set()
        self.inserted = 0
        self.queue: list = []
        self._seq = itertools.count()
        self.nobp = 0
        self.nodes_expanded = 0
        self.trace: list[ExpansionRecord] = []
        self.popped: list[float] = []
        self._best = (-1, None)  # best feasible witness seen: (consensus, theta)

    # -- nodes ---------------------------------------------------------------

    def node_from_solution(self, sol: MinimaxSolution) -> SearchNode:
        violation = violation_set(self.instance, sol)
        coverage = np.setdiff1d(np.arange(self.instance.n), violation, assume_unique=True)
        return SearchNode(sol.basis, violation, sol.value, sol.theta, coverage)

    def evaluate(self, node: SearchNode) -> SearchNode:
        if node.heuristic is None:
            node.heuristic = compute_hins(self.instance, node.coverage, self.cache)
            theta_g = node.heuristic.theta_g
            if theta_g is not None:
                c = self.instance.consensus(theta_g)
                if c > self._best[0]:
                    self._best = (c, theta_g)
        return node

    def make_root(self) -> SearchNode:
        sol = solve_minimax(self.instance, range(self.instance.n))
        return self.evaluate(self.node_from_solution(sol))

    def generate_child(self, parent: SearchNode, s: int) -> SearchNode:
        if s not in parent.basis:
            raise ValueError(f"{s} is not in the parent basis")
        cov = parent.coverage[parent.coverage != s]
        if cov.size == 0:
            sol = MinimaxSolution(0.0, np.zeros(self.instance.dim), ())
        else:
            sol = solve_minimax(self.instance, cov)
        return self.node_from_solution(sol)

    def _insert(self, node: SearchNode):
        self.evaluate(node)
        self.inserted += 1
        heapq.heappush(self.queue, (node.evaluation, node.level, next(self._seq), node))

    # -- branch pruning --------------------------------------------------------

    def ranked_basis(self, node: SearchNode) -> list[int]:
        """Basis points by decreasing residual under theta_g (index breaks ties)."""
        r = self.instance.residuals(node.heuristic.theta_g, list(node.basis))
        return [s for _, s in sorted(zip(-r, node.basis))]

    def tod_reduce(self, node: SearchNode, record: ExpansionRecord | None = None) -> int | None:
        g = node.heuristic.g
        for s in self.ranked_basis(node):
            res = compute_hins_constrained(self.instance, node.coverage, [s], self.cache, bound=g)
            if record is not None:
                record.checks.append((s, res.h_ins, g))
            if res.h_ins > g:
                return s
        return None

    def adaptive_start(self, node: SearchNode) -> int:
        return adaptive_start_value(self.instance, node)

    # -- expansion -------------------------------------------------------------

    def _key(self, node: SearchNode, s: int) -> tuple[int, ...]:
        return tuple(sorted(node.violation + (s,)))

    def _try_child(self, node, s, record) -> SearchNode | None:
        """Hash-check, generate and (for NAPA variants) adjacency-check one child.

        Returns the child if it should be queued, ``None`` if it was discarded,
        and raises ``KeyError`` if the key was already hashed.
        """
        key = self._key(node, s)
        if key in self.dedup:
            raise KeyError(key)
        self.dedup.add(key)
        child = self.generate_child(node, s)
        if self.config.variant.napa and not napa_admit(node, child):
            record.discarded.append((s, child.level))
            return None
        record.admitted.append((s, child.level, set(child.violation) == set(node.violation) | {s}))
        return child

    def expand(self, node: SearchNode) -> ExpansionRecord:
        record = ExpansionRecord(node.level, node.evaluation, node.basis, coverage=node.coverage)
        if self.config.variant.dibp:
            self._expand_dibp(node, record, self.config.adaptive_start)
        else:
            self._expand_plain(node, record)
        return record

    def _expand_plain(self, node, record):
        branch = list(node.basis)
        if self.config.variant.tod:
            self.nobp += 1
            s = self.tod_reduce(node, record)
            if s is not None:
                branch = [s]
                record.pruned = True
        record.branch = tuple(branch)
        for s in branch:
            try:
                child = self._try_child(node, s, record)
            except KeyError:
                record.repeated.append(s)
                continue
            if child is not None:
                self._insert(child)

    def _expand_dibp(self, node, record, adaptive=True):
        g = node.heuristic.g
        z = self.adaptive_start(node) if adaptive else 1
        subset: list[int] = []
        for s in self.ranked_basis(node):
            try:
                child = self._try_child(node, s, record)
            except KeyError:
                # a repeated basis still counts towards S_B
                record.repeated.append(s)
                subset.append(s)
                continue
            if child is None:
                continue
            subset.append(s)
            self._insert(child)
            if len(subset) == len(node.basis):
                break
            if len(subset) >= z:
                self.nobp += 1
                res = compute_hins_constrained(self.instance, node.coverage, subset, self.cache, bound=g)
                record.checks.append((len(subset), res.h_ins, g))
                if res.h_ins > g:
                    record.pruned = True
                    break
        record.branch = tuple(subset)

    # -- main loop -------------------------------------------------------------

    def run(self) -> SearchResult:
        cfg = self.config
        eps = self.instance.epsilon
        start = time.perf_counter()
        root = self.make_root()
        self._insert(root)
        status = Status.NO_SOLUTION
        found = None
        while self.queue:
            if time.perf_counter() - start > cfg.time_limit or (
                cfg.node_limit is not None and self.nodes_expanded >= cfg.node_limit
            ):
                status = Status.TIMEOUT
                break
            e, _, _, node = heapq.heappop(self.queue)
            if node.violation in self.expanded:
                continue
            self.popped.append(e)
            if node.f_value <= eps:
                status, found = Status.OPTIMAL, node
                break
            self.expanded.add(node.violation)
            self.nodes_expanded += 1
            record = self.expand(node)
            if cfg.trace:
                self.trace.append(record)
        runtime = time.perf_counter() - start
        n = self.instance.n
        common = dict(
            nun=self.inserted,
            nobp=self.nobp,
            nodes_expanded=self.nodes_expanded,
            runtime=runtime,
            trace=self.trace if cfg.trace else None,
        )
        if found is not None:
            return SearchResult(status, found.basis, found.theta, n - found.level, found.level, f_star=found.f_value, **common)
        consensus, theta = self._best
        return SearchResult(status, (), theta, max(consensus, 0), n - max(consensus, 0), **common)


def napa_admit(parent: SearchNode, child: SearchNode) -> bool:
    return child.level > parent.level


def adaptive_start_value(instance: ProblemInstance, node: SearchNode) -> int:
    """Smallest |S_B| at which the subset pruning test can possibly succeed.

    For linear residuals the test cannot hold unless
    |S_B| > d + 1 - (|C(B)| - 1) / g(B); fractional residuals start at 1.
    """
    if instance.kind != LINEAR:
        return 1
    g = node.heuristic.g
    if not g >= 1:
        return 1
    bound = instance.dim + 1 - (node.coverage.size - 1) / g
    z = math.floor(bound) + 1
    return max(1, min(z, max(1, len(node.basis))))


def make_root(instance: ProblemInstance, cache: HeuristicCache | None = None) -> SearchNode:
    return TreeSearch(instance, cache=cache).make_root()


def generate_child(instance: ProblemInstance, parent: SearchNode, s: int) -> SearchNode:
    return TreeSearch(instance).generate_child(parent, s)


def tod_reduce(instance: ProblemInstance, node: SearchNode, cache: HeuristicCache | None = None) -> int | None:
    ts = TreeSearch(instance, SearchConfig(Variant.ASTAR_NAPA_TOD), cache)
    ts.evaluate(node)
    return ts.tod_reduce(node)


def adaptive_start(instance: ProblemInstance, node: SearchNode) -> int:
    return adaptive_start_value(instance, node)


def dibp_prune(
    instance: ProblemInstance,
    node: SearchNode,
    adaptive: bool = True,
    cache: HeuristicCache | None = None,
) -> ExpansionRecord:
    """Run one DIBP expansion of ``node`` against an empty hash table.

    ``record.branch`` is S_B and ``record.pruned`` tells whether the subset
    test fired before S_B reached the whole basis.
    """
    ts = TreeSearch(instance, SearchConfig(Variant.ASTAR_NAPA_DIBP, adaptive_start=adaptive), cache)
    ts.evaluate(node)
    record = ExpansionRecord(node.level, node.evaluation, node.basis, coverage=node.coverage)
    ts._expand_dibp(node, record, adaptive)
    return record


def search(instance: ProblemInstance, config: SearchConfig | None = None) -> SearchResult:
    return TreeSearch(instance, config).run()
