"""The insertion heuristic h_ins and its by-products.

Phase 1 keeps removing the support set of the remaining points until they
become feasible. Phase 2 puts the removed points back one at a time; whenever a
point cannot be reinserted the heuristic is incremented and the support set of
the enlarged set is ejected instead.

As a by-product, ``theta_g`` is the minimax fit of the set that survives
phase 2. Every point of the coverage within epsilon of it (ejected inliers
included) forms ``feasible_set``, and ``g`` counts the rest: an upper bound on
the minimum number of removals.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np

from .model import ConstraintsInfeasible, MaxconError, ProblemInstance, canonical
from .solver import MinimaxSolution, solve_minimax_constrained

UNBOUNDED = math.inf


@dataclass(frozen=True)
class HeuristicResult:
    h_ins: float  # an int, or UNBOUNDED when the forced points are jointly infeasible
    g: float
    theta_g: np.ndarray | None
    removed_basis_sizes: tuple[int, ...]  # phase 1
    feasible_set: tuple[int, ...]
    coverage_size: int = 0
    forced: tuple[int, ...] = ()
    ejected_basis_sizes: tuple[int, ...] = ()  # phase 2, one per increment of h_ins
    # False when phase 2 stopped early because the comparison against a bound
    # was already settled; h_ins is then a partial count and g, theta_g are unset
    complete: bool = True

    def __eq__(self, other):
        if not isinstance(other, HeuristicResult):
            return NotImplemented
        a, b = self.theta_g, other.theta_g
        same_theta = (a is None and b is None) or (a is not None and b is not None and np.array_equal(a, b))
        return same_theta and all(
            getattr(self, f) == getattr(other, f)
            for f in ("h_ins", "removed_basis_sizes", "feasible_set", "coverage_size", "forced", "ejected_basis_sizes", "complete")
        ) and (self.g == other.g or (math.isnan(self.g) and math.isnan(other.g)))

    __hash__ = None

    @property
    def phi(self) -> float | None:
        """Mean size of the bases charged to h_ins (ejected in phase 2).

        These bases are pairwise disjoint and never contain a forced point, so
        ``h_ins * phi <= |C| - |forced|``.
        """
        if not self.ejected_basis_sizes:
            return None
        return sum(self.ejected_basis_sizes) / len(self.ejected_basis_sizes)

    @property
    def phi_removed(self) -> float | None:
        """Mean size of the bases removed in phase 1."""
        if not self.removed_basis_sizes:
            return None
        return sum(self.removed_basis_sizes) / len(self.removed_basis_sizes)

    @property
    def unbounded(self) -> bool:
        return self.h_ins == UNBOUNDED


@dataclass
class HeuristicCache:
    """Memo of heuristic results keyed by (coverage, forced) within one search.

    ``constrained`` keeps ``(coverage, result)`` for every constrained
    evaluation, in evaluation order, so that callers can audit them afterwards.
    """

    results: dict = field(default_factory=dict)
    constrained: list = field(default_factory=list)
    hits: int = 0

    def get(self, key):
        res = self.results.get(key)
        if res is not None:
            self.hits += 1
        return res

    def put(self, key, res):
        # insert-if-absent keeps the first result if two writers race
        res = self.results.setdefault(key, res)
        if res.forced:
            self.constrained.append((np.frombuffer(key[0], dtype=np.intp), res))
        return res


def compute_hins(instance: ProblemInstance, coverage: Iterable[int], cache: HeuristicCache | None = None) -> HeuristicResult:
    return compute_hins_constrained(instance, coverage, (), cache)


def compute_hins_constrained(
    instance: ProblemInstance,
    coverage: Iterable[int],
    forced: Iterable[int],
    cache: HeuristicCache | None = None,
    bound: float | None = None,
) -> HeuristicResult:
    """h_ins(coverage | forced).

    With ``bound`` set, only the outcome of ``h_ins > bound`` is needed and the
    reinsertion phase stops as soon as it is decided: either the count has
    passed the bound or the points still to be reinserted cannot take it there.
    The comparison of the returned ``h_ins`` with ``bound`` is then exact.
    """
    cov = canonical(coverage)
    forced_idx = canonical(forced)
    if cov.size == 0:
        raise ValueError("coverage must be nonempty")
    if not np.all(np.isin(forced_idx, cov)):
        raise ValueError("forced points must belong to the coverage")
    key = (cov.tobytes(), forced_idx.tobytes())
    if cache is not None:
        hit = cache.get(key)
        if hit is None and bound is not None:
            hit = cache.get(key + (bound,))
        if hit is not None:
            return hit
    res = _hins(instance, cov, forced_idx, bound)
    if not res.complete:
        key = key + (bound,)
    if cache is not None:
        res = cache.put(key, res)
    return res


def _solve(instance, subset, forced_idx) -> MinimaxSolution:
    if subset.size == 0:
        return MinimaxSolution(0.0, np.zeros(instance.dim), ())
    return solve_minimax_constrained(instance, subset, forced_idx)


def _hins(instance, cov, forced_idx, bound=None) -> HeuristicResult:
    eps = instance.epsilon
    forced_t = tuple(forced_idx.tolist())
    try:
        sol = _solve(instance, cov, forced_idx)
    except ConstraintsInfeasible:
        return HeuristicResult(UNBOUNDED, UNBOUNDED, None, (), (), cov.size, forced_t)
    if sol.value <= eps:
        return HeuristicResult(0, 0, sol.theta, (), tuple(cov.tolist()), cov.size, forced_t)

    removed = []
    rest = cov
    while sol.value > eps:
        if not sol.basis:
            raise MaxconError("infeasible subset returned an empty support set")
        removed.append(sol.basis)
        rest = np.setdiff1d(rest, sol.basis, assume_unique=True)
        sol = _solve(instance, rest, forced_idx)

    h = 0
    ejected = []
    feasible = set(rest.tolist())
    witness = sol.theta  # any model with every point of `feasible` inside epsilon
    pending = sum(len(b) for b in removed)
    for basis in removed:
        for s in basis:
            if bound is not None and (h > bound or h + pending <= bound):
                return HeuristicResult(
                    h, math.nan, None, tuple(len(b) for b in removed), (), cov.size, forced_t, tuple(ejected), False
                )
            pending -= 1
            # if the current witness already fits s, F + {s} is feasible as is
            if witness is not None and instance.residuals(witness, [s])[0] <= eps:
                feasible.add(s)
                continue
            trial = np.fromiter(sorted(feasible | {s}), dtype=np.intp)
            sol = _solve(instance, trial, forced_idx)
            if sol.value <= eps:
                feasible.add(s)
                witness = sol.theta
            else:
                # s belongs to the ejected basis, so what remains is a subset of
                # the old feasible set and the witness stays valid
                h += 1
                ejected.append(len(sol.basis))
                feasible.add(s)
                feasible.difference_update(sol.basis)
                if s in feasible:
                    witness = None

    final = np.fromiter(sorted(feasible), dtype=np.intp)
    theta_g = _solve(instance, final, forced_idx).theta
    consistent = cov[instance.residuals(theta_g, cov) <= eps]
    return HeuristicResult(
        h,
        cov.size - consistent.size,
        theta_g,
        tuple(len(b) for b in removed),
        tuple(consistent.tolist()),
        cov.size,
        forced_t,
        tuple(ejected),
    )
