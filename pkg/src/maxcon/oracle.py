"""Ground truth for small instances, plus the LO-RANSAC baseline.

The exact routines rely on the support-set structure of the minimax problem:
the optimal inlier set is reproduced by the minimax fit of some subset of at
most d+1 points, so enumerating those subsets (level by level, skipping any
subset with an infeasible sub-subset) finds the optimum.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from math import comb
from typing import Iterable

import numpy as np

from .heuristic import HeuristicResult
from .model import LINEAR, ConstraintsInfeasible, DomainEmpty, MaxconError, ProblemInstance, canonical
from .solver import solve_minimax, solve_minimax_constrained

# Sum_{k=1..4} C(25, k): the default budget admits N <= 25 at d <= 3.
DEFAULT_MAX_SUBSETS = sum(comb(25, k) for k in range(1, 5))


class InstanceTooLarge(MaxconError):
    pass


@dataclass(frozen=True)
class OracleResult:
    consensus: int
    witness_model: np.ndarray
    max_feasible_set: tuple[int, ...]


def _budget(n_free: int, d: int, max_subsets: int | None):
    limit = DEFAULT_MAX_SUBSETS if max_subsets is None else max_subsets
    need = sum(comb(n_free, k) for k in range(1, min(d + 1, n_free) + 1))
    if need > limit:
        raise InstanceTooLarge(f"{need} candidate subsets exceed the budget of {limit}")


def _feasible_fits(instance, free, forced, max_size):
    """Yield ``(T, theta)`` for every subset T of ``free`` with |T| <= max_size
    whose (constrained) minimax value is within epsilon."""
    eps = instance.epsilon
    level = {(): None}
    for k in range(1, max_size + 1):
        nxt = {}
        for T in itertools.combinations(free, k):
            if any(T[:j] + T[j + 1:] not in level for j in range(k)):
                continue
            try:
                sol = solve_minimax_constrained(instance, T, forced)
            except DomainEmpty:
                continue
            if sol.value <= eps:
                nxt[T] = sol.theta
                yield T, sol.theta
        if not nxt:
            return
        level = nxt


def enumerate_optimal(instance: ProblemInstance, max_subsets: int | None = None) -> OracleResult:
    """Maximum consensus by fitting every candidate basis.

    Ties go to the first candidate in (size, lexicographic) order.
    """
    n, d = instance.n, instance.dim
    _budget(n, d, max_subsets)
    best = (-1, None)
    for _, theta in _feasible_fits(instance, tuple(range(n)), (), d + 1):
        c = instance.consensus(theta)
        if c > best[0]:
            best = (c, theta)
    c, theta = best
    inliers = np.flatnonzero(instance.residuals(theta) <= instance.epsilon)
    return OracleResult(c, theta, tuple(inliers.tolist()))


def max_feasible_subset(
    instance: ProblemInstance, coverage: Iterable[int], forced: Iterable[int] = (), max_subsets: int | None = None
) -> tuple[int, ...] | None:
    """A largest subset of ``coverage`` that contains ``forced`` and is feasible
    (``None`` when ``forced`` alone is infeasible)."""
    cov = canonical(coverage)
    forced_idx = canonical(forced)
    if not np.all(np.isin(forced_idx, cov)):
        raise ValueError("forced points must belong to the coverage")
    free = tuple(np.setdiff1d(cov, forced_idx).tolist())
    _budget(len(free), instance.dim, max_subsets)
    eps = instance.epsilon
    free_arr = np.asarray(free, dtype=np.intp)
    best = None

    def consider(theta):
        nonlocal best
        r = instance.residuals(theta, free_arr) if free else np.empty(0)
        members = tuple(sorted(forced_idx.tolist() + free_arr[r <= eps].tolist()))
        if best is None or len(members) > len(best):
            best = members

    if forced_idx.size:
        try:
            sol = solve_minimax_constrained(instance, forced_idx, forced_idx)
        except (ConstraintsInfeasible, DomainEmpty):
            return None
        consider(sol.theta)
    for _, theta in _feasible_fits(instance, free, forced_idx, instance.dim + 1):
        consider(theta)
    return best if best is not None else ()


def min_removal(
    instance: ProblemInstance, coverage: Iterable[int], forced: Iterable[int] = (), max_subsets: int | None = None
) -> float:
    """Exact h*(coverage | forced); ``inf`` when the forced points are jointly infeasible."""
    cov = canonical(coverage)
    best = max_feasible_subset(instance, cov, forced, max_subsets)
    if best is None:
        return math.inf
    return cov.size - len(best)


def vertex_minimax(instance: ProblemInstance, subset: Iterable[int]) -> float:
    """Linear minimax value by brute force over primal vertices.

    Every (d+1)-subset and sign pattern defines a candidate
    sigma_i (a_i^T theta - b_i) = gamma; the optimum is the smallest gamma
    among candidates that bound every residual of the subset.
    """
    if instance.kind != LINEAR:
        raise ValueError("vertex enumeration is only defined for linear residuals")
    idx = canonical(subset)
    d = instance.dim
    A, b = instance.A[idx], instance.b[idx]
    if idx.size <= d:
        return 0.0
    best = math.inf
    for T in itertools.combinations(range(idx.size), d + 1):
        T = list(T)
        for signs in itertools.product((1.0, -1.0), repeat=d + 1):
            s = np.array(signs)
            M = np.hstack([s[:, None] * A[T], -np.ones((d + 1, 1))])
            if abs(np.linalg.det(M)) < 1e-12:
                continue
            sol = np.linalg.solve(M, s * b[T])
            gamma = sol[-1]
            if gamma < -1e-12:
                continue
            if np.max(np.abs(A @ sol[:-1] - b)) <= gamma + 1e-9 * max(1.0, gamma):
                best = min(best, gamma)
    return max(best, 0.0)


def lemma1_diagnostic(node, heuristic: HeuristicResult, hstar: float) -> bool:
    """Whether the true outlier rate of ``node`` reaches the level at which the
    single-point test h_ins(B|s) > g(B) can no longer succeed.

    ``heuristic`` should be the constrained run whose mean charged-basis size
    is used; returns False when that run removed nothing.
    """
    phi = heuristic.phi
    if phi is None:
        return False
    c = node.coverage.size if hasattr(node, "coverage") else int(node)
    return hstar / c >= (1.0 / phi) * (c - 1) / c


def lo_ransac(instance: ProblemInstance, iterations: int = 100, seed: int = 0, inner: int = 10) -> OracleResult:
    """Hypothesize-and-verify over minimal samples of size d with local optimization.

    Each new best hypothesis is refined by refitting (minimax) on its
    consensus set for up to ``inner`` rounds while the consensus improves.
    """
    if iterations < 1:
        raise ValueError("iterations must be at least 1")
    rng = np.random.default_rng(seed)
    n, k = instance.n, min(instance.dim, instance.n)
    eps = instance.epsilon
    best_c, best_theta = -1, None
    for _ in range(iterations):
        sample = np.sort(rng.choice(n, size=k, replace=False))
        try:
            theta = solve_minimax(instance, sample).theta
        except MaxconError:
            continue
        c = instance.consensus(theta)
        if c <= best_c:
            continue
        best_c, best_theta = c, theta
        for _ in range(inner):
            inliers = np.flatnonzero(instance.residuals(best_theta) <= eps)
            try:
                theta = solve_minimax(instance, inliers).theta
            except MaxconError:
                break
            c = instance.consensus(theta)
            if c <= best_c:
                break
            best_c, best_theta = c, theta
    if best_theta is None:
        best_theta = np.zeros(instance.dim)
        best_c = instance.consensus(best_theta)
    inliers = np.flatnonzero(instance.residuals(best_theta) <= eps)
    return OracleResult(best_c, best_theta, tuple(inliers.tolist()))
