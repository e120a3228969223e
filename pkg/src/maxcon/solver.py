"""Exact minimax fitting with support-set extraction.

``solve_minimax`` computes f(S1) = min_theta max_{i in S1} r(theta | s_i) and
the support set of S1, i.e. the minimal subset with the same minimax value.
``solve_minimax_constrained`` additionally requires a set of forced points to
be inliers (residual <= epsilon).

Linear data go straight to the simplex kernel. Fractional (infinity-norm) data
are solved by bisection on the objective value, each step being a linear
feasibility problem handled by the same kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable

import numpy as np

from . import _simplex
from .model import (
    LINEAR,
    ConstraintsInfeasible,
    DomainEmpty,
    DomainViolation,
    FractionalDatum,
    LinearDatum,
    MaxconError,
    ProblemInstance,
    canonical,
)

ACTIVE_RTOL = 1e-9
BISECTION_RTOL = 1e-9
# dual weights below this are treated as zero when reading off the support set
_WEIGHT_TOL = 1e-11
# box on theta that keeps the fractional feasibility programs bounded
_FRACTIONAL_BOX = 1e6


@dataclass(frozen=True)
class MinimaxSolution:
    value: float
    theta: np.ndarray
    basis: tuple[int, ...]

    def __eq__(self, other):
        if not isinstance(other, MinimaxSolution):
            return NotImplemented
        return (
            self.value == other.value
            and self.basis == other.basis
            and np.array_equal(self.theta, other.theta)
        )

    def __hash__(self):
        return hash((self.value, self.basis, self.theta.tobytes()))


def active_tol(value: float) -> float:
    """Tolerance under which a residual counts as attaining ``value``."""
    return ACTIVE_RTOL * max(1.0, value)


def residual(theta, datum: LinearDatum | FractionalDatum) -> float:
    theta = np.asarray(theta, dtype=float)
    if isinstance(datum, LinearDatum):
        return float(abs(datum.a @ theta - datum.b))
    den = float(datum.c @ theta - datum.d0)
    if den <= 0:
        raise DomainViolation(f"denominator c^T theta - d0 = {den} is not positive")
    return float(np.max(np.abs(datum.A.T @ theta - datum.b)) / den)


def solve_minimax(instance: ProblemInstance, subset: Iterable[int]) -> MinimaxSolution:
    return solve_minimax_constrained(instance, subset, ())


def solve_minimax_constrained(
    instance: ProblemInstance, subset: Iterable[int], forced: Iterable[int]
) -> MinimaxSolution:
    """Minimax fit of ``subset`` subject to every ``forced`` point being an inlier.

    The returned basis only ever contains points of ``subset`` whose
    objective term is active; the forced points act as hard constraints.
    """
    idx = canonical(subset)
    forced_idx = canonical(forced)
    if idx.size == 0:
        raise ValueError("subset must be nonempty")
    if idx[0] < 0 or idx[-1] >= instance.n or (forced_idx.size and (forced_idx[0] < 0 or forced_idx[-1] >= instance.n)):
        raise IndexError("index out of range for this instance")
    if instance.kind == LINEAR:
        return _solve_linear(instance, idx, forced_idx)
    return _solve_fractional(instance, idx, forced_idx)


def warm_up():
    """Load (or compile) the simplex kernel so that later timings exclude it."""
    G = np.array([[1.0], [-1.0]])
    _simplex.solve_lp(G, np.array([0.0, 0.0]), 2)


def violation_set(instance: ProblemInstance, solution: MinimaxSolution) -> tuple[int, ...]:
    """Indices of all points whose residual under the solution exceeds its value."""
    r = instance.residuals(solution.theta)
    return tuple(np.flatnonzero(r > solution.value + active_tol(solution.value)).tolist())


def _finish(instance, idx, theta, weights_by_point) -> MinimaxSolution:
    value = float(np.max(instance.residuals(theta, idx)))
    if value <= active_tol(0.0):
        # exactly interpolable subsets have an empty support set by convention
        return MinimaxSolution(0.0, theta, ())
    basis = tuple(sorted(int(i) for i, w in weights_by_point.items() if w > _WEIGHT_TOL))
    return MinimaxSolution(value, theta, basis)


def _solve_linear(instance, idx, forced_idx):
    A, b, eps = instance.A, instance.b, instance.epsilon
    Ao, bo = A[idx], b[idx]
    n = idx.size
    if forced_idx.size:
        Af, bf = A[forced_idx], b[forced_idx]
        G = np.concatenate([Ao, -Ao, Af, -Af])
        h = np.concatenate([bo, -bo, eps + bf, eps - bf])
    else:
        G = np.concatenate([Ao, -Ao])
        h = np.concatenate([bo, -bo])
    status, theta, _, basic, yb = _simplex.solve_lp(np.ascontiguousarray(G), h, 2 * n)
    if status == _simplex.INFEASIBLE:
        raise ConstraintsInfeasible("forced points cannot all be inliers")
    if status != _simplex.OPTIMAL:
        raise MaxconError(f"simplex kernel failed with status {status}")
    weights = {}
    for k, y in zip(basic, yb):
        if k < 2 * n:
            p = int(idx[k % n])
            weights[p] = weights.get(p, 0.0) + y
    return _finish(instance, idx, theta, weights)


def _fractional_rows(instance, idx, gamma):
    """Rows of ``sigma (A^T theta - b) - gamma (c^T theta - d0) <= t``, one per
    (point, component, sign), followed by the domain rows ``d0 - c^T theta <= t``."""
    A, b, c, d0 = instance.A[idx], instance.b[idx], instance.c[idx], instance.d0[idx]
    n, d, m = A.shape
    At = np.transpose(A, (0, 2, 1)).reshape(n * m, d)
    bt = b.reshape(n * m)
    cr = np.repeat(c, m, axis=0)
    dr = np.repeat(d0, m)
    G = np.concatenate([At - gamma * cr, -At - gamma * cr, -c])
    h = np.concatenate([bt - gamma * dr, -bt - gamma * dr, -d0])
    owner = np.concatenate([np.repeat(idx, m), np.repeat(idx, m), np.full(n, -1)])
    return G, h, owner


def _fractional_hard(instance, forced_idx):
    d = instance.dim
    box_G = np.concatenate([np.eye(d), -np.eye(d)])
    box_h = np.full(2 * d, _FRACTIONAL_BOX)
    if not forced_idx.size:
        return box_G, box_h
    eps = instance.epsilon
    G, h, _ = _fractional_rows(instance, forced_idx, eps)
    k = G.shape[0] - forced_idx.size  # drop the domain rows; eps (c^T theta - d0) >= |.| covers them
    return np.concatenate([G[:k], box_G]), np.concatenate([h[:k], box_h])


def _run_kernel(G_obj, h_obj, G_hard, h_hard):
    G = np.ascontiguousarray(np.concatenate([G_obj, G_hard]))
    h = np.concatenate([h_obj, h_hard])
    status, theta, t, basic, yb = _simplex.solve_lp(G, h, G_obj.shape[0])
    if status == _simplex.INFEASIBLE:
        raise ConstraintsInfeasible("forced points cannot all be inliers")
    if status != _simplex.OPTIMAL:
        raise MaxconError(f"simplex kernel failed with status {status}")
    return theta, t, basic, yb


def _solve_fractional(instance, idx, forced_idx):
    G_hard, h_hard = _fractional_hard(instance, forced_idx)
    # a model inside every denominator domain
    c, d0 = instance.c[idx], instance.d0[idx]
    theta, t, _, _ = _run_kernel(-c, -d0, G_hard, h_hard)
    if not t < 0:
        raise DomainEmpty("no model keeps every denominator positive")
    lo, hi = 0.0, float(np.max(instance.residuals(theta, idx)))
    best = theta
    while hi - lo > BISECTION_RTOL * max(1.0, hi):
        mid = 0.5 * (lo + hi)
        G, h, _ = _fractional_rows(instance, idx, mid)
        theta, t, _, _ = _run_kernel(G, h, G_hard, h_hard)
        if t < 0:
            hi, best = mid, theta
        else:
            lo = mid
    G, h, owner = _fractional_rows(instance, idx, hi)
    theta, t, basic, yb = _run_kernel(G, h, G_hard, h_hard)
    if not t < 0:
        theta = best
    weights = {}
    for k, y in zip(basic, yb):
        if k < owner.size and owner[k] >= 0:
            p = int(owner[k])
            weights[p] = weights.get(p, 0.0) + y
    return _finish(instance, idx, theta, weights)
