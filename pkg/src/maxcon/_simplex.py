"""Revised simplex kernel for piecewise-linear minimax problems.

The problem solved is::

    minimize   t
    subject to G[k] @ theta - t <= h[k]   for k <  n_obj   (objective rows)
               G[k] @ theta     <= h[k]   for k >= n_obj   (hard rows)

It is attacked through its dual in standard form, whose d+1 equality rows are
``sum_k y_k G[k] = 0`` and ``sum_{k < n_obj} y_k = 1`` with ``y >= 0``. A basic
optimal ``y`` is supported on at most d+1 rows; those rows are the active set,
and the simplex multipliers give ``theta`` and ``t`` back.

Pricing is Dantzig (most negative reduced cost, lowest index on ties) until a
run of degenerate pivots is seen, after which the kernel switches to Bland's
lowest-index rule for the rest of the solve, which guarantees termination.
"""

import numpy as np
from numba import njit

OPTIMAL = 0
INFEASIBLE = 1  # hard rows admit no theta (dual unbounded)
UNBOUNDED = 2  # objective unbounded below (dual infeasible)
ITERATION_LIMIT = 3

_DEGENERATE_RUN = 30
_REFACTOR_EVERY = 64


@njit(cache=True)
def _column(G, n_obj, j, K, m, out):
    d = m - 1
    if j < K:
        for i in range(d):
            out[i] = G[j, i]
        out[d] = 1.0 if j < n_obj else 0.0
    else:
        for i in range(m):
            out[i] = 0.0
        out[j - K] = 1.0


@njit(cache=True)
def _refactor(G, n_obj, basic, K, m, Binv, xb):
    B = np.empty((m, m))
    col = np.empty(m)
    for r in range(m):
        _column(G, n_obj, basic[r], K, m, col)
        for i in range(m):
            B[i, r] = col[i]
    Binv[:, :] = np.linalg.inv(B)
    # rhs is the last unit vector
    for i in range(m):
        v = Binv[i, m - 1]
        xb[i] = v if v > 0.0 else 0.0


@njit(cache=True)
def _run(G, n_obj, cost, basic, is_basic, Binv, xb, K, m, rc_tol, piv_tol, max_iter):
    d = m - 1
    pi = np.empty(m)
    u = np.empty(m)
    col = np.empty(m)
    bland = False
    degenerate = 0
    for it in range(max_iter):
        if it > 0 and it % _REFACTOR_EVERY == 0:
            _refactor(G, n_obj, basic, K, m, Binv, xb)
        for i in range(m):
            s = 0.0
            for r in range(m):
                s += cost[basic[r]] * Binv[r, i]
            pi[i] = s
        enter = -1
        best = -rc_tol
        for j in range(K):
            if is_basic[j]:
                continue
            rc = cost[j] - pi[d] * (1.0 if j < n_obj else 0.0)
            for i in range(d):
                rc -= pi[i] * G[j, i]
            if rc < best:
                enter = j
                best = rc
                if bland:
                    break
        if enter < 0:
            return OPTIMAL
        _column(G, n_obj, enter, K, m, col)
        for i in range(m):
            s = 0.0
            for r in range(m):
                s += Binv[i, r] * col[r]
            u[i] = s
        leave = -1
        ratio = np.inf
        for i in range(m):
            if u[i] > piv_tol:
                q = xb[i] / u[i]
                if leave < 0 or q < ratio - 1e-12 * (1.0 + ratio):
                    leave = i
                    ratio = q
                elif q <= ratio + 1e-12 * (1.0 + ratio) and basic[i] < basic[leave]:
                    leave = i
                    ratio = min(ratio, q)
        if leave < 0:
            return INFEASIBLE
        if ratio <= 1e-12:
            degenerate += 1
            if degenerate >= _DEGENERATE_RUN:
                bland = True
        else:
            degenerate = 0
        step = xb[leave] / u[leave]
        for i in range(m):
            xb[i] -= step * u[i]
            if xb[i] < 0.0:
                xb[i] = 0.0
        xb[leave] = step
        p = u[leave]
        for c in range(m):
            Binv[leave, c] /= p
        for i in range(m):
            if i != leave and u[i] != 0.0:
                f = u[i]
                for c in range(m):
                    Binv[i, c] -= f * Binv[leave, c]
        is_basic[basic[leave]] = False
        basic[leave] = enter
        is_basic[enter] = True
    return ITERATION_LIMIT


@njit(cache=True)
def solve_lp(G, h, n_obj):
    """Return ``(status, theta, t, basic, y_basic)``; see the module docstring.

    ``basic`` holds row indices of ``G`` (values >= len(G) are leftover
    artificial columns of redundant equality rows).
    """
    K, d = G.shape
    m = d + 1
    scale = 1.0
    for j in range(K):
        a = abs(h[j])
        if a > scale:
            scale = a
    rc_tol = 1e-11 * scale
    piv_tol = 1e-9
    max_iter = 50 * (K + m) + 1000

    basic = np.empty(m, np.int64)
    is_basic = np.zeros(K + m, np.bool_)
    for i in range(m):
        basic[i] = K + i
        is_basic[K + i] = True
    Binv = np.eye(m)
    xb = np.zeros(m)
    xb[d] = 1.0
    theta = np.zeros(d)

    # phase 1: drive the artificial columns to zero
    cost = np.zeros(K + m)
    for i in range(m):
        cost[K + i] = 1.0
    status = _run(G, n_obj, cost, basic, is_basic, Binv, xb, K, m, 1e-11, piv_tol, max_iter)
    if status == ITERATION_LIMIT:
        return status, theta, np.nan, basic, xb
    _refactor(G, n_obj, basic, K, m, Binv, xb)
    infeas = 0.0
    for i in range(m):
        if basic[i] >= K:
            infeas += xb[i]
    if infeas > 1e-9:
        return UNBOUNDED, theta, -np.inf, basic, xb

    # pivot remaining (zero-valued) artificials out where a real column allows it
    col = np.empty(m)
    for r in range(m):
        if basic[r] < K:
            continue
        for j in range(K):
            if is_basic[j]:
                continue
            _column(G, n_obj, j, K, m, col)
            w = 0.0
            for c in range(m):
                w += Binv[r, c] * col[c]
            if abs(w) > piv_tol:
                u = Binv @ col
                for c in range(m):
                    Binv[r, c] /= w
                for i in range(m):
                    if i != r and u[i] != 0.0:
                        f = u[i]
                        for c in range(m):
                            Binv[i, c] -= f * Binv[r, c]
                is_basic[basic[r]] = False
                basic[r] = j
                is_basic[j] = True
                break

    # phase 2: real costs; artificials left in the basis cost nothing
    for j in range(K):
        cost[j] = h[j]
    for i in range(m):
        cost[K + i] = 0.0
    status = _run(G, n_obj, cost, basic, is_basic, Binv, xb, K, m, rc_tol, piv_tol, max_iter)
    if status != OPTIMAL:
        return status, theta, np.nan, basic, xb

    _refactor(G, n_obj, basic, K, m, Binv, xb)
    pi = np.zeros(m)
    for i in range(m):
        s = 0.0
        for r in range(m):
            s += cost[basic[r]] * Binv[r, i]
        pi[i] = s
    for i in range(d):
        theta[i] = pi[i]
    return OPTIMAL, theta, -pi[d], basic, xb
