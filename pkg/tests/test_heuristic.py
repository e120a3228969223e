import math

import numpy as np
import pytest

from maxcon.heuristic import UNBOUNDED, HeuristicCache, compute_hins, compute_hins_constrained
from maxcon.oracle import max_feasible_subset, min_removal
from maxcon.solver import solve_minimax

from conftest import line_instance, small_instance


def test_feasible_coverage_is_zero():
    inst = line_instance([0.0, 0.05, 0.1])
    res = compute_hins(inst, range(3))
    assert (res.h_ins, res.g) == (0, 0)
    assert res.phi is None


def test_single_gross_outlier():
    inst = line_instance([0.0, 0.05, 0.1, 5.0])
    res = compute_hins(inst, range(4))
    assert res.h_ins == 1 == min_removal(inst, range(4))
    # reinserting 5.0 fails and ejects {0, 5.0}; the fit of the survivors
    # still covers the point at 0, so only 5.0 is left out
    assert res.g == 1
    assert res.feasible_set == (0, 1, 2)
    assert solve_minimax(inst, res.feasible_set).value <= inst.epsilon


def test_invariants_and_admissibility():
    for seed in range(50):
        inst = small_instance(seed, d=1 + seed % 2)
        cov = np.arange(inst.n)
        res = compute_hins(inst, cov)
        hstar = min_removal(inst, cov)
        assert 0 <= res.h_ins <= hstar <= res.g, seed
        assert res.g == inst.n - len(res.feasible_set)
        if res.feasible_set:
            assert solve_minimax(inst, res.feasible_set).value <= inst.epsilon
        assert len(res.ejected_basis_sizes) == res.h_ins


def test_constrained_without_forced_is_plain():
    inst = small_instance(7)
    assert compute_hins_constrained(inst, range(inst.n), ()) == compute_hins(inst, range(inst.n))


def test_incompatible_forced_points_are_unbounded():
    inst = line_instance([0.0, 10.0, 0.05], eps=0.1)
    res = compute_hins_constrained(inst, range(3), [0, 1])
    assert res.h_ins == UNBOUNDED and res.unbounded
    assert math.isinf(min_removal(inst, range(3), [0, 1]))


def test_constrained_admissible():
    for seed in range(30):
        inst = small_instance(100 + seed)
        cov = np.arange(inst.n)
        s = int(solve_minimax(inst, cov).basis[0]) if solve_minimax(inst, cov).basis else 0
        res = compute_hins_constrained(inst, cov, [s])
        assert res.h_ins <= min_removal(inst, cov, [s])


def test_forcing_an_outlier_raises_the_bound():
    inst = line_instance([0.0, 0.05, 0.1, 0.02, 5.0])
    free = compute_hins(inst, range(5))
    forced = compute_hins_constrained(inst, range(5), [4])
    assert forced.h_ins > free.g


def test_bound_mode_decides_like_full_run():
    inst = small_instance(5, n=15, o=4)
    cov = range(inst.n)
    for s in range(inst.n):
        full = compute_hins_constrained(inst, cov, [s])
        for bound in (0, 1, 2, 3, 5):
            quick = compute_hins_constrained(inst, cov, [s], bound=bound)
            assert (quick.h_ins > bound) == (full.h_ins > bound)


def test_phi_bound_on_constrained_runs():
    for seed in range(20):
        inst = small_instance(200 + seed, n=15)
        for s in range(0, inst.n, 3):
            res = compute_hins_constrained(inst, range(inst.n), [s])
            if res.phi is not None:
                assert res.h_ins * res.phi <= inst.n - 1


def test_cache_hits_and_audit_list():
    inst = small_instance(9)
    cache = HeuristicCache()
    a = compute_hins_constrained(inst, range(inst.n), [0], cache)
    b = compute_hins_constrained(inst, range(inst.n), [0], cache)
    assert a is b and cache.hits == 1
    assert len(cache.constrained) == 1
    cov, res = cache.constrained[0]
    assert cov.tolist() == list(range(inst.n)) and res is a


def test_argument_checks():
    inst = small_instance(1)
    with pytest.raises(ValueError):
        compute_hins(inst, [])
    with pytest.raises(ValueError):
        compute_hins_constrained(inst, [0, 1, 2], [5])


def test_theta_g_witnesses_feasible_set():
    inst = small_instance(13, n=15, o=4)
    res = compute_hins(inst, range(inst.n))
    r = inst.residuals(res.theta_g, list(res.feasible_set))
    assert np.all(r <= inst.epsilon + 1e-12)
    assert max_feasible_subset(inst, range(inst.n)) is not None
