import numpy as np
import pytest

from maxcon.dataio import GeneratorSpec, generate_synthetic
from maxcon.heuristic import compute_hins_constrained
from maxcon.model import ProblemInstance
from maxcon.oracle import (
    InstanceTooLarge,
    enumerate_optimal,
    lemma1_diagnostic,
    lo_ransac,
    max_feasible_subset,
    min_removal,
)
from maxcon.search import make_root, tod_reduce

from conftest import line_instance, small_instance


def test_all_inliers():
    inst, _ = generate_synthetic(GeneratorSpec(n=12, d=2, o=0, seed=3))
    assert enumerate_optimal(inst).consensus == 12


def test_planted_truth_is_a_witness():
    for seed in range(5):
        inst, truth = generate_synthetic(GeneratorSpec(n=14, d=2, o=4, seed=seed))
        assert enumerate_optimal(inst).consensus >= 14 - 4


def test_hand_checkable_line():
    res = enumerate_optimal(line_instance([0.0, 0.05, 5.0]))
    assert res.consensus == 2
    assert res.max_feasible_set == (0, 1)


def test_min_removal_examples():
    clean = line_instance([0.0, 0.05, 0.1])
    assert min_removal(clean, range(3)) == 0
    one = line_instance([0.0, 0.05, 0.1, 5.0])
    assert min_removal(one, range(4)) == 1
    assert min_removal(one, range(4), [3]) > min_removal(one, range(4))
    with pytest.raises(ValueError):
        min_removal(one, [0, 1], [3])


def test_max_feasible_subset_keeps_forced():
    inst = small_instance(5)
    best = max_feasible_subset(inst, range(inst.n), [2])
    assert 2 in best


def test_budget():
    inst, _ = generate_synthetic(GeneratorSpec(n=40, d=3, o=2, seed=0))
    with pytest.raises(InstanceTooLarge):
        enumerate_optimal(inst)
    with pytest.raises(InstanceTooLarge):
        enumerate_optimal(small_instance(1), max_subsets=5)


def test_outlier_rate_diagnostic_on_dense_outliers():
    # ten unrelated points in the plane: most points are true outliers
    rng = np.random.default_rng(4)
    inst = ProblemInstance.linear(rng.uniform(-1, 1, (10, 2)), rng.uniform(-3, 3, 10), 0.1)
    root = make_root(inst)
    hstar = min_removal(inst, root.coverage)
    assert hstar / root.coverage.size >= 0.5
    hits = 0
    for s in root.basis:
        res = compute_hins_constrained(inst, root.coverage, [s])
        if lemma1_diagnostic(root, res, hstar):
            hits += 1
            assert res.h_ins <= root.heuristic.g
    assert hits > 0
    assert tod_reduce(inst, root) is None


def test_outlier_rate_diagnostic_trivial_cases():
    inst = line_instance([0.0, 0.05, 0.1, 5.0])
    root = make_root(inst)
    res = compute_hins_constrained(inst, root.coverage, [0])
    assert not lemma1_diagnostic(root, res, 0)
    clean = line_instance([0.0, 0.05])
    r0 = make_root(clean)
    assert not lemma1_diagnostic(r0, compute_hins_constrained(clean, r0.coverage, [0]), 0)


def test_lo_ransac():
    inst, _ = generate_synthetic(GeneratorSpec(n=15, d=2, o=0, seed=1))
    assert lo_ransac(inst, seed=3).consensus == 15
    for seed in range(10):
        inst = small_instance(50 + seed)
        lo = lo_ransac(inst, iterations=30, seed=seed)
        assert lo.consensus <= enumerate_optimal(inst).consensus
        again = lo_ransac(inst, iterations=30, seed=seed)
        assert again.consensus == lo.consensus and np.array_equal(again.witness_model, lo.witness_model)
    with pytest.raises(ValueError):
        lo_ransac(inst, iterations=0)
