import numpy as np
import pytest

from maxcon.dataio import GeneratorSpec, generate_synthetic
from maxcon.model import ProblemInstance
from maxcon.oracle import enumerate_optimal, min_removal
from maxcon.search import (
    SearchConfig,
    SearchNode,
    Status,
    TreeSearch,
    Variant,
    adaptive_start_value,
    dibp_prune,
    generate_child,
    make_root,
    napa_admit,
    search,
    tod_reduce,
)
from maxcon.solver import solve_minimax

from conftest import line_instance, small_instance

VARIANTS = [v.value for v in Variant]


def fake_node(level, coverage_size=10, g=1, basis=(0,)):
    node = SearchNode(tuple(basis), tuple(range(100, 100 + level)), 1.0, np.zeros(1), np.arange(coverage_size))
    return node


def test_root_of_clean_data_is_goal():
    inst = line_instance([1.0, 1.05, 0.95, 1.02])
    root = make_root(inst)
    assert root.level == 0 and root.f_value <= inst.epsilon
    for v in VARIANTS:
        res = search(inst, SearchConfig(v))
        assert res.status == Status.OPTIMAL and res.consensus == inst.n and res.nun == 1


def test_root_with_one_gross_outlier():
    inst = line_instance([0.0, 0.05, 0.1, 5.0])
    root = make_root(inst)
    assert root.level == 0
    assert root.evaluation == root.heuristic.h_ins == 1


def test_interpolable_root():
    inst = ProblemInstance.linear([[1.0, 0.0], [0.0, 1.0]], [3.0, -2.0], 0.1)
    root = make_root(inst)
    assert root.basis == () and root.f_value == 0.0


def test_non_adjacent_child():
    # removing point 0 from the level-1 node lets the violated point re-enter
    inst = ProblemInstance.linear([[1.1], [1.7], [1.1], [1.3]], [2.7, -2.1, 2.7, -1.1], 0.1)
    root = make_root(inst)
    parent = next(c for c in (generate_child(inst, root, s) for s in root.basis) if c.basis == (0, 3))
    assert parent.level == 1
    child = generate_child(inst, parent, 0)
    assert child.level == parent.level
    assert not napa_admit(parent, child)


def test_child_resolve_identity():
    inst = small_instance(3, n=14, o=3)
    root = make_root(inst)
    for s in root.basis:
        child = generate_child(inst, root, s)
        again = solve_minimax(inst, child.coverage)
        assert again.value == pytest.approx(child.f_value, rel=1e-9, abs=1e-12)
        assert again.theta == pytest.approx(child.theta, abs=1e-9)
    with pytest.raises(ValueError):
        generate_child(inst, root, int(np.setdiff1d(np.arange(inst.n), root.basis)[0]))


def test_napa_admit_levels():
    parent = fake_node(2)
    assert napa_admit(parent, fake_node(3))
    assert not napa_admit(parent, fake_node(2))
    assert not napa_admit(parent, fake_node(1))


def test_adaptive_start_arithmetic():
    inst, _ = generate_synthetic(GeneratorSpec(n=210, d=8, o=0, seed=0))

    def node(g, cov=201, basis=9):
        n = SearchNode(tuple(range(basis)), (), 1.0, np.zeros(8), np.arange(cov))
        n.heuristic = type("H", (), {"g": g})()
        return n

    assert adaptive_start_value(inst, node(20)) == 1
    assert adaptive_start_value(inst, node(40)) == 5
    assert adaptive_start_value(inst, node(200)) == 9
    assert adaptive_start_value(inst, node(200, basis=4)) == 4
    # 10 - 200/30 = 3.33: sizes above 2.33 may fire, so the start is 3
    assert adaptive_start_value(inst, node(30)) == 3


def test_tod_finds_gross_outlier():
    inst = line_instance([0.0, 0.05, 0.1, 0.02, 0.07, 5.0])
    root = make_root(inst)
    assert tod_reduce(inst, root) == 5
    assert min_removal(inst, root.coverage, [5]) > min_removal(inst, root.coverage)


def test_dibp_single_outlier_fires_at_one():
    inst = line_instance([0.0, 0.05, 0.1, 0.02, 0.07, 5.0])
    root = make_root(inst)
    rec = dibp_prune(inst, root)
    assert rec.branch == (5,) and rec.pruned
    assert rec.checks[0][1] > rec.checks[0][2]


def test_dibp_without_firing_expands_like_napa():
    inst, _ = generate_synthetic(GeneratorSpec(n=20, d=2, o=6, seed=7))
    root = make_root(inst)
    rec = dibp_prune(inst, root)
    assert not rec.pruned and set(rec.branch) == set(root.basis)
    napa = TreeSearch(inst, SearchConfig("napa"))
    napa.evaluate(root)
    assert sorted(napa.expand(root).admitted) == sorted(rec.admitted)


def test_dibp_early_stops_contain_true_outlier():
    for seed in range(15):
        inst = small_instance(300 + seed, n=14, o=4)
        ts = TreeSearch(inst, SearchConfig("napa-dibp", trace=True))
        ts.run()
        for rec in ts.trace:
            if rec.pruned:
                assert rec.checks[-1][1] > rec.checks[-1][2]
                # forcing all of S_B in costs extra removals, so every maximum
                # feasible subset of the coverage leaves out part of S_B
                assert min_removal(inst, rec.coverage, rec.branch) > min_removal(inst, rec.coverage)


def test_variants_agree_with_oracle():
    for seed in range(25):
        inst = small_instance(400 + seed, d=2)
        ref = enumerate_optimal(inst).consensus
        levels = set()
        for v in VARIANTS:
            res = search(inst, SearchConfig(v))
            assert res.status == Status.OPTIMAL and res.consensus == ref, (seed, v)
            levels.add(res.outliers)
            assert res.nun >= res.nodes_expanded
        assert len(levels) == 1


def test_counters_and_dedup():
    inst = small_instance(8, n=16, o=4)
    for v in VARIANTS:
        ts = TreeSearch(inst, SearchConfig(v, trace=True))
        res = ts.run()
        assert res.nodes_expanded == len(ts.expanded) == len(ts.trace)
        if not Variant(v).tod and not Variant(v).dibp:
            assert res.nobp == 0
        if Variant(v).napa:
            for rec in ts.trace:
                assert all(lvl <= rec.level for _, lvl in rec.discarded)
                assert all(adj for _, _, adj in rec.admitted)


def test_popped_evaluations_never_decrease():
    inst = small_instance(12, n=16, o=4)
    ts = TreeSearch(inst, SearchConfig("astar"))
    ts.run()
    assert ts.popped == sorted(ts.popped)


def test_node_limit_gives_timeout_with_best_model():
    inst, _ = generate_synthetic(GeneratorSpec(n=60, d=3, o=8, seed=2))
    res = search(inst, SearchConfig("astar", node_limit=1))
    assert res.status == Status.TIMEOUT
    assert res.theta_star is not None and res.consensus == inst.consensus(res.theta_star)


def test_config_validation():
    with pytest.raises(ValueError):
        SearchConfig("bogus")
    with pytest.raises(ValueError):
        SearchConfig("astar", time_limit=0)


def test_medium_instance_dibp_prunes():
    inst, _ = generate_synthetic(GeneratorSpec(n=200, d=8, o=4, seed=1))
    dibp = search(inst, SearchConfig("napa-dibp"))
    plain = search(inst, SearchConfig("astar"))
    assert dibp.status == plain.status == Status.OPTIMAL
    assert dibp.consensus == plain.consensus
    assert dibp.nun < plain.nun
