"""Centralized solvers: Gonzalez, threshold sweep, primal-dual, the oracle."""

import numpy as np
import pytest

from partialclust import (
    BicriteriaConfig,
    Instance,
    MetricSpace,
    Objective,
    bicriteria_median,
    bicriteria_truncated_center,
    combine_weighted,
    exact_oracle,
    gonzalez_order,
    insertion_marginals,
    instance_cost,
    jv_facility_location,
    kt_center_outliers,
    pad_centers,
    solution_from_centers,
)
from partialclust.errors import (
    InfeasibleError,
    InvalidParameterError,
    OracleSizeLimitError,
)

from helpers import random_instance, random_points


# ---------------------------------------------------------------------------
# assignment helpers


def test_solution_from_centers_exact_budget(line_space):
    inst = Instance.from_points(line_space)
    sol = solution_from_centers(inst, (0,), Objective.MEDIAN, 1)
    assert sol.total_excluded == 1
    assert sol.outliers == {3: 1}  # the far point goes first
    assert sol.cost == pytest.approx(1.0 + 2.0)


def test_solution_from_centers_splits_weighted_demand():
    pts = np.array([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [9.0, 0.0]])
    space = MetricSpace.euclidean(pts)
    inst = Instance.from_points(space)  # merges into weights (3, 1)
    sol = solution_from_centers(inst, (3,), Objective.MEDIAN, 2)
    # two of the three coincident copies are excluded, one copy remains
    assert sol.total_excluded == 2
    assert sol.outliers == {0: 2}
    assert sol.cost == pytest.approx(9.0)


def test_pad_centers_adds_and_never_hurts(line_space):
    inst = Instance.from_points(line_space)
    base = solution_from_centers(inst, (0,), Objective.MEDIAN, 1)
    padded = pad_centers(inst, base, 3, Objective.MEDIAN, 1)
    assert len(padded.centers) == 3
    assert padded.total_excluded == 1
    assert padded.cost <= base.cost + 1e-12


# ---------------------------------------------------------------------------
# farthest-first traversal


def test_gonzalez_order_line(line_space):
    inst = Instance.from_points(line_space)
    g = gonzalez_order(inst)
    assert g.order == (0, 3, 2, 1)
    assert g.radii == pytest.approx((100.0, 2.0, 1.0))


def test_gonzalez_ties_break_low_index():
    pts = np.array([[0.0], [5.0], [-5.0]])
    inst = Instance.from_points(MetricSpace.euclidean(pts))
    g = gonzalez_order(inst)
    assert g.order[1] == 1  # both at distance 5; lower index wins


def test_insertion_marginals(line_space):
    inst = Instance.from_points(line_space)
    g = gonzalez_order(inst)
    assert insertion_marginals(g, 1, 3) == pytest.approx([100.0, 2.0, 1.0])
    assert insertion_marginals(g, 2, 3) == pytest.approx([2.0, 1.0, 0.0])
    # exhausted traversal yields zero marginals
    assert insertion_marginals(g, 4, 2) == pytest.approx([0.0, 0.0])


def test_gonzalez_prefix_two_approx_spot():
    """Radius of the k-prefix is within 2x of the best k-center radius."""
    from itertools import combinations
    for seed in range(10):
        inst = random_instance(seed, 9)
        D = inst.pair_matrix()
        g = gonzalez_order(inst)
        for k in range(1, 5):
            prefix = list(g.order[:k])
            got = D[:, prefix].min(axis=1).max()
            best = min(
                D[:, list(c)].min(axis=1).max()
                for c in combinations(range(inst.n), k))
            assert got <= 2.0 * best + 1e-9


# ---------------------------------------------------------------------------
# k-center with outliers


def test_kt_center_outliers_line(line_space):
    inst = Instance.from_points(line_space)
    sol = kt_center_outliers(inst, 1, 1)
    assert sol.centers == (1,)
    assert sol.outliers == {3: 1}
    assert sol.cost == pytest.approx(1.0)


def test_kt_center_outliers_three_approx():
    from itertools import combinations
    for seed in range(15):
        inst = random_instance(100 + seed, 10)
        M = inst.cost_matrix(Objective.CENTER)
        for k, t in [(1, 1), (2, 1), (2, 2)]:
            sol = kt_center_outliers(inst, k, t)
            assert sol.total_excluded == t
            best = None
            for combo in combinations(range(inst.n), k):
                costs = np.sort(M[:, list(combo)].min(axis=1))
                r = costs[-(t + 1)]  # drop the t worst
                best = r if best is None else min(best, r)
            assert sol.cost <= 3.0 * best + 1e-9


def test_kt_center_rejects_exhausted_budget(line_space):
    inst = Instance.from_points(line_space)
    with pytest.raises(InfeasibleError):
        kt_center_outliers(inst, 1, 4)
    with pytest.raises(InvalidParameterError):
        kt_center_outliers(inst, 0, 1)


# ---------------------------------------------------------------------------
# primal-dual facility location


def test_jv_zero_cost_opens_everything():
    inst = random_instance(3, 8)
    res = jv_facility_location(inst, 0.0, Objective.MEDIAN)
    assert len(res.centers) == 8  # free facilities: every demand self-serves


def test_jv_early_stop_leaves_exact_weight():
    inst = random_instance(4, 10)
    for t in (1, 2, 3):
        res = jv_facility_location(inst, 5.0, Objective.MEDIAN, stop_weight=t)
        assert res.certificate.unprocessed_weight == t
        assert all(c in inst.candidates for c in res.centers)


def test_jv_deterministic():
    inst = random_instance(5, 12)
    a = jv_facility_location(inst, 7.5, Objective.MEDIAN, stop_weight=2)
    b = jv_facility_location(inst, 7.5, Objective.MEDIAN, stop_weight=2)
    assert a.centers == b.centers
    assert np.array_equal(a.certificate.alpha, b.certificate.alpha)


def test_jv_fewer_centers_as_price_rises():
    inst = random_instance(6, 12)
    opened = [
        len(jv_facility_location(inst, z, Objective.MEDIAN).centers)
        for z in (0.0, 1.0, 10.0, 1e4)
    ]
    assert opened[0] == 12
    assert all(a >= b for a, b in zip(opened, opened[1:]))
    assert opened[-1] == 1


# ---------------------------------------------------------------------------
# bicriteria solver


def test_bicriteria_outlier_relax_respects_caps():
    for seed in range(20):
        inst = random_instance(200 + seed, 12)
        cfg = BicriteriaConfig(epsilon=1.0, relax="outliers")
        sol = bicriteria_median(inst, 2, 2, cfg, seed=seed)
        assert len(sol.centers) <= 2
        assert sol.total_excluded <= 4  # floor((1+eps) t)
        assert instance_cost(inst, sol, Objective.MEDIAN) == pytest.approx(sol.cost)


def test_bicriteria_center_relax_respects_caps():
    for seed in range(20):
        inst = random_instance(300 + seed, 12)
        cfg = BicriteriaConfig(epsilon=1.0, relax="centers")
        sol = bicriteria_median(inst, 2, 2, cfg, seed=seed)
        assert len(sol.centers) <= 4  # ceil((1+eps) k)
        assert sol.total_excluded == 2
        assert instance_cost(inst, sol, Objective.MEDIAN) == pytest.approx(sol.cost)


def test_bicriteria_cost_vs_oracle_spot():
    for seed in range(15):
        inst = random_instance(400 + seed, 12)
        cfg = BicriteriaConfig(epsilon=1.0, relax="outliers")
        sol = bicriteria_median(inst, 2, 1, cfg, seed=seed)
        opt = exact_oracle(inst, 2, 1, Objective.MEDIAN)
        assert sol.cost <= 6.0 * opt.cost + 1e-9


def test_bicriteria_zero_spread_instance():
    pts = np.zeros((6, 2))
    inst = Instance.from_points(MetricSpace.euclidean(pts), merge_duplicates=False)
    sol = bicriteria_median(inst, 2, 1, BicriteriaConfig(relax="outliers"))
    assert sol.cost == 0.0
    assert sol.total_excluded <= 2


def test_bicriteria_few_candidates_short_circuit():
    pts = np.array([[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]])
    inst = Instance.from_points(MetricSpace.euclidean(pts))
    sol = bicriteria_median(inst, 3, 0, BicriteriaConfig())
    assert set(sol.centers) == {0, 1, 2}
    assert sol.cost == 0.0


def test_truncated_center_measures_looser_radius():
    inst = random_instance(7, 10)
    tau = 0.5
    sol = bicriteria_truncated_center(inst, 2, 1, tau,
                                      BicriteriaConfig(epsilon=1.0, relax="outliers"))
    assert instance_cost(inst, sol, Objective.MEDIAN, tau=9 * tau) == pytest.approx(sol.cost)
    solc = bicriteria_truncated_center(inst, 2, 1, tau,
                                       BicriteriaConfig(epsilon=1.0, relax="centers"))
    assert instance_cost(inst, solc, Objective.MEDIAN, tau=3 * tau) == pytest.approx(solc.cost)
    with pytest.raises(InvalidParameterError):
        bicriteria_truncated_center(inst, 2, 1, -1.0)


# ---------------------------------------------------------------------------
# exhaustive oracle


def test_oracle_line_instance(line_space):
    inst = Instance.from_points(line_space)
    sol = exact_oracle(inst, 2, 1, Objective.MEDIAN)
    assert sol.cost == pytest.approx(1.0)
    assert sol.outliers == {3: 1}
    assert sol.centers == (0, 1)  # ties resolve to the smallest center tuple


def test_oracle_center_objective(line_space):
    inst = Instance.from_points(line_space)
    sol = exact_oracle(inst, 1, 1, Objective.CENTER)
    assert sol.cost == pytest.approx(1.0)
    assert sol.centers == (1,)


def test_oracle_guard():
    inst = random_instance(8, 19)
    with pytest.raises(OracleSizeLimitError):
        exact_oracle(inst, 2, 1, Objective.MEDIAN)
    small = random_instance(9, 8)
    with pytest.raises(OracleSizeLimitError):
        exact_oracle(small, 5, 1, Objective.MEDIAN)


def test_oracle_never_beaten_by_heuristics():
    for seed in range(10):
        inst = random_instance(500 + seed, 11)
        opt = exact_oracle(inst, 2, 2, Objective.MEDIAN)
        cfg = BicriteriaConfig(epsilon=1.0, relax="centers")
        heur = bicriteria_median(inst, 2, 2, cfg, seed=seed)
        assert opt.cost <= heur.cost + 1e-9


# ---------------------------------------------------------------------------
# weighted combine


def test_combine_weighted_runs_all_objectives():
    pts = random_points(10, 12)
    space = MetricSpace.euclidean(pts)
    weighted = [(0, 4), (5, 3), (9, 2)]
    forwarded = [2, 7]
    for obj in (Objective.MEDIAN, Objective.MEANS, Objective.CENTER):
        sol = combine_weighted(space, weighted, forwarded, k=2, t=2, objective=obj)
        assert 1 <= len(sol.centers) <= 2
        assert sol.total_excluded <= 4 if obj.is_sum else sol.total_excluded == 2
