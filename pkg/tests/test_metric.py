import numpy as np
import pytest

from partialclust import (
    ClusteringSolution,
    Demand,
    EvalCounter,
    Instance,
    MetricSpace,
    Objective,
    dedupe_demands,
    extremes,
    instance_cost,
    point_demand,
    solution_cost,
    truncated_distance,
)
from partialclust.errors import (
    DegenerateInstanceError,
    InconsistentSolutionError,
    InvalidParameterError,
    InvalidPointError,
)

from helpers import random_points


def test_objective_powers_and_sums():
    assert Objective.MEDIAN.power == 1
    assert Objective.MEANS.power == 2
    assert Objective.CENTER.power == 1
    assert Objective.MEDIAN.is_sum and Objective.MEANS.is_sum
    assert not Objective.CENTER.is_sum


def test_objective_from_string():
    assert Objective.from_string("median") is Objective.MEDIAN
    assert Objective.from_string("means") is Objective.MEANS
    assert Objective.from_string("center") is Objective.CENTER
    with pytest.raises(InvalidParameterError):
        Objective.from_string("center-pp")


def test_euclidean_distances_match_numpy():
    pts = random_points(1, 12, dim=3)
    space = MetricSpace.euclidean(pts)
    for u in range(12):
        for v in range(12):
            assert space.distance(u, v) == pytest.approx(
                np.linalg.norm(pts[u] - pts[v]), abs=1e-12)
    assert space.word_width == 3
    assert space.n == 12


def test_block_matches_pairwise(square_space):
    rows, cols = [0, 2, 4], [1, 3]
    blk = square_space.block(rows, cols)
    for a, u in enumerate(rows):
        for b, v in enumerate(cols):
            assert blk[a, b] == pytest.approx(square_space.distance(u, v))


def test_matrix_space_roundtrip_and_width():
    pts = random_points(2, 6)
    eu = MetricSpace.euclidean(pts)
    M = np.array([[eu.distance(i, j) for j in range(6)] for i in range(6)])
    sp = MetricSpace.from_matrix(M)
    assert sp.word_width == 1
    assert sp.distance(1, 4) == eu.distance(1, 4)


def test_matrix_space_rejects_bad_input():
    with pytest.raises(InvalidParameterError):
        MetricSpace.from_matrix(np.ones((2, 3)))
    M = np.zeros((3, 3))
    M[0, 1], M[1, 0] = 1.0, 2.0
    with pytest.raises(InvalidParameterError):
        MetricSpace.from_matrix(M)
    N = np.array([[0.0, -1.0], [-1.0, 0.0]])
    with pytest.raises(InvalidParameterError):
        MetricSpace.from_matrix(N)


def test_point_index_bounds(square_space):
    with pytest.raises(InvalidPointError):
        square_space.distance(0, 5)
    with pytest.raises(InvalidPointError):
        square_space.distance(-1, 0)


def test_truncated_distance(square_space):
    d = square_space.distance(0, 4)
    assert truncated_distance(square_space, 0, 4, 10.0) == pytest.approx(d - 10.0)
    assert truncated_distance(square_space, 0, 4, d + 5.0) == 0.0
    assert truncated_distance(square_space, 0, 4, 0.0) == pytest.approx(d)


def test_extremes(square_space):
    d_min, d_max, spread = extremes(square_space)
    assert d_min == pytest.approx(1.0)
    assert d_max == pytest.approx(np.sqrt(50.0**2 + 1.0))
    assert spread == pytest.approx(d_max / d_min)


def test_extremes_rejects_duplicates():
    pts = np.array([[0.0, 0.0], [0.0, 0.0], [1.0, 1.0]])
    with pytest.raises(DegenerateInstanceError):
        extremes(MetricSpace.euclidean(pts))


def test_demand_validation():
    with pytest.raises(InvalidParameterError):
        Demand((), ())
    with pytest.raises(InvalidParameterError):
        Demand((0,), (0.5,))
    with pytest.raises(InvalidParameterError):
        Demand((0, 1), (0.5, 0.5), weight=0)
    with pytest.raises(InvalidParameterError):
        Demand((0,), (1.0,), collapse=-1.0)
    d = Demand((3, 4), (0.25, 0.75), collapse=2.0, weight=2)
    assert d.anchor == 3
    assert not d.is_point
    assert point_demand(7).is_point


def test_dedupe_merges_coincident_points():
    pts = np.array([[0.0, 0.0], [1.0, 1.0], [0.0, 0.0], [1.0, 1.0], [2.0, 2.0]])
    space = MetricSpace.euclidean(pts)
    demands = dedupe_demands(space, range(5))
    assert [d.anchor for d in demands] == [0, 1, 4]
    assert [d.weight for d in demands] == [2, 2, 1]
    assert demands[0].tag == (0, 2)
    assert demands[1].tag == (1, 3)


def test_instance_counts_distance_evaluations(square_space):
    counter = EvalCounter()
    inst = Instance.from_points(square_space, counter=counter)
    assert counter.count == 0
    inst.cost_matrix(Objective.MEDIAN)
    first = counter.count
    assert first == inst.n * len(inst.candidates)
    # cached: asking again is free
    inst.cost_matrix(Objective.MEDIAN)
    assert counter.count == first
    inst.cost_matrix(Objective.MEANS)
    assert counter.count == 2 * first


def test_cost_matrix_values_with_collapse(square_space):
    d = Demand((0, 1), (0.5, 0.5), collapse=3.0)
    inst = Instance(square_space, (d,), (0, 4))
    M1 = inst.cost_matrix(Objective.MEDIAN)
    expect = 3.0 + 0.5 * square_space.distance(0, 4) + 0.5 * square_space.distance(1, 4)
    assert M1[0, 1] == pytest.approx(expect)
    M2 = inst.cost_matrix(Objective.MEANS)
    expect2 = 3.0 + 0.5 * square_space.distance(0, 4) ** 2 + 0.5 * square_space.distance(1, 4) ** 2
    assert M2[0, 1] == pytest.approx(expect2)


def test_cost_matrix_truncation(square_space):
    inst = Instance.from_points(square_space)
    tau = 2.0
    M = inst.cost_matrix(Objective.MEDIAN, tau)
    for j in range(inst.n):
        for c in range(len(inst.candidates)):
            d = square_space.distance(inst.demands[j].anchor, inst.candidates[c])
            assert M[j, c] == pytest.approx(max(d - tau, 0.0))


def test_pair_matrix_symmetric_zero_diagonal(square_instance):
    P = square_instance.pair_matrix()
    assert np.allclose(P, P.T)
    assert np.all(np.diag(P) == 0.0)


def test_subset_shares_counter(square_space):
    counter = EvalCounter()
    inst = Instance.from_points(square_space, counter=counter)
    sub = inst.subset([0, 1, 2])
    sub.cost_matrix(Objective.MEDIAN)
    assert counter.count > 0
    assert sub.counter is inst.counter


def test_instance_cost_recomputes_and_validates(square_space):
    inst = Instance.from_points(square_space)
    sol = ClusteringSolution(
        centers=(0,), outliers={4: 1},
        assignment={0: 0, 1: 0, 2: 0, 3: 0}, cost=0.0)
    got = instance_cost(inst, sol, Objective.MEDIAN)
    expect = sum(square_space.distance(j, 0) for j in range(4))
    assert got == pytest.approx(expect)
    bad = ClusteringSolution(centers=(0,), outliers={}, assignment={0: 0}, cost=0.0)
    with pytest.raises(InconsistentSolutionError):
        instance_cost(inst, bad, Objective.MEDIAN)


def test_instance_cost_honors_copy_assignment():
    pts = np.array([[0.0, 0.0], [10.0, 0.0], [5.0, 0.0]])
    space = MetricSpace.euclidean(pts)
    d = Demand((2,), (1.0,), weight=4, tag=(0, 1, 2, 3))
    inst = Instance(space, (d,), (0, 1, 2))
    split = ClusteringSolution(
        centers=(0, 1), outliers={0: 1},
        assignment={0: 0},
        copy_assignment={0: ((0, 2), (1, 1))},
        cost=0.0)
    got = instance_cost(inst, split, Objective.MEDIAN)
    assert got == pytest.approx(2 * 5.0 + 1 * 5.0)


def test_solution_cost_center_takes_max(square_space):
    sol = ClusteringSolution(
        centers=(0,), outliers={4: 1},
        assignment={0: 0, 1: 0, 2: 0, 3: 0}, cost=0.0)
    got = solution_cost(square_space, sol, Objective.CENTER)
    assert got == pytest.approx(square_space.distance(3, 0))


def test_total_excluded_property():
    sol = ClusteringSolution(centers=(0,), outliers={1: 2, 5: 1}, assignment={}, cost=0.0)
    assert sol.total_excluded == 3
    assert sol.excluded_copies(1) == 2
    assert sol.excluded_copies(9) == 0
