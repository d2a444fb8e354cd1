"""Clustering uncertain data: nodes that are distributions over the universe.

An :class:`UncertainNode` realizes one of finitely many universe points with
known probabilities. Under expected-distance objectives, each node collapses
onto its 1-median ``y_j`` at additive cost ``l_j``; the pairs (y_j, l_j) form
a compressed graph of "tentacles" whose optimum is within a constant factor
of the universe optimum, and whose solutions map back losslessly (the final
assignment is evaluated under both metrics, and the factor is asserted on
every run). For the expected-maximum center objective the collapse is not
sound; :func:`run_center_g` instead searches a geometric grid of truncation
thresholds and forwards whole node distributions at the chosen one.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .allocation import allocate, exceptional_adjust, geometric_index_set, lower_hull
from .errors import (
    InfeasibleError,
    InternalInvariantError,
    InvalidParameterError,
    OracleSizeLimitError,
)
from .metric import (
    ClusteringSolution,
    Demand,
    EvalCounter,
    Instance,
    Objective,
    extremes,
)
from .protocol import (
    CommLedger,
    ProtocolReport,
    _assemble_coordinator,
    _lift_solution,
    _local_solution,
    _run_sites,
    _validate_common,
)
from .solvers import (
    BicriteriaConfig,
    bicriteria_median,
    bicriteria_truncated_center,
    gonzalez_order,
    insertion_marginals,
    kt_center_outliers,
    pad_centers,
    solution_from_centers,
)


@dataclass(frozen=True)
class UncertainNode:
    """A distribution over universe point indices."""

    node_id: int
    support: tuple
    probs: tuple

    def __post_init__(self):
        if len(self.support) != len(self.probs) or not self.support:
            raise InvalidParameterError("support and probs must be nonempty and aligned")
        if len(set(self.support)) != len(self.support):
            raise InvalidParameterError("support points must be distinct")
        if any(p <= 0 for p in self.probs):
            raise InvalidParameterError("support probabilities must be positive")
        if abs(sum(self.probs) - 1.0) > 1e-9:
            raise InvalidParameterError("support probabilities must sum to 1")


def expected_distance(space, node, u, counter=None):
    """E_{a ~ node} d(a, u)."""
    D = space.block(list(node.support), [u])
    if counter is not None:
        counter.add(D.size)
    return float(np.asarray(node.probs) @ D[:, 0])


def expected_truncated(space, node, u, tau, counter=None):
    """E_{a ~ node} max(d(a, u) - tau, 0)."""
    if tau < 0:
        raise InvalidParameterError("tau must be >= 0")
    D = np.maximum(space.block(list(node.support), [u]) - tau, 0.0)
    if counter is not None:
        counter.add(D.size)
    return float(np.asarray(node.probs) @ D[:, 0])


@dataclass(frozen=True)
class OneMedianSummary:
    """Best single universe point for one node, with its expected cost."""

    node_id: int
    point: int
    value: float


def one_median(space, node, objective=Objective.MEDIAN, counter=None):
    """Exhaustive 1-median (or 1-mean) of a node over the whole universe.

    Ties break toward the lower point index. This is the collapse step: the
    node is later represented by the pair (point, value).
    """
    D = space.block(list(node.support), np.arange(space.n))
    if counter is not None:
        counter.add(D.size)
    if objective.power == 2:
        D = D * D
    vals = np.asarray(node.probs) @ D
    best = int(np.argmin(vals))
    return OneMedianSummary(node.node_id, best, float(vals[best]))


@dataclass(frozen=True)
class CompressedGraph:
    """Collapse summaries of a node family, as tentacle demands.

    A tentacle demand anchors at the node's 1-median and carries the collapse
    cost as an additive offset, so d-hat(j, u) = l_j + d(y_j, u): an upper
    bound on the expected distance that is at most a factor 2 loose (4 for
    squared distances).
    """

    summaries: tuple

    def demands(self):
        return [
            Demand((s.point,), (1.0,), s.value, 1, (s.node_id,))
            for s in self.summaries
        ]


def build_compressed_graph(space, nodes, objective=Objective.MEDIAN, counter=None):
    summaries = tuple(one_median(space, nd, objective, counter) for nd in nodes)
    return CompressedGraph(summaries)


@dataclass(frozen=True)
class NodePartition:
    """Assignment of every node of an uncertain dataset to exactly one site.

    The universe (the metric space) is shared knowledge; only node
    distributions are private to their site.
    """

    space: object
    nodes: tuple
    sites: tuple

    def __post_init__(self):
        for i, nd in enumerate(self.nodes):
            if nd.node_id != i:
                raise InvalidParameterError("node ids must equal their positions")
        seen = set()
        if not self.sites:
            raise InvalidParameterError("partition needs at least one site")
        for i, idx in enumerate(self.sites):
            if len(idx) == 0:
                raise InvalidParameterError(f"site {i} holds no nodes")
            for j in idx:
                if j in seen:
                    raise InvalidParameterError(f"node {j} placed on two sites")
                seen.add(j)
        if seen != set(range(len(self.nodes))):
            raise InvalidParameterError("sites must cover every node exactly once")

    @property
    def n_sites(self):
        return len(self.sites)

    @classmethod
    def round_robin(cls, space, nodes, s):
        if s < 1 or s > len(nodes):
            raise InvalidParameterError("bad site count")
        return cls(space, tuple(nodes),
                   tuple(tuple(range(i, len(nodes), s)) for i in range(s)))

    @classmethod
    def contiguous(cls, space, nodes, s):
        if s < 1 or s > len(nodes):
            raise InvalidParameterError("bad site count")
        parts = np.array_split(np.arange(len(nodes)), s)
        return cls(space, tuple(nodes), tuple(tuple(int(j) for j in p) for p in parts))

    @classmethod
    def from_lists(cls, space, nodes, lists):
        return cls(space, tuple(nodes), tuple(tuple(int(j) for j in l) for l in lists))


def node_universe_cost(space, node, center, objective, tau=0.0, counter=None):
    """Expected cost of serving one node from ``center`` on the universe."""
    D = space.block(list(node.support), [center])
    if counter is not None:
        counter.add(D.size)
    if tau > 0:
        D = np.maximum(D - tau, 0.0)
    if objective.power == 2:
        D = D * D
    return float(np.asarray(node.probs) @ D[:, 0])


def _node_solution(all_demands, demand_sol):
    """Demand-level solution -> node-level via node-id tags."""
    assignment = {}
    outliers = {}
    for g, d in enumerate(all_demands):
        nid = int(d.tag[0])
        if demand_sol.excluded_copies(g) > 0:
            outliers[nid] = 1
        else:
            assignment[nid] = demand_sol.assignment[g]
    return ClusteringSolution(demand_sol.centers, outliers, assignment,
                              demand_sol.cost)


_UNCERTAIN_OBJECTIVES = {
    "median": Objective.MEDIAN,
    "means": Objective.MEANS,
    "center-pp": Objective.CENTER,
}


def run_uncertain(npartition, k, t, objective="median", epsilon=1.0, seed=0,
                  jobs=1, rho=2.0):
    """Distributed (k, t) clustering of uncertain nodes via collapse.

    Phase 0 is communication-free: every site collapses its own nodes onto
    their 1-medians (1-means for the squared objective). The deterministic
    two-round machinery then runs on the tentacle demands; a forwarded
    outlier costs B + 1 words (anchor plus collapse offset). The report's
    solution is node-level; its cost is the compressed-graph cost, and the
    expected-distance cost of the same assignment on the universe (recorded
    in ``extras``) is asserted to be at most 2x that (4x for means).
    """
    if objective not in _UNCERTAIN_OBJECTIVES:
        raise InvalidParameterError(
            f"objective must be one of {sorted(_UNCERTAIN_OBJECTIVES)}")
    obj = _UNCERTAIN_OBJECTIVES[objective]
    _validate_common(k, t, seed, epsilon)
    if not 1.0 < rho <= 2.0:
        raise InvalidParameterError("rho must lie in (1, 2]")
    space = npartition.space
    if len(npartition.nodes) <= t:
        raise InfeasibleError(f"outlier budget t={t} >= {len(npartition.nodes)} nodes")
    collapse_obj = Objective.MEANS if obj is Objective.MEANS else Objective.MEDIAN

    def collapse_site(i):
        start = time.perf_counter()
        counter = EvalCounter()
        graph = build_compressed_graph(
            space, [npartition.nodes[j] for j in npartition.sites[i]],
            collapse_obj, counter)
        demands = graph.demands()
        inst = Instance(space, demands, [d.anchor for d in demands],
                        counter=counter, payload_kind="tentacle")
        return inst, graph, time.perf_counter() - start

    prep = _run_sites(collapse_site, npartition.n_sites, jobs)
    site_insts = [inst for inst, _, _ in prep]
    secs0 = [dt for _, _, dt in prep]
    ledger = CommLedger()

    if obj is Objective.CENTER:
        def worker(i):
            start = time.perf_counter()
            gorder = gonzalez_order(site_insts[i])
            marg = insertion_marginals(gorder, k, t)
            return gorder, marg, time.perf_counter() - start

        results = _run_sites(worker, npartition.n_sites, jobs)
        for i in range(npartition.n_sites):
            ledger.add(1, "site->coord", i, "marginals", t)
        alloc = allocate([m for _, m, _ in results], t, rho)
        for i in range(npartition.n_sites):
            ledger.add(1, "coord->site", i, "pivot", 3)
        site_sols = []
        for i, (gorder, _, _) in enumerate(results):
            inst = site_insts[i]
            take = min(k + alloc.t_by_site[i], inst.n)
            prefix = [inst.demands[j].anchor for j in gorder.order[:take]]
            site_sols.append(solution_from_centers(inst, prefix, obj, 0))
        secs1 = [dt for _, _, dt in results]
        forward = False
    else:
        index_set = geometric_index_set(t, rho)

        def worker(i):
            start = time.perf_counter()
            inst = site_insts[i]
            sols, pts = {}, []
            for qi, q in enumerate(index_set.values):
                sol = _local_solution(inst, k, q, obj, seed=(seed, 31, i, qi))
                sols[q] = sol
                pts.append((q, sol.cost))
            return sols, lower_hull(i, pts), time.perf_counter() - start

        results = _run_sites(worker, npartition.n_sites, jobs)
        curves = [c for _, c, _ in results]
        for i, c in enumerate(curves):
            ledger.add(1, "site->coord", i, "cost-curve", 2 * c.n_vertices)
        alloc = allocate([c.marginals() for c in curves], t, rho)
        if alloc.pivot_site is not None:
            alloc = exceptional_adjust(alloc, curves[alloc.pivot_site])
        for i in range(npartition.n_sites):
            ledger.add(1, "coord->site", i, "pivot", 3)
        site_sols = [results[i][0][alloc.t_by_site[i]]
                     for i in range(npartition.n_sites)]
        secs1 = [dt for _, _, dt in results]
        forward = True

    coord_counter = EvalCounter()
    coord_inst, prov = _assemble_coordinator(
        space, site_insts, site_sols, obj, coord_counter,
        forward_outliers=forward, ledger=ledger, payload_kind="tentacle")
    if obj is Objective.CENTER:
        final = kt_center_outliers(coord_inst, k, t)
    else:
        cfg = BicriteriaConfig(epsilon=epsilon, relax="outliers")
        final = bicriteria_median(coord_inst, k, t, cfg, obj, seed=(seed, 3))
    demand_sol, view = _lift_solution(space, site_insts, prov, final, obj,
                                      coord_counter)
    node_sol = _node_solution(view.demands, demand_sol)

    graph_cost = demand_sol.cost
    total = 0.0
    worst = 0.0
    for nid in sorted(node_sol.assignment):
        c = node_universe_cost(space, npartition.nodes[nid],
                               node_sol.assignment[nid], obj,
                               counter=coord_counter)
        total += c
        worst = max(worst, c)
    universe = worst if obj is Objective.CENTER else total
    factor = 4.0 if obj is Objective.MEANS else 2.0
    if universe > factor * graph_cost + 1e-9 * (1.0 + graph_cost):
        raise InternalInvariantError(
            f"universe cost {universe} exceeds {factor}x graph cost {graph_cost}")

    return ProtocolReport(
        solution=node_sol, ledger=ledger, rounds=2,
        allocation=alloc, budgets=alloc.t_by_site,
        site_evals=tuple(inst.counter.count for inst in site_insts),
        coord_evals=coord_counter.count,
        site_seconds=tuple(a + b for a, b in zip(secs0, secs1)),
        extras={
            "graph_cost": graph_cost,
            "universe_cost": universe,
            "mapping_factor": factor,
            "coordinator_excluded": final.total_excluded,
        },
    )


# ---------------------------------------------------------------------------
# Expected-maximum center objective: truncation grid


@dataclass(frozen=True)
class TauGrid:
    taus: tuple


def tau_grid(d_min, d_max):
    """Geometric truncation grid {2^i * d_min / 18} with ceil(log2 spread) + 3
    levels; the top level truncates every distance in the universe to zero."""
    if not 0 < d_min <= d_max:
        raise InvalidParameterError("need 0 < d_min <= d_max")
    top = int(math.ceil(math.log2(d_max / d_min) - 1e-12)) + 2
    return TauGrid(tuple(2.0 ** i * d_min / 18.0 for i in range(top + 1)))


def _truncated_local(inst, k, q, tau, seed):
    """sol(A_i, 2k, q) under the truncated surrogate: duals grow against
    expected distances capped at 2 tau, the result is assigned and measured
    at 6 tau."""
    cap = inst.total_weight
    qq = min(int(q), cap)
    if qq >= cap:
        lone = [int(inst.candidates[0])]
        return solution_from_centers(inst, lone, Objective.MEDIAN, qq, tau=6.0 * tau)
    cfg = BicriteriaConfig(epsilon=1.0, relax="centers")
    sol = bicriteria_truncated_center(inst, k, qq, 2.0 * tau, cfg, seed=seed)
    return pad_centers(inst, sol, 2 * k, Objective.MEDIAN, qq, tau=6.0 * tau)


def run_center_g(npartition, k, t, epsilon=1.0, seed=0, jobs=1):
    """Two-round (k, t)-center under the expected-maximum objective.

    No collapse is sound here, so sites keep full node distributions. For
    every threshold tau on a geometric grid they report the cost curve of
    truncated local clusterings (round 1); the coordinator allocates budgets
    per tau and picks tau-hat, the smallest tau whose allocated site costs
    sum to at most 12 tau, then broadcasts tau-hat with the pivot (4 words).
    Round 2 forwards the 2k weighted centers plus the budgeted outliers as
    whole nodes (2 |support| words each); the final threshold sweep keeps k
    centers and excludes floor((1 + epsilon) t) nodes under expected
    distances.
    """
    _validate_common(k, t, seed, epsilon)
    space = npartition.space
    n_nodes = len(npartition.nodes)
    relaxed_t = int((1.0 + epsilon) * t + 1e-9)
    if n_nodes <= relaxed_t:
        raise InfeasibleError(
            f"relaxed outlier budget {relaxed_t} >= {n_nodes} nodes")
    d_min, d_max, _ = extremes(space)
    grid = tau_grid(d_min, d_max)
    ledger = CommLedger()

    def site_phase(i):
        start = time.perf_counter()
        counter = EvalCounter()
        node_ids = npartition.sites[i]
        summaries = [one_median(space, npartition.nodes[j], Objective.MEDIAN, counter)
                     for j in node_ids]
        demands = [
            Demand(npartition.nodes[j].support, npartition.nodes[j].probs,
                   0.0, 1, (j,))
            for j in node_ids
        ]
        inst = Instance(space, demands, [s.point for s in summaries],
                        counter=counter, payload_kind="node")
        index_set = geometric_index_set(t, 2.0)
        sols, curves = {}, []
        for ti, tau in enumerate(grid.taus):
            pts = []
            for qi, q in enumerate(index_set.values):
                sol = _truncated_local(inst, k, q, tau, seed=(seed, 41, i, ti, qi))
                sols[(ti, q)] = sol
                pts.append((q, sol.cost))
            curves.append(lower_hull(i, pts))
        return inst, sols, curves, time.perf_counter() - start

    prep = _run_sites(site_phase, npartition.n_sites, jobs)
    site_insts = [p[0] for p in prep]
    for i, p in enumerate(prep):
        words = sum(2 * c.n_vertices for c in p[2])
        ledger.add(1, "site->coord", i, "cost-curve", words)

    tau_hat_idx = None
    chosen_alloc = None
    tau_sums = []
    for ti, tau in enumerate(grid.taus):
        curves = [prep[i][2][ti] for i in range(npartition.n_sites)]
        alloc = allocate([c.marginals() for c in curves], t, 2.0)
        if alloc.pivot_site is not None:
            alloc = exceptional_adjust(alloc, curves[alloc.pivot_site])
        s_cost = sum(curves[i].value(min(alloc.t_by_site[i], curves[i].t))
                     for i in range(npartition.n_sites))
        tau_sums.append(s_cost)
        if tau_hat_idx is None and s_cost <= 12.0 * tau * (1.0 + 1e-12) + 1e-12:
            tau_hat_idx = ti
            chosen_alloc = alloc
    if tau_hat_idx is None:
        raise InternalInvariantError(
            "no grid threshold satisfied the 12 tau budget rule")
    tau_hat = grid.taus[tau_hat_idx]
    # the selection rule itself, re-checked on the chosen level
    if tau_sums[tau_hat_idx] > 12.0 * tau_hat * (1.0 + 1e-12) + 1e-12:
        raise InternalInvariantError("chosen threshold violates its own rule")
    for i in range(npartition.n_sites):
        ledger.add(1, "coord->site", i, "pivot", 4)

    site_sols = [prep[i][1][(tau_hat_idx, chosen_alloc.t_by_site[i])]
                 for i in range(npartition.n_sites)]
    coord_counter = EvalCounter()
    coord_inst, prov = _assemble_coordinator(
        space, site_insts, site_sols, Objective.MEDIAN, coord_counter,
        forward_outliers=True, ledger=ledger, payload_kind="node",
        tau=6.0 * tau_hat, centers_only_candidates=True)
    final = kt_center_outliers(coord_inst, k, relaxed_t)
    demand_sol, view = _lift_solution(space, site_insts, prov, final,
                                      Objective.CENTER, coord_counter)
    node_sol = _node_solution(view.demands, demand_sol)

    rho2 = 0.0
    rho6 = 0.0
    for nid in sorted(node_sol.assignment):
        ctr = node_sol.assignment[nid]
        nd = npartition.nodes[nid]
        rho2 = max(rho2, node_universe_cost(space, nd, ctr, Objective.MEDIAN,
                                            tau=2.0 * tau_hat, counter=coord_counter))
        rho6 = max(rho6, node_universe_cost(space, nd, ctr, Objective.MEDIAN,
                                            tau=6.0 * tau_hat, counter=coord_counter))

    return ProtocolReport(
        solution=node_sol, ledger=ledger, rounds=2,
        allocation=chosen_alloc, budgets=chosen_alloc.t_by_site,
        site_evals=tuple(inst.counter.count for inst in site_insts),
        coord_evals=coord_counter.count,
        site_seconds=tuple(p[3] for p in prep),
        extras={
            "tau_hat": tau_hat,
            "tau_hat_index": tau_hat_idx,
            "tau_grid": grid.taus,
            "tau_sums": tuple(tau_sums),
            "rho2_cost": rho2,
            "rho6_cost": rho6,
            "coordinator_excluded": final.total_excluded,
        },
    )


# ---------------------------------------------------------------------------
# Evaluating the expected-maximum objective


@dataclass(frozen=True)
class ObjectiveEstimate:
    value: float
    half_width: float       # 0 for the exact method
    method: str
    samples: int


def eval_center_g_objective(space, nodes, solution, method="auto", samples=10000,
                            seed=0, counter=None):
    """E[max over served nodes of d(realized point, assigned center)].

    ``method="exact"`` enumerates the product distribution (guarded to 1e6
    joint outcomes); ``"mc"`` draws seeded samples and reports a 95 percent
    half-width; ``"auto"`` picks exact when it fits. Outlier nodes do not
    participate.
    """
    if method not in ("auto", "exact", "mc"):
        raise InvalidParameterError("method must be auto, exact, or mc")
    served = sorted(solution.assignment)
    rows = []
    for nid in served:
        nd = nodes[nid]
        D = space.block(list(nd.support), [solution.assignment[nid]])
        if counter is not None:
            counter.add(D.size)
        rows.append((np.asarray(D[:, 0]), np.asarray(nd.probs)))
    if not rows:
        return ObjectiveEstimate(0.0, 0.0, "exact", 1)

    combos = 1
    for d, _ in rows:
        combos *= len(d)
        if combos > 10 ** 6:
            break
    if method == "exact" and combos > 10 ** 6:
        raise OracleSizeLimitError(
            f"{combos}+ joint outcomes exceed the exact-evaluation guard")
    if method == "mc" or (method == "auto" and combos > 10 ** 6):
        rng = np.random.default_rng(np.random.SeedSequence((int(seed), 101)))
        if samples < 2:
            raise InvalidParameterError("need at least two samples")
        maxes = np.zeros(samples)
        for d, p in rows:
            draws = rng.choice(len(d), size=samples, p=p)
            np.maximum(maxes, d[draws], out=maxes)
        mean = float(maxes.mean())
        half = float(1.96 * maxes.std(ddof=1) / math.sqrt(samples))
        return ObjectiveEstimate(mean, half, "mc", samples)

    vals = np.zeros(1)
    probs = np.ones(1)
    for d, p in rows:
        vals = np.maximum.outer(vals, d).ravel()
        probs = np.outer(probs, p).ravel()
    return ObjectiveEstimate(float(probs @ vals), 0.0, "exact", int(combos))
