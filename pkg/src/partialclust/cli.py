"""Command-line entry points.

``partialclust solve`` runs one protocol on a dataset and prints a report
(JSON by default, a one-line CSV row with ``--format csv``). Reports are
byte-identical across runs of the same command; wall-clock timings only
appear under ``--timings``. ``partialclust oracle`` solves small instances
exactly, and ``partialclust gen`` writes planted datasets whose last t ids
are the intended outliers.

Exit codes: 0 success, 2 unusable input or arguments, 3 infeasible budget,
4 oracle size guard.
"""

from __future__ import annotations

import argparse
import json
import sys
import time

import numpy as np

from .errors import (
    ClusteringError,
    InfeasibleError,
    InvalidParameterError,
    OracleSizeLimitError,
    ParseError,
)
from .io import (
    read_matrix,
    read_nodes_files,
    read_points_files,
    write_nodes_jsonl,
    write_points_jsonl,
)
from .metric import Demand, Instance, Objective
from .protocol import (
    Partition,
    _expand_points,
    run_kt_center,
    run_kt_median,
    run_kt_median_clustering_only,
    run_one_round,
    subquadratic_solve,
)
from .solvers import exact_oracle
from .uncertain import NodePartition, UncertainNode, run_center_g, run_uncertain

_POINT_ALGS = ("kt-median", "kt-means", "kt-center", "kt-median-co",
               "one-round", "subquadratic")
_NODE_ALGS = ("uncertain-median", "uncertain-means", "uncertain-center-pp",
              "center-g")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="partialclust",
        description="Distributed clustering with outliers, with exact "
                    "communication accounting.")
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run a protocol and print a report")
    solve.add_argument("--input", action="append", default=[],
                       help="points file (JSON lines); repeat for by-file sites")
    solve.add_argument("--matrix", help="distance-matrix file instead of points")
    solve.add_argument("--nodes", action="append", default=[],
                       help="uncertain-node file; repeat for by-file sites")
    solve.add_argument("--alg", required=True, choices=_POINT_ALGS + _NODE_ALGS)
    solve.add_argument("--k", type=int, required=True)
    solve.add_argument("--t", type=int, required=True)
    solve.add_argument("--sites", type=int, default=2)
    solve.add_argument("--partition", default="round-robin",
                       choices=("round-robin", "contiguous", "by-file"))
    solve.add_argument("--rho", type=float, default=2.0)
    solve.add_argument("--delta", type=float, default=0.25)
    solve.add_argument("--epsilon", type=float, default=1.0)
    solve.add_argument("--alpha", type=float, default=0.5)
    solve.add_argument("--objective", default="median",
                       choices=("median", "means", "center"),
                       help="objective for one-round and subquadratic")
    solve.add_argument("--seed", type=int, default=0)
    solve.add_argument("--jobs", type=int, default=1)
    solve.add_argument("--format", default="json", choices=("json", "csv"))
    solve.add_argument("--out", help="write the report here instead of stdout")
    solve.add_argument("--transcript",
                       help="write the message ledger as JSON lines")
    solve.add_argument("--timings", action="store_true",
                       help="include wall-clock timings (breaks byte-identity)")
    solve.set_defaults(func=_cmd_solve)

    oracle = sub.add_parser("oracle", help="exact solution at desk scale")
    oracle.add_argument("--input", action="append", default=[])
    oracle.add_argument("--matrix")
    oracle.add_argument("--nodes", action="append", default=[])
    oracle.add_argument("--objective", default="median",
                        choices=("median", "means", "center"))
    oracle.add_argument("--k", type=int, required=True)
    oracle.add_argument("--t", type=int, required=True)
    oracle.add_argument("--out")
    oracle.set_defaults(func=_cmd_oracle)

    gen = sub.add_parser("gen", help="write a planted dataset")
    gen.add_argument("--kind", required=True,
                     choices=("planted", "uncertain-planted"))
    gen.add_argument("--n", type=int, required=True,
                     help="points (or nodes) including the planted outliers")
    gen.add_argument("--k", type=int, required=True)
    gen.add_argument("--t", type=int, required=True)
    gen.add_argument("--dim", type=int, default=2)
    gen.add_argument("--sep", type=float, default=30.0,
                     help="cluster separation; outliers sit farther out still")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", required=True, help="points file to write")
    gen.add_argument("--nodes-out", help="node file (uncertain-planted only)")
    gen.set_defaults(func=_cmd_gen)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OracleSizeLimitError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except InfeasibleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except (InvalidParameterError, ClusteringError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


# ---------------------------------------------------------------------------


def _load_space(args):
    if args.matrix:
        if args.input:
            raise InvalidParameterError("give --input or --matrix, not both")
        return read_matrix(args.matrix), None
    if not args.input:
        raise InvalidParameterError("no --input files given")
    space, groups = read_points_files(args.input)
    return space, groups


def _make_partition(space, args, groups):
    if args.partition == "round-robin":
        return Partition.round_robin(space, args.sites)
    if args.partition == "contiguous":
        return Partition.contiguous(space, args.sites)
    if groups is None or len(groups) < 1:
        raise InvalidParameterError("by-file partition needs --input files")
    return Partition.from_lists(space, groups)


def _make_node_partition(space, nodes, args, groups):
    if args.partition == "round-robin":
        return NodePartition.round_robin(space, nodes, args.sites)
    if args.partition == "contiguous":
        return NodePartition.contiguous(space, nodes, args.sites)
    return NodePartition.from_lists(space, nodes, groups)


def _emit(text, out):
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _extras_payload(extras):
    out = {}
    for key, val in extras.items():
        if isinstance(val, (int, float, str)):
            out[key] = val
        elif isinstance(val, tuple) and all(
                isinstance(x, (int, float)) for x in val):
            out[key] = list(val)
    return out


_OBJECTIVE_OF_ALG = {
    "kt-median": "median", "kt-means": "means", "kt-center": "center",
    "kt-median-co": "median", "uncertain-median": "median",
    "uncertain-means": "means", "uncertain-center-pp": "center-pp",
    "center-g": "center",
}


def _effective_objective(alg, args):
    return _OBJECTIVE_OF_ALG.get(alg, args.objective)


def _report_payload(alg, args, report, n_items, label):
    sol = report.solution
    ledger = report.ledger
    payload = {
        "alg": alg,
        "params": {
            "k": args.k, "t": args.t, "sites": len(report.site_evals),
            "partition": args.partition, "rho": args.rho, "delta": args.delta,
            "epsilon": args.epsilon, "seed": args.seed,
            "objective": _effective_objective(alg, args),
        },
        label: n_items,
        "cost": sol.cost,
        "centers": [int(c) for c in sol.centers],
        "outliers": sorted(int(p) for p in sol.outliers),
        "n_outliers": int(sol.total_excluded),
        "rounds": report.rounds,
        "words": {
            "total": ledger.total_words,
            "round1": ledger.words(round_no=1),
            "round2": ledger.words(round_no=2),
        },
        "evals": {
            "sites": list(report.site_evals),
            "coordinator": report.coord_evals,
            "total": report.total_evals,
        },
        "budgets": list(report.budgets) if report.budgets is not None else None,
        "allocation": None,
        "extras": _extras_payload(report.extras),
    }
    alloc = report.allocation
    if alloc is not None:
        payload["allocation"] = {
            "pivot_site": alloc.pivot_site, "pivot_q": alloc.pivot_q,
            "pivot_value": alloc.pivot_value, "rank": alloc.rank,
            "t_by_site": list(alloc.t_by_site),
        }
    return payload


def _csv_row(payload):
    cols = ["alg", "objective", "n", "sites", "k", "t", "rho", "delta",
            "epsilon", "seed", "cost", "rounds", "words_total", "words_round1",
            "words_round2", "evals_total", "outliers"]
    params = payload["params"]
    words = payload.get("words", {})
    vals = [
        payload["alg"], params.get("objective"),
        payload.get("n_points", payload.get("n_nodes")),
        params.get("sites"), params.get("k"),
        params.get("t"), params.get("rho"),
        params.get("delta"), params.get("epsilon"),
        params.get("seed"), payload["cost"], payload.get("rounds"),
        words.get("total"), words.get("round1"),
        words.get("round2"), payload["evals"]["total"],
        payload["n_outliers"],
    ]
    head = ",".join(cols)
    row = ",".join("" if v is None else str(v) for v in vals)
    return head + "\n" + row + "\n"


def _cmd_solve(args):
    start = time.perf_counter()
    space, groups = _load_space(args)
    if args.alg in _NODE_ALGS:
        if not args.nodes:
            raise InvalidParameterError(f"--alg {args.alg} needs --nodes")
        nodes, node_groups = read_nodes_files(args.nodes, space)
        npart = _make_node_partition(space, nodes, args, node_groups)
        if args.alg == "center-g":
            report = run_center_g(npart, args.k, args.t, epsilon=args.epsilon,
                                  seed=args.seed, jobs=args.jobs)
        else:
            obj = args.alg.split("uncertain-", 1)[1]
            report = run_uncertain(npart, args.k, args.t, objective=obj,
                                   epsilon=args.epsilon, seed=args.seed,
                                   jobs=args.jobs, rho=args.rho)
        payload = _report_payload(args.alg, args, report, len(nodes), "n_nodes")
    elif args.alg == "subquadratic":
        objective = Objective.from_string(args.objective)
        inst = Instance.from_points(space)
        sub = subquadratic_solve(inst, args.k, args.t, args.alpha,
                                 seed=args.seed, objective=objective)
        solution = _expand_points(space, inst.demands, sub.solution, objective,
                                  inst.counter)
        payload = {
            "alg": args.alg,
            "params": {"k": args.k, "t": args.t, "alpha": args.alpha,
                       "seed": args.seed, "objective": args.objective},
            "n_points": space.n,
            "cost": solution.cost,
            "centers": [int(c) for c in solution.centers],
            "outliers": sorted(int(p) for p in solution.outliers),
            "n_outliers": int(solution.total_excluded),
            "depth": sub.depth,
            "levels": [list(l) for l in sub.levels],
            "evals": {"total": sub.evals},
        }
        report = None
    else:
        part = _make_partition(space, args, groups)
        if args.alg == "kt-median":
            report = run_kt_median(part, args.k, args.t, rho=args.rho,
                                   epsilon=args.epsilon, seed=args.seed,
                                   jobs=args.jobs)
        elif args.alg == "kt-means":
            report = run_kt_median(part, args.k, args.t, rho=args.rho,
                                   epsilon=args.epsilon,
                                   objective=Objective.MEANS, seed=args.seed,
                                   jobs=args.jobs)
        elif args.alg == "kt-median-co":
            report = run_kt_median_clustering_only(
                part, args.k, args.t, delta=args.delta, epsilon=args.epsilon,
                seed=args.seed, jobs=args.jobs)
        elif args.alg == "kt-center":
            report = run_kt_center(part, args.k, args.t, rho=args.rho,
                                   seed=args.seed, jobs=args.jobs)
        else:
            report = run_one_round(part, args.k, args.t,
                                   objective=Objective.from_string(args.objective),
                                   epsilon=args.epsilon, seed=args.seed,
                                   jobs=args.jobs)
        payload = _report_payload(args.alg, args, report, space.n, "n_points")

    if args.timings:
        payload["timings"] = {
            "wall_seconds": time.perf_counter() - start,
            "site_seconds": list(report.site_seconds) if report else None,
        }
    if args.transcript:
        if report is None:
            raise InvalidParameterError(
                "subquadratic runs on one machine; no transcript exists")
        lines = [json.dumps(r, sort_keys=True) for r in report.ledger.to_records()]
        with open(args.transcript, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + ("\n" if lines else ""))
    if args.format == "csv":
        _emit(_csv_row(payload), args.out)
    else:
        _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _cmd_oracle(args):
    space, _ = _load_space(args)
    objective = Objective.from_string(args.objective)
    if args.nodes:
        nodes, _ = read_nodes_files(args.nodes, space)
        demands = [
            # full distributions; any universe point may host a center
            _node_demand(nd) for nd in nodes
        ]
        inst = Instance(space, demands, list(range(space.n)))
        label, n_items = "n_nodes", len(nodes)
    else:
        inst = Instance.from_points(space)
        label, n_items = "n_points", space.n
    sol = exact_oracle(inst, args.k, args.t, objective)
    out_ids = []
    for j, copies in sol.outliers.items():
        out_ids.extend(int(x) for x in inst.demands[j].tag[-copies:])
    payload = {
        "objective": args.objective, "k": args.k, "t": args.t, label: n_items,
        "cost": sol.cost,
        "centers": [int(c) for c in sol.centers],
        "outliers": sorted(out_ids),
    }
    _emit(json.dumps(payload, indent=2, sort_keys=True) + "\n", args.out)
    return 0


def _node_demand(nd):
    return Demand(nd.support, nd.probs, 0.0, 1, (nd.node_id,))


# ---------------------------------------------------------------------------
# Dataset generation


def gen_planted(n, k, t, dim=2, sep=30.0, seed=0):
    """k unit-variance blobs plus t planted outliers, as an n x dim array.

    The last t ids are the outliers; each sits at least ``sep`` beyond every
    blob, strictly farther from every blob center than any inlier, so a
    correct (k, t) run on a comfortable budget must ignore exactly them.
    """
    if n < 1 or k < 1 or t < 0 or n - t < k:
        raise InvalidParameterError("need n - t >= k >= 1")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 51)))
    centers = np.zeros((k, dim))
    centers[:, 0] = sep * np.arange(k)
    pts = np.empty((n, dim))
    for i in range(n - t):
        pts[i] = centers[i % k] + rng.normal(size=dim)
    far = sep * (k + 4)
    for j in range(t):
        direction = rng.normal(size=dim)
        direction /= np.linalg.norm(direction)
        pts[n - t + j] = centers[-1] + (far + 2 * sep * j) * direction
    return pts


def gen_uncertain_planted(n, k, t, dim=2, sep=30.0, seed=0):
    """Point universe plus n nodes; the last t nodes live on far points."""
    if n < 1 or k < 1 or t < 0 or n - t < k:
        raise InvalidParameterError("need n - t >= k >= 1")
    rng = np.random.default_rng(np.random.SeedSequence((int(seed), 52)))
    universe = gen_planted(2 * n, k, 2 * t if t else 1, dim=dim, sep=sep,
                           seed=seed + 1)
    m = universe.shape[0]
    far_ids = list(range(m - (2 * t if t else 1), m))
    blob_ids = [i for i in range(m - len(far_ids))]
    by_blob = {b: [i for i in blob_ids if i % k == b] for b in range(k)}
    nodes = []
    for j in range(n - t):
        members = by_blob[j % k]
        pick = rng.choice(len(members), size=min(2, len(members)), replace=False)
        support = tuple(int(members[x]) for x in sorted(pick))
        probs = (1.0,) if len(support) == 1 else (0.6, 0.4)
        nodes.append(UncertainNode(j, support, probs))
    for j in range(t):
        pick = rng.choice(len(far_ids), size=min(2, len(far_ids)), replace=False)
        support = tuple(int(far_ids[x]) for x in sorted(pick))
        probs = (1.0,) if len(support) == 1 else (0.5, 0.5)
        nodes.append(UncertainNode(n - t + j, support, probs))
    return universe, nodes


def _cmd_gen(args):
    if args.kind == "planted":
        pts = gen_planted(args.n, args.k, args.t, dim=args.dim, sep=args.sep,
                          seed=args.seed)
        write_points_jsonl(args.out, pts)
        return 0
    if not args.nodes_out:
        raise InvalidParameterError("uncertain-planted needs --nodes-out")
    universe, nodes = gen_uncertain_planted(args.n, args.k, args.t,
                                            dim=args.dim, sep=args.sep,
                                            seed=args.seed)
    write_points_jsonl(args.out, universe)
    write_nodes_jsonl(args.nodes_out, nodes)
    return 0


if __name__ == "__main__":
    sys.exit(main())
