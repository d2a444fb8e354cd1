"""
Beating the distance matrix: recursive site simulation on one machine
=====================================================================

A single machine can pretend to be a coordinator over imaginary sites:
split the data, summarize each part with the two-round machinery, recurse
on the much smaller weighted summary. Distance evaluations, the unit that
dominates at scale, then grow clearly slower than n^2. This script counts
them directly.
"""

import numpy as np

from partialclust import Instance, MetricSpace, subquadratic_solve
from partialclust.cli import gen_planted

print(f"{'n':>5} {'t':>3} {'evals':>9} {'n^2':>9} {'ratio':>7}  levels")
ns = (100, 200, 400, 800, 1600)
evals = []
for n in ns:
    pts = gen_planted(n, 2, int(np.sqrt(n)) // 2, seed=n)
    inst = Instance.from_points(MetricSpace.euclidean(pts))
    t = int(np.sqrt(n))
    rep = subquadratic_solve(inst, 2, t, alpha=1.0, seed=n)
    evals.append(rep.evals)
    shape = " -> ".join(f"{sz}/{s}" if s else f"{sz}" for sz, s in rep.levels)
    print(f"{n:>5} {t:>3} {rep.evals:>9} {n * n:>9} "
          f"{rep.evals / (n * n):>7.3f}  {shape}")

slope = float(np.polyfit(np.log(ns), np.log(evals), 1)[0])
print(f"\nfitted exponent: evals ~ n^{slope:.2f}")

# alpha trades rounds of recursion for evaluations: smaller alpha, deeper
# recursion, fewer evaluations per level (until the summaries get small
# enough that the leaf guard solves them directly either way).
n = 800
pts = gen_planted(n, 2, 10, seed=n)
inst = Instance.from_points(MetricSpace.euclidean(pts))
print(f"\nalpha sweep at n={n}, t=28:")
for alpha in (1.0, 0.5, 0.25):
    rep = subquadratic_solve(inst, 2, 28, alpha=alpha, seed=1)
    print(f"  alpha {alpha:>4}: depth {rep.depth}, evals {rep.evals}, "
          f"cost {rep.solution.cost:.1f}, "
          f"ignored {rep.solution.total_excluded}")
