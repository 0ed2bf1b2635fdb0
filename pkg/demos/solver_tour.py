"""Exact and greedy MSP search on additive surfaces.

Run with ``python3 demos/solver_tour.py``.
"""
from fractions import Fraction

import numpy as np

from msp import solver
from msp.solver import AdditiveSurface
from msp.specspace import bits_str

# significant baseline, two axes that pull towards zero, one that pushes away
s = AdditiveSurface(2.0, 0.5, (-1.0, -0.6, -0.3, 0.2))
for rep in solver.solve(s, "auto", cross_check=True):
    print(f"{rep.method.value:>12}: MSP = {rep.msp.value}, witness {bits_str(rep.msp.witness)}, "
          f"nodes {rep.nodes_explored}")
print(solver.diagnostics(s))

# widths that grow along the axis change which flips matter
v = AdditiveSurface(3.0, 0.5, (-0.4, -0.4, -0.9), (0.5, 0.4, 0.0))
rep = solver.greedy_variable(v)
print(f"\nvariable width: MSP = {rep.msp.value}, greedy passed lower-bound check: "
      f"{rep.greedy_feasible}, auto-feasible: {solver.auto_feasible(v)}")

# interactions break additivity; branch and bound stays exact
rng = np.random.default_rng(0)
K = 10
delta = tuple(float(x) for x in -np.abs(rng.normal(0.4, 0.2, K)))
gamma = {(k, j): float(rng.normal(0, 0.15)) for k in range(K) for j in range(k + 1, K)}
w = AdditiveSurface(2.5, 0.5, delta, (0.0,) * K, gamma)
exact = solver.enumerate(w)
bnb = solver.branch_and_bound(w)
scan = solver.greedy_prefix_scan(w)
print(f"\nK=10 with interactions: exact {exact.value}, branch and bound {bnb.msp.value} "
      f"after {bnb.nodes_explored} nodes of {2 ** K}, greedy prefix scan {scan.value}")

# the search problem contains SUBSET-SUM: 3 + 5 hits 8, so two flips are needed
ss = solver.subset_sum_surface([3, 5, 7], 8)
r = solver.enumerate(ss)
print(f"\nsubset-sum surface tau0={ss.tau0}, c0={ss.c0}: MSP = {r.value}, witness {bits_str(r.witness)}")
assert isinstance(ss.tau0, Fraction)
