"""Counting what the margins can resolve before fitting.

Run with ``python3 demos/identifiability_audit.py``.
"""

import numpy as np

from tiecop.identifiability import build_grid, q_count, rank_scan
from tiecop.margins import fit_empirical

# two binary columns resolve a single point, so one parameter at most
rng = np.random.default_rng(0)
x = (rng.uniform(size=(300, 2)) < 0.5).astype(float)
grid = build_grid([fit_empirical(x[:, j]) for j in range(2)])
print("binary grid q_n =", grid.q_n)
print("clayton:", rank_scan("clayton", grid, [(0.5, 10.0)], 0.5).verdict)
print("student:", rank_scan("student", grid, [(-0.5, 0.5), (2.0, 6.0)], 1.0).verdict)

# three-level columns give q_n = 9 - 6 + 1 = 4
print("q_n for m = (3, 3):", q_count([3, 3]))

# two points are not enough for Student when nu is free near 0.5
pts = np.array([[0.5, 0.5], [0.75, 0.55]])
rep = rank_scan("student", pts, [(0.25, 0.35), (0.3, 0.7)], 0.05)
print("student with free nu on two points:", rep.verdict)
