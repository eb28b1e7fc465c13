"""Terminal law of the indicator drift at T = 1: exact split sampler vs Euler.

Writes KDE curves (bandwidth 0.1) for the exact sampler and Euler steps
1e-2 and 1e-4 to ``terminal_law_kde.csv`` and prints KS statistics.
"""
import sys

import numpy as np

from skewexact import SimConfig, drift_b1, euler_maruyama, simulate
from skewexact.analysis import kde, ks_two_sample, write_rows_csv

n = int(sys.argv[1]) if len(sys.argv) > 1 else 20000
spec = drift_b1()
exact = np.array([s.terminal for s in simulate(spec, 0.5, SimConfig(T=1.0, T_el=0.55, delta=0.75, seed=1), n)])
coarse = euler_maruyama(spec, 0.5, 1.0, 1e-2, np.random.default_rng(2), n=n)
fine = euler_maruyama(spec, 0.5, 1.0, 1e-4, np.random.default_rng(3), n=n)

grid = np.linspace(-4, 5, 901)
cols = [kde(v, 0.1, grid)[:, 1] for v in (exact, fine, coarse)]
write_rows_csv("terminal_law_kde.csv", ["x", "exact", "euler_1e-4", "euler_1e-2"],
               [tuple(float(c) for c in row) for row in zip(grid, *cols)])
for name, v in (("euler 1e-4", fine), ("euler 1e-2", coarse)):
    stat, p = ks_two_sample(exact, v)
    print(f"exact vs {name}: KS statistic {stat:.4f}, p-value {p:.3g}")
