"""
Capacity versus photons sent to Bob
===================================

Fixing the mean photon number on Alice's modes and sweeping it from 0 to
1 traces how much information each transmitted photon buys. Each target
is warm-started from the previous optimum. The sweep is written as CSV
for plotting with ``plot_08_plot_csv.py``.
"""

import sys

from lincap.optimize import OptimizerConfig, ProblemSpec, sweep_constraint, sweep_to_csv

targets = [0.25, 0.5, 0.68, 1.0]
rows = sweep_constraint(ProblemSpec(), targets, OptimizerConfig(restarts=20, warm_restarts=8, seed=0))
for r in rows:
    print(f"target {r['target']:.2f}: {r['capacity_bits']:.4f} bits")

out = sys.argv[1] if len(sys.argv) > 1 else "photon_sweep.csv"
with open(out, "w") as fh:
    fh.write(sweep_to_csv(rows, "gallery photon sweep"))
print("wrote", out)
