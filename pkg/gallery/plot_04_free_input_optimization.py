"""
Searching for the optimum from random starts
============================================

With the input state, Alice's three non-trivial operations and Bob's
circuit all free (47 real parameters) and one photon on average sent to
Bob, quasi-Newton restarts from random points find the two-bit optimum.
"""

import numpy as np

from lincap.optimize import OptimizerConfig, ProblemSpec, ProtocolObjective, maximize_capacity

spec = ProblemSpec(constraint=1.0)
print("parameters:", spec.n_params)
res = maximize_capacity(spec, OptimizerConfig(restarts=10, seed=0))
print("best capacity:", res.capacity_bits)
print("per-restart capacities:", np.round(res.restart_capacities, 4))
print("mean photons on Alice's modes:", res.info["mean_alice_photons"])

W = ProtocolObjective(spec).channels(res.parameters[None])[0]
np.set_printoptions(precision=3, suppress=True)
print("channel at the optimum:")
print(W)
