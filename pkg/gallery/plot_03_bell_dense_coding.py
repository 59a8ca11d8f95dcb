"""
Dense coding with a shared Bell pair
====================================

With a dual-rail Bell pair, the Bennett-Wiesner operations and a
linear-optics Bell analyzer, two of the four Bell states are confused.
The capacity is log2(3) bits with priors 1/6, 1/6, 1/3, 1/3; uniform
priors give only 1.5 bits.
"""

import numpy as np

from lincap.channel import mutual_information
from lincap.optimize import OptimizerConfig, ProblemSpec, maximize_capacity
from lincap.protocols import bell_protocol, bell_states

for k, name in enumerate(["Phi+", "Phi-", "Psi+", "Psi-"]):
    proto = bell_protocol(k)
    print(f"{name}: C = {proto.information():.6f} bits, priors {np.round(proto.priors, 4)}")

print("uniform priors:", mutual_information(np.full(4, 0.25), bell_protocol(0).channel()))

# Letting the optimizer also choose Alice's operations and Bob's circuit
# does not beat log2(3) for a fixed Bell input.
spec = ProblemSpec(optimize_input=False, fixed_input=bell_states()[0], priors_mode="blahut-arimoto")
res = maximize_capacity(spec, OptimizerConfig(restarts=10, seed=0))
print("optimized with Bell input:", res.capacity_bits, "log2(3) =", np.log2(3))
