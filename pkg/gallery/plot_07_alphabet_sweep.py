"""
Larger alphabets
================

Alice may try more than four local operations. Bob, counting photons in
the Fock basis after one circuit, cannot separate more than four of the
resulting states perfectly, so the capacity normalized by log2(M) falls
below one for M > 4.
"""

from lincap.optimize import OptimizerConfig, ProblemSpec, alphabet_sweep

rows = alphabet_sweep(ProblemSpec(priors_mode="blahut-arimoto"), range(4, 8), OptimizerConfig(restarts=5, seed=0))
for r in rows:
    print(f"M={r['M']}: {r['capacity_bits']:.4f} bits, normalized {r['normalized']:.4f}")
