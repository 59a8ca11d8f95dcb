"""
Entanglement-free baselines and imperfect detectors
===================================================

The same resources without entanglement: Alice prepares one of several
two-mode states carrying on average one photon. With ideal detectors
that can see the vacuum this also reaches two bits; without vacuum
detection only one bit. With bucket detectors of efficiency ``s`` and
dark-count-free probability ``v`` the entangled protocol keeps an edge.
"""

from lincap.channel import DetectorModel, photon_posterior, vacuum_posterior
from lincap.protocols import detector_gap_sweep, entanglement_free_baseline

for vac in (True, False):
    res = entanglement_free_baseline(vacuum_allowed=vac)
    print(f"vacuum allowed={vac}: {res.capacity_bits:.6f} bits, priors {res.priors.round(4)}")

det = DetectorModel(0.9, 0.9999)
print("p(vacuum | no click) =", round(vacuum_posterior(det), 4))
print("p(photon | click)    =", round(photon_posterior(det), 6))

print(" s     C_ent    C_noent  gain")
for row in detector_gap_sweep([0.5, 0.6, 0.7, 0.8, 0.9, 0.95, 1.0], v=0.9999):
    print(f"{row['s']:.2f}  {row['C_ent']:.4f}  {row['C_noent']:.4f}  {row['delta']:.4f}")
