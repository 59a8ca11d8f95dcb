"""
The two-bit linear-optical protocol
===================================

Two photons pass two beam splitters and become an entangled four-mode
state. Alice phase-shifts her two modes in one of four ways, Bob
recombines with two more splitters and counts coincidences. Each of
Alice's choices lands on a distinct coincidence pattern, so two bits
cross per character.
"""

import numpy as np

from lincap.linop import U2Angles, u2_from_angles
from lincap.protocols import canonical_protocol, family_protocol

proto = canonical_protocol()
print("input state:", proto.input)
ch = proto.channel()
np.set_printoptions(precision=3, suppress=True)
print("channel (rows: Alice's choice, columns: Bob's Fock outcome)")
print(ch.p)
labels = proto.input.basis.labels()
for j, row in enumerate(ch.p):
    print(f"  U{j + 1} -> {labels[int(np.argmax(row))]}")
print("capacity:", proto.capacity()[0], "bits")

# Any local basis change on both halves, undone by Bob, keeps two bits.
rng = np.random.default_rng(1)
caps = []
for _ in range(20):
    U_A, U_B, U_C = (u2_from_angles(U2Angles(*rng.uniform(0, 2 * np.pi, 4))) for _ in range(3))
    caps.append(family_protocol(U_A, U_B, U_C).capacity()[0])
print("family members, min/max capacity:", min(caps), max(caps))
