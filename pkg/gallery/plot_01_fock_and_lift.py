"""
Fock sectors and lifted mode unitaries
======================================

Two photons in four modes span a ten-dimensional sector. A passive
linear-optical circuit is a 4x4 mode unitary; its action on the sector is
the "lifted" 10x10 unitary whose entries are scaled permanents.
"""

import numpy as np

from lincap.fock import basis_state, enumerate_basis
from lincap.linop import apply, lift, permanent, unitary_from_params
from lincap.protocols import beam_splitter

basis = enumerate_basis(2, 4)
print("basis order:", basis.labels())

# Hong-Ou-Mandel: one photon in each input of a 50/50 splitter bunches.
hom = apply(beam_splitter(0, 1, 2), basis_state(enumerate_basis(2, 2), (1, 1)))
print("HOM output:", hom)

# A random circuit lifts to a unitary, and lifting respects products.
rng = np.random.default_rng(0)
U, V = unitary_from_params(rng.standard_normal((2, 16)), 4)
L = lift(U, 2)
print("lift(U) unitary:", np.allclose(L @ L.conj().T, np.eye(10)))
print("lift(UV) == lift(U) lift(V):", np.allclose(lift(U @ V, 2), L @ lift(V, 2)))

# Each lifted entry is a permanent of a submatrix with repeated rows/columns;
# for <1,1,0,0| lift(U) |0,0,1,1> no row or column repeats.
sub = U[np.ix_([0, 1], [2, 3])]
print("entry via permanent:", permanent(sub), "via lift:", L[1, 8])
