"""Named protocols, entanglement-free baselines and extension studies.

All mode matrices follow the column convention of :mod:`lincap.linop`.
The optimal four-mode family is written so that the source transform,
Alice's operation and Bob's transform compose to Bob's fixed recombining
splitters times a sign pattern on Alice's modes::

    U_t   = blockdiag(U_A, U_B)
    U_i   = U_C X_i U_A^{-1},   X_i in (I, -Z, -I, Z)
    U_Bob = R blockdiag(U_C^{-1}, U_B^{-1})

with ``R`` the pair of 50/50 splitters on modes (0, 2) and (1, 3). In the
row convention (creation operators transformed by rows) each matrix is
replaced by its transpose.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import NamedTuple, Sequence

import numpy as np
from scipy import optimize as sopt

from .channel import (
    CapacityResult,
    ChannelMatrix,
    DetectorModel,
    apply_detector,
    blahut_arimoto,
    check_priors,
    click_matrix,
    click_patterns,
    conditional_matrix,
    mutual_information,
)
from .fock import PureState, basis_state, enumerate_basis, state_from_terms
from .linop import (
    U2Angles,
    apply,
    check_unitary,
    embed,
    lift,
    mode_permutation,
    propagate,
    u2_from_angles,
    unitary_from_params,
)
from .optimize import (
    OptimizerConfig,
    ProblemSpec,
    decode_state,
    encode_state,
    maximize_capacity,
)

__all__ = [
    "ProtocolSpec",
    "SIGMA_Z",
    "SIGMA_X",
    "beam_splitter",
    "optimal_input_state",
    "swap_modes",
    "canonical_source",
    "alice_family",
    "bob_unitary",
    "family_protocol",
    "canonical_protocol",
    "bell_states",
    "bennett_wiesner_ops",
    "bell_analyzer",
    "bell_protocol",
    "bucket_channel",
    "baseline_alphabet",
    "entanglement_free_baseline",
    "two_mode_joint_matrix",
    "entangled_detector_capacity",
    "detector_gap_sweep",
    "OrthogonalCount",
    "orthogonality_residual",
    "count_orthogonal_states",
    "extended_capacity",
    "six_state_reference",
]

SIGMA_Z = np.diag([1.0, -1.0]).astype(complex)
SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
_I2 = np.eye(2, dtype=complex)

_BASIS_2_4 = enumerate_basis(2, 4)


@dataclass(frozen=True, eq=False)
class ProtocolSpec:
    """A fully specified protocol: shared state, Alice's alphabet, Bob's setup."""

    input: PureState
    alice_ops: tuple[np.ndarray, ...]
    alice_modes: tuple[int, ...]
    bob_op: np.ndarray
    priors: np.ndarray
    label: str = ""

    def __post_init__(self):
        ops = tuple(check_unitary(U, 1e-10, "Alice operation") for U in self.alice_ops)
        object.__setattr__(self, "alice_ops", ops)
        object.__setattr__(self, "alice_modes", tuple(self.alice_modes))
        object.__setattr__(self, "priors", check_priors(self.priors, len(ops)))
        bob = check_unitary(self.bob_op, 1e-10, "Bob's unitary")
        if bob.shape != (self.input.basis.N,) * 2:
            raise ValueError("Bob's unitary does not match the number of modes")
        if any(U.shape != (len(self.alice_modes),) * 2 for U in ops):
            raise ValueError("Alice operations do not match her mode window")
        object.__setattr__(self, "bob_op", bob)

    def channel(self, detector: DetectorModel | None = None) -> ChannelMatrix:
        ch = conditional_matrix(self.input, self.alice_ops, self.alice_modes, self.bob_op)
        if detector is not None:
            ch = apply_detector(ch, detector, self.input.basis)
        return ch

    def information(self, detector: DetectorModel | None = None) -> float:
        """Mutual information at the protocol's own priors."""
        return mutual_information(self.priors, self.channel(detector))

    def capacity(self, detector: DetectorModel | None = None) -> tuple[float, np.ndarray]:
        """Capacity over priors (Blahut-Arimoto) and the optimal priors."""
        res = blahut_arimoto(self.channel(detector))
        return res.capacity, res.priors


def beam_splitter(i: int, j: int, N: int) -> np.ndarray:
    """50/50 splitter ``[[1, -1], [1, 1]] / sqrt(2)`` on modes ``i`` and ``j``."""
    U = np.eye(N, dtype=complex)
    U[np.ix_([i, j], [i, j])] = u2_from_angles(U2Angles(np.pi / 4))
    return U


def optimal_input_state() -> PureState:
    """``(|1100> + |0110> + |1001> + |0011>) / 2``."""
    return state_from_terms(
        {(1, 1, 0, 0): 1, (0, 1, 1, 0): 1, (1, 0, 0, 1): 1, (0, 0, 1, 1): 1},
        _BASIS_2_4,
    )


def swap_modes(state: PureState, i: int, j: int) -> PureState:
    perm = list(range(state.basis.N))
    perm[i], perm[j] = j, i
    return apply(mode_permutation(perm), state)


def canonical_source() -> tuple[PureState, np.ndarray]:
    """Two single photons in modes 0 and 1, and the splitters on (0, 2), (1, 3)."""
    return basis_state(_BASIS_2_4, (1, 1, 0, 0)), beam_splitter(1, 3, 4) @ beam_splitter(0, 2, 4)


def alice_family(U_A: np.ndarray, U_C: np.ndarray) -> list[np.ndarray]:
    """Alice's four operations ``U_C X U_A^{-1}`` for ``X = I, -Z, -I, Z``.

    With ``U_A = U_C = I`` these are 180 degree phase shifts: none, on mode
    0, on both modes, on mode 1; the last equals the product of the second
    and third.
    """
    U_A = check_unitary(U_A, 1e-10, "U_A")
    U_C = check_unitary(U_C, 1e-10, "U_C")
    A_inv = U_A.conj().T
    return [U_C @ X @ A_inv for X in (_I2, -SIGMA_Z, -_I2, SIGMA_Z)]


_RECOMBINE = np.array(
    [[1, 0, 1, 0], [0, 1, 0, 1], [-1, 0, 1, 0], [0, -1, 0, 1]], dtype=complex
) / np.sqrt(2)


def bob_unitary(U_B: np.ndarray, U_C: np.ndarray) -> np.ndarray:
    """Bob's decoder: undo ``U_C``/``U_B``, then recombine modes (0,2) and (1,3)."""
    U_B = check_unitary(U_B, 1e-10, "U_B")
    U_C = check_unitary(U_C, 1e-10, "U_C")
    undo = np.zeros((4, 4), dtype=complex)
    undo[:2, :2] = U_C.conj().T
    undo[2:, 2:] = U_B.conj().T
    return _RECOMBINE @ undo


def family_protocol(U_A, U_B, U_C, label: str = "family") -> ProtocolSpec:
    """Member of the optimal family for arbitrary ``U_A, U_B, U_C`` in ``U(2)``."""
    Ut = np.zeros((4, 4), dtype=complex)
    Ut[:2, :2] = check_unitary(U_A, 1e-10, "U_A")
    Ut[2:, 2:] = check_unitary(U_B, 1e-10, "U_B")
    state = apply(Ut, optimal_input_state())
    return ProtocolSpec(
        state, tuple(alice_family(U_A, U_C)), (0, 1), bob_unitary(U_B, U_C),
        np.full(4, 0.25), label,
    )


def canonical_protocol() -> ProtocolSpec:
    """The double Mach-Zehnder protocol: splitters, phase shifts, splitters.

    Alice's four choices end up as coincidences on modes (0,1), (1,2),
    (2,3) and (0,3).
    """
    photons, source = canonical_source()
    return ProtocolSpec(
        apply(source, photons),
        tuple(alice_family(_I2, _I2)),
        (0, 1),
        bob_unitary(_I2, _I2),
        np.full(4, 0.25),
        "canonical",
    )


def bell_states() -> list[PureState]:
    """Dual-rail Bell states, Alice on modes (0,1) and Bob on (2,3).

    One photon in the first (second) mode of a pair is logical V (H).
    Order: Phi+, Phi-, Psi+, Psi-.
    """
    s2 = 1 / np.sqrt(2)
    HH, VV, HV, VH = (0, 1, 0, 1), (1, 0, 1, 0), (0, 1, 1, 0), (1, 0, 0, 1)
    return [
        state_from_terms({HH: s2, VV: s2}, _BASIS_2_4),
        state_from_terms({HH: s2, VV: -s2}, _BASIS_2_4),
        state_from_terms({HV: s2, VH: s2}, _BASIS_2_4),
        state_from_terms({HV: s2, VH: -s2}, _BASIS_2_4),
    ]


def bennett_wiesner_ops() -> list[np.ndarray]:
    """``I, Z, X, ZX`` on Alice's dual-rail qubit."""
    return [_I2, SIGMA_Z, SIGMA_X, SIGMA_Z @ SIGMA_X]


def bell_analyzer() -> np.ndarray:
    """Standard linear-optics Bell analyzer: splitters on (0,2) and (1,3)."""
    return beam_splitter(1, 3, 4) @ beam_splitter(0, 2, 4)


def bell_protocol(which: int = 0, bob_op: np.ndarray | None = None) -> ProtocolSpec:
    """Dense coding with a shared Bell state and Bennett-Wiesner encoding.

    Bob defaults to :func:`bell_analyzer`; the priors are the
    capacity-achieving ones of the resulting channel.
    """
    state = bell_states()[which]
    bob = bell_analyzer() if bob_op is None else bob_op
    ops = tuple(bennett_wiesner_ops())
    draft = ProtocolSpec(state, ops, (0, 1), bob, np.full(4, 0.25), f"bell-{which}")
    _, p = draft.capacity()
    return replace(draft, priors=p)


def bucket_channel(
    states: Sequence[PureState],
    bob_op: np.ndarray | None,
    det: DetectorModel,
) -> ChannelMatrix:
    """Click-pattern channel for states that may live in different sectors."""
    N = states[0].basis.N
    rows = []
    for st in states:
        if st.basis.N != N:
            raise ValueError("all states must share the mode count")
        amps = st.amplitudes if bob_op is None else lift(bob_op, st.basis.n) @ st.amplitudes
        rows.append((np.abs(amps) ** 2) @ click_matrix(st.basis, det))
    return ChannelMatrix(np.array(rows), tuple(click_patterns(N)))


def baseline_alphabet() -> tuple[list[PureState], np.ndarray]:
    """Alice's five orthogonal two-mode states and their photon costs.

    ``|00>, (|01>+|10>)/sqrt2, (|01>-|10>)/sqrt2, |11>, (|20>-|02>)/sqrt2``.
    """
    s2 = 1 / np.sqrt(2)
    b0, b1, b2 = (enumerate_basis(k, 2) for k in range(3))
    states = [
        basis_state(b0, (0, 0)),
        state_from_terms({(0, 1): s2, (1, 0): s2}, b1),
        state_from_terms({(0, 1): s2, (1, 0): -s2}, b1),
        basis_state(b2, (1, 1)),
        state_from_terms({(2, 0): s2, (0, 2): -s2}, b2),
    ]
    return states, np.array([0.0, 1.0, 1.0, 2.0, 2.0])


def two_mode_joint_matrix(priors, s: float, v: float) -> np.ndarray:
    """Joint probabilities of Alice's ``|00>,|01>,|10>,|11>`` and Bob's clicks.

    Columns are the patterns ``--, -+, +-, ++``.
    """
    p1, p2, p3, p4 = check_priors(priors, 4)
    return np.array(
        [
            [v**2 * p1, v * (1 - v) * p1, v * (1 - v) * p1, (1 - v) ** 2 * p1],
            [v * (1 - s) * p2, v * s * p2, (1 - s) * (1 - v) * p2, s * (1 - v) * p2],
            [v * (1 - s) * p3, (1 - v) * (1 - s) * p3, s * v * p3, s * (1 - v) * p3],
            [(1 - s) ** 2 * p4, s * (1 - s) * p4, s * (1 - s) * p4, s**2 * p4],
        ]
    )


def entanglement_free_baseline(
    vacuum_allowed: bool = True, det: DetectorModel | None = None
) -> CapacityResult:
    """Best resource-equivalent two-mode protocol without entanglement.

    Priors are optimized subject to one photon on average per character.
    With ideal detectors Alice uses the five orthogonal states of
    :func:`baseline_alphabet` and Bob a 50/50 splitter before two bucket
    detectors; with a detector model the alphabet collapses to
    ``|00>, |01>, |10>, |11>`` observed directly. Without vacuum detection
    the vacuum symbol is dropped.
    """
    if det is None:
        states, cost = baseline_alphabet()
        W = bucket_channel(states, beam_splitter(0, 1, 2), DetectorModel(1.0, 1.0)).p
    else:
        cost = np.array([0.0, 1.0, 1.0, 2.0])
        W = two_mode_joint_matrix(np.full(4, 0.25), det.s, det.v) * 4
    labels = ["|0,0>", "|0,1>+|1,0>", "|0,1>-|1,0>", "|1,1>", "|2,0>-|0,2>"]
    if det is not None:
        labels = ["|0,0>", "|0,1>", "|1,0>", "|1,1>"]
    keep = np.arange(len(cost)) if vacuum_allowed else np.flatnonzero(cost > 0)
    res = blahut_arimoto(W[keep], constraint=(cost[keep], 1.0))
    priors = np.zeros(len(cost))
    priors[keep] = res.priors
    gap = abs(float(priors @ cost) - 1.0)
    return CapacityResult(
        res.capacity, priors, np.zeros(0), gap, np.array([res.capacity]), res.converged,
        {"states": labels, "vacuum_allowed": vacuum_allowed},
    )


def entangled_detector_capacity(det: DetectorModel) -> tuple[float, np.ndarray]:
    """Capacity of the canonical protocol seen through four bucket detectors."""
    res = blahut_arimoto(canonical_protocol().channel(det))
    return res.capacity, res.priors


def detector_gap_sweep(s_values: Sequence[float], v: float = 0.9999) -> list[dict]:
    """Capacity gain of the entangled protocol over the baseline versus ``s``."""
    rows = []
    for s in s_values:
        det = DetectorModel(float(s), v)
        c_ent, _ = entangled_detector_capacity(det)
        c_noent = entanglement_free_baseline(True, det).capacity_bits
        rows.append({"s": float(s), "C_ent": c_ent, "C_noent": c_noent, "delta": c_ent - c_noent})
    return rows


class OrthogonalCount(NamedTuple):
    count: int
    residuals: dict
    capped: bool


def _local_states(x: np.ndarray, m: int, n: int, N: int, window: int) -> np.ndarray:
    dim = math.comb(n + N - 1, n)
    k = 2 * dim - 1
    c = decode_state(x[:k], dim)
    charts = x[k:].reshape(m - 1, window * window)
    local = np.concatenate([np.eye(window)[None], unitary_from_params(charts, window)])
    return propagate(embed(local, 0, N), c, n)  # (m, dim)


def orthogonality_residual(x: np.ndarray, m: int, n: int, N: int, window: int) -> float:
    """Largest ``|<psi_i|psi_j>|`` over distinct local images of the input."""
    if m == 1:
        return 0.0
    phi = _local_states(x, m, n, N, window)
    G = phi.conj() @ phi.T
    return float(np.max(np.abs(G[np.triu_indices(m, 1)])))


def _orthogonal_search(m, n, N, window, restarts, seed) -> tuple[float, np.ndarray]:
    dim = math.comb(n + N - 1, n)
    iu = np.triu_indices(m, 1)

    def residuals(x):
        phi = _local_states(x, m, n, N, window)
        g = (phi.conj() @ phi.T)[iu]
        return np.concatenate([g.real, g.imag])

    best = (np.inf, None)
    for r in range(restarts):
        rng = np.random.default_rng(seed + r)
        c = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
        x0 = np.concatenate([encode_state(c), rng.standard_normal((m - 1) * window**2)])
        sol = sopt.least_squares(residuals, x0, method="trf", xtol=1e-15, ftol=1e-15, gtol=1e-15, max_nfev=4000)
        val = orthogonality_residual(sol.x, m, n, N, window)
        if val < best[0]:
            best = (val, sol.x)
        if val < 1e-6:
            break
    return best


def count_orthogonal_states(
    n: int,
    N: int,
    window: int,
    cfg: OptimizerConfig | None = None,
    m_max: int | None = None,
    threshold: float = 1e-6,
) -> OrthogonalCount:
    """Largest number of mutually orthogonal states Alice can reach locally.

    For ``m = 2, 3, ...`` a least-squares search over the shared state and
    ``m - 1`` local unitaries on modes ``0 .. window-1`` tries to zero the
    off-diagonal Gram entries; the count is the last ``m`` whose best
    residual is below ``threshold``. ``cfg.restarts`` searches per ``m``.
    """
    if not 1 <= window < N:
        raise ValueError(f"window must satisfy 1 <= window < N, got {window}")
    cfg = cfg or OptimizerConfig(restarts=50)
    dim = math.comb(n + N - 1, n)
    m_max = dim if m_max is None else min(m_max, dim)
    residuals = {1: 0.0}
    count = 1
    for m in range(2, m_max + 1):
        val, _ = _orthogonal_search(m, n, N, window, cfg.restarts, cfg.seed)
        residuals[m] = val
        if val >= threshold:
            return OrthogonalCount(count, residuals, False)
        count = m
    return OrthogonalCount(count, residuals, True)


def extended_capacity(n: int, N: int, M: int, cfg: OptimizerConfig | None = None) -> CapacityResult:
    """Unconstrained capacity with ``M`` local operations on half the modes."""
    spec = ProblemSpec(n=n, N=N, M=M, alice_modes=N // 2, priors_mode="blahut-arimoto")
    if M > spec.dim:
        raise ValueError(f"alphabet {M} exceeds sector dimension {spec.dim}")
    return maximize_capacity(spec, cfg)


def six_state_reference() -> float:
    """Three-mode entanglement-free scheme with one- and two-photon letters."""
    b1, b2 = enumerate_basis(1, 3), enumerate_basis(2, 3)
    singles = [basis_state(b1, occ) for occ in [(1, 0, 0), (0, 1, 0), (0, 0, 1)]]
    pairs = [basis_state(b2, occ) for occ in [(1, 1, 0), (1, 0, 1), (0, 1, 1)]]
    ch = bucket_channel(singles + pairs, None, DetectorModel(1.0, 1.0))
    return blahut_arimoto(ch).capacity
