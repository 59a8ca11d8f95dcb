"""Mode unitaries and their action on multi-photon Fock sectors.

Convention: a mode unitary ``U`` maps creation operators as
``a_k^dagger -> sum_j U[j, k] a_j^dagger``, so on the single-photon sector
the lifted operator is ``U`` itself and ``lift(U @ V) == lift(U) @ lift(V)``.
Matrices written for the row convention (``a_k^dagger -> sum_j U[k, j]
a_j^dagger``) are the transposes of the ones used here.

Most functions accept stacks of matrices with arbitrary leading batch
dimensions; the optimizer relies on this to evaluate finite-difference
stencils in one call.
"""

from __future__ import annotations

import functools
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import linalg

from .fock import FockBasis, PureState, enumerate_basis

__all__ = [
    "U2Angles",
    "u2_from_angles",
    "n_chart_params",
    "hermitian_from_params",
    "unitary_from_params",
    "params_from_unitary",
    "embed",
    "mode_permutation",
    "is_unitary",
    "check_unitary",
    "permanent",
    "lift",
    "propagate",
    "apply",
    "unitary_to_json",
    "unitary_from_json",
]

MAX_PERMANENT_SIZE = 8
_TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class U2Angles:
    """Angles of the generic 2x2 unitary; wrapped into ``[0, 2*pi)``."""

    theta: float
    phi1: float = 0.0
    phi2: float = 0.0
    phi3: float = 0.0

    def __post_init__(self):
        for name in ("theta", "phi1", "phi2", "phi3"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise ValueError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, val % _TWO_PI)


def u2_from_angles(a: U2Angles) -> np.ndarray:
    """``[[e^{i p1} cos t, -e^{i p2} sin t], [e^{i p3} sin t, e^{i(p2+p3-p1)} cos t]]``."""
    if not isinstance(a, U2Angles):
        a = U2Angles(*a)
    c, s = np.cos(a.theta), np.sin(a.theta)
    return np.array(
        [
            [np.exp(1j * a.phi1) * c, -np.exp(1j * a.phi2) * s],
            [np.exp(1j * a.phi3) * s, np.exp(1j * (a.phi2 + a.phi3 - a.phi1)) * c],
        ]
    )


def n_chart_params(N: int) -> int:
    return N * N


@functools.lru_cache(maxsize=None)
def _offdiag_pairs(N: int) -> tuple[np.ndarray, np.ndarray]:
    return np.triu_indices(N, k=1)


def hermitian_from_params(p: np.ndarray, N: int) -> np.ndarray:
    """Hermitian generator from ``N**2`` reals.

    Layout: ``N`` diagonal entries, then the real parts of the upper
    triangle (row-major), then the imaginary parts.
    """
    p = np.asarray(p, dtype=float)
    if p.shape[-1] != N * N:
        raise ValueError(f"expected {N * N} parameters, got {p.shape[-1]}")
    rows, cols = _offdiag_pairs(N)
    k = len(rows)
    H = np.zeros(p.shape[:-1] + (N, N), dtype=complex)
    diag = np.arange(N)
    H[..., diag, diag] = p[..., :N]
    off = p[..., N : N + k] + 1j * p[..., N + k :]
    H[..., rows, cols] = off
    H[..., cols, rows] = off.conj()
    return H


def unitary_from_params(p: np.ndarray, N: int | None = None) -> np.ndarray:
    """``exp(i H(p))`` via eigendecomposition of the Hermitian generator.

    ``p`` has shape ``(..., N**2)``; the result has shape ``(..., N, N)``.
    """
    p = np.asarray(p, dtype=float)
    if N is None:
        N = math.isqrt(p.shape[-1])
    if not np.all(np.isfinite(p)):
        raise ValueError("unitary parameters must be finite")
    H = hermitian_from_params(p, N)
    w, V = np.linalg.eigh(H)
    return (V * np.exp(1j * w)[..., None, :]) @ np.swapaxes(V, -1, -2).conj()


def params_from_unitary(U: np.ndarray) -> np.ndarray:
    """Chart coordinates of ``U``; inverse of :func:`unitary_from_params`.

    Eigenphases are taken in ``(-pi, pi]``.
    """
    U = check_unitary(U, 1e-8, "chart target")
    N = U.shape[0]
    T, Z = linalg.schur(U, output="complex")
    H = (Z * np.angle(np.diag(T))) @ Z.conj().T
    rows, cols = _offdiag_pairs(N)
    off = H[rows, cols]
    return np.concatenate([np.diag(H).real, off.real, off.imag])


def embed(local: np.ndarray, first_mode: int, N: int) -> np.ndarray:
    """Act with ``local`` on modes ``first_mode .. first_mode + k - 1`` (0-based).

    Identity on all other modes. Works on stacks of local unitaries.
    """
    local = np.asarray(local, dtype=complex)
    k = local.shape[-1]
    if local.shape[-2] != k:
        raise ValueError("local unitary must be square")
    if first_mode < 0 or first_mode + k > N:
        raise ValueError(f"window [{first_mode}, {first_mode + k}) outside {N} modes")
    out = np.broadcast_to(np.eye(N, dtype=complex), local.shape[:-2] + (N, N)).copy()
    out[..., first_mode : first_mode + k, first_mode : first_mode + k] = local
    return out


def mode_permutation(perm) -> np.ndarray:
    """Unitary sending mode ``i`` to mode ``perm[i]``."""
    perm = list(perm)
    N = len(perm)
    if sorted(perm) != list(range(N)):
        raise ValueError(f"{perm} is not a permutation of 0..{N - 1}")
    P = np.zeros((N, N))
    P[perm, np.arange(N)] = 1.0
    return P


def is_unitary(U: np.ndarray, atol: float = 1e-10) -> bool:
    U = np.asarray(U)
    if U.ndim < 2 or U.shape[-1] != U.shape[-2]:
        return False
    eye = np.eye(U.shape[-1])
    err = np.linalg.norm(np.swapaxes(U, -1, -2).conj() @ U - eye, axis=(-2, -1))
    return bool(np.all(err < atol))


def check_unitary(U: np.ndarray, atol: float = 1e-10, name: str = "matrix") -> np.ndarray:
    U = np.asarray(U, dtype=complex)
    if not is_unitary(U, atol):
        raise ValueError(f"{name} is not unitary within {atol:g}")
    return U


def permanent(m: np.ndarray) -> complex:
    """Matrix permanent by Ryser's formula, visiting subsets in Gray-code order.

    Cost is ``O(2**n * n)``; inputs are limited to ``n <= 8``.
    """
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"permanent needs a square matrix, got shape {a.shape}")
    n = a.shape[0]
    if n > MAX_PERMANENT_SIZE:
        raise ValueError(f"permanent limited to size {MAX_PERMANENT_SIZE}, got {n}")
    if n == 0:
        return 1.0 + 0j
    row_sums = np.zeros(n, dtype=complex)
    total = 0j
    gray = 0
    for k in range(1, 2**n):
        j = (k & -k).bit_length() - 1  # bit flipped between gray(k-1) and gray(k)
        gray ^= 1 << j
        if gray >> j & 1:
            row_sums += a[:, j]
        else:
            row_sums -= a[:, j]
        sign = -1 if bin(gray).count("1") % 2 else 1
        total += sign * np.prod(row_sums)
    return (-1) ** n * total


@functools.lru_cache(maxsize=None)
def _ryser_masks(n: int) -> tuple[np.ndarray, np.ndarray]:
    masks = np.array(
        [[(s >> j) & 1 for j in range(n)] for s in range(1, 2**n)], dtype=float
    )
    signs = (-1.0) ** (n - masks.sum(axis=1))
    return masks, signs


def _permanent_stack(a: np.ndarray) -> np.ndarray:
    # Ryser's formula over all nonempty column subsets, vectorized over leading axes
    n = a.shape[-1]
    if n == 0:
        return np.ones(a.shape[:-2], dtype=complex)
    masks, signs = _ryser_masks(n)
    row_sums = a @ masks.T  # (..., n_rows, n_subsets)
    return np.prod(row_sums, axis=-2) @ signs


@functools.lru_cache(maxsize=None)
def _lift_tables(n: int, N: int) -> tuple[np.ndarray, np.ndarray]:
    basis = enumerate_basis(n, N)
    modes = np.array(
        [[m for m, c in enumerate(occ) for _ in range(c)] for occ in basis.elements],
        dtype=int,
    ).reshape(basis.dim, n)
    norms = np.array(
        [math.prod(math.factorial(c) for c in occ) for occ in basis.elements],
        dtype=float,
    )
    scale = 1.0 / np.sqrt(np.outer(norms, norms))
    return modes, scale


_LIFT_CHUNK = 1 << 22  # complex entries per temporary block


def lift(U: np.ndarray, n: int, basis: FockBasis | None = None) -> np.ndarray:
    """Induced unitary of a mode unitary on the ``n``-photon sector.

    ``<m| lift(U) |k> = Per(U[m, k]) / sqrt(prod m_i! prod k_j!)``, where
    ``U[m, k]`` repeats row ``i`` of ``U`` ``m_i`` times and column ``j``
    ``k_j`` times. Leading batch axes of ``U`` are preserved.
    """
    U = np.asarray(U, dtype=complex)
    N = U.shape[-1]
    if U.ndim < 2 or U.shape[-2] != N:
        raise ValueError(f"mode unitary must be square, got shape {U.shape}")
    if basis is not None and (basis.n, basis.N) != (n, N):
        raise ValueError(
            f"basis (n={basis.n}, N={basis.N}) does not match n={n}, N={N}"
        )
    modes, scale = _lift_tables(n, N)
    dim = modes.shape[0]
    batch = U.shape[:-2]
    flat = U.reshape((-1, N, N))
    out = np.empty((flat.shape[0], dim, dim), dtype=complex)
    per_item = dim * dim * max(n, 1) ** 2
    step = max(1, _LIFT_CHUNK // per_item)
    r = modes[:, None, :, None]
    c = modes[None, :, None, :]
    for start in range(0, flat.shape[0], step):
        block = flat[start : start + step]
        sub = block[:, r, c]  # (b, dim, dim, n, n)
        out[start : start + step] = _permanent_stack(sub) * scale
    return out.reshape(batch + (dim, dim))


@functools.lru_cache(maxsize=None)
def _tensor_tables(n: int, N: int) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    basis = enumerate_basis(n, N)
    flat_to_basis = np.empty(N**n, dtype=int)
    for flat, idx in enumerate(np.ndindex(*(N,) * n)):
        flat_to_basis[flat] = basis.index[tuple(np.bincount(idx, minlength=N))]
    rep = np.empty(basis.dim, dtype=int)
    for k, occ in enumerate(basis.elements):
        idx = [m for m, c in enumerate(occ) for _ in range(c)]
        rep[k] = np.ravel_multi_index(idx, (N,) * n) if n else 0
    sq = np.sqrt([math.prod(math.factorial(c) for c in occ) for occ in basis.elements])
    nfact = math.factorial(n)
    return flat_to_basis, rep, sq / nfact, nfact / sq


def propagate(U: np.ndarray, amplitudes: np.ndarray, n: int) -> np.ndarray:
    """``lift(U, n) @ amplitudes`` without building the lifted matrix.

    The state is held as the symmetric coefficient tensor of its creation
    operator polynomial, which transforms as ``S -> U S U^T`` (one factor
    of ``U`` per photon). Batch axes of ``U`` and ``amplitudes`` broadcast.
    """
    U = np.asarray(U, dtype=complex)
    c = np.asarray(amplitudes, dtype=complex)
    N = U.shape[-1]
    if n == 0:
        return np.broadcast_to(c, np.broadcast_shapes(U.shape[:-2], c.shape[:-1]) + c.shape[-1:]).copy()
    flat_to_basis, rep, to_tensor, from_tensor = _tensor_tables(n, N)
    S = (c * to_tensor)[..., flat_to_basis].reshape(c.shape[:-1] + (N,) * n)
    if n == 1:
        S = np.einsum("...ij,...j->...i", U, S)
    elif n == 2:
        S = U @ S @ np.swapaxes(U, -1, -2)
    else:
        for axis in range(n):
            S = np.moveaxis(S, -n + axis, -1)
            S = np.einsum("...ij,...j->...i", U[(...,) + (None,) * (n - 1) + (slice(None),) * 2], S)
            S = np.moveaxis(S, -1, -n + axis)
    flat = S.reshape(S.shape[:-n] + (N**n,))
    return flat[..., rep] * from_tensor


def apply(U: np.ndarray, state: PureState) -> PureState:
    """Propagate a pure state through a mode unitary."""
    U = np.asarray(U, dtype=complex)
    if U.shape != (state.basis.N, state.basis.N):
        raise ValueError(
            f"unitary shape {U.shape} does not match {state.basis.N} modes"
        )
    return PureState(state.basis, lift(U, state.basis.n) @ state.amplitudes)


def unitary_to_json(U: np.ndarray) -> str:
    U = np.asarray(U, dtype=complex)
    entries = [[float(z.real), float(z.imag)] for z in U.reshape(-1)]
    return json.dumps({"N": U.shape[0], "entries": entries})


def unitary_from_json(text: str) -> np.ndarray:
    data = json.loads(text)
    N = data["N"]
    flat = np.array([complex(re, im) for re, im in data["entries"]])
    return flat.reshape(N, N)
