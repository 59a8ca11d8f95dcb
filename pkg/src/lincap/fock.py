"""Occupation-number bases and pure states for n photons in N modes.

Basis elements are tuples of photon counts, ordered descending
lexicographically, so the two-photon four-mode sector reads
``(2,0,0,0), (1,1,0,0), ..., (0,0,1,1), (0,0,0,2)``. Every channel matrix
and CSV column in the package inherits this order.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

__all__ = [
    "MAX_DIM",
    "FockBasis",
    "PureState",
    "sector_dimension",
    "enumerate_basis",
    "occupation_label",
    "basis_state",
    "state_from_terms",
    "inner_product",
    "mean_photon_number",
    "normalize",
    "state_to_json",
    "state_from_json",
]

MAX_DIM = 10**6

OccupationVector = tuple[int, ...]


def sector_dimension(n: int, N: int) -> int:
    """Number of ways to put ``n`` indistinguishable photons in ``N`` modes."""
    if n < 0 or N < 1:
        raise ValueError(f"need n >= 0 and N >= 1, got n={n}, N={N}")
    return math.comb(n + N - 1, n)


def _compositions(n: int, N: int) -> Iterable[OccupationVector]:
    # descending lexicographic: largest count in the leftmost mode first
    if N == 1:
        yield (n,)
        return
    for first in range(n, -1, -1):
        for rest in _compositions(n - first, N - 1):
            yield (first,) + rest


@dataclass(frozen=True)
class FockBasis:
    """Ordered basis of the ``n``-photon sector over ``N`` modes."""

    n: int
    N: int
    elements: tuple[OccupationVector, ...]
    index: Mapping[OccupationVector, int] = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return len(self.elements)

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    def labels(self) -> list[str]:
        return [occupation_label(occ) for occ in self.elements]

    def occupations(self) -> np.ndarray:
        """Counts as a ``(dim, N)`` integer array."""
        return np.array(self.elements, dtype=int).reshape(self.dim, self.N)


def enumerate_basis(n: int, N: int) -> FockBasis:
    """Enumerate the ``n``-photon, ``N``-mode occupation basis.

    Parameters
    ----------
    n : int
        Photon number, ``n >= 0``.
    N : int
        Mode count, ``N >= 1``.

    Returns
    -------
    FockBasis
        ``comb(n + N - 1, n)`` elements in descending lexicographic order.

    Raises
    ------
    ValueError
        For negative ``n``, ``N < 1``, or a sector larger than ``MAX_DIM``.
    """
    if isinstance(n, bool) or isinstance(N, bool):
        raise TypeError("photon and mode counts must be integers")
    n, N = int(n), int(N)
    dim = sector_dimension(n, N)
    if dim > MAX_DIM:
        raise ValueError(f"sector dimension {dim} exceeds limit {MAX_DIM}")
    elements = tuple(_compositions(n, N))
    return FockBasis(n, N, elements, {occ: i for i, occ in enumerate(elements)})


def occupation_label(occ: Sequence[int]) -> str:
    return "|" + ",".join(str(c) for c in occ) + ">"


@dataclass(frozen=True, eq=False)
class PureState:
    """Normalized amplitude vector over a :class:`FockBasis`."""

    basis: FockBasis
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).reshape(-1)
        if amps.shape[0] != self.basis.dim:
            raise ValueError(
                f"expected {self.basis.dim} amplitudes, got {amps.shape[0]}"
            )
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    @property
    def dim(self) -> int:
        return self.basis.dim

    def norm(self) -> float:
        return float(np.linalg.norm(self.amplitudes))

    def terms(self, atol: float = 1e-12) -> dict[OccupationVector, complex]:
        """Nonzero amplitudes keyed by occupation vector."""
        return {
            occ: complex(a)
            for occ, a in zip(self.basis.elements, self.amplitudes)
            if abs(a) > atol
        }

    def __repr__(self) -> str:
        body = " + ".join(
            f"({a.real:+.4g}{a.imag:+.4g}j){occupation_label(o)}"
            for o, a in self.terms(1e-9).items()
        )
        return f"PureState(n={self.basis.n}, N={self.basis.N}: {body or '0'})"


def basis_state(basis: FockBasis, occ: Sequence[int]) -> PureState:
    amps = np.zeros(basis.dim, dtype=complex)
    amps[basis.index[tuple(occ)]] = 1.0
    return PureState(basis, amps)


def state_from_terms(
    terms: Mapping[Sequence[int], complex], basis: FockBasis | None = None
) -> PureState:
    """Build a normalized state from ``{occupation: amplitude}``.

    The basis is inferred from the first key when not given.
    """
    if not terms:
        raise ValueError("no terms given")
    if basis is None:
        first = tuple(next(iter(terms)))
        basis = enumerate_basis(sum(first), len(first))
    amps = np.zeros(basis.dim, dtype=complex)
    for occ, a in terms.items():
        occ = tuple(int(c) for c in occ)
        if occ not in basis.index:
            raise ValueError(f"{occ} is not in the n={basis.n}, N={basis.N} sector")
        amps[basis.index[occ]] += a
    return normalize(PureState(basis, amps))


def _check_same_basis(a: PureState, b: PureState) -> None:
    if (a.basis.n, a.basis.N) != (b.basis.n, b.basis.N):
        raise ValueError(
            f"basis mismatch: (n={a.basis.n}, N={a.basis.N}) vs "
            f"(n={b.basis.n}, N={b.basis.N})"
        )


def inner_product(a: PureState, b: PureState) -> complex:
    """Hermitian inner product <a|b>, antilinear in ``a``."""
    _check_same_basis(a, b)
    return complex(np.vdot(a.amplitudes, b.amplitudes))


def mean_photon_number(state: PureState, modes: Iterable[int]) -> float:
    """Expected photon count in a set of modes.

    Modes are 0-based indices into the occupation vector.
    """
    modes = sorted(set(int(m) for m in modes))
    if any(m < 0 or m >= state.basis.N for m in modes):
        raise IndexError(f"modes {modes} outside 0..{state.basis.N - 1}")
    weights = np.abs(state.amplitudes) ** 2
    total = weights.sum()
    if total == 0:
        raise ValueError("state vector is zero")
    counts = state.basis.occupations()[:, modes].sum(axis=1)
    return float(weights @ counts / total)


def normalize(state: PureState) -> PureState:
    norm = np.linalg.norm(state.amplitudes)
    if norm == 0 or not np.isfinite(norm):
        raise ValueError("cannot normalize a zero or non-finite vector")
    return PureState(state.basis, state.amplitudes / norm)


def state_to_json(state: PureState) -> str:
    amps = [[float(a.real), float(a.imag)] for a in state.amplitudes]
    return json.dumps({"n": state.basis.n, "N": state.basis.N, "amplitudes": amps})


def state_from_json(text: str) -> PureState:
    data = json.loads(text)
    basis = enumerate_basis(data["n"], data["N"])
    amps = np.array([complex(re, im) for re, im in data["amplitudes"]])
    return PureState(basis, amps)
