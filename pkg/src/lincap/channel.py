"""Classical channels induced by linear-optical protocols.

A channel is a row-stochastic matrix ``p[j, k] = p(outcome k | input j)``.
Outcomes are either Fock-basis occupations (photon-number-resolving
detection) or click patterns of bucket detectors such as ``"+-+-"``.
All information quantities are in bits, with ``0 log 0 = 0``.
"""

from __future__ import annotations

import csv
import io
import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

from .fock import FockBasis, PureState, enumerate_basis
from .linop import check_unitary, embed, propagate

__all__ = [
    "ChannelMatrix",
    "DetectorModel",
    "CapacityResult",
    "BAResult",
    "check_priors",
    "entropy",
    "outcome_probabilities",
    "conditional_matrix",
    "click_patterns",
    "click_matrix",
    "click_pattern_distribution",
    "apply_detector",
    "mutual_information",
    "mutual_information_batch",
    "blahut_arimoto",
    "blahut_arimoto_batch",
    "vacuum_posterior",
    "photon_posterior",
]

ROW_SUM_TOL = 1e-9
PRIOR_SUM_TOL = 1e-12
BA_MAX_ITER = 10_000
BA_TOL = 1e-12

_LN2 = math.log(2.0)


@dataclass(frozen=True, eq=False)
class ChannelMatrix:
    """Row-stochastic ``M x K`` conditional probability matrix."""

    p: np.ndarray
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2:
            raise ValueError(f"channel matrix must be 2-D, got shape {p.shape}")
        if np.any(p < -ROW_SUM_TOL) or np.any(p > 1 + ROW_SUM_TOL):
            raise ValueError("channel entries must lie in [0, 1]")
        rows = p.sum(axis=1)
        if np.any(np.abs(rows - 1) > ROW_SUM_TOL):
            worst = float(np.max(np.abs(rows - 1)))
            raise ValueError(f"channel rows must sum to 1, worst deviation {worst:.3g}")
        p = np.clip(p, 0.0, 1.0)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)
        if self.labels is not None:
            labels = tuple(self.labels)
            if len(labels) != p.shape[1]:
                raise ValueError(f"{len(labels)} labels for {p.shape[1]} outcomes")
            object.__setattr__(self, "labels", labels)

    @property
    def M(self) -> int:
        return self.p.shape[0]

    @property
    def K(self) -> int:
        return self.p.shape[1]

    def to_csv(self, comment: str | None = None) -> str:
        """CSV with one header row of outcome labels and one row per input."""
        buf = io.StringIO()
        if comment:
            buf.write(f"# {comment}\n")
        writer = csv.writer(buf, lineterminator="\n")
        labels = self.labels or tuple(f"y{k}" for k in range(self.K))
        writer.writerow(["input", *labels])
        for j, row in enumerate(self.p):
            writer.writerow([j, *(repr(float(x)) for x in row)])
        return buf.getvalue()


@dataclass(frozen=True)
class DetectorModel:
    """Bucket detector: ``s = p(click | 1 photon)``, ``v = p(no click | vacuum)``.

    ``k >= 1`` photons click with probability ``1 - (1 - s)**k``.
    """

    s: float = 1.0
    v: float = 1.0

    def __post_init__(self):
        for name in ("s", "v"):
            val = float(getattr(self, name))
            if not (0.0 <= val <= 1.0):
                raise ValueError(f"detector parameter {name}={val} outside [0, 1]")
            object.__setattr__(self, name, val)

    def click_probability(self, k) -> np.ndarray:
        k = np.asarray(k)
        return np.where(k > 0, 1.0 - (1.0 - self.s) ** k, 1.0 - self.v)


@dataclass
class CapacityResult:
    capacity_bits: float
    priors: np.ndarray
    parameters: np.ndarray = field(default_factory=lambda: np.zeros(0))
    feasibility_gap: float = 0.0
    restart_capacities: np.ndarray = field(default_factory=lambda: np.zeros(0))
    converged: bool = True
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        M = len(self.priors)
        if not (-1e-9 <= self.capacity_bits <= math.log2(max(M, 1)) + 1e-9):
            raise ValueError(
                f"capacity {self.capacity_bits} outside [0, log2({M})]"
            )


class BAResult(NamedTuple):
    priors: np.ndarray
    capacity: float
    converged: bool
    iterations: int
    history: np.ndarray


def check_priors(priors, M: int | None = None) -> np.ndarray:
    p = np.asarray(priors, dtype=float).reshape(-1)
    if M is not None and p.shape[0] != M:
        raise ValueError(f"expected {M} priors, got {p.shape[0]}")
    if np.any(p < 0) or abs(p.sum() - 1) > PRIOR_SUM_TOL * max(1, p.shape[0]):
        raise ValueError(f"priors must be a probability vector, got {p}")
    return p


def entropy(p) -> float:
    p = np.asarray(p, dtype=float)
    nz = p[p > 0]
    return float(-(nz * np.log2(nz)).sum())


def _as_matrix(ch) -> np.ndarray:
    return ch.p if isinstance(ch, ChannelMatrix) else np.asarray(ch, dtype=float)


def outcome_probabilities(
    amplitudes: np.ndarray, mode_ops: np.ndarray, n: int
) -> np.ndarray:
    """Fock-outcome probabilities ``|lift(op) @ amplitudes|**2``.

    ``amplitudes`` has shape ``(..., dim)`` and ``mode_ops`` ``(..., M, N, N)``
    (batch axes broadcast); the result has shape ``(..., M, dim)``.
    """
    out = propagate(mode_ops, np.asarray(amplitudes)[..., None, :], n)
    return np.abs(out) ** 2


def conditional_matrix(
    input_state: PureState,
    alice_ops: Sequence[np.ndarray],
    alice_modes: Sequence[int],
    bob_op: np.ndarray,
    basis: FockBasis | None = None,
) -> ChannelMatrix:
    """Channel from Alice's choice of local unitary to Bob's Fock outcome.

    Row ``j`` holds ``|<phi_k| lift(bob_op) lift(U_j) |input>|**2`` with
    ``U_j`` acting on the contiguous 0-based modes ``alice_modes``.
    """
    basis = basis or input_state.basis
    if (basis.n, basis.N) != (input_state.basis.n, input_state.basis.N):
        raise ValueError("input state does not live in the given basis")
    if len(alice_ops) == 0:
        raise ValueError("need at least one Alice operation")
    modes = list(alice_modes)
    if modes != list(range(modes[0], modes[0] + len(modes))):
        raise ValueError(f"Alice modes {modes} must be contiguous")
    N = basis.N
    bob = check_unitary(bob_op, 1e-10, "Bob's unitary")
    if bob.shape != (N, N):
        raise ValueError(f"Bob's unitary has shape {bob.shape}, need {(N, N)}")
    local = np.stack([check_unitary(U, 1e-10, "Alice operation") for U in alice_ops])
    if local.shape[-1] != len(modes):
        raise ValueError(
            f"Alice operations act on {local.shape[-1]} modes, window has {len(modes)}"
        )
    ops = bob @ embed(local, modes[0], N)
    probs = outcome_probabilities(input_state.amplitudes, ops, basis.n)
    return ChannelMatrix(probs / probs.sum(axis=1, keepdims=True), tuple(basis.labels()))


def click_patterns(N: int) -> list[str]:
    """All ``2**N`` patterns, ``"-" * N`` first and ``"+" * N`` last."""
    return ["".join(p) for p in itertools.product("-+", repeat=N)]


def click_matrix(basis: FockBasis, det: DetectorModel) -> np.ndarray:
    """``(dim, 2**N)`` matrix of click-pattern probabilities per Fock outcome."""
    occ = basis.occupations()
    pc = det.click_probability(occ)  # (dim, N)
    bits = np.array(list(itertools.product([0, 1], repeat=basis.N)), dtype=bool)
    # product over modes of pc (click) or 1 - pc (no click)
    factors = np.where(bits[None, :, :], pc[:, None, :], 1.0 - pc[:, None, :])
    return np.prod(factors, axis=-1)


def _infer_sector(dim: int, N: int) -> FockBasis:
    n = 0
    while math.comb(n + N - 1, n) < dim:
        n += 1
    if math.comb(n + N - 1, n) != dim:
        raise ValueError(f"{dim} outcomes do not form a photon sector over {N} modes")
    return enumerate_basis(n, N)


def click_pattern_distribution(occ_probs, det: DetectorModel, N: int) -> np.ndarray:
    """Distribution over bucket-detector click patterns.

    Parameters
    ----------
    occ_probs : array_like
        Probabilities of the Fock outcomes of one photon sector over ``N``
        modes, in basis order.
    det : DetectorModel
    N : int
        Number of modes (one detector each).

    Returns
    -------
    ndarray
        Length ``2**N``, ordered as :func:`click_patterns`.
    """
    if not isinstance(det, DetectorModel):
        raise TypeError("det must be a DetectorModel")
    occ_probs = np.asarray(occ_probs, dtype=float)
    if abs(occ_probs.sum() - 1) > ROW_SUM_TOL:
        raise ValueError("outcome probabilities must sum to 1")
    basis = _infer_sector(occ_probs.shape[-1], N)
    return occ_probs @ click_matrix(basis, det)


def apply_detector(ch: ChannelMatrix, det: DetectorModel, basis: FockBasis) -> ChannelMatrix:
    """Compose a Fock-outcome channel with per-mode bucket detection."""
    if ch.K != basis.dim:
        raise ValueError(f"channel has {ch.K} outcomes, basis has {basis.dim}")
    p = ch.p @ click_matrix(basis, det)
    return ChannelMatrix(p, tuple(click_patterns(basis.N)))


def _plogp_ratio(joint: np.ndarray, ratio: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = joint * np.log(ratio)
    return np.where(joint > 0, terms, 0.0)


def mutual_information_batch(priors: np.ndarray, W: np.ndarray) -> np.ndarray:
    """Vectorized ``I(X;Y)`` in bits for priors ``(..., M)`` and channels ``(..., M, K)``."""
    priors = np.asarray(priors, dtype=float)
    joint = priors[..., :, None] * W
    q = joint.sum(axis=-2, keepdims=True)
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = W / q
    return _plogp_ratio(joint, ratio).sum(axis=(-2, -1)) / _LN2


def mutual_information(priors, ch) -> float:
    """Mutual information between input and outcome, in bits.

    Examples
    --------
    >>> mutual_information([0.5, 0.5], [[1, 0], [0, 1]])
    1.0
    """
    W = _as_matrix(ch)
    rows = W.sum(axis=1)
    if np.any(np.abs(rows - 1) > ROW_SUM_TOL):
        raise ValueError("channel rows must sum to 1")
    p = check_priors(priors, W.shape[0])
    return float(max(mutual_information_batch(p, W), 0.0))


def _divergences(W: np.ndarray, q: np.ndarray) -> np.ndarray:
    # D(W_j || q) in nats for every row j
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = W / q[..., None, :]
    return _plogp_ratio(W, ratio).sum(axis=-1)


def _ba_fixed_multiplier(W, weights, lam, p0, tol, max_iter, history=None):
    """Tilted BA iteration maximizing ``I(p) - lam * w.p`` (nats)."""
    p = p0
    it = 0
    converged = False
    for it in range(1, max_iter + 1):
        q = p @ W
        D = _divergences(W, q) - lam * weights
        lower = float(p @ D)
        upper = float(D.max())
        if history is not None:
            history.append(lower)
        if upper - lower < tol * _LN2:
            converged = True
            break
        # shift before exponentiating for stability
        p = p * np.exp(D - upper)
        p /= p.sum()
    return p, converged, it


def blahut_arimoto(
    ch,
    constraint: tuple[Sequence[float], float] | None = None,
    tol: float = BA_TOL,
    max_iter: int = BA_MAX_ITER,
    init=None,
) -> BAResult:
    """Capacity-achieving priors of a discrete memoryless channel.

    Parameters
    ----------
    ch : ChannelMatrix or array_like
        ``M x K`` row-stochastic matrix.
    constraint : (weights, target), optional
        Linear cost constraint ``sum_i weights[i] * p[i] == target``, solved
        by bisection on the Lagrange multiplier of the tilted update.
    tol : float
        Stop when the BA upper and lower capacity bounds are within ``tol``
        bits.
    max_iter : int
        Iteration cap per multiplier value.
    init : array_like, optional
        Strictly positive starting priors; uniform by default.

    Returns
    -------
    BAResult
        ``(priors, capacity, converged, iterations, history)``. ``history``
        holds the per-iteration lower bound in bits (unconstrained runs
        only). After hitting the iteration cap the best iterate is returned
        with ``converged=False``.
    """
    W = _as_matrix(ch)
    if W.ndim != 2 or np.any(np.abs(W.sum(axis=1) - 1) > ROW_SUM_TOL):
        raise ValueError("channel rows must sum to 1")
    M = W.shape[0]
    p0 = np.full(M, 1.0 / M) if init is None else check_priors(init, M)

    if constraint is None:
        hist: list[float] = []
        p, ok, it = _ba_fixed_multiplier(
            W, np.zeros(M), 0.0, p0, tol, max_iter, hist
        )
        cap = mutual_information_batch(p, W)
        return BAResult(p, float(max(cap, 0.0)), ok, it, np.array(hist) / _LN2)

    weights = np.asarray(constraint[0], dtype=float)
    target = float(constraint[1])
    if weights.shape != (M,):
        raise ValueError(f"need {M} constraint weights, got {weights.shape}")
    if not (weights.min() - 1e-12 <= target <= weights.max() + 1e-12):
        raise ValueError(
            f"constraint target {target} infeasible for weights in "
            f"[{weights.min()}, {weights.max()}]"
        )
    if np.ptp(weights) == 0:
        return blahut_arimoto(W, None, tol, max_iter, init)

    total_iter = 0
    all_ok = True

    def solve(lam, start):
        nonlocal total_iter, all_ok
        p, ok, it = _ba_fixed_multiplier(W, weights, lam, start, tol, max_iter)
        total_iter += it
        all_ok &= ok
        return p

    # weights.p is non-increasing in the multiplier
    span = 1.0 / max(np.ptp(weights), 1e-300)
    lo, hi = -span, span
    p_lo, p_hi = solve(lo, p0), solve(hi, p0)
    for _ in range(200):
        if p_lo @ weights >= target:
            break
        lo *= 2
        p_lo = solve(lo, p0)
    for _ in range(200):
        if p_hi @ weights <= target:
            break
        hi *= 2
        p_hi = solve(hi, p0)
    for _ in range(100):
        if abs(p_lo @ weights - target) < 1e-13:
            p_hi = p_lo
            break
        if abs(p_hi @ weights - target) < 1e-13:
            p_lo = p_hi
            break
        if hi - lo < 1e-13 * max(1.0, abs(lo)):
            break
        mid = 0.5 * (lo + hi)
        start = 0.5 * (p_lo + p_hi)
        start = 0.999 * start + 0.001 / M
        p_mid = solve(mid, start / start.sum())
        if p_mid @ weights > target:
            lo, p_lo = mid, p_mid
        else:
            hi, p_hi = mid, p_mid
    # hit the target exactly with a convex combination of the bracket ends
    a, b = p_lo @ weights, p_hi @ weights
    t = 0.0 if a == b else (a - target) / (a - b)
    p = (1 - t) * p_lo + t * p_hi
    p = np.clip(p, 0.0, None)
    p /= p.sum()
    cap = mutual_information_batch(p, W)
    return BAResult(p, float(max(cap, 0.0)), all_ok, total_iter, np.zeros(0))


def blahut_arimoto_batch(
    W: np.ndarray, tol: float = 1e-10, max_iter: int = BA_MAX_ITER
) -> tuple[np.ndarray, np.ndarray]:
    """Unconstrained BA over a stack of channels ``(B, M, K)``.

    Returns ``(priors (B, M), capacity (B,))``; iterations continue until
    every channel's bound gap is below ``tol`` bits or the cap is hit.
    """
    W = np.asarray(W, dtype=float)
    B, M, _ = W.shape
    p = np.full((B, M), 1.0 / M)
    active = np.ones(B, dtype=bool)
    for _ in range(max_iter):
        Wa, pa = W[active], p[active]
        q = np.einsum("bm,bmk->bk", pa, Wa)
        D = _divergences(Wa, q)
        lower = np.einsum("bm,bm->b", pa, D)
        upper = D.max(axis=1)
        done = upper - lower < tol * _LN2
        pa = pa * np.exp(D - upper[:, None])
        pa /= pa.sum(axis=1, keepdims=True)
        idx = np.flatnonzero(active)
        p[idx[~done]] = pa[~done]
        active[idx[done]] = False
        if not active.any():
            break
    return p, np.maximum(mutual_information_batch(p, W), 0.0)


def vacuum_posterior(det: DetectorModel) -> float:
    """``p(vacuum | no click)`` for equal priors on vacuum and one photon."""
    denom = 1.0 - det.s + det.v
    if denom <= 0:
        raise ValueError("degenerate detector: 1 - s + v must be positive")
    return det.v / denom


def photon_posterior(det: DetectorModel) -> float:
    """``p(one photon | click)`` for equal priors on vacuum and one photon."""
    denom = 1.0 + det.s - det.v
    if denom <= 0:
        raise ValueError("degenerate detector: 1 + s - v must be positive")
    return det.s / denom
