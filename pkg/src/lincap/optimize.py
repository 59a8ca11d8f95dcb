"""Multi-start maximization of mutual information over protocol parameters.

A protocol of a given shape (photons, modes, alphabet size, Alice's mode
window) is described by one flat real vector::

    [input state | Alice's local charts | Bob's global chart]

* input state (when free): ``dim`` real parts followed by the imaginary
  parts of amplitudes ``1 .. dim-1`` (the first amplitude is kept real to
  fix the global phase); the vector is normalized on use.
* Alice: ``M - 1`` charts of ``U(N_A)``, each ``N_A**2`` reals; her first
  operation is the identity.
* Bob: one chart of ``U(N)``, ``N**2`` reals.

Charts are ``exp(i H)`` of a Hermitian generator (see
:func:`lincap.linop.unitary_from_params`). Alice's window is modes
``0 .. N_A - 1``.

The local search is quasi-Newton (BFGS) on central finite-difference
gradients, evaluated as one vectorized batch per gradient. A mean photon
number target on Alice's modes is imposed by an escalating quadratic
penalty followed by an exact repair of the input state.
"""

from __future__ import annotations

import io
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Literal, Sequence

import numpy as np
from scipy import optimize as sopt

from .channel import (
    CapacityResult,
    DetectorModel,
    blahut_arimoto,
    click_matrix,
    mutual_information_batch,
    outcome_probabilities,
)
from .fock import FockBasis, PureState, enumerate_basis
from .linop import embed, params_from_unitary, unitary_from_params

__all__ = [
    "ProblemSpec",
    "OptimizerConfig",
    "ProtocolObjective",
    "finite_diff_gradient",
    "maximize_capacity",
    "evaluate_parameters",
    "sweep_constraint",
    "alphabet_sweep",
    "sweep_to_csv",
    "encode_state",
    "decode_state",
    "pack_parameters",
]

logger = logging.getLogger(__name__)

PriorsMode = Literal["fixed-uniform", "blahut-arimoto"]

FEASIBILITY_TOL = 1e-6


@dataclass(frozen=True, eq=False)
class ProblemSpec:
    """Shape of a protocol family and what is optimized over it."""

    n: int = 2
    N: int = 4
    M: int = 4
    alice_modes: int = 2
    optimize_input: bool = True
    fixed_input: PureState | None = None
    constraint: float | None = None
    detector: DetectorModel | None = None
    priors_mode: PriorsMode = "fixed-uniform"
    fixed_alice: tuple[np.ndarray, ...] | None = None
    fixed_bob: np.ndarray | None = None

    def __post_init__(self):
        if not (1 <= self.alice_modes < self.N):
            raise ValueError(f"Alice's window must satisfy 1 <= N_A < N, got {self.alice_modes}")
        if self.M < 2:
            raise ValueError(f"alphabet size must be at least 2, got {self.M}")
        if self.priors_mode not in ("fixed-uniform", "blahut-arimoto"):
            raise ValueError(f"unknown priors mode {self.priors_mode!r}")
        if self.constraint is not None and not (0.0 <= self.constraint <= self.n):
            raise ValueError(f"constraint target {self.constraint} outside [0, {self.n}]")
        if self.optimize_input == (self.fixed_input is not None):
            raise ValueError("give a fixed input state exactly when optimize_input is False")
        if self.fixed_input is not None:
            b = self.fixed_input.basis
            if (b.n, b.N) != (self.n, self.N):
                raise ValueError("fixed input state lives in the wrong sector")
        if self.fixed_alice is not None:
            ops = tuple(np.asarray(U, dtype=complex) for U in self.fixed_alice)
            if len(ops) != self.M or any(U.shape != (self.alice_modes,) * 2 for U in ops):
                raise ValueError(f"need {self.M} fixed Alice operations of size {self.alice_modes}")
            object.__setattr__(self, "fixed_alice", ops)
        if self.fixed_bob is not None:
            bob = np.asarray(self.fixed_bob, dtype=complex)
            if bob.shape != (self.N, self.N):
                raise ValueError(f"fixed Bob unitary must be {self.N}x{self.N}")
            object.__setattr__(self, "fixed_bob", bob)

    @property
    def basis(self) -> FockBasis:
        return enumerate_basis(self.n, self.N)

    @property
    def dim(self) -> int:
        return math.comb(self.n + self.N - 1, self.n)

    @property
    def n_state(self) -> int:
        return 2 * self.dim - 1 if self.optimize_input else 0

    @property
    def n_alice(self) -> int:
        return 0 if self.fixed_alice is not None else (self.M - 1) * self.alice_modes**2

    @property
    def n_bob(self) -> int:
        return 0 if self.fixed_bob is not None else self.N**2

    @property
    def n_params(self) -> int:
        return self.n_state + self.n_alice + self.n_bob

    def alice_photon_counts(self) -> np.ndarray:
        return self.basis.occupations()[:, : self.alice_modes].sum(axis=1)


@dataclass(frozen=True)
class OptimizerConfig:
    """Multi-start settings; restart ``r`` draws from ``seed + r``."""

    restarts: int = 500
    seed: int = 0
    fd_step: float = 1e-6
    max_iters: int = 400
    penalty_schedule: tuple[float, ...] = (10.0, 1e2, 1e3, 1e4)
    tolerance: float = 1e-9
    jobs: int = 1
    stop_at: float | None = None
    initial: tuple[np.ndarray, ...] = ()
    warm_restarts: int | None = None

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("need at least one restart")
        if not self.fd_step > 0:
            raise ValueError("finite-difference step must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be positive")
        if self.jobs < 1:
            raise ValueError("jobs must be positive")


def finite_diff_gradient(
    f: Callable, x: np.ndarray, h: float = 1e-6, vectorized: bool = False
) -> np.ndarray:
    """Central-difference gradient ``(f(x + h e_i) - f(x - h e_i)) / 2h``.

    With ``vectorized=True``, ``f`` maps a ``(B, P)`` array to ``(B,)`` and
    the whole stencil is evaluated in one call.
    """
    if not h > 0:
        raise ValueError(f"finite-difference step must be positive, got {h}")
    x = np.asarray(x, dtype=float)
    P = x.shape[0]
    steps = h * np.eye(P)
    if vectorized:
        vals = np.asarray(f(np.concatenate([x + steps, x - steps])), dtype=float)
        fp, fm = vals[:P], vals[P:]
    else:
        fp = np.array([f(x + e) for e in steps], dtype=float)
        fm = np.array([f(x - e) for e in steps], dtype=float)
    if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
        raise FloatingPointError("objective is not finite near x")
    return (fp - fm) / (2 * h)


def encode_state(amplitudes: np.ndarray) -> np.ndarray:
    """Chart coordinates of a state; inverse of :func:`decode_state` up to phase."""
    c = np.asarray(amplitudes, dtype=complex)
    c = c / np.linalg.norm(c)
    if abs(c[0]) > 0:
        c = c * np.exp(-1j * np.angle(c[0]))
    return np.concatenate([c.real, c.imag[1:]])


def decode_state(x: np.ndarray, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    c = x[..., :dim].astype(complex)
    c[..., 1:] += 1j * x[..., dim:]
    return c / np.linalg.norm(c, axis=-1, keepdims=True)


class ProtocolObjective:
    """Vectorized map from parameter vectors to channels and information."""

    def __init__(self, spec: ProblemSpec):
        self.spec = spec
        self.basis = spec.basis
        self.dim = spec.dim
        self.n_alice_counts = spec.alice_photon_counts().astype(float)
        self.clicks = (
            click_matrix(self.basis, spec.detector) if spec.detector is not None else None
        )
        s = spec
        self._sl_state = slice(0, s.n_state)
        self._sl_alice = slice(s.n_state, s.n_state + s.n_alice)
        self._sl_bob = slice(s.n_state + s.n_alice, s.n_params)
        if s.fixed_input is not None:
            self._fixed_amps = np.asarray(s.fixed_input.amplitudes)

    def states(self, X: np.ndarray) -> np.ndarray:
        if self.spec.optimize_input:
            return decode_state(X[..., self._sl_state], self.dim)
        return np.broadcast_to(self._fixed_amps, X.shape[:-1] + (self.dim,))

    def alice_ops(self, X: np.ndarray) -> np.ndarray:
        s = self.spec
        if s.fixed_alice is not None:
            return np.broadcast_to(np.stack(s.fixed_alice), X.shape[:-1] + (s.M, s.alice_modes, s.alice_modes))
        k = s.alice_modes
        charts = X[..., self._sl_alice].reshape(X.shape[:-1] + (s.M - 1, k * k))
        rest = unitary_from_params(charts, k)
        eye = np.broadcast_to(np.eye(k, dtype=complex), X.shape[:-1] + (1, k, k))
        return np.concatenate([eye, rest], axis=-3)

    def bob_op(self, X: np.ndarray) -> np.ndarray:
        s = self.spec
        if s.fixed_bob is not None:
            return np.broadcast_to(s.fixed_bob, X.shape[:-1] + (s.N, s.N))
        return unitary_from_params(X[..., self._sl_bob], s.N)

    def channels(self, X: np.ndarray) -> np.ndarray:
        """Channel matrices ``(..., M, K)`` for parameter vectors ``(..., P)``."""
        X = np.asarray(X, dtype=float)
        s = self.spec
        ops = self.bob_op(X)[..., None, :, :] @ embed(self.alice_ops(X), 0, s.N)
        probs = outcome_probabilities(self.states(X), ops, s.n)
        probs = probs / probs.sum(axis=-1, keepdims=True)
        if self.clicks is not None:
            probs = probs @ self.clicks
        return probs

    def alice_mean(self, X: np.ndarray) -> np.ndarray:
        c = self.states(np.asarray(X, dtype=float))
        return (np.abs(c) ** 2) @ self.n_alice_counts

    def information(self, X: np.ndarray, priors: np.ndarray | None = None) -> np.ndarray:
        """``I(X;Y)`` at the given priors (uniform by default)."""
        W = self.channels(X)
        if priors is None:
            priors = np.full(self.spec.M, 1.0 / self.spec.M)
        return mutual_information_batch(priors, W)

    def capacity(self, x: np.ndarray) -> tuple[float, np.ndarray]:
        """Objective value and priors at one parameter vector."""
        W = self.channels(np.asarray(x, dtype=float)[None])[0]
        if self.spec.priors_mode == "fixed-uniform":
            p = np.full(self.spec.M, 1.0 / self.spec.M)
            return float(max(mutual_information_batch(p, W), 0.0)), p
        res = blahut_arimoto(W, tol=1e-11)
        return res.capacity, res.priors


def evaluate_parameters(spec: ProblemSpec, x: np.ndarray) -> tuple[float, np.ndarray]:
    """Capacity (bits) and priors the objective assigns to parameters ``x``."""
    return ProtocolObjective(spec).capacity(x)


def pack_parameters(
    spec: ProblemSpec,
    state: PureState | None = None,
    alice_ops: Sequence[np.ndarray] | None = None,
    bob_op: np.ndarray | None = None,
) -> np.ndarray:
    """Parameter vector reproducing a given protocol (for warm starts).

    Alice's first operation must be the identity; parts that ``spec`` keeps
    fixed are skipped.
    """
    parts = []
    if spec.optimize_input:
        if state is None:
            raise ValueError("spec optimizes the input state; give one")
        parts.append(encode_state(state.amplitudes))
    if spec.fixed_alice is None:
        if alice_ops is None or len(alice_ops) != spec.M:
            raise ValueError(f"need {spec.M} Alice operations")
        if not np.allclose(alice_ops[0], np.eye(spec.alice_modes), atol=1e-10):
            raise ValueError("Alice's first operation must be the identity")
        parts.extend(params_from_unitary(U) for U in alice_ops[1:])
    if spec.fixed_bob is None:
        if bob_op is None:
            raise ValueError("spec optimizes Bob's unitary; give one")
        parts.append(params_from_unitary(bob_op))
    return np.concatenate(parts) if parts else np.zeros(0)


def _tilt_state(c: np.ndarray, counts: np.ndarray, target: float, n: int) -> np.ndarray:
    """Closest-in-spirit feasible state: ``c_k -> c_k exp(lam * counts_k)``.

    Solves ``<counts> == target`` for ``lam``; components are seeded where
    the support does not straddle the target.
    """
    c = np.array(c, dtype=complex)
    c /= np.linalg.norm(c)
    if target <= 0 or target >= n:
        keep = counts == (0 if target <= 0 else n)
        c = np.where(keep, c, 0)
        if np.linalg.norm(c) == 0:
            c[np.flatnonzero(keep)[0]] = 1.0
        return c / np.linalg.norm(c)
    w = np.abs(c) ** 2
    seed = 1e-6
    if not np.any((w > 0) & (counts < target)):
        c[np.flatnonzero(counts < target)] += seed
    if not np.any((w > 0) & (counts > target)):
        c[np.flatnonzero(counts > target)] += seed
    w = np.abs(c) ** 2
    shift = counts - target

    def g(lam):
        e = w * np.exp(2 * lam * shift - np.max(2 * lam * shift))
        return e @ shift / e.sum()

    lo, hi = -1.0, 1.0
    while g(lo) > 0:
        lo *= 2
    while g(hi) < 0:
        hi *= 2
    lam = sopt.brentq(g, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=500)
    out = c * np.exp(lam * shift - np.max(lam * shift))
    return out / np.linalg.norm(out)


def _repair(obj: ProtocolObjective, x: np.ndarray) -> np.ndarray:
    s = obj.spec
    if s.constraint is None or not s.optimize_input:
        return x
    c = obj.states(x[None])[0]
    c = _tilt_state(c, obj.n_alice_counts, s.constraint, s.n)
    x = x.copy()
    x[obj._sl_state] = encode_state(c)
    return x


def _feasibility_gap(obj: ProtocolObjective, x: np.ndarray) -> float:
    s = obj.spec
    if s.constraint is None:
        return 0.0
    return float(abs(obj.alice_mean(x[None])[0] - s.constraint))


class _LocalProblem:
    """Penalized objective with a cached prior solution for BA mode."""

    def __init__(self, obj: ProtocolObjective, weight: float, h: float):
        self.obj = obj
        self.weight = weight
        self.h = h
        self._x = None
        self._priors = None
        self._value = None

    def _penalty(self, X):
        s = self.obj.spec
        if s.constraint is None or self.weight == 0 or not s.optimize_input:
            return 0.0
        return self.weight * (self.obj.alice_mean(X) - s.constraint) ** 2

    def _batch(self, X, priors):
        return self.obj.information(X, priors) - self._penalty(X)

    def value(self, x):
        x = np.asarray(x, dtype=float)
        if self._x is not None and np.array_equal(x, self._x):
            return self._value
        if self.obj.spec.priors_mode == "blahut-arimoto":
            cap, p = self.obj.capacity(x)
            val = cap - float(np.atleast_1d(self._penalty(x[None]))[0])
        else:
            p = None
            val = float(self._batch(x[None], None)[0])
        self._x, self._priors, self._value = x.copy(), p, val
        return val

    def gradient(self, x):
        x = np.asarray(x, dtype=float)
        self.value(x)
        # envelope theorem: at the optimal priors only the channel moves
        return finite_diff_gradient(
            lambda X: self._batch(X, self._priors), x, self.h, vectorized=True
        )


def _local_search(obj: ProtocolObjective, x0: np.ndarray, cfg: OptimizerConfig) -> np.ndarray:
    s = obj.spec
    weights = (
        cfg.penalty_schedule if (s.constraint is not None and s.optimize_input) else (0.0,)
    )
    x = np.asarray(x0, dtype=float)
    if x.size == 0:
        return x
    for weight in weights:
        prob = _LocalProblem(obj, weight, cfg.fd_step)
        res = sopt.minimize(
            lambda z: -prob.value(z),
            x,
            jac=lambda z: -prob.gradient(z),
            method="BFGS",
            options={"maxiter": cfg.max_iters, "gtol": 1e-7},
        )
        if np.all(np.isfinite(res.x)):
            x = res.x
    return _repair(obj, x)


def _random_start(spec: ProblemSpec, rng: np.random.Generator) -> np.ndarray:
    parts = []
    if spec.optimize_input:
        c = rng.standard_normal(spec.dim) + 1j * rng.standard_normal(spec.dim)
        parts.append(encode_state(c))
    parts.append(rng.standard_normal(spec.n_alice + spec.n_bob))
    return np.concatenate(parts)


def _run_restart(args) -> tuple[int, float, np.ndarray, np.ndarray, float]:
    spec, cfg, index, x0 = args
    obj = ProtocolObjective(spec)
    if x0 is None:
        x0 = _random_start(spec, np.random.default_rng(cfg.seed + index))
    try:
        x = _local_search(obj, x0, cfg)
        cap, p = obj.capacity(x)
        gap = _feasibility_gap(obj, x)
    except (FloatingPointError, ValueError, np.linalg.LinAlgError) as exc:
        logger.debug("restart %d failed: %s", index, exc)
        return index, float("nan"), x0, np.full(spec.M, 1.0 / spec.M), float("inf")
    return index, cap, x, p, gap


def maximize_capacity(spec: ProblemSpec, cfg: OptimizerConfig | None = None) -> CapacityResult:
    """Best local maximum of the mutual information over seeded restarts.

    Parameters
    ----------
    spec : ProblemSpec
    cfg : OptimizerConfig, optional

    Returns
    -------
    CapacityResult
        The best restart among those passing the feasibility check
        (``gap < 1e-6``). ``restart_capacities`` lists every restart in
        index order (NaN for failures). With ``cfg.stop_at`` set, restarts
        after the first one reaching that value are discarded, so the result
        does not depend on ``cfg.jobs``.

    Raises
    ------
    RuntimeError
        If no restart produced a finite, feasible result.
    """
    cfg = cfg or OptimizerConfig()
    obj = ProtocolObjective(spec)
    if spec.n_params == 0:
        cap, p = obj.capacity(np.zeros(0))
        return CapacityResult(cap, p, np.zeros(0), 0.0, np.array([cap]), True, {"restarts_used": 1})

    starts = [np.asarray(x, dtype=float) for x in cfg.initial]
    starts += [None] * cfg.restarts
    tasks = [(spec, cfg, i, x0) for i, x0 in enumerate(starts)]
    results = []
    if cfg.jobs == 1:
        for t in tasks:
            results.append(_run_restart(t))
            if cfg.stop_at is not None and results[-1][1] >= cfg.stop_at:
                break
    else:
        with ProcessPoolExecutor(max_workers=cfg.jobs) as pool:
            for start in range(0, len(tasks), cfg.jobs):
                results.extend(pool.map(_run_restart, tasks[start : start + cfg.jobs]))
                if cfg.stop_at is not None and any(r[1] >= cfg.stop_at for r in results):
                    break
        if cfg.stop_at is not None:
            hit = next((k for k, r in enumerate(results) if r[1] >= cfg.stop_at), None)
            if hit is not None:
                results = results[: hit + 1]

    caps = np.array([r[1] for r in results])
    feasible = [r for r in results if np.isfinite(r[1]) and r[4] < FEASIBILITY_TOL]
    if not feasible:
        raise RuntimeError(f"all {len(results)} restarts failed or were infeasible")
    # ties resolved towards the lowest restart index
    best = max(feasible, key=lambda r: (r[1], -r[0]))
    index, cap, x, p, gap = best
    cap = min(cap, math.log2(spec.M))
    finite = caps[np.isfinite(caps)]
    info = {
        "restarts_used": len(results),
        "best_restart": index,
        "spread": float(finite.max() - finite.min()) if finite.size else 0.0,
        "mean_alice_photons": float(obj.alice_mean(x[None])[0]),
    }
    return CapacityResult(cap, p, x, gap, caps, True, info)


def sweep_constraint(
    spec: ProblemSpec, targets: Sequence[float], cfg: OptimizerConfig | None = None
) -> list[dict]:
    """Capacity as a function of the mean photon number on Alice's modes.

    The first target gets the full multi-start budget; each later one starts
    from the previous optimum (repaired onto the new target) plus
    ``cfg.warm_restarts`` fresh restarts.
    """
    cfg = cfg or OptimizerConfig()
    targets = [float(t) for t in targets]
    if any(b < a for a, b in zip(targets, targets[1:])):
        raise ValueError("targets must be ascending")
    if not spec.optimize_input:
        raise ValueError("sweeping the photon budget needs a free input state")
    warm = cfg.warm_restarts if cfg.warm_restarts is not None else max(1, cfg.restarts // 10)
    rows = []
    prev = None
    for i, t in enumerate(targets):
        sp = replace(spec, constraint=t)
        if prev is None:
            run_cfg = cfg
        else:
            x0 = _repair(ProtocolObjective(sp), prev)
            run_cfg = replace(cfg, restarts=warm, initial=(x0,), seed=cfg.seed + 7919 * i)
        res = maximize_capacity(sp, run_cfg)
        prev = res.parameters
        logger.info("target %.4f -> %.6f bits", t, res.capacity_bits)
        rows.append(
            {
                "target": t,
                "capacity_bits": res.capacity_bits,
                "feasibility_gap": res.feasibility_gap,
                "restarts_used": res.info["restarts_used"],
                "result": res,
            }
        )
    return rows


def alphabet_sweep(
    spec: ProblemSpec, M_values: Sequence[int], cfg: OptimizerConfig | None = None
) -> list[dict]:
    """Capacity for several alphabet sizes, normalized by ``log2 M``."""
    cfg = cfg or OptimizerConfig()
    rows = []
    for M in M_values:
        if M > spec.dim:
            raise ValueError(f"alphabet {M} larger than the sector dimension {spec.dim}")
        res = maximize_capacity(replace(spec, M=int(M)), cfg)
        rows.append(
            {
                "M": int(M),
                "capacity_bits": res.capacity_bits,
                "normalized": res.capacity_bits / math.log2(M),
                "result": res,
            }
        )
    return rows


def sweep_to_csv(rows: Sequence[dict], comment: str | None = None) -> str:
    """``target,capacity_bits,feasibility_gap,restarts_used`` CSV text."""
    buf = io.StringIO()
    if comment:
        buf.write(f"# {comment}\n")
    buf.write("target,capacity_bits,feasibility_gap,restarts_used\n")
    for r in rows:
        buf.write(
            f"{r['target']!r},{r['capacity_bits']!r},{r['feasibility_gap']!r},{r['restarts_used']}\n"
        )
    return buf.getvalue()
