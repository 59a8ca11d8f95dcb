"""Golden-value and property checks behind ``lincap verify``.

Every check compares a computed number against a reference with a stated
tolerance. The fast table finishes in well under a minute; the stretch
table adds the six- and eight-mode studies and takes hours.
"""

from __future__ import annotations

import itertools
import json
import math
import time
from dataclasses import asdict, dataclass
from typing import Callable

import numpy as np

from .channel import ROW_SUM_TOL, DetectorModel, blahut_arimoto, photon_posterior, vacuum_posterior
from .fock import occupation_label
from .linop import U2Angles, lift, permanent, u2_from_angles, unitary_from_params
from .optimize import (
    OptimizerConfig,
    ProblemSpec,
    ProtocolObjective,
    finite_diff_gradient,
    maximize_capacity,
)
from .protocols import (
    bell_states,
    canonical_protocol,
    count_orthogonal_states,
    detector_gap_sweep,
    entanglement_free_baseline,
    extended_capacity,
    family_protocol,
    six_state_reference,
)

__all__ = ["Check", "run_checks", "format_table", "checks_to_json", "FAST_CHECKS", "STRETCH_CHECKS"]

LOG2_3 = math.log2(3)


@dataclass
class Check:
    name: str
    golden: object
    computed: object
    tolerance: float | None
    passed: bool
    seconds: float = 0.0
    note: str = ""


def _close(golden: float, computed: float, tol: float) -> bool:
    return bool(np.isfinite(computed) and abs(computed - golden) <= tol)


def brute_force_permanent(a: np.ndarray) -> complex:
    """Sum over all permutations; reference for small matrices only."""
    n = a.shape[0]
    return complex(
        sum(np.prod(a[np.arange(n), list(p)]) for p in itertools.permutations(range(n)))
    ) if n else 1.0


# Each check returns (golden, computed, tolerance, passed[, note]).


def _canonical_permutation():
    p = canonical_protocol().channel().p
    dev = float(np.max(np.abs(p - np.round(p))))
    rowsok = np.all(np.round(p).sum(axis=1) == 1) and np.all(np.round(p).sum(axis=0) <= 1)
    return 0.0, dev, 1e-12, dev <= 1e-12 and bool(rowsok)


def _canonical_capacity():
    cap, _ = canonical_protocol().capacity()
    return 2.0, cap, 1e-9, _close(2.0, cap, 1e-9)


def _canonical_mapping():
    proto = canonical_protocol()
    labels = proto.input.basis.labels()
    got = [labels[int(np.argmax(row))] for row in proto.channel().p]
    want = [occupation_label(o) for o in [(1, 1, 0, 0), (0, 1, 1, 0), (0, 0, 1, 1), (1, 0, 0, 1)]]
    return ",".join(want), ",".join(got), None, got == want


def _family_draws(draws: int = 100, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = 2.0
    for _ in range(draws):
        U_A, U_B, U_C = (
            u2_from_angles(U2Angles(*rng.uniform(0, 2 * np.pi, 4))) for _ in range(3)
        )
        cap, _ = family_protocol(U_A, U_B, U_C).capacity()
        worst = min(worst, cap)
    return 2.0, worst, 1e-6, _close(2.0, worst, 1e-6)


def _bell_optimized(which: int, seed: int = 0):
    st = bell_states()[which]
    spec = ProblemSpec(optimize_input=False, fixed_input=st, priors_mode="blahut-arimoto")
    cfg = OptimizerConfig(restarts=500, seed=seed, stop_at=LOG2_3 - 1e-4)
    res = maximize_capacity(spec, cfg)
    note = f"restarts used {res.info['restarts_used']}"
    return LOG2_3, res.capacity_bits, 1e-3, _close(LOG2_3, res.capacity_bits, 1e-3), note


def _free_input(seed: int = 0):
    spec = ProblemSpec(constraint=1.0)
    res = maximize_capacity(spec, OptimizerConfig(restarts=500, seed=seed, stop_at=1.999))
    note = f"restarts used {res.info['restarts_used']}, photon gap {res.feasibility_gap:.1e}"
    return 2.0, res.capacity_bits, 1e-3, res.capacity_bits >= 1.999, note


def _baseline_vacuum():
    res = entanglement_free_baseline(vacuum_allowed=True)
    return 2.0, res.capacity_bits, 1e-6, _close(2.0, res.capacity_bits, 1e-6)


def _baseline_priors():
    res = entanglement_free_baseline(vacuum_allowed=True)
    want = np.array([0.25, 0.25, 0.25, 0.0, 0.25])
    dev = float(np.max(np.abs(res.priors - want)))
    return 0.0, dev, 1e-6, dev <= 1e-6


def _baseline_no_vacuum():
    res = entanglement_free_baseline(vacuum_allowed=False)
    return 1.0, res.capacity_bits, 1e-9, _close(1.0, res.capacity_bits, 1e-9)


def _vacuum_posterior():
    val = vacuum_posterior(DetectorModel(0.9, 0.9999))
    return 0.91, val, 5e-3, round(val, 2) == 0.91


def _photon_posterior():
    val = photon_posterior(DetectorModel(0.9, 0.9999))
    return 0.9999, val, 5e-5, round(val, 4) == 0.9999


def _gap_s09():
    d = detector_gap_sweep([0.9], v=0.9999)[0]["delta"]
    return 0.27, d, 0.03, _close(0.27, d, 0.03)


def _gap_perfect():
    row = detector_gap_sweep([1.0], v=1.0)[0]
    return 0.0, row["delta"], 1e-3, abs(row["delta"]) < 1e-3


def _lift_unitarity(draws: int = 200, seed: int = 1):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n, N in [(2, 4), (3, 3), (1, 5)]:
        U = unitary_from_params(rng.standard_normal((draws, N * N)), N)
        L = lift(U, n)
        err = np.abs(L @ np.conj(np.swapaxes(L, -1, -2)) - np.eye(L.shape[-1])).max()
        worst = max(worst, float(err))
    return 0.0, worst, 1e-9, worst <= 1e-9


def _lift_homomorphism(draws: int = 200, seed: int = 2):
    rng = np.random.default_rng(seed)
    U = unitary_from_params(rng.standard_normal((draws, 16)), 4)
    V = unitary_from_params(rng.standard_normal((draws, 16)), 4)
    err = float(np.abs(lift(U @ V, 2) - lift(U, 2) @ lift(V, 2)).max())
    return 0.0, err, 1e-9, err <= 1e-9


def _permanent_brute(seed: int = 3):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for size in range(0, 6):
        for _ in range(5):
            a = rng.standard_normal((size, size)) + 1j * rng.standard_normal((size, size))
            worst = max(worst, abs(permanent(a) - brute_force_permanent(a)))
    return 0.0, float(worst), 1e-12, worst <= 1e-12


def _row_stochastic(draws: int = 50, seed: int = 4):
    rng = np.random.default_rng(seed)
    obj = ProtocolObjective(ProblemSpec(detector=DetectorModel(0.8, 0.99)))
    X = rng.standard_normal((draws, ProblemSpec().n_params))
    err = float(np.abs(obj.channels(X).sum(axis=-1) - 1).max())
    return 0.0, err, ROW_SUM_TOL, err <= ROW_SUM_TOL


def _ba_monotone(seed: int = 5):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(20):
        W = rng.random((5, 7)) ** 3
        W /= W.sum(axis=1, keepdims=True)
        h = blahut_arimoto(W).history
        worst = max(worst, float(np.max(h[:-1] - h[1:], initial=0.0)))
    return 0.0, worst, 1e-12, worst <= 1e-12


def _fd_vs_stencil(seed: int = 6):
    rng = np.random.default_rng(seed)
    obj = ProtocolObjective(ProblemSpec())
    x = rng.standard_normal(ProblemSpec().n_params)
    f = lambda X: obj.information(X)  # noqa: E731
    g = finite_diff_gradient(f, x, 1e-6, vectorized=True)
    h = 1e-3
    E = h * np.eye(x.size)
    vals = [f(x + k * E) for k in (2, 1, -1, -2)]
    ref = (-vals[0] + 8 * vals[1] - 8 * vals[2] + vals[3]) / (12 * h)
    err = float(np.abs(g - ref).max())
    return 0.0, err, 1e-5, err <= 1e-5


def _seed_determinism(seed: int = 0):
    spec = ProblemSpec(constraint=0.5)
    cfg = OptimizerConfig(restarts=2, seed=seed, max_iters=50)
    a, b = maximize_capacity(spec, cfg), maximize_capacity(spec, cfg)
    same = (
        a.capacity_bits == b.capacity_bits
        and np.array_equal(a.parameters, b.parameters)
        and np.array_equal(a.restart_capacities, b.restart_capacities, equal_nan=True)
    )
    return "identical", "identical" if same else "differs", None, bool(same)


def _count_n6(seed: int = 0):
    res = count_orthogonal_states(2, 6, 3, OptimizerConfig(restarts=50, seed=seed), m_max=17)
    return 12, res.count, 0, res.count == 12, f"residuals {res.residuals}"


def _extended(N: int, golden: float, seed: int = 0):
    res = extended_capacity(2, N, 12, OptimizerConfig(restarts=100, seed=seed))
    note = f"mean photons on Alice's modes {res.info['mean_alice_photons']:.4f}"
    return golden, res.capacity_bits, 0.02, _close(golden, res.capacity_bits, 0.02), note


def _six_state():
    val = six_state_reference()
    return math.log2(6), val, 1e-12, _close(math.log2(6), val, 1e-12)


FAST_CHECKS: dict[str, Callable] = {
    "canonical_permutation": _canonical_permutation,
    "canonical_capacity": _canonical_capacity,
    "canonical_mapping": _canonical_mapping,
    "family_equivalence": _family_draws,
    **{f"bell_{k}_optimized": (lambda k=k: _bell_optimized(k)) for k in range(4)},
    "free_input_optimized": _free_input,
    "baseline_vacuum": _baseline_vacuum,
    "baseline_priors": _baseline_priors,
    "baseline_no_vacuum": _baseline_no_vacuum,
    "vacuum_posterior": _vacuum_posterior,
    "photon_posterior": _photon_posterior,
    "detector_gap_s0.9": _gap_s09,
    "detector_gap_perfect": _gap_perfect,
    "lift_unitarity": _lift_unitarity,
    "lift_homomorphism": _lift_homomorphism,
    "permanent_bruteforce": _permanent_brute,
    "channel_row_stochastic": _row_stochastic,
    "ba_monotone": _ba_monotone,
    "fd_gradient_stencil": _fd_vs_stencil,
    "seed_determinism": _seed_determinism,
}

STRETCH_CHECKS: dict[str, Callable] = {
    "six_state_reference": _six_state,
    "orthogonal_count_N6": _count_n6,
    "extended_N6_M12": lambda: _extended(6, 3.0),
    "extended_N8_M12": lambda: _extended(8, math.log2(12)),
}


def run_checks(stretch: bool = False, names=None) -> list[Check]:
    """Run the check table; exceptions become failed checks with a diagnostic."""
    table = dict(FAST_CHECKS)
    if stretch:
        table.update(STRETCH_CHECKS)
    if names is not None:
        unknown = set(names) - set(table)
        if unknown:
            raise ValueError(f"unknown checks: {sorted(unknown)}")
        table = {k: table[k] for k in table if k in names}
    out = []
    for name, fn in table.items():
        t0 = time.perf_counter()
        try:
            golden, computed, tol, passed, *rest = fn()
            note = rest[0] if rest else ""
        except Exception as exc:  # a crash is a failed check, not an abort
            golden, computed, tol, passed, note = None, None, None, False, f"{type(exc).__name__}: {exc}"
        out.append(Check(name, golden, computed, tol, bool(passed), time.perf_counter() - t0, note))
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.10g}"
    return "-" if v is None else str(v)


def format_table(checks: list[Check]) -> str:
    """Fixed-width human-readable table, one check per line."""
    rows = [("check", "golden", "computed", "tol", "result", "note")]
    for c in checks:
        rows.append(
            (c.name, _fmt(c.golden), _fmt(c.computed), _fmt(c.tolerance), "PASS" if c.passed else "FAIL", c.note)
        )
    widths = [max(len(r[i]) for r in rows) for i in range(5)]
    lines = ["  ".join(r[i].ljust(widths[i]) for i in range(5)) + ("  " + r[5] if r[5] else "") for r in rows]
    n_fail = sum(not c.passed for c in checks)
    lines.append(f"{len(checks) - n_fail}/{len(checks)} checks passed")
    return "\n".join(lines)


def checks_to_json(checks: list[Check]) -> str:
    """JSON list of checks; timings are left out so output is reproducible."""
    rows = []
    for c in checks:
        d = asdict(c)
        d.pop("seconds")
        rows.append(d)
    return json.dumps({"checks": rows, "all_passed": all(c.passed for c in checks)}, indent=2)
