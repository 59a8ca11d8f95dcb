"""``lincap`` command-line runner.

Every subcommand accepts ``--config FILE`` (flat ``key=value`` lines, keys
named like the long options with dashes or underscores) and ``--seed``.
Flags override the config file, which overrides built-in defaults. The
default seed comes from ``LINCAP_SEED`` when set.

Exit status: 0 success, 1 invalid input, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import io
import json
import logging
import math
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .channel import CapacityResult, DetectorModel
from .fock import state_from_json
from .optimize import OptimizerConfig, ProblemSpec, alphabet_sweep, maximize_capacity, sweep_constraint, sweep_to_csv
from .protocols import (
    bell_states,
    count_orthogonal_states,
    detector_gap_sweep,
    entanglement_free_baseline,
    extended_capacity,
    optimal_input_state,
)
from .verify import checks_to_json, format_table, run_checks

SEED_ENV = "LINCAP_SEED"
EXIT_OK, EXIT_INVALID, EXIT_NUMERIC = 0, 1, 2

_BELL_NAMES = {"bell": 0, "bell-phi-plus": 0, "bell-phi-minus": 1, "bell-psi-plus": 2, "bell-psi-minus": 3}

logger = logging.getLogger("lincap")


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 by default; 2 is reserved for numerical failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INVALID, f"{self.prog}: error: {message}\n")


# dest -> (default, converter); flags always default to None so that the
# value actually given on the command line can be told apart
_COMMON = {
    "seed": (None, int),
    "restarts": (500, int),
    "jobs": (1, int),
    "max_iters": (400, int),
    "fd_step": (1e-6, float),
    "output": (None, str),
    "format": ("json", str),
}

_DEFAULTS = {
    "capacity": {
        "photons": (2, int),
        "modes": (4, int),
        "alphabet": (4, int),
        "alice_modes": (2, int),
        "mean_photons": (None, float),
        "fixed_input": (None, str),
        "priors": ("auto", str),
        "detector_s": (None, float),
        "detector_v": (None, float),
    },
    "sweep": {
        "photons": (2, int),
        "modes": (4, int),
        "alphabet": (4, int),
        "alice_modes": (2, int),
        "start": (0.05, float),
        "stop": (1.0, float),
        "step": (0.05, float),
        "warm_restarts": (None, int),
        "format": ("csv", str),
    },
    "detector-sweep": {
        "detector_v": (0.9999, float),
        "s_start": (0.5, float),
        "s_stop": (1.0, float),
        "s_step": (0.05, float),
        "format": ("csv", str),
    },
    "baseline": {
        "no_vacuum": (False, "bool"),
        "detector_s": (None, float),
        "detector_v": (None, float),
    },
    "alphabet-sweep": {
        "photons": (2, int),
        "modes": (4, int),
        "alice_modes": (2, int),
        "m_min": (4, int),
        "m_max": (10, int),
        "priors": ("blahut-arimoto", str),
        "format": ("csv", str),
    },
    "extended": {
        "photons": (2, int),
        "modes": (6, int),
        "alphabet": (12, int),
        "restarts": (100, int),
        "count_orthogonal": (False, "bool"),
    },
    "verify": {
        "stretch": (False, "bool"),
        "format": ("text", str),
    },
}

_NO_OPTIMIZER = {"detector-sweep", "baseline", "verify"}


def _schema(command: str) -> dict:
    out = {} if command in _NO_OPTIMIZER else dict(_COMMON)
    if command in _NO_OPTIMIZER:
        out.update({k: _COMMON[k] for k in ("seed", "output", "format")})
    out.update(_DEFAULTS[command])
    return out


def _to_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {text!r}")


def read_config(path: str | os.PathLike) -> dict[str, str]:
    """Parse a flat ``key=value`` file; ``#`` starts a comment."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = value
    return out


def resolve(command: str, flags: dict, config: dict[str, str] | None = None) -> dict:
    """Merge defaults, config-file values and flags (highest precedence last)."""
    schema = _schema(command)
    config = config or {}
    unknown = set(config) - set(schema)
    if unknown:
        raise UsageError(f"unknown config keys for {command}: {', '.join(sorted(unknown))}")
    out = {}
    for key, (default, conv) in schema.items():
        value = default
        if key in config:
            text = config[key]
            try:
                value = _to_bool(text) if conv == "bool" else conv(text)
            except ValueError as exc:
                raise UsageError(f"config key {key}: {exc}") from None
        if flags.get(key) is not None:
            value = flags[key]
        out[key] = value
    if out.get("seed") is None:
        env = os.environ.get(SEED_ENV)
        try:
            out["seed"] = int(env) if env else 0
        except ValueError:
            raise UsageError(f"{SEED_ENV} must be an integer, got {env!r}") from None
    return out


def config_hash(cfg: dict) -> str:
    """Short digest of the resolved configuration (output path excluded)."""
    items = sorted((k, v) for k, v in cfg.items() if k != "output")
    text = "\n".join(f"{k}={v!r}" for k, v in items)
    return hashlib.sha256(text.encode()).hexdigest()[:16]


def metadata(command: str, cfg: dict) -> dict:
    return {"version": __version__, "command": command, "seed": cfg["seed"], "config_hash": config_hash(cfg)}


def _meta_comment(meta: dict) -> str:
    return (
        f"lincap {meta['version']} command={meta['command']} seed={meta['seed']}"
        f" config_hash={meta['config_hash']}"
    )


# ---------------------------------------------------------------- validation


def _positive(cfg, *keys):
    for k in keys:
        if cfg.get(k) is not None and cfg[k] < 1:
            raise UsageError(f"--{k.replace('_', '-')} must be at least 1, got {cfg[k]}")


def _optimizer_config(cfg: dict, **extra) -> OptimizerConfig:
    _positive(cfg, "restarts", "jobs", "max_iters")
    if not cfg["fd_step"] > 0:
        raise UsageError("--fd-step must be positive")
    return OptimizerConfig(
        restarts=cfg["restarts"], seed=cfg["seed"], fd_step=cfg["fd_step"],
        max_iters=cfg["max_iters"], jobs=cfg["jobs"], **extra,
    )


def _detector(cfg: dict) -> DetectorModel | None:
    s, v = cfg.get("detector_s"), cfg.get("detector_v")
    if s is None and v is None:
        return None
    return DetectorModel(1.0 if s is None else s, 1.0 if v is None else v)


def _grid(start: float, stop: float, step: float, name: str) -> list[float]:
    if not step > 0:
        raise UsageError(f"--{name}step must be positive, got {step}")
    if stop < start:
        raise UsageError(f"--{name}stop must not be below --{name}start")
    k = int(math.floor((stop - start) / step + 1e-9))
    return [round(start + i * step, 12) for i in range(k + 1)]


def _fixed_input(name: str | None, n: int, N: int):
    if name is None:
        return None
    if name in _BELL_NAMES:
        return bell_states()[_BELL_NAMES[name]]
    if name == "canonical":
        return optimal_input_state()
    path = Path(name)
    if not path.exists():
        raise UsageError(f"--fixed-input: unknown state name or file {name!r}")
    return state_from_json(path.read_text())


def _check_format(cfg, allowed):
    if cfg["format"] not in allowed:
        raise UsageError(f"--format must be one of {', '.join(allowed)}")


# ------------------------------------------------------------------ emitters


def _jsonable(v):
    if isinstance(v, np.ndarray):
        return [_jsonable(x) for x in v.tolist()]
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (float, np.floating)):
        return float(v) if math.isfinite(v) else None
    if isinstance(v, np.integer):
        return int(v)
    return v


def result_dict(res: CapacityResult, M: int) -> dict:
    caps = np.asarray(res.restart_capacities, dtype=float)
    finite = caps[np.isfinite(caps)]
    counts, edges = np.histogram(finite, bins=20, range=(0.0, math.log2(M)))
    return {
        "capacity_bits": res.capacity_bits,
        "priors": res.priors,
        "parameters": res.parameters,
        "feasibility_gap": res.feasibility_gap,
        "converged": res.converged,
        "restart_capacities": caps,
        "histogram": {"edges": edges, "counts": counts},
        "info": {k: v for k, v in res.info.items()},
    }


def _csv(header: list[str], rows: list[list], meta: dict) -> str:
    buf = io.StringIO()
    buf.write(f"# {_meta_comment(meta)}\n")
    buf.write(",".join(header) + "\n")
    for r in rows:
        buf.write(",".join(repr(float(x)) if isinstance(x, (float, np.floating)) else str(x) for x in r) + "\n")
    return buf.getvalue()


def _json(payload: dict, meta: dict) -> str:
    return json.dumps(_jsonable({"metadata": meta, **payload}), indent=2, sort_keys=False) + "\n"


def _emit(text: str, cfg: dict, summary: str) -> None:
    if cfg.get("output"):
        Path(cfg["output"]).write_text(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary, file=sys.stderr)


# ------------------------------------------------------------------ commands


def cmd_capacity(cfg: dict) -> int:
    _check_format(cfg, ("json",))
    _positive(cfg, "photons", "modes")
    fixed = _fixed_input(cfg["fixed_input"], cfg["photons"], cfg["modes"])
    priors = cfg["priors"]
    if priors == "auto":
        priors = "fixed-uniform" if fixed is None else "blahut-arimoto"
    elif priors == "uniform":
        priors = "fixed-uniform"
    elif priors == "ba":
        priors = "blahut-arimoto"
    spec = ProblemSpec(
        n=cfg["photons"], N=cfg["modes"], M=cfg["alphabet"], alice_modes=cfg["alice_modes"],
        optimize_input=fixed is None, fixed_input=fixed, constraint=cfg["mean_photons"],
        detector=_detector(cfg), priors_mode=priors,
    )
    if spec.M > spec.dim:
        raise UsageError(f"alphabet {spec.M} exceeds the sector dimension {spec.dim}")
    res = maximize_capacity(spec, _optimizer_config(cfg))
    meta = metadata("capacity", cfg)
    summary = (
        f"capacity {res.capacity_bits:.6f} bits (best restart {res.info.get('best_restart', 0)}"
        f" of {res.info.get('restarts_used', 1)})"
    )
    _emit(_json(result_dict(res, spec.M), meta), cfg, summary)
    return EXIT_OK


def cmd_sweep(cfg: dict) -> int:
    _check_format(cfg, ("csv", "json"))
    targets = _grid(cfg["start"], cfg["stop"], cfg["step"], "")
    spec = ProblemSpec(n=cfg["photons"], N=cfg["modes"], M=cfg["alphabet"], alice_modes=cfg["alice_modes"])
    if targets[0] < 0 or targets[-1] > spec.n:
        raise UsageError(f"targets must lie in [0, {spec.n}]")
    if cfg["warm_restarts"] is not None:
        _positive(cfg, "warm_restarts")
    rows = sweep_constraint(spec, targets, _optimizer_config(cfg, warm_restarts=cfg["warm_restarts"]))
    meta = metadata("sweep", cfg)
    if cfg["format"] == "csv":
        text = sweep_to_csv(rows, _meta_comment(meta))
    else:
        text = _json({"rows": [{k: v for k, v in r.items() if k != "result"} for r in rows]}, meta)
    _emit(text, cfg, f"sweep of {len(rows)} targets, final capacity {rows[-1]['capacity_bits']:.6f} bits")
    return EXIT_OK


def cmd_detector_sweep(cfg: dict) -> int:
    _check_format(cfg, ("csv", "json"))
    s_values = _grid(cfg["s_start"], cfg["s_stop"], cfg["s_step"], "s-")
    for s in s_values + [cfg["detector_v"]]:
        if not 0 <= s <= 1:
            raise UsageError(f"detector probabilities must lie in [0, 1], got {s}")
    rows = detector_gap_sweep(s_values, v=cfg["detector_v"])
    meta = metadata("detector-sweep", cfg)
    if cfg["format"] == "csv":
        text = _csv(["s", "C_ent", "C_noent", "delta"], [[r["s"], r["C_ent"], r["C_noent"], r["delta"]] for r in rows], meta)
    else:
        text = _json({"rows": rows}, meta)
    _emit(text, cfg, f"detector sweep of {len(rows)} points at v={cfg['detector_v']}")
    return EXIT_OK


def cmd_baseline(cfg: dict) -> int:
    _check_format(cfg, ("json",))
    res = entanglement_free_baseline(vacuum_allowed=not cfg["no_vacuum"], det=_detector(cfg))
    meta = metadata("baseline", cfg)
    payload = {
        "capacity_bits": res.capacity_bits,
        "priors": res.priors,
        "states": res.info["states"],
        "vacuum_allowed": res.info["vacuum_allowed"],
        "constraint_gap": res.feasibility_gap,
    }
    _emit(_json(payload, meta), cfg, f"entanglement-free capacity {res.capacity_bits:.6f} bits")
    return EXIT_OK


def cmd_alphabet_sweep(cfg: dict) -> int:
    _check_format(cfg, ("csv", "json"))
    if cfg["m_min"] < 2 or cfg["m_max"] < cfg["m_min"]:
        raise UsageError("need 2 <= --m-min <= --m-max")
    priors = {"uniform": "fixed-uniform", "ba": "blahut-arimoto"}.get(cfg["priors"], cfg["priors"])
    spec = ProblemSpec(n=cfg["photons"], N=cfg["modes"], M=cfg["m_min"], alice_modes=cfg["alice_modes"], priors_mode=priors)
    rows = alphabet_sweep(spec, range(cfg["m_min"], cfg["m_max"] + 1), _optimizer_config(cfg))
    meta = metadata("alphabet-sweep", cfg)
    table = [[r["M"], r["capacity_bits"], r["normalized"], r["result"].info["restarts_used"]] for r in rows]
    if cfg["format"] == "csv":
        text = _csv(["M", "capacity_bits", "normalized", "restarts_used"], table, meta)
    else:
        text = _json({"rows": [{k: v for k, v in r.items() if k != "result"} for r in rows]}, meta)
    _emit(text, cfg, f"alphabet sweep M={cfg['m_min']}..{cfg['m_max']}")
    return EXIT_OK


def cmd_extended(cfg: dict) -> int:
    _check_format(cfg, ("json",))
    n, N, M = cfg["photons"], cfg["modes"], cfg["alphabet"]
    opt = _optimizer_config(cfg)
    payload = {}
    if cfg["count_orthogonal"]:
        cnt = count_orthogonal_states(n, N, N // 2, opt, m_max=M + 4)
        payload["orthogonal_count"] = {"count": cnt.count, "residuals": cnt.residuals, "capped": cnt.capped}
    res = extended_capacity(n, N, M, opt)
    payload.update(result_dict(res, M))
    _emit(_json(payload, metadata("extended", cfg)), cfg, f"extended N={N} M={M}: {res.capacity_bits:.6f} bits")
    return EXIT_OK


def cmd_verify(cfg: dict) -> int:
    _check_format(cfg, ("text", "json"))
    checks = run_checks(stretch=cfg["stretch"])
    text = checks_to_json(checks) + "\n" if cfg["format"] == "json" else format_table(checks) + "\n"
    failed = [c.name for c in checks if not c.passed]
    summary = "all checks passed" if not failed else "failing checks: " + ", ".join(failed)
    _emit(text, cfg, summary)
    return EXIT_OK if not failed else EXIT_NUMERIC


COMMANDS = {
    "capacity": cmd_capacity,
    "sweep": cmd_sweep,
    "detector-sweep": cmd_detector_sweep,
    "baseline": cmd_baseline,
    "alphabet-sweep": cmd_alphabet_sweep,
    "extended": cmd_extended,
    "verify": cmd_verify,
}

_HELP = {
    "capacity": "maximize the capacity of one protocol shape",
    "sweep": "capacity versus mean photon number on Alice's modes (CSV)",
    "detector-sweep": "entangled minus entanglement-free capacity versus detector efficiency",
    "baseline": "entanglement-free two-mode reference protocol",
    "alphabet-sweep": "normalized capacity for alphabet sizes m-min..m-max",
    "extended": "larger-mode study (stretch; long runtimes)",
    "verify": "run the golden-value and property check table",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="lincap", description="Capacity of linear-optical dense-coding protocols.", allow_abbrev=False
    )
    parser.add_argument("--version", action="version", version=f"lincap {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log optimizer progress")
    subs = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub = subs.add_parser(name, help=_HELP[name], description=_HELP[name], allow_abbrev=False)
        sub.add_argument("--config", help="flat key=value file; flags take precedence")
        for key, (default, conv) in _schema(name).items():
            flag = "--" + key.replace("_", "-")
            if conv == "bool":
                sub.add_argument(flag, dest=key, action="store_const", const=True, default=None)
            else:
                sub.add_argument(flag, dest=key, type=conv, default=None, help=f"default: {default}")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    flags = {k: v for k, v in vars(args).items() if k not in ("command", "config", "verbose")}
    try:
        config = read_config(args.config) if args.config else {}
        cfg = resolve(args.command, flags, config)
        if cfg.get("alphabet") is not None and cfg["alphabet"] < 2:
            raise UsageError(f"alphabet size must be at least 2, got {cfg['alphabet']}")
        return COMMANDS[args.command](cfg)
    except (UsageError, ValueError, IndexError, OSError) as exc:
        print(f"lincap {args.command}: invalid input: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except (RuntimeError, FloatingPointError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"lincap {args.command}: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
