"""Command-line front end: ``sweep``, ``overlaps`` and ``verify``.

Settings resolve as CLI flag > ``--config`` file > built-in default.  The
config file is flat ``key = value`` text; keys are the long flag names with or
without the leading dashes (``gamma-e = 0.5`` or ``gamma_e = 0.5``), ``#``
starts a comment, and repeatable flags take comma-separated lists
(``b = 0, 0.5, 1``).
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import __version__
from .channels import (
    ChannelParams,
    QuadratureError,
    bell_state,
    crosstalk_channel_mc,
    crosstalk_overlap,
    crosstalk_overlap_quadrature,
    transfer_channel_exact,
    transfer_channel_fock,
    transfer_channel_noisy,
)
from .fock_linalg import TruncationError
from .info_sweeps import (
    DEFAULT_B_VALUES,
    VARIANTS,
    SweepGrid,
    SweepResult,
    overlap_curves,
    run_sweep,
)

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3
SWEEP_HEADER = "variant,b,gamma_phi,mode_amp,overlap,coherent_info_bits"
OVERLAP_HEADER = "b,gamma_phi,mode_amp,overlap"
CHECKS = ("fock", "quadrature", "mc")

DEFAULTS = {
    "variant": "baseline",
    "gamma_phi_min": None,          # resolved against mode_amp
    "gamma_phi_max": None,
    "gamma_phi_steps": 40,
    "b": None,
    "mode_amp": 1.0,
    "sigma": None,
    "gamma_e": 1.0,
    "fock_cutoff": None,
    "samples": 10_000,
    "seed": 0,
    "quad_nodes": None,
    "gate_order": "a-first",
    "out": None,
    "format": "csv",
    "strict_gamma": True,
    "check": None,
}

_INT_KEYS = {"gamma_phi_steps", "fock_cutoff", "samples", "seed", "quad_nodes"}
_FLOAT_KEYS = {"gamma_phi_min", "gamma_phi_max", "mode_amp", "sigma", "gamma_e"}
_LIST_KEYS = {"b": float, "check": str}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    subcommand: str
    variant: str = "baseline"
    gamma_phi: tuple = ()
    b_values: tuple = DEFAULT_B_VALUES
    mode_amp: float = 1.0
    sigma: Optional[float] = None
    gamma_e: float = 1.0
    fock_cutoff: Optional[int] = None
    samples: int = 10_000
    seed: int = 0
    quad_nodes: Optional[int] = None
    gate_order: str = "a-first"
    strict_gamma: bool = True
    out: Optional[str] = None
    format: str = "csv"
    checks: tuple = CHECKS
    extras: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# parsing


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="udw-dephasing",
        description="Coherent information of UDW qubit-field-qubit channels "
                    "viewed as bosonic dephasing channels.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="subcommand", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value settings file")
    common.add_argument("--gamma-phi-min", type=float, default=None)
    common.add_argument("--gamma-phi-max", type=float, default=None)
    common.add_argument("--gamma-phi-steps", type=int, default=None)
    common.add_argument("--b", type=float, action="append", default=None,
                        help="cross-talk multiplier (repeatable)")
    common.add_argument("--mode-amp", type=float, default=None)
    common.add_argument("--sigma", type=float, default=None,
                        help="smearing width; makes the gamma-phi axis a coupling axis")
    common.add_argument("--fock-cutoff", type=int, default=None)
    common.add_argument("--samples", type=int, default=None)
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--quad-nodes", type=int, default=None)
    common.add_argument("--gate-order", choices=("a-first", "b-first"), default=None)
    common.add_argument("--out", default=None)
    common.add_argument("--format", choices=("csv", "json"), default=None)

    sp = sub.add_parser("sweep", parents=[common], help="coherent information sweep")
    sp.add_argument("--variant", choices=VARIANTS, default=None)
    sp.add_argument("--gamma-e", type=float, default=None)
    sp.add_argument("--no-strict-gamma", dest="strict_gamma", action="store_false",
                    default=None, help="do not re-solve the pi/4 phase constraint")

    sub.add_parser("overlaps", parents=[common], help="branch overlap curves")

    vp = sub.add_parser("verify", parents=[common], help="oracle equivalence checks")
    vp.add_argument("--check", choices=CHECKS, action="append", default=None,
                    help="run only the named check (repeatable)")
    return parser


def read_config_file(path: str) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.lstrip("-").replace("-", "_")
        if key not in DEFAULTS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        values[key] = _coerce(key, val, f"{path}:{lineno}")
    return values


def _coerce(key: str, val: str, where: str):
    try:
        if key in _LIST_KEYS:
            conv = _LIST_KEYS[key]
            return [conv(v.strip()) for v in val.split(",") if v.strip()]
        if key in _INT_KEYS:
            return None if val.lower() == "none" else int(val)
        if key in _FLOAT_KEYS:
            return None if val.lower() == "none" else float(val)
        if key == "strict_gamma":
            if val.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(val)
            return val.lower() in ("true", "1", "yes")
    except ValueError as exc:
        raise ConfigError(f"{where}: bad value for {key}: {val!r}") from exc
    return val


def resolve_config(args: argparse.Namespace) -> RunConfig:
    merged = dict(DEFAULTS)
    if getattr(args, "config", None):
        merged.update(read_config_file(args.config))
    for key in DEFAULTS:
        v = getattr(args, key, None)
        if v is not None:
            merged[key] = v

    amp = merged["mode_amp"]
    if not (math.isfinite(amp) and amp > 0):
        raise ConfigError("--mode-amp must be a positive finite number")
    lo = merged["gamma_phi_min"] if merged["gamma_phi_min"] is not None else 1e-3 / amp ** 2
    hi = merged["gamma_phi_max"] if merged["gamma_phi_max"] is not None else 12.0 / amp ** 2
    steps = merged["gamma_phi_steps"]
    for name, v in (("gamma-phi-min", lo), ("gamma-phi-max", hi)):
        if not (math.isfinite(v) and v > 0):
            raise ConfigError(f"--{name} must be a positive finite number")
    if hi < lo:
        raise ConfigError("--gamma-phi-max must be >= --gamma-phi-min")
    if steps < 1:
        raise ConfigError("--gamma-phi-steps must be >= 1")
    axis = tuple(float(g) for g in np.geomspace(lo, hi, steps)) if steps > 1 else (float(lo),)

    b_values = tuple(merged["b"]) if merged["b"] else DEFAULT_B_VALUES
    for b in b_values:
        if not (math.isfinite(b) and b >= 0):
            raise ConfigError("--b values must be finite and non-negative")
    for key in ("gamma_e", "sigma"):
        v = merged[key]
        if v is not None and not (math.isfinite(v) and v >= 0):
            raise ConfigError(f"--{key.replace('_', '-')} must be finite and non-negative")
    if merged["sigma"] is not None and merged["sigma"] <= 0:
        raise ConfigError("--sigma must be positive")
    if merged["samples"] < 1:
        raise ConfigError("--samples must be >= 1")
    if not 0 <= merged["seed"] < 2 ** 64:
        raise ConfigError("--seed must be a 64-bit unsigned integer")
    if merged["fock_cutoff"] is not None and merged["fock_cutoff"] < 2:
        raise ConfigError("--fock-cutoff must be >= 2")
    if merged["quad_nodes"] is not None and merged["quad_nodes"] < 1:
        raise ConfigError("--quad-nodes must be >= 1")
    if merged["variant"] not in VARIANTS:
        raise ConfigError(f"unknown variant {merged['variant']!r}")
    if merged["format"] not in ("csv", "json"):
        raise ConfigError(f"unknown format {merged['format']!r}")
    if merged["gate_order"] not in ("a-first", "b-first"):
        raise ConfigError(f"unknown gate order {merged['gate_order']!r}")
    checks = tuple(merged["check"]) if merged["check"] else CHECKS
    bad = [c for c in checks if c not in CHECKS]
    if bad:
        raise ConfigError(f"unknown checks {bad}")

    return RunConfig(
        subcommand=args.subcommand,
        variant=merged["variant"],
        gamma_phi=axis,
        b_values=b_values,
        mode_amp=amp,
        sigma=merged["sigma"],
        gamma_e=merged["gamma_e"],
        fock_cutoff=merged["fock_cutoff"],
        samples=merged["samples"],
        seed=merged["seed"],
        quad_nodes=merged["quad_nodes"],
        gate_order=merged["gate_order"],
        strict_gamma=merged["strict_gamma"],
        out=merged["out"],
        format=merged["format"],
        checks=checks,
    )


# ---------------------------------------------------------------------------
# output


def fmt(x: float) -> str:
    """Shortest round-trip decimal."""
    return repr(float(x))


def sweep_csv(result: SweepResult) -> str:
    lines = [SWEEP_HEADER]
    for r in result.rows:
        lines.append(",".join([r.variant, fmt(r.b), fmt(r.gamma_phi), fmt(r.mode_amp),
                               fmt(r.overlap), fmt(r.coherent_info_bits)]))
    return "\n".join(lines) + "\n"


def overlaps_csv(result: SweepResult) -> str:
    lines = [OVERLAP_HEADER]
    for r in result.rows:
        lines.append(",".join([fmt(r.b), fmt(r.gamma_phi), fmt(r.mode_amp), fmt(r.overlap)]))
    return "\n".join(lines) + "\n"


def result_json(result: SweepResult, columns: Sequence[str]) -> str:
    # timestamps stay out of files so identical configs give identical bytes
    meta = {k: v for k, v in result.metadata.items() if k != "timestamp"}
    rows = []
    for r in result.rows:
        row = {c: (getattr(r, c) if c == "variant" else _json_float(getattr(r, c)))
               for c in columns}
        if r.error:
            row["error"] = r.error
        rows.append(row)
    return json.dumps({"metadata": meta, "rows": rows}, indent=2, sort_keys=False) + "\n"


def _json_float(x: float):
    return x if math.isfinite(x) else None


def write_atomic(path: str, text: str) -> None:
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=target.parent, prefix=f".{target.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, target)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.out:
        write_atomic(cfg.out, text)
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# subcommands


def _template(cfg: RunConfig, env_gamma: float = 0.0) -> ChannelParams:
    return ChannelParams.from_coupling(
        1.0, cfg.mode_amp, env_gamma=env_gamma, fock_cutoff=cfg.fock_cutoff,
        gate_order=cfg.gate_order, strict_gamma=cfg.strict_gamma)


def cmd_sweep(cfg: RunConfig) -> int:
    env = cfg.gamma_e if cfg.variant == "env" else 0.0
    grid = SweepGrid(cfg.gamma_phi, cfg.b_values, cfg.mode_amp, cfg.variant, cfg.sigma)
    result = run_sweep(grid, _template(cfg, env), samples=cfg.samples, seed=cfg.seed)
    result.metadata["fock_cutoff"] = cfg.fock_cutoff
    if cfg.format == "csv":
        text = sweep_csv(result)
    else:
        text = result_json(result, SWEEP_HEADER.split(","))
    _emit(cfg, text)
    for r in result.failed:
        print(f"error at variant={r.variant} b={fmt(r.b)} gamma_phi={fmt(r.gamma_phi)}: "
              f"{r.error}", file=sys.stderr)
    return EXIT_NUMERIC if result.failed else EXIT_OK


def cmd_overlaps(cfg: RunConfig) -> int:
    grid = SweepGrid(cfg.gamma_phi, cfg.b_values, cfg.mode_amp, "baseline", cfg.sigma)
    result = overlap_curves(grid)
    text = overlaps_csv(result) if cfg.format == "csv" else result_json(result, OVERLAP_HEADER.split(","))
    _emit(cfg, text)
    return EXIT_OK


@dataclass
class CheckReport:
    name: str
    max_deviation: float
    tolerance: float
    passed: bool
    detail: str = ""


def check_fock(cfg: RunConfig) -> CheckReport:
    worst = 0.0
    for prod in (0.25, 1.0, 4.0):
        for amp in (0.5, 1.0, 2.0):
            p = ChannelParams.from_coupling(prod / amp ** 2, amp, fock_cutoff=cfg.fock_cutoff,
                                            gate_order=cfg.gate_order)
            try:
                f = transfer_channel_fock(p)
            except TruncationError as exc:
                return CheckReport("exact-vs-fock", math.inf, 1e-6, False,
                                   f"truncation at gamma_phi|a|^2={prod}, |a|={amp}: {exc}")
            e = transfer_channel_exact(p)
            worst = max(worst, float(np.max(np.abs(e.matrix - f.matrix))))
    return CheckReport("exact-vs-fock", worst, 1e-6, worst <= 1e-6)


def check_quadrature(cfg: RunConfig) -> CheckReport:
    worst = 0.0
    amp = cfg.mode_amp
    for prod in np.linspace(0.5, 12.0, 5):
        for b in np.linspace(0.0, 10.0, 5):
            g = float(prod) / amp ** 2
            try:
                q = crosstalk_overlap_quadrature(g, float(b), amp, nodes=cfg.quad_nodes)
            except QuadratureError as exc:
                return CheckReport("closed-form-vs-quadrature", math.inf, 1e-8, False, str(exc))
            worst = max(worst, abs(q - crosstalk_overlap(g, float(b), amp)))
    detail = f"nodes={cfg.quad_nodes}" if cfg.quad_nodes else "adaptive"
    return CheckReport("closed-form-vs-quadrature", worst, 1e-8, worst <= 1e-8, detail)


def check_mc(cfg: RunConfig) -> CheckReport:
    p = ChannelParams.from_coupling(1.0 / cfg.mode_amp ** 2, cfg.mode_amp, ct_b=1.0,
                                    gate_order=cfg.gate_order)
    mc = crosstalk_channel_mc(p, bell_state(), samples=cfg.samples, seed=cfg.seed)
    eff = transfer_channel_noisy(p).matrix
    diff = mc.mean.matrix - eff
    z_re = _zscore(diff.real, mc.stderr_real)
    z_im = _zscore(diff.imag, mc.stderr_imag)
    worst = float(max(z_re.max(), z_im.max()))
    return CheckReport("effective-vs-mc", worst, 3.0, worst <= 3.0,
                       f"(in standard errors; max |diff| {np.max(np.abs(diff)):.3e})")


def _zscore(diff: np.ndarray, se: np.ndarray) -> np.ndarray:
    floor = 1e-12
    return np.abs(diff) / np.maximum(se, floor)


_CHECK_FUNCS = {"fock": check_fock, "quadrature": check_quadrature, "mc": check_mc}


def cmd_verify(cfg: RunConfig) -> int:
    ok = True
    for name in cfg.checks:
        t0 = time.perf_counter()
        rep = _CHECK_FUNCS[name](cfg)
        dt = time.perf_counter() - t0
        status = "PASS" if rep.passed else "FAIL"
        line = (f"{status} {rep.name}: max deviation {rep.max_deviation:.3e} "
                f"(tolerance {rep.tolerance:g}) [{dt:.2f}s]")
        if rep.detail:
            line += f" {rep.detail}"
        print(line)
        ok &= rep.passed
    if not ok:
        print("verification failed", file=sys.stderr)
    return EXIT_OK if ok else EXIT_VERIFY


COMMANDS = {"sweep": cmd_sweep, "overlaps": cmd_overlaps, "verify": cmd_verify}


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    try:
        cfg = resolve_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return COMMANDS[cfg.subcommand](cfg)
    except (TruncationError, QuadratureError, ArithmeticError) as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"config error: cannot write output: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
