"""Coherent information and the parameter-sweep engine."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

import numpy as np

from .channels import (
    ChannelParams,
    bell_state,
    coupling_to_gamma,
    crosstalk_channel_mc,
    crosstalk_overlap,
    transfer_channel_exact,
    transfer_channel_noisy,
)
from .coherent_algebra import dephased_overlap
from .fock_linalg import DensityMatrix, partial_trace, vn_entropy

VARIANTS = ("baseline", "env", "noisy", "noisy-mc")
DEFAULT_B_VALUES = (0.0, 0.25, 0.5, 1.0, 2.0, 5.0, 10.0)


def coherent_information(rho_rb: DensityMatrix) -> float:
    """S(B) - S(RB) in bits for a two-qubit (R, B) state."""
    if not isinstance(rho_rb, DensityMatrix):
        rho_rb = DensityMatrix(np.asarray(rho_rb), (2, 2))
    rho_b = partial_trace(rho_rb, keep=[1])
    return vn_entropy(rho_b) - vn_entropy(rho_rb)


def default_coupling_grid(mode_amp: float = 1.0, points: int = 40,
                          lo: float = 1e-3, hi: float = 12.0) -> list[float]:
    """Log-spaced gamma_phi values with gamma_phi |a|^2 in [lo, hi]."""
    return [float(g) / mode_amp ** 2 for g in np.geomspace(lo, hi, points)]


@dataclass(frozen=True)
class SweepGrid:
    gamma_phi: tuple[float, ...]
    b_values: tuple[float, ...] = (0.0,)
    mode_amp: float = 1.0
    variant: str = "baseline"
    sigma: Optional[float] = None     # set when gamma_phi holds couplings lambda_phi

    def __post_init__(self):
        object.__setattr__(self, "gamma_phi", tuple(float(g) for g in self.gamma_phi))
        object.__setattr__(self, "b_values", tuple(float(b) for b in self.b_values))
        if not self.gamma_phi or not self.b_values:
            raise ValueError("sweep axes must be non-empty")
        for v in self.gamma_phi + self.b_values + (self.mode_amp,):
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"sweep values must be finite and non-negative, got {v}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")

    def gammas(self) -> list[float]:
        if self.sigma is None:
            return list(self.gamma_phi)
        return [coupling_to_gamma(lam, self.sigma) for lam in self.gamma_phi]


@dataclass
class SweepRow:
    variant: str
    b: float
    gamma_phi: float
    mode_amp: float
    overlap: float
    coherent_info_bits: float
    error: Optional[str] = None


@dataclass
class SweepResult:
    rows: list[SweepRow]
    metadata: dict = field(default_factory=dict)

    @property
    def failed(self) -> list[SweepRow]:
        return [r for r in self.rows if r.error is not None]

    def column(self, name: str, b: Optional[float] = None) -> np.ndarray:
        rows = self.rows if b is None else [r for r in self.rows if r.b == b]
        return np.array([getattr(r, name) for r in rows])


def point_params(params: ChannelParams, gamma: float, mode_amp: float,
                 env_gamma: float = 0.0, b: float = 0.0) -> ChannelParams:
    """Channel parameters for one sweep point, derived from a template."""
    if params.strict_gamma:
        gates = ChannelParams.from_coupling(gamma, mode_amp)
        ga, gb = gates.gate_a, gates.gate_b
    else:
        ga = replace(params.gate_a, gamma_phi=gamma, mode_amp=mode_amp)
        gb = replace(params.gate_b, gamma_phi=gamma, mode_amp=mode_amp)
    return replace(params, gate_a=ga, gate_b=gb, mode_amp=mode_amp,
                   env_gamma=env_gamma, ct_b=b)


def _point(variant: str, params: ChannelParams, gamma: float, b: float, amp: float,
           samples: int, seed: int) -> tuple[float, float]:
    if variant == "baseline":
        p = point_params(params, gamma, amp)
        return dephased_overlap(gamma, amp), coherent_information(transfer_channel_exact(p))
    if variant == "env":
        p = point_params(params, gamma, amp, env_gamma=params.env_gamma)
        return dephased_overlap(gamma, amp), coherent_information(transfer_channel_exact(p))
    p = point_params(params, gamma, amp, b=b)
    if variant == "noisy":
        return crosstalk_overlap(gamma, b, amp), coherent_information(transfer_channel_noisy(p))
    res = crosstalk_channel_mc(p, bell_state(), samples=samples, seed=seed)
    return crosstalk_overlap(gamma, b, amp), coherent_information(res.mean)


def run_sweep(grid: SweepGrid, params: ChannelParams, samples: int = 10_000,
              seed: int = 0) -> SweepResult:
    """Evaluate one variant over the (b, gamma_phi) grid.

    Baseline and env variants ignore ``b`` and are reported at b = 0.  Failed
    points become rows with ``error`` set and NaN values; the sweep continues.
    """
    b_axis = (0.0,) if grid.variant in ("baseline", "env") else grid.b_values
    rows = []
    for b in sorted(set(b_axis)):
        for g in sorted(set(grid.gammas())):
            try:
                ov, ic = _point(grid.variant, params, g, b, grid.mode_amp, samples, seed)
                rows.append(SweepRow(grid.variant, b, g, grid.mode_amp, ov, ic))
            except (ValueError, ArithmeticError, RuntimeError) as exc:
                rows.append(SweepRow(grid.variant, b, g, grid.mode_amp,
                                     math.nan, math.nan, f"{type(exc).__name__}: {exc}"))
    meta = {
        "variant": grid.variant,
        "input_state": "maximally entangled R-A pair",
        "gate_order": params.gate_order,
        "env_gamma": params.env_gamma if grid.variant == "env" else 0.0,
        "seed": seed if grid.variant == "noisy-mc" else None,
        "samples": samples if grid.variant == "noisy-mc" else None,
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime()),
    }
    return SweepResult(rows, meta)


def overlap_curves(grid: SweepGrid) -> SweepResult:
    """Cross-talk branch overlap (b = 0 is the bare dephased overlap) per grid point."""
    rows = []
    for b in sorted(set(grid.b_values)):
        for g in sorted(set(grid.gammas())):
            ov = crosstalk_overlap(g, b, grid.mode_amp)
            rows.append(SweepRow("overlap", b, g, grid.mode_amp, ov, math.nan))
    return SweepResult(rows, {"mode_amp": grid.mode_amp})


def argmax_on_grid(values: Sequence[float], grid: Sequence[float]) -> float:
    return float(np.asarray(grid)[int(np.nanargmax(values))])
