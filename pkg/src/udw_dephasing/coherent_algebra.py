"""Scalar algebra of single-mode displacement operators.

A :class:`DisplacementTerm` stands for ``exp(i*phase) * D(amplitude)``.  Products
of displacements collapse to one term through the BCH identity

    D(b) D(a) = exp((b*conj(a) - conj(b)*a) / 2) D(a + b),

so vacuum correlators of arbitrarily long displacement strings reduce to a
single Gaussian factor with no Fock truncation involved.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Sequence

import numpy as np


@dataclass(frozen=True)
class DisplacementTerm:
    amplitude: complex = 0j
    phase: float = 0.0

    def __post_init__(self):
        amp = complex(self.amplitude)
        if not (cmath.isfinite(amp) and math.isfinite(self.phase)):
            raise ValueError("displacement term must be finite")
        object.__setattr__(self, "amplitude", amp)
        object.__setattr__(self, "phase", float(self.phase))

    def inverse(self) -> "DisplacementTerm":
        """Adjoint: exp(-i*phase) D(-amplitude)."""
        return DisplacementTerm(-self.amplitude, -self.phase)


IDENTITY = DisplacementTerm()


@dataclass(frozen=True)
class OverlapParams:
    gamma: float
    mode_amp: float = 1.0

    def __post_init__(self):
        if self.gamma < 0 or self.mode_amp < 0:
            raise ValueError("gamma and mode_amp must be non-negative")


def bch_phase(left: complex, right: complex) -> float:
    """Phase of D(left) D(right) relative to D(left + right)."""
    return (left * right.conjugate()).imag


def compose(a: DisplacementTerm, b: DisplacementTerm) -> DisplacementTerm:
    """Operator product ``a * b`` (``b`` acts first)."""
    return DisplacementTerm(
        a.amplitude + b.amplitude,
        a.phase + b.phase + bch_phase(a.amplitude, b.amplitude),
    )


def fold(terms_in_application_order: Iterable[DisplacementTerm]) -> DisplacementTerm:
    """Collapse terms applied first-to-last into one term.

    ``[t0, t1, t2]`` means the operator ``t2 * t1 * t0``.
    """
    return reduce(lambda acc, t: compose(t, acc), terms_in_application_order, IDENTITY)


def vacuum_expectation(terms: Sequence[DisplacementTerm]) -> complex:
    """<0| t_0 t_1 ... t_{k-1} |0> for an operator-order list of terms."""
    total = reduce(compose, terms, IDENTITY)
    return cmath.exp(1j * total.phase) * math.exp(-0.5 * abs(total.amplitude) ** 2)


def overlap(beta: complex, alpha: complex) -> complex:
    """<beta|alpha> for coherent states."""
    return cmath.exp(-0.5 * abs(alpha) ** 2 - 0.5 * abs(beta) ** 2
                     + complex(beta).conjugate() * alpha)


def overlap_array(beta, alpha) -> np.ndarray:
    """Broadcasting version of :func:`overlap`."""
    beta = np.asarray(beta, dtype=complex)
    alpha = np.asarray(alpha, dtype=complex)
    return np.exp(-0.5 * np.abs(alpha) ** 2 - 0.5 * np.abs(beta) ** 2 + beta.conj() * alpha)


def dephased_overlap(p: OverlapParams | float, mode_amp: float | None = None) -> float:
    """|<+sqrt(g) a | -sqrt(g) a>| = exp(-2 g |a|^2).

    Accepts either an :class:`OverlapParams` or ``(gamma, mode_amp)``.
    """
    if not isinstance(p, OverlapParams):
        p = OverlapParams(float(p), 1.0 if mode_amp is None else float(mode_amp))
    return math.exp(-2.0 * p.gamma * p.mode_amp ** 2)


def fold_amplitudes(amps, phases=None):
    """Vectorized :func:`fold` over the last axis.

    ``amps[..., j]`` is the j-th displacement applied.  Returns the net
    amplitude and accumulated phase with the leading shape.
    """
    amps = np.asarray(amps, dtype=complex)
    acc_a = np.zeros(amps.shape[:-1], dtype=complex)
    acc_p = np.zeros(amps.shape[:-1], dtype=float)
    if phases is not None:
        acc_p = acc_p + np.sum(phases, axis=-1)
    for j in range(amps.shape[-1]):
        t = amps[..., j]
        acc_p = acc_p + (t * acc_a.conj()).imag
        acc_a = acc_a + t
    return acc_a, acc_p
