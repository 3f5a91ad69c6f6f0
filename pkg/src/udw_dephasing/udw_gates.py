"""UDW detector gates as qubit-controlled displacements.

With delta switching a detector gate is

    U = sum_{z,x} P_x P_z (x) D(x d_pi) D(z d_phi)

where ``d_phi = i sqrt(gamma_phi) |alpha|`` (phi quadrature, imaginary axis) and
``d_pi = -sqrt(gamma_pi) |alpha|`` (conjugate quadrature, real axis).  The
encoder applies the phi coupling first; the decoder runs the two couplings in
the opposite order (see :func:`gate_branches`).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .coherent_algebra import DisplacementTerm, fold
from .fock_linalg import check_admissible, displacement_matrix

TWO_PI = 2.0 * math.pi
TARGET_GAMMA = math.pi / 4

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def projector(pauli: np.ndarray, sign: int) -> np.ndarray:
    return 0.5 * (I2 + sign * pauli)


@dataclass(frozen=True)
class GateParams:
    gamma_phi: float
    gamma_pi: float
    mode_amp: float = 1.0
    which_qubit: str = "A"

    def __post_init__(self):
        for name in ("gamma_phi", "gamma_pi", "mode_amp"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and non-negative, got {v}")
        if self.which_qubit not in ("A", "B", "CT"):
            raise ValueError(f"unknown qubit label {self.which_qubit!r}")

    @classmethod
    def constrained(cls, gamma_phi: float, mode_amp: float = 1.0,
                    which_qubit: str = "A") -> "GateParams":
        """Gate whose conjugate coupling satisfies the pi/4 phase constraint."""
        return cls(gamma_phi, solve_gamma_pi(gamma_phi, mode_amp), mode_amp, which_qubit)


@dataclass(frozen=True)
class GammaPhase:
    value: float

    def __post_init__(self):
        object.__setattr__(self, "value", math.fmod(self.value, TWO_PI) % TWO_PI)


@dataclass(frozen=True)
class GateBranch:
    """One term ``Q (x) D_k ... D_1`` of a controlled gate.

    ``displacements`` is in application order and ``qubit_op`` is the matching
    product of projectors.
    """

    z: int
    x: Optional[int]
    displacements: tuple[DisplacementTerm, ...]
    qubit_op: np.ndarray

    @property
    def field_term(self) -> DisplacementTerm:
        return fold(self.displacements)


def phi_displacement(p: GateParams, z: int) -> DisplacementTerm:
    return DisplacementTerm(1j * z * math.sqrt(p.gamma_phi) * p.mode_amp)


def pi_displacement(p: GateParams, x: int) -> DisplacementTerm:
    return DisplacementTerm(-x * math.sqrt(p.gamma_pi) * p.mode_amp)


def gamma_phase_raw(p: GateParams) -> float:
    return 2.0 * math.sqrt(p.gamma_phi * p.gamma_pi) * p.mode_amp ** 2


def gamma_phase(p: GateParams) -> GammaPhase:
    """Relative phase between field branches from one phi/pi crossing, mod 2 pi."""
    return GammaPhase(gamma_phase_raw(p))


def solve_gamma_pi(gamma_phi: float, mode_amp: float) -> float:
    if not (gamma_phi > 0 and mode_amp > 0):
        raise ValueError("gamma_phi and mode_amp must be strictly positive")
    return TARGET_GAMMA ** 2 / (4.0 * gamma_phi * mode_amp ** 4)


def gate_branches(p: GateParams, decode: bool = False) -> list[GateBranch]:
    """The four (z, x) branches of a two-quadrature gate.

    Encoding applies the phi displacement then the pi displacement, with qubit
    operator ``P_x P_z``.  ``decode=True`` gives the time-reversed order
    (pi first, qubit operator ``P_z P_x``) used by the receiving qubit.
    """
    out = []
    for z in (1, -1):
        for x in (1, -1):
            pz = projector(SIGMA_Z, z)
            px = projector(SIGMA_X, x)
            dphi, dpi = phi_displacement(p, z), pi_displacement(p, x)
            if decode:
                out.append(GateBranch(z, x, (dpi, dphi), pz @ px))
            else:
                out.append(GateBranch(z, x, (dphi, dpi), px @ pz))
    return out


def controlled_phi_branches(gamma: float, mode_amp: float = 1.0) -> list[GateBranch]:
    """Single-projector gate ``sum_z P_z (x) exp(i z sqrt(gamma) phi)``."""
    p = GateParams(gamma, 0.0, mode_amp, "CT")
    return [GateBranch(z, None, (phi_displacement(p, z),), projector(SIGMA_Z, z))
            for z in (1, -1)]


def branch_amplitudes(p: GateParams) -> list[complex]:
    return [d.amplitude for b in gate_branches(p) for d in b.displacements]


def max_field_amplitude(p: GateParams) -> float:
    return math.sqrt(p.gamma_phi) * p.mode_amp + math.sqrt(p.gamma_pi) * p.mode_amp


def gate_matrix(p: GateParams, n: int, decode: bool = False) -> np.ndarray:
    """Explicit (2n x 2n) gate on qubit (x) Fock space."""
    for amp in branch_amplitudes(p):
        check_admissible(amp, n)
    cache: dict[complex, np.ndarray] = {}

    def dmat(delta: complex) -> np.ndarray:
        if delta not in cache:
            cache[delta] = displacement_matrix(delta, n, check=False)
        return cache[delta]

    u = np.zeros((2 * n, 2 * n), dtype=complex)
    for br in gate_branches(p, decode=decode):
        field = np.eye(n, dtype=complex)
        for d in br.displacements:
            field = dmat(d.amplitude) @ field
        u += np.kron(br.qubit_op, field)
    return u
