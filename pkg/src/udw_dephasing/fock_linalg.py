"""Dense linear algebra on truncated Fock and qubit spaces.

Subsystem ordering everywhere is "leftmost factor is the most significant
index", matching ``numpy.kron``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg
from scipy.special import gammaincc

DEFAULT_CUTOFF = 64
MAX_CUTOFF = 512
CAPTURE_TOL = 1e-10
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-8
PSD_TOL = 1e-9
EIG_CLAMP = 1e-12


class DimensionError(ValueError):
    """Raised when subsystem dimensions or positions are inconsistent."""


class TruncationError(ValueError):
    """A displacement does not fit inside the Fock cutoff."""

    def __init__(self, message: str, suggested_cutoff: int | None = None):
        super().__init__(message)
        self.suggested_cutoff = suggested_cutoff


@dataclass(frozen=True)
class DensityMatrix:
    """Square complex matrix plus the subsystem dimensions it factors into."""

    matrix: np.ndarray
    dims: tuple[int, ...] = field(default=())

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise DimensionError(f"density matrix must be square, got {m.shape}")
        dims = tuple(int(d) for d in self.dims) or (m.shape[0],)
        if math.prod(dims) != m.shape[0]:
            raise DimensionError(f"dims {dims} do not multiply to {m.shape[0]}")
        if not np.all(np.isfinite(m)):
            raise ValueError("density matrix has non-finite entries")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "dims", dims)

    @classmethod
    def from_vector(cls, psi, dims: Sequence[int] = ()) -> "DensityMatrix":
        psi = np.asarray(psi, dtype=complex).ravel()
        return cls(np.outer(psi, psi.conj()), tuple(dims))

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def trace(self) -> complex:
        return complex(np.trace(self.matrix))

    def hermiticity_error(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        h = 0.5 * (self.matrix + self.matrix.conj().T)
        return float(np.linalg.eigvalsh(h)[0])

    def validate(self, trace_tol: float = TRACE_TOL) -> None:
        """Raise ``ValueError`` unless Hermitian, unit trace and PSD."""
        herr = self.hermiticity_error()
        if herr > HERMITIAN_TOL:
            raise ValueError(f"not Hermitian (max deviation {herr:.3e})")
        tr = self.trace()
        if abs(tr - 1.0) > trace_tol:
            raise ValueError(f"trace {tr} differs from 1 by more than {trace_tol}")
        lam = self.min_eigenvalue()
        if lam < -PSD_TOL:
            raise ValueError(f"negative eigenvalue {lam:.3e}")

    def is_valid(self, trace_tol: float = TRACE_TOL) -> bool:
        try:
            self.validate(trace_tol)
        except ValueError:
            return False
        return True


def kron(a, b) -> np.ndarray:
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


def kron_all(*ops) -> np.ndarray:
    out = np.ones((1, 1), dtype=complex)
    for op in ops:
        out = kron(out, op)
    return out


def partial_trace(rho: DensityMatrix, keep: Iterable[int]) -> DensityMatrix:
    """Reduce ``rho`` onto the subsystems listed in ``keep``.

    Kept subsystems stay in their original relative order, whatever order
    ``keep`` lists them in.
    """
    dims = rho.dims
    n = len(dims)
    keep = sorted(set(keep))
    if not keep:
        raise DimensionError("keep must name at least one subsystem")
    bad = [k for k in keep if not 0 <= k < n]
    if bad:
        raise DimensionError(f"subsystem positions {bad} out of range for dims {dims}")

    t = rho.matrix.reshape(dims + dims)
    row = list(range(n))
    col = [i if i not in keep else n + i for i in range(n)]
    out = [i for i in keep] + [n + i for i in keep]
    reduced = np.einsum(t, row + col, out)
    d = math.prod(dims[i] for i in keep)
    return DensityMatrix(reduced.reshape(d, d), tuple(dims[i] for i in keep))


def vn_entropy(rho: DensityMatrix) -> float:
    """Von Neumann entropy in bits."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else np.asarray(rho)
    w = np.linalg.eigvalsh(0.5 * (m + m.conj().T))
    w = np.clip(w, 0.0, 1.0)
    w = w[w > EIG_CLAMP]
    return float(-np.sum(w * np.log2(w)))


def ladder(n: int) -> np.ndarray:
    """Annihilation operator on levels |0>..|n-1>."""
    if n < 2:
        raise ValueError(f"Fock cutoff must be >= 2, got {n}")
    return np.diag(np.sqrt(np.arange(1, n, dtype=float)), k=1).astype(complex)


def captured_norm(delta: complex, n: int) -> float:
    """Probability weight of |delta> on the first n Fock levels."""
    x = abs(delta) ** 2
    if x == 0.0:
        return 1.0
    # regularized upper incomplete gamma Q(n, x) is the Poisson CDF at n-1
    return float(gammaincc(n, x))


def is_admissible(delta: complex, n: int) -> bool:
    return captured_norm(delta, n) >= 1.0 - CAPTURE_TOL


def required_cutoff(delta: complex, start: int = DEFAULT_CUTOFF,
                    max_cutoff: int = MAX_CUTOFF) -> int:
    """Smallest doubling of ``start`` (up to ``max_cutoff``) that holds ``delta``."""
    n = start
    while not is_admissible(delta, n):
        if n >= max_cutoff:
            raise TruncationError(
                f"|delta|={abs(delta):.4g} needs a Fock cutoff above {max_cutoff}",
                suggested_cutoff=_suggest(delta),
            )
        n = min(2 * n, max_cutoff)
    return n


def _suggest(delta: complex) -> int:
    n = 2
    while not is_admissible(delta, n):
        n *= 2
    return n


def check_admissible(delta: complex, n: int) -> None:
    if not is_admissible(delta, n):
        raise TruncationError(
            f"displacement |delta|={abs(delta):.4g} leaks "
            f"{1 - captured_norm(delta, n):.3e} of its norm beyond cutoff N={n}",
            suggested_cutoff=_suggest(delta),
        )


def displacement_matrix(delta: complex, n: int, check: bool = True) -> np.ndarray:
    """Truncated exp(delta a^dag - conj(delta) a)."""
    if check:
        check_admissible(delta, n)
    a = ladder(n)
    gen = delta * a.conj().T - np.conj(delta) * a
    return scipy.linalg.expm(gen)


def coherent_state_vector(delta: complex, n: int, check: bool = True,
                          renormalize: bool = True) -> np.ndarray:
    if check:
        check_admissible(delta, n)
    if n < 2:
        raise ValueError(f"Fock cutoff must be >= 2, got {n}")
    k = np.arange(n)
    if delta == 0:
        v = np.zeros(n, dtype=complex)
        v[0] = 1.0
        return v
    # log-space to avoid overflow of delta**k / sqrt(k!) at large k
    logmag = k * math.log(abs(delta)) - 0.5 * np.array([math.lgamma(j + 1) for j in k])
    v = np.exp(logmag - 0.5 * abs(delta) ** 2) * np.exp(1j * k * np.angle(delta))
    if renormalize:
        v = v / np.linalg.norm(v)
    return v


def quadrature_unitary_factory(n: int, direction: complex):
    """Return ``t -> D(t * direction)`` for real t via one eigendecomposition.

    Cheap repeated evaluation along a fixed phase-space line, used by the
    Monte Carlo oracle.
    """
    a = ladder(n)
    herm = 1j * (direction * a.conj().T - np.conj(direction) * a)
    w, v = np.linalg.eigh(herm)
    vh = v.conj().T

    def displace(t: float) -> np.ndarray:
        return (v * np.exp(-1j * t * w)) @ vh

    return displace
