"""End-to-end qubit -> field -> qubit channels.

Two independent evaluation routes share one physical model:

* the *exact* route expands both gates into their 16 joint branches, each a
  qubit operator times one displacement term, and weights branch pairs with
  closed-form coherent-state correlators (no truncation);
* the *Fock* route builds the gates as explicit matrices on a truncated Fock
  space and propagates states directly.

Qubit ordering is ``R, A, B`` for the exact route and ``R, A, F, B`` for the
Fock route, with R the reference qubit entangled with the sender A.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from scipy import integrate

from .coherent_algebra import dephased_overlap, fold_amplitudes, overlap_array
from .fock_linalg import (
    DEFAULT_CUTOFF,
    MAX_CUTOFF,
    TRACE_TOL,
    DensityMatrix,
    DimensionError,
    TruncationError,
    is_admissible,
    displacement_matrix,
    quadrature_unitary_factory,
)
from .udw_gates import (
    SIGMA_X,
    SIGMA_Z,
    GateParams,
    gate_branches,
    gate_matrix,
    pi_displacement,
    projector,
    solve_gamma_pi,
)

PLUS_Y = np.array([1.0, 1.0j]) / math.sqrt(2.0)
GATE_ORDERS = ("a-first", "b-first")
# where environment dephasing hits the field: between the gates, or after both
ENV_PLACEMENTS = ("between", "before-trace")


class QuadratureError(RuntimeError):
    pass


@dataclass(frozen=True)
class ChannelParams:
    """Physical knobs of the two-gate channel.

    ``gate_a`` encodes and ``gate_b`` decodes.  ``env_gamma`` is the variance of
    the environment phase kick and ``ct_b`` the cross-talk multiplier.

    ``fock_cutoff=None`` lets the Fock route pick the smallest admissible
    cutoff (64 doubling up to 512); an explicit integer is used as is.
    """

    gate_a: GateParams
    gate_b: GateParams
    mode_amp: float = 1.0
    env_gamma: float = 0.0
    ct_b: float = 0.0
    fock_cutoff: Optional[int] = None
    gate_order: str = "a-first"
    strict_gamma: bool = True
    b_state: tuple = field(default=tuple(PLUS_Y))
    env_placement: str = "between"

    def __post_init__(self):
        if self.env_gamma < 0 or self.ct_b < 0 or self.mode_amp < 0:
            raise ValueError("env_gamma, ct_b and mode_amp must be non-negative")
        if self.gate_order not in GATE_ORDERS:
            raise ValueError(f"gate_order must be one of {GATE_ORDERS}")
        if self.env_placement not in ENV_PLACEMENTS:
            raise ValueError(f"env_placement must be one of {ENV_PLACEMENTS}")
        if self.fock_cutoff is not None and self.fock_cutoff < 2:
            raise ValueError("fock_cutoff must be >= 2")
        if self.strict_gamma:
            for g in (self.gate_a, self.gate_b):
                if g.gamma_phi > 0 and g.mode_amp > 0:
                    want = solve_gamma_pi(g.gamma_phi, g.mode_amp)
                    if not math.isclose(g.gamma_pi, want, rel_tol=1e-12):
                        raise ValueError(
                            f"gate {g.which_qubit} violates the pi/4 phase constraint "
                            f"(gamma_pi={g.gamma_pi}, expected {want})")

    @classmethod
    def from_coupling(cls, gamma_phi: float, mode_amp: float = 1.0, **kw) -> "ChannelParams":
        """Symmetric channel with both gates at ``gamma_phi`` and the pi/4 constraint."""
        if gamma_phi > 0:
            ga = GateParams.constrained(gamma_phi, mode_amp, "A")
            gb = GateParams.constrained(gamma_phi, mode_amp, "B")
        else:
            ga = GateParams(0.0, 0.0, mode_amp, "A")
            gb = GateParams(0.0, 0.0, mode_amp, "B")
        return cls(ga, gb, mode_amp=mode_amp, **kw)

    @property
    def gamma_phi(self) -> float:
        return self.gate_a.gamma_phi

    def with_gamma_phi(self, gamma_phi: float) -> "ChannelParams":
        """Copy with both gates moved to ``gamma_phi`` (constraint re-solved if strict)."""
        def regate(g: GateParams) -> GateParams:
            if self.strict_gamma and gamma_phi > 0 and g.mode_amp > 0:
                return GateParams.constrained(gamma_phi, g.mode_amp, g.which_qubit)
            return replace(g, gamma_phi=gamma_phi)
        return replace(self, gate_a=regate(self.gate_a), gate_b=regate(self.gate_b))


@dataclass(frozen=True)
class NoiseDistribution:
    """Zero-mean Gaussian phase density."""

    variance: float

    def __post_init__(self):
        if not (self.variance >= 0 and math.isfinite(self.variance)):
            raise ValueError("variance must be finite and non-negative")

    @property
    def std(self) -> float:
        return math.sqrt(self.variance)

    def pdf(self, phi):
        v = self.variance
        return np.exp(-0.5 * np.square(phi) / v) / math.sqrt(2.0 * math.pi * v)

    def characteristic(self, k):
        """E[exp(-i k phi)]."""
        return np.exp(-0.5 * self.variance * np.square(k))


def bell_state() -> DensityMatrix:
    """Maximally entangled R-A pair (|00> + |11>)/sqrt(2)."""
    psi = np.array([1, 0, 0, 1], dtype=complex) / math.sqrt(2.0)
    return DensityMatrix.from_vector(psi, (2, 2))


def _check_input(rho: DensityMatrix) -> DensityMatrix:
    if not isinstance(rho, DensityMatrix):
        rho = DensityMatrix(np.asarray(rho), (2, 2))
    if rho.dims != (2, 2):
        raise DimensionError(f"channel input must be a two-qubit R-A state, got dims {rho.dims}")
    return rho


# ---------------------------------------------------------------------------
# exact route


@dataclass(frozen=True)
class _JointBranches:
    qubit_ops: np.ndarray    # (16, 8, 8) on R (x) A (x) B
    amps: np.ndarray         # (16, 4) displacement amplitudes in application order
    n_first: int             # leading columns belonging to the gate that acts first
    sender_phi_col: int      # column of the sender's phi displacement
    sender_z: np.ndarray     # (16,) encoding branch sign z of the sender


def _joint_branches(p: ChannelParams) -> _JointBranches:
    enc = gate_branches(p.gate_a)
    dec = gate_branches(p.gate_b, decode=True)
    ops, amps, zs = [], [], []
    i2 = np.eye(2, dtype=complex)
    for ea in enc:
        for db in dec:
            ops.append(np.kron(i2, np.kron(ea.qubit_op, db.qubit_op)))
            a_terms = [t.amplitude for t in ea.displacements]
            b_terms = [t.amplitude for t in db.displacements]
            amps.append(a_terms + b_terms if p.gate_order == "a-first" else b_terms + a_terms)
            zs.append(ea.z)
    col = 0 if p.gate_order == "a-first" else 2
    return _JointBranches(np.array(ops), np.array(amps), 2, col, np.array(zs, dtype=float))


def _branch_totals(jb: _JointBranches, rotation=0.0, phi_shift=None, rotated=None):
    """Net amplitude and phase of every joint branch.

    ``rotation`` turns the field by exp(-i a^dag a rotation) between the two
    gates; ``phi_shift`` (array of samples) kicks the sender's phi amplitude by
    ``i z shift``.  Both broadcast over leading sample axes.
    """
    amps = jb.amps
    if phi_shift is not None:
        shift = np.asarray(phi_shift, dtype=float)[..., None]
        amps = np.broadcast_to(amps, shift.shape[:-1] + amps.shape).copy()
        amps[..., jb.sender_phi_col] += 1j * jb.sender_z * shift
    rot = np.exp(-1j * np.asarray(rotation, dtype=float))
    if np.ndim(rot):
        amps = np.broadcast_to(amps, rot.shape + amps.shape).copy()
        rot = rot[..., None, None]
    else:
        amps = amps.copy()
    k = jb.n_first if rotated is None else rotated
    amps[..., :k] = amps[..., :k] * rot
    return fold_amplitudes(amps)


def _gram(amps: np.ndarray, phases: np.ndarray) -> np.ndarray:
    """M[..., k, k'] = <0| T_k'^dag T_k |0>."""
    ov = overlap_array(amps[..., None, :], amps[..., :, None])   # <b_k'|b_k>
    return np.exp(1j * (phases[..., :, None] - phases[..., None, :])) * ov


def _assemble(gram: np.ndarray, ops: np.ndarray, rho_rab: np.ndarray) -> np.ndarray:
    a = np.einsum("kij,jl->kil", ops, rho_rab)
    return np.einsum("...kq,kil,qml->...im", gram, a, ops.conj(), optimize=True)


def _initial_rab(rho_ra: DensityMatrix, b_state) -> np.ndarray:
    b = np.asarray(b_state, dtype=complex)
    return np.kron(rho_ra.matrix, np.outer(b, b.conj()))


def _trace_sender(full: np.ndarray) -> np.ndarray:
    """Trace A out of (..., 8, 8) operators on R (x) A (x) B."""
    lead = full.shape[:-2]
    t = full.reshape(lead + (2, 2, 2, 2, 2, 2))
    return np.einsum("...rabtac->...rbtc", t).reshape(lead + (4, 4))


def _finish_exact(full: np.ndarray) -> DensityMatrix:
    out = _trace_sender(full)
    out = 0.5 * (out + out.conj().T)
    tr = float(np.trace(out).real)
    if abs(tr - 1.0) > 1e-10:
        raise ArithmeticError(f"exact channel lost trace: {tr}")
    return DensityMatrix(out / tr, (2, 2))


def _env_weights(gamma_e: float, n: int) -> tuple[np.ndarray, np.ndarray]:
    """Nodes/weights integrating 2 pi-periodic functions against N(0, gamma_e)."""
    angles = 2.0 * math.pi * np.arange(n) / n
    k = np.arange(1, n // 2 + 1)
    char = np.exp(-0.5 * gamma_e * k ** 2)
    w = (1.0 + 2.0 * np.cos(np.outer(angles, k)) @ char) / n
    return angles, w


def _env_gram(jb: _JointBranches, gamma_e: float, rotated: int, tol: float = 1e-13,
              max_nodes: int = 1 << 14) -> np.ndarray:
    n = 64
    prev = None
    while True:
        angles, w = _env_weights(gamma_e, n)
        gram = np.tensordot(w, _gram(*_branch_totals(jb, rotation=angles, rotated=rotated)), axes=1)
        if prev is not None and np.max(np.abs(gram - prev)) < tol:
            return gram
        if n >= max_nodes:
            raise QuadratureError(
                f"environment average not converged with {n} nodes "
                f"(last change {np.max(np.abs(gram - prev)):.2e})")
        prev, n = gram, 2 * n


def transfer_channel_exact(p: ChannelParams, rho_in: DensityMatrix | None = None) -> DensityMatrix:
    """Output state on (R, B) from the closed-form branch expansion."""
    rho_in = _check_input(bell_state() if rho_in is None else rho_in)
    jb = _joint_branches(p)
    rab = _initial_rab(rho_in, p.b_state)
    if p.env_gamma > 0:
        rotated = jb.n_first if p.env_placement == "between" else jb.amps.shape[1]
        gram = _env_gram(jb, p.env_gamma, rotated)
    else:
        gram = _gram(*_branch_totals(jb))
    return _finish_exact(_assemble(gram, jb.qubit_ops, rab))


def transfer_channel_with_env(p: ChannelParams, rho_in: DensityMatrix | None = None,
                              route: str = "exact") -> DensityMatrix:
    """Channel with environment dephasing of the field (strength ``p.env_gamma``)."""
    if route == "exact":
        return transfer_channel_exact(p, rho_in)
    if route == "fock":
        return transfer_channel_fock(p, rho_in)
    raise ValueError(f"unknown route {route!r}")


# ---------------------------------------------------------------------------
# Fock route


def amplitude_bound(p: ChannelParams, extra: float = 0.0) -> float:
    """Upper bound on any intermediate coherent amplitude of the field."""
    tot = 0.0
    for g in (p.gate_a, p.gate_b):
        tot += (math.sqrt(g.gamma_phi) + math.sqrt(g.gamma_pi)) * g.mode_amp
    return tot + extra


def choose_cutoff(p: ChannelParams, extra: float = 0.0) -> int:
    bound = amplitude_bound(p, extra)
    if p.fock_cutoff is not None:
        if not is_admissible(bound, p.fock_cutoff):
            n = 2
            while not is_admissible(bound, n):
                n *= 2
            raise TruncationError(
                f"Fock cutoff {p.fock_cutoff} cannot hold field amplitudes up to "
                f"{bound:.4g}; use at least {n}", suggested_cutoff=n)
        return p.fock_cutoff
    n = DEFAULT_CUTOFF
    while not is_admissible(bound, n):
        if n >= MAX_CUTOFF:
            m = n
            while not is_admissible(bound, m):
                m *= 2
            raise TruncationError(
                f"field amplitudes up to {bound:.4g} need a cutoff above {MAX_CUTOFF}",
                suggested_cutoff=m)
        n *= 2
    return n


def env_dephase(rho_fock: DensityMatrix | np.ndarray, gamma_e: float):
    """Multiply Fock entry (n, m) by exp(-gamma_e (n-m)^2 / 2)."""
    if gamma_e < 0:
        raise ValueError("gamma_e must be non-negative")
    m = rho_fock.matrix if isinstance(rho_fock, DensityMatrix) else np.asarray(rho_fock)
    n = m.shape[0]
    k = np.arange(n)
    out = m * np.exp(-0.5 * gamma_e * (k[:, None] - k[None, :]) ** 2)
    if isinstance(rho_fock, DensityMatrix):
        return DensityMatrix(out, rho_fock.dims)
    return out


def _pure_components(rho: DensityMatrix):
    w, v = np.linalg.eigh(0.5 * (rho.matrix + rho.matrix.conj().T))
    return [(float(wi), v[:, i]) for i, wi in enumerate(w) if wi > 1e-14]


def _apply_gate_vec(psi: np.ndarray, u4: np.ndarray, qubit_axis: int) -> np.ndarray:
    """Apply a (2, n, 2, n) qubit-field gate to psi of shape (2, 2, n, 2)."""
    if qubit_axis == 1:
        return np.einsum("afAF,rAFb->rafb", u4, psi)
    return np.einsum("bfBF,raFB->rafb", u4, psi)


def _apply_gate_rho(rho: np.ndarray, u4: np.ndarray, qubit_axis: int) -> np.ndarray:
    """U rho U^dag for rho of shape (2, 2, n, 2, 2, 2, n, 2)."""
    if qubit_axis == 1:
        rho = np.einsum("afAF,rAFbstuv->rafbstuv", u4, rho)
        return np.einsum("rafbsAFv,tuAF->rafbstuv", rho, u4.conj())
    rho = np.einsum("bfBF,raFBstuv->rafbstuv", u4, rho)
    return np.einsum("rafbstFB,vuBF->rafbstuv", rho, u4.conj())


def _gate_sequence(p: ChannelParams, n: int):
    ua = gate_matrix(p.gate_a, n).reshape(2, n, 2, n)
    ub = gate_matrix(p.gate_b, n, decode=True).reshape(2, n, 2, n)
    steps = [(ua, 1), (ub, 3)]
    if p.gate_order == "b-first":
        steps.reverse()
    return steps


def _renormalize(out: np.ndarray) -> DensityMatrix:
    out = 0.5 * (out + out.conj().T)
    tr = float(np.trace(out).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise TruncationError(f"Fock route leaked {1 - tr:.3e} of the trace")
    return DensityMatrix(out / tr, (2, 2))


def _rb_from_vec(psi: np.ndarray) -> np.ndarray:
    return np.einsum("rafb,safc->rbsc", psi, psi.conj()).reshape(4, 4)


def transfer_channel_fock(p: ChannelParams, rho_in: DensityMatrix | None = None) -> DensityMatrix:
    """Brute-force oracle on R (x) A (x) Fock (x) B."""
    rho_in = _check_input(bell_state() if rho_in is None else rho_in)
    n = choose_cutoff(p)
    (g1, ax1), (g2, ax2) = _gate_sequence(p, n)
    b = np.asarray(p.b_state, dtype=complex)
    out = np.zeros((4, 4), dtype=complex)
    if p.env_gamma > 0:
        rho = np.zeros((2, 2, n, 2) * 2, dtype=complex)
        for w, v in _pure_components(rho_in):
            psi = np.einsum("ra,f,b->rafb", v.reshape(2, 2), _vacuum(n), b)
            rho += w * np.einsum("rafb,stuv->rafbstuv", psi, psi.conj())
        k = np.arange(n)
        fac = np.exp(-0.5 * p.env_gamma * (k[:, None] - k[None, :]) ** 2)
        fac = fac[None, None, :, None, None, None, :, None]
        rho = _apply_gate_rho(rho, g1, ax1)
        if p.env_placement == "between":
            rho = rho * fac
        rho = _apply_gate_rho(rho, g2, ax2)
        if p.env_placement == "before-trace":
            rho = rho * fac
        out = np.einsum("rafbsafc->rbsc", rho).reshape(4, 4)
    else:
        for w, v in _pure_components(rho_in):
            psi = np.einsum("ra,f,b->rafb", v.reshape(2, 2), _vacuum(n), b)
            psi = _apply_gate_vec(_apply_gate_vec(psi, g1, ax1), g2, ax2)
            out += w * _rb_from_vec(psi)
    return _renormalize(out)


def _vacuum(n: int) -> np.ndarray:
    v = np.zeros(n, dtype=complex)
    v[0] = 1.0
    return v


# ---------------------------------------------------------------------------
# cross-talk noise


def crosstalk_overlap(gamma_phi: float, b: float, mode_amp: float = 1.0) -> float:
    """Noise-averaged |<+|->| of the encoded field branches."""
    if min(gamma_phi, b, mode_amp) < 0:
        raise ValueError("arguments must be non-negative")
    if b == 0:
        return dephased_overlap(gamma_phi, mode_amp)
    d = 1.0 + 4.0 * mode_amp ** 2 * b ** 2 * gamma_phi
    return math.exp(-2.0 * gamma_phi * mode_amp ** 2 / d) / math.sqrt(d)


def crosstalk_overlap_quadrature(gamma_phi: float, b: float, mode_amp: float = 1.0,
                                 dist: NoiseDistribution | None = None,
                                 nodes: int | None = None, same_branch: bool = False,
                                 abs_tol: float = 1e-10) -> float:
    """Integrate exp(-2 (phi + sqrt(g))^2 |a|^2) against the cross-talk density.

    ``nodes=None`` uses adaptive quadrature (scipy ``quad``); an integer uses
    plain Gauss-Hermite with that many nodes.
    """
    if dist is None:
        dist = NoiseDistribution(b ** 2 * gamma_phi)
    if same_branch:
        return 1.0
    root = math.sqrt(gamma_phi)
    a2 = mode_amp ** 2

    def f(phi):
        return np.exp(-2.0 * np.square(phi + root) * a2)

    if dist.variance == 0:
        return float(f(0.0))
    s = dist.std
    if nodes is not None:
        x, w = hermegauss(nodes)
        return float(np.sum(w * f(s * x)) / math.sqrt(2.0 * math.pi))

    lo, hi = -12.0 * s, 12.0 * s
    peak = min(max(-root, lo), hi)
    pts = sorted({lo, peak, hi})
    total, err = 0.0, 0.0
    for a, c in zip(pts[:-1], pts[1:]):
        if c <= a:
            continue
        val, e = integrate.quad(lambda t: float(dist.pdf(t) * f(t)), a, c,
                                epsabs=abs_tol * 1e-3, epsrel=1e-12, limit=400)
        total += val
        err += e
    if err > abs_tol:
        raise QuadratureError(
            f"quadrature did not reach abs tol {abs_tol:g}: error estimate {err:.2e} "
            f"(gamma_phi={gamma_phi}, b={b}, mode_amp={mode_amp})")
    return total


def smearing_constant(sigma: float) -> float:
    """Gaussian smearing integral sqrt((2 pi)^3) * sigma."""
    return math.sqrt((2.0 * math.pi) ** 3) * sigma


def effective_coupling(lambda_phi: float, b: float, mode_amp: float, sigma: float) -> float:
    """Noiseless coupling with the same branch overlap as the cross-talk channel."""
    if lambda_phi <= 0 or sigma <= 0:
        raise ValueError("lambda_phi and sigma must be positive")
    if b < 0 or mode_amp < 0:
        raise ValueError("b and mode_amp must be non-negative")
    k = smearing_constant(sigma)
    if b == 0 or mode_amp == 0:
        return lambda_phi
    c = 4.0 * mode_amp ** 2 * b ** 2 * lambda_phi ** 2 / k
    sq = lambda_phi ** 2 / (1.0 + c) + k / (4.0 * mode_amp ** 2) * math.log1p(c)
    return math.sqrt(sq)


def coupling_to_gamma(lam: float, sigma: float) -> float:
    return lam ** 2 / smearing_constant(sigma)


def gamma_to_coupling(gamma: float, sigma: float) -> float:
    return math.sqrt(gamma * smearing_constant(sigma))


def effective_gamma(gamma_phi: float, b: float, mode_amp: float = 1.0) -> float:
    """Dephasing constant of the effective coupling (the smearing width cancels)."""
    if b == 0 or mode_amp == 0 or gamma_phi == 0:
        return gamma_phi
    c = 4.0 * mode_amp ** 2 * b ** 2 * gamma_phi
    return gamma_phi / (1.0 + c) + math.log1p(c) / (4.0 * mode_amp ** 2)


def transfer_channel_noisy(p: ChannelParams, rho_in: DensityMatrix | None = None) -> DensityMatrix:
    """Baseline channel re-evaluated at the cross-talk effective coupling."""
    if p.ct_b == 0:
        return transfer_channel_exact(p, rho_in)
    g_eff = effective_gamma(p.gamma_phi, p.ct_b, p.mode_amp)
    return transfer_channel_exact(replace(p.with_gamma_phi(g_eff), ct_b=0.0), rho_in)


@dataclass(frozen=True)
class MCResult:
    mean: DensityMatrix
    stderr_real: np.ndarray
    stderr_imag: np.ndarray
    samples: int
    seed: int


def _rng(seed: int) -> np.random.Generator:
    # counter-based stream: sample i depends only on (seed, i)
    return np.random.Generator(np.random.Philox(key=seed))


def crosstalk_samples(p: ChannelParams, samples: int, seed: int) -> np.ndarray:
    var = p.ct_b ** 2 * p.gamma_phi
    return _rng(seed).normal(0.0, math.sqrt(var), size=samples) if var > 0 else np.zeros(samples)


def crosstalk_channel_mc(p: ChannelParams, rho_in: DensityMatrix | None = None,
                         samples: int = 10_000, seed: int = 0,
                         route: str = "exact", chunk: int = 2048) -> MCResult:
    """Average the channel over Gaussian cross-talk kicks of the encoded branches.

    Each sample phi moves the sender's phi-quadrature branch amplitude from
    ``i z sqrt(g)|a|`` to ``i z (sqrt(g) + phi)|a|`` with phi ~ N(0, b^2 g).
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    rho_in = _check_input(bell_state() if rho_in is None else rho_in)
    phis = crosstalk_samples(p, samples, seed)
    if route == "exact":
        outs = _mc_exact(p, rho_in, phis, chunk)
    elif route == "fock":
        outs = _mc_fock(p, rho_in, phis)
    else:
        raise ValueError(f"unknown route {route!r}")
    mean = outs.mean(axis=0)
    if samples > 1:
        se_r = outs.real.std(axis=0, ddof=1) / math.sqrt(samples)
        se_i = outs.imag.std(axis=0, ddof=1) / math.sqrt(samples)
    else:
        se_r = se_i = np.zeros((4, 4))
    return MCResult(_renormalize(mean), se_r, se_i, samples, seed)


def _mc_exact(p: ChannelParams, rho_in: DensityMatrix, phis: np.ndarray, chunk: int) -> np.ndarray:
    jb = _joint_branches(p)
    rab = _initial_rab(rho_in, p.b_state)
    kicks = phis * p.gate_a.mode_amp
    out = []
    for start in range(0, len(phis), chunk):
        grams = _gram(*_branch_totals(jb, phi_shift=kicks[start:start + chunk]))
        out.append(_trace_sender(_assemble(grams, jb.qubit_ops, rab)))
    return np.concatenate(out)


def _mc_fock(p: ChannelParams, rho_in: DensityMatrix, phis: np.ndarray) -> np.ndarray:
    extra = float(np.max(np.abs(phis))) * p.gate_a.mode_amp if len(phis) else 0.0
    n = choose_cutoff(p, extra)
    ga = p.gate_a
    disp_im = quadrature_unitary_factory(n, 1j)
    dpi = {x: displacement_matrix(pi_displacement(ga, x).amplitude, n, check=False) for x in (1, -1)}
    ub = gate_matrix(p.gate_b, n, decode=True).reshape(2, n, 2, n)
    b = np.asarray(p.b_state, dtype=complex)
    comps = _pure_components(rho_in)
    root = math.sqrt(ga.gamma_phi) * ga.mode_amp
    outs = np.empty((len(phis), 4, 4), dtype=complex)
    for s, phi in enumerate(phis):
        t = root + phi * ga.mode_amp
        ua = np.zeros((2 * n, 2 * n), dtype=complex)
        for z in (1, -1):
            dz = disp_im(z * t)
            for x in (1, -1):
                ua += np.kron(projector(SIGMA_X, x) @ projector(SIGMA_Z, z), dpi[x] @ dz)
        ua = ua.reshape(2, n, 2, n)
        steps = [(ua, 1), (ub, 3)]
        if p.gate_order == "b-first":
            steps.reverse()
        acc = np.zeros((4, 4), dtype=complex)
        for w, v in comps:
            psi = np.einsum("ra,f,b->rafb", v.reshape(2, 2), _vacuum(n), b)
            for u4, ax in steps:
                psi = _apply_gate_vec(psi, u4, ax)
            acc += w * _rb_from_vec(psi)
        outs[s] = acc
    return outs
