import math

import numpy as np
import pytest

from udw_dephasing.udw_gates import (
    SIGMA_X,
    SIGMA_Z,
    TARGET_GAMMA,
    GammaPhase,
    GateParams,
    controlled_phi_branches,
    gamma_phase,
    gamma_phase_raw,
    gate_branches,
    gate_matrix,
    max_field_amplitude,
    projector,
    solve_gamma_pi,
)


def test_constraint_solution_gives_pi_over_4():
    for g, a in [(1.0, 1.0), (0.3, 2.0), (12.0, 0.5)]:
        p = GateParams.constrained(g, a)
        assert gamma_phase(p).value == pytest.approx(TARGET_GAMMA, abs=1e-12)
        assert p.gamma_pi == pytest.approx(solve_gamma_pi(g, a))


def test_solve_rejects_zero():
    with pytest.raises(ValueError):
        solve_gamma_pi(0.0, 1.0)


def test_gamma_phase_wraps():
    assert GammaPhase(2 * math.pi + 0.5).value == pytest.approx(0.5)
    assert GammaPhase(-0.5).value == pytest.approx(2 * math.pi - 0.5)
    p = GateParams(4.0, 4.0, 2.0)
    assert gamma_phase_raw(p) == pytest.approx(2 * 4 * 4)


def test_invalid_params():
    with pytest.raises(ValueError):
        GateParams(-1.0, 0.0)
    with pytest.raises(ValueError):
        GateParams(1.0, 0.0, which_qubit="C")


def test_branch_amplitudes_and_orders():
    p = GateParams(1.0, 0.25, 2.0)
    enc = gate_branches(p)
    dec = gate_branches(p, decode=True)
    assert len(enc) == len(dec) == 4
    for e, d in zip(enc, dec):
        assert e.displacements[0].amplitude == pytest.approx(1j * e.z * 2.0)
        assert e.displacements[1].amplitude == pytest.approx(-e.x * 0.5 * 2.0)
        assert d.displacements == e.displacements[::-1]
        assert np.allclose(e.qubit_op, projector(SIGMA_X, e.x) @ projector(SIGMA_Z, e.z))
        assert np.allclose(d.qubit_op, projector(SIGMA_Z, d.z) @ projector(SIGMA_X, d.x))
    assert max_field_amplitude(p) == pytest.approx(3.0)


def test_controlled_phi_is_two_branches():
    br = controlled_phi_branches(1.0)
    assert [b.z for b in br] == [1, -1]
    assert sum(b.qubit_op for b in br) == pytest.approx(np.eye(2))


@pytest.mark.parametrize("decode", [False, True])
def test_gate_matrix_is_unitary(decode):
    p = GateParams.constrained(1.0, 1.0)
    u = gate_matrix(p, 48, decode=decode)
    # truncation only touches the highest Fock levels
    n = 48
    block = (u.conj().T @ u).reshape(2, n, 2, n)[:, :30, :, :30].reshape(60, 60)
    assert np.allclose(block, np.eye(60), atol=1e-9)


def test_gate_matrix_direct_expansion():
    # oracle: the controlled unitary built directly from projector blocks
    from udw_dephasing.fock_linalg import displacement_matrix
    p = GateParams(0.5, 0.3, 1.0)
    n = 40
    want = np.zeros((2 * n, 2 * n), dtype=complex)
    for z in (1, -1):
        for x in (1, -1):
            dphi = displacement_matrix(1j * z * math.sqrt(0.5), n)
            dpi = displacement_matrix(-x * math.sqrt(0.3), n)
            want += np.kron(projector(SIGMA_X, x) @ projector(SIGMA_Z, z), dpi @ dphi)
    assert np.allclose(gate_matrix(p, n), want, atol=1e-12)
