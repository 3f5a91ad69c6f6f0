import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from udw_dephasing.coherent_algebra import (
    DisplacementTerm,
    OverlapParams,
    compose,
    dephased_overlap,
    fold,
    fold_amplitudes,
    overlap,
    overlap_array,
    vacuum_expectation,
)
from udw_dephasing.fock_linalg import coherent_state_vector, displacement_matrix

N = 96
small = st.complex_numbers(max_magnitude=1.5, allow_nan=False, allow_infinity=False)


def test_compose_example():
    t = compose(DisplacementTerm(1.0), DisplacementTerm(1j))
    assert t.amplitude == 1 + 1j
    assert t.phase == pytest.approx(-1.0)


def test_inverse_cancels():
    t = DisplacementTerm(0.3 - 0.2j, 0.7)
    c = compose(t, t.inverse())
    assert abs(c.amplitude) == 0 and c.phase == pytest.approx(0.0)


def test_nonfinite_rejected():
    with pytest.raises(ValueError):
        DisplacementTerm(complex(math.inf, 0))


@settings(max_examples=40, deadline=None)
@given(small, small)
def test_compose_matches_fock_product(a, b):
    # oracle: dense matrices in a truncated Fock space
    t = compose(DisplacementTerm(a), DisplacementTerm(b))
    lhs = displacement_matrix(a, N) @ displacement_matrix(b, N)
    rhs = cmath.exp(1j * t.phase) * displacement_matrix(t.amplitude, N)
    assert np.allclose(lhs[:30, :30], rhs[:30, :30], atol=1e-8)


@settings(max_examples=40, deadline=None)
@given(st.lists(small, min_size=1, max_size=4))
def test_fold_matches_vacuum_matrix_element(amps):
    terms = [DisplacementTerm(a) for a in amps]
    op = np.eye(N, dtype=complex)
    for a in amps:
        op = displacement_matrix(a, N, check=False) @ op
    t = fold(terms)
    want = op[0, 0]
    got = cmath.exp(1j * t.phase) * math.exp(-0.5 * abs(t.amplitude) ** 2)
    assert abs(got - want) < 1e-8
    # vacuum_expectation takes operator order, i.e. the reverse list
    assert abs(vacuum_expectation(terms[::-1]) - want) < 1e-8


@settings(max_examples=40, deadline=None)
@given(small, small)
def test_overlap_matches_vectors(beta, alpha):
    v = np.vdot(coherent_state_vector(beta, N), coherent_state_vector(alpha, N))
    assert abs(overlap(beta, alpha) - v) < 1e-9
    assert abs(overlap_array([beta], [alpha])[0] - v) < 1e-9


def test_dephased_overlap():
    assert dephased_overlap(1.0, 1.0) == pytest.approx(math.exp(-2))
    assert dephased_overlap(OverlapParams(0.5, 2.0)) == pytest.approx(math.exp(-4))
    root = math.sqrt(1.0) * 1.0
    assert dephased_overlap(1.0) == pytest.approx(abs(overlap(1j * root, -1j * root)))
    with pytest.raises(ValueError):
        OverlapParams(-1.0)


def test_fold_amplitudes_vectorized():
    rng = np.random.default_rng(3)
    amps = rng.normal(size=(5, 3)) + 1j * rng.normal(size=(5, 3))
    net, ph = fold_amplitudes(amps)
    for i in range(5):
        t = fold([DisplacementTerm(a) for a in amps[i]])
        assert net[i] == pytest.approx(t.amplitude)
        assert ph[i] == pytest.approx(t.phase)
