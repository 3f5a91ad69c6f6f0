import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.special import factorial

from udw_dephasing.fock_linalg import (
    DensityMatrix,
    DimensionError,
    TruncationError,
    captured_norm,
    check_admissible,
    coherent_state_vector,
    displacement_matrix,
    is_admissible,
    kron_all,
    ladder,
    partial_trace,
    quadrature_unitary_factory,
    required_cutoff,
    vn_entropy,
)


def rand_state(rng, d):
    g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    m = g @ g.conj().T
    return m / np.trace(m)


def test_entropy_examples():
    assert vn_entropy(DensityMatrix(np.eye(2) / 2, (2,))) == pytest.approx(1.0, abs=1e-12)
    assert vn_entropy(DensityMatrix(np.eye(4) / 4, (2, 2))) == pytest.approx(2.0, abs=1e-12)
    pure = DensityMatrix.from_vector([1, 1j], (2,))
    assert vn_entropy(pure) == pytest.approx(0.0, abs=1e-12)
    p = np.array([0.25, 0.75])
    want = float(-(p * np.log2(p)).sum())
    assert vn_entropy(DensityMatrix(np.diag(p), (2,))) == pytest.approx(want, abs=1e-12)


def test_partial_trace_product_state():
    rng = np.random.default_rng(1)
    a, b = rand_state(rng, 2), rand_state(rng, 3)
    rho = DensityMatrix(np.kron(a, b), (2, 3))
    assert np.allclose(partial_trace(rho, [0]).matrix, a, atol=1e-12)
    assert np.allclose(partial_trace(rho, [1]).matrix, b, atol=1e-12)


def test_partial_trace_bell_is_mixed():
    psi = np.array([1, 0, 0, 1]) / math.sqrt(2)
    rho = DensityMatrix.from_vector(psi, (2, 2))
    assert np.allclose(partial_trace(rho, [0]).matrix, np.eye(2) / 2)


def test_partial_trace_keeps_sorted_order():
    rng = np.random.default_rng(2)
    a, b, c = rand_state(rng, 2), rand_state(rng, 2), rand_state(rng, 3)
    rho = DensityMatrix(kron_all(a, b, c), (2, 2, 3))
    assert np.allclose(partial_trace(rho, [2, 0]).matrix, np.kron(a, c), atol=1e-12)


def test_density_matrix_validation():
    with pytest.raises(DimensionError):
        DensityMatrix(np.eye(4) / 4, (2, 3))
    bad = DensityMatrix(np.diag([1.5, -0.5]), (2,))
    assert not bad.is_valid()
    with pytest.raises(ValueError):
        bad.validate()
    assert DensityMatrix(np.eye(2) / 2, (2,)).is_valid()


def test_ladder_matches_sqrt_n():
    a = ladder(5)
    assert np.allclose(np.diag(a, 1), np.sqrt(np.arange(1, 5)))
    with pytest.raises(ValueError):
        ladder(1)


def test_coherent_vector_matches_poisson_amplitudes():
    alpha = 0.7 - 0.4j
    n = 40
    k = np.arange(n)
    want = np.exp(-abs(alpha) ** 2 / 2) * alpha ** k / np.sqrt(factorial(k))
    assert np.allclose(coherent_state_vector(alpha, n), want, atol=1e-12)


def test_displacement_on_vacuum_is_coherent_state():
    alpha = 1.3 + 0.5j
    n = 64
    vac = np.zeros(n)
    vac[0] = 1
    assert np.allclose(displacement_matrix(alpha, n) @ vac, coherent_state_vector(alpha, n),
                       atol=1e-9)


def test_displacement_unitary_and_inverse():
    d = displacement_matrix(0.8j, 64)
    assert np.allclose(d @ d.conj().T, np.eye(64), atol=1e-12)
    dm = displacement_matrix(-0.8j, 64)
    assert np.allclose((d @ dm)[:20, :20], np.eye(20), atol=1e-9)


def test_quadrature_factory_matches_expm():
    make = quadrature_unitary_factory(48, 1j)
    assert np.allclose(make(0.6), displacement_matrix(0.6j, 48, check=False), atol=1e-10)


def test_truncation_gate():
    assert captured_norm(0.0, 2) == pytest.approx(1.0)
    assert is_admissible(1.0, 64)
    assert not is_admissible(10.0, 4)
    with pytest.raises(TruncationError) as exc:
        check_admissible(10.0, 4)
    assert exc.value.suggested_cutoff is not None
    assert is_admissible(10.0, exc.value.suggested_cutoff)
    n = required_cutoff(10.0)
    assert is_admissible(10.0, n)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 10_000))
def test_entropy_bounds_and_subadditivity(seed):
    rng = np.random.default_rng(seed)
    rho = DensityMatrix(rand_state(rng, 4), (2, 2))
    s = vn_entropy(rho)
    sa = vn_entropy(partial_trace(rho, [0]))
    sb = vn_entropy(partial_trace(rho, [1]))
    assert -1e-12 <= s <= 2 + 1e-12
    assert s <= sa + sb + 1e-9
    assert abs(sa - sb) <= s + 1e-9
