import math

import numpy as np
import pytest

from udw_dephasing.channels import ChannelParams
from udw_dephasing.coherent_algebra import dephased_overlap
from udw_dephasing.fock_linalg import DensityMatrix, vn_entropy, partial_trace
from udw_dephasing.info_sweeps import (
    DEFAULT_B_VALUES,
    SweepGrid,
    argmax_on_grid,
    coherent_information,
    default_coupling_grid,
    overlap_curves,
    run_sweep,
)


def test_coherent_information_examples():
    bell = DensityMatrix.from_vector(np.array([1, 0, 0, 1]) / math.sqrt(2), (2, 2))
    assert coherent_information(bell) == pytest.approx(1.0, abs=1e-12)
    replaced = DensityMatrix(np.kron(np.eye(2) / 2, np.diag([1.0, 0.0])), (2, 2))
    assert coherent_information(replaced) == pytest.approx(-1.0, abs=1e-12)
    assert coherent_information(np.eye(4) / 4) == pytest.approx(-1.0, abs=1e-12)


def test_coherent_information_bounded_by_output_entropy():
    rng = np.random.default_rng(5)
    for _ in range(20):
        g = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
        rho = DensityMatrix(g @ g.conj().T / np.trace(g @ g.conj().T), (2, 2))
        ic = coherent_information(rho)
        assert ic <= vn_entropy(partial_trace(rho, [1])) + 1e-12
        assert -1 - 1e-12 <= ic <= 1 + 1e-12


def test_default_grid():
    g = default_coupling_grid(2.0)
    assert len(g) == 40
    assert g[0] * 4 == pytest.approx(1e-3) and g[-1] * 4 == pytest.approx(12.0)


def test_grid_validation():
    with pytest.raises(ValueError):
        SweepGrid(())
    with pytest.raises(ValueError):
        SweepGrid((1.0, -1.0))
    with pytest.raises(ValueError):
        SweepGrid((1.0,), variant="other")
    with pytest.raises(ValueError):
        SweepGrid((1.0,), sigma=0.0)


def test_sweep_rows_sorted_and_deterministic():
    grid = SweepGrid((4.0, 0.5, 1.0), (1.0, 0.0), variant="noisy")
    a = run_sweep(grid, ChannelParams.from_coupling(1.0))
    b = run_sweep(grid, ChannelParams.from_coupling(1.0))
    keys = [(r.b, r.gamma_phi) for r in a.rows]
    assert keys == sorted(keys) and len(keys) == 6
    assert [(r.overlap, r.coherent_info_bits) for r in a.rows] == \
           [(r.overlap, r.coherent_info_bits) for r in b.rows]
    assert not a.failed


def test_sweep_records_failures_and_continues():
    bad = run_sweep(SweepGrid((0.5, 1.0), (1.0,), variant="noisy-mc"),
                    ChannelParams.from_coupling(1.0), samples=0)
    assert len(bad.rows) == 2 and len(bad.failed) == 2
    assert all(math.isnan(r.coherent_info_bits) for r in bad.failed)
    assert "samples" in bad.failed[0].error


def test_sigma_axis_converts_couplings():
    sigma = 1.0 / math.sqrt((2 * math.pi) ** 3)   # K = 1: gamma = lambda^2
    grid = SweepGrid((0.5, 2.0), sigma=sigma)
    assert grid.gammas() == pytest.approx([0.25, 4.0])


def test_overlap_curves_values():
    res = overlap_curves(SweepGrid((1.0,), (0.0, 1.0, 10.0)))
    by_b = {r.b: r.overlap for r in res.rows}
    assert by_b[0.0] == dephased_overlap(1.0, 1.0)
    assert by_b[1.0] == pytest.approx(math.exp(-0.4) / math.sqrt(5))
    assert by_b[10.0] < by_b[0.0] < by_b[1.0]
    assert all(0 < r.overlap <= 1 for r in res.rows)


def test_overlap_curves_default_b_values_fast():
    import time
    t0 = time.perf_counter()
    res = overlap_curves(SweepGrid(default_coupling_grid(), DEFAULT_B_VALUES))
    assert time.perf_counter() - t0 < 1.0
    assert len(res.rows) == 40 * len(DEFAULT_B_VALUES)


def test_argmax_on_grid():
    assert argmax_on_grid([0.1, 0.9, 0.3], [1, 2, 3]) == 2.0
