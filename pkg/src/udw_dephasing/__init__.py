"""UDW qubit-field-qubit channels as bosonic dephasing channels."""

__version__ = "0.1.0"

from .channels import (
    ChannelParams,
    MCResult,
    NoiseDistribution,
    bell_state,
    crosstalk_channel_mc,
    crosstalk_overlap,
    crosstalk_overlap_quadrature,
    effective_coupling,
    effective_gamma,
    env_dephase,
    transfer_channel_exact,
    transfer_channel_fock,
    transfer_channel_noisy,
    transfer_channel_with_env,
)
from .coherent_algebra import DisplacementTerm, compose, dephased_overlap, overlap
from .fock_linalg import DensityMatrix, TruncationError, partial_trace, vn_entropy
from .info_sweeps import SweepGrid, SweepResult, coherent_information, overlap_curves, run_sweep
from .udw_gates import GateParams, gamma_phase, solve_gamma_pi

__all__ = [
    "ChannelParams", "MCResult", "NoiseDistribution", "bell_state", "crosstalk_channel_mc",
    "crosstalk_overlap", "crosstalk_overlap_quadrature", "effective_coupling", "effective_gamma",
    "env_dephase", "transfer_channel_exact", "transfer_channel_fock", "transfer_channel_noisy",
    "transfer_channel_with_env", "DisplacementTerm", "compose", "dephased_overlap", "overlap",
    "DensityMatrix", "TruncationError", "partial_trace", "vn_entropy", "SweepGrid", "SweepResult",
    "coherent_information", "overlap_curves", "run_sweep", "GateParams", "gamma_phase",
    "solve_gamma_pi",
]
