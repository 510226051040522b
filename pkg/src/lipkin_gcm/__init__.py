"""Generator Coordinate Method for the Lipkin model from two-qubit kernels."""

from .kernels import (
    AngleGrid,
    ManyBodyKernels,
    OneBodyKernels,
    analytic_one_body,
    assemble_many_body,
    estimate_one_body,
    make_grid,
    parity_transform,
    read_kernels,
    write_kernels,
)
from .mitigation import ScaleCalibration, ZneSeries, apply_scaling, calibrate_scaling, zne_extrapolate
from .model import ExactBasis, LipkinParams, build_exact_hamiltonian, exact_spectrum, spectral_symmetry_check
from .qsim import (
    EstimatorConfig,
    HadamardTest,
    NoiseParams,
    Part,
    Pauli,
    ShotStats,
    fold_circuit,
    hadamard_test_circuit,
    run_exact,
    run_noisy,
    run_shots,
    ry_state,
)
from .solver import DiagConfig, GcmSolution, SpectrumReport, VqdConfig, f_k_metric, gcm_diag, gcm_vqd, spectrum_report

__version__ = "0.1.0"
