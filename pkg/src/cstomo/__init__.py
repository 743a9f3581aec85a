"""Compressive-sensing reconstruction of low-rank, sparse density matrices
from a small number of random projective measurements, with measurement
simulation, shot-noise correction, and fidelity benchmarking."""

from .correction import (
    CorrectionEstimate,
    NoiseCorrectionConfig,
    correct_probabilities,
    default_subset_count,
    estimate_delta_rho,
    partition,
    reconstruct_corrected,
)
from .errors import (
    DegenerateIterateError,
    DegenerateSystemError,
    InvariantViolation,
    SchemaError,
)
from .experiments import SweepRow, SweepSpec, run_sweep, run_sweep_cell, summarize_sweep
from .linalg import (
    eig_hermitian,
    frob_norm,
    hermitian_part,
    hermiticity_error,
    hs_inner,
    mat,
    vec,
)
from .metrics import MetricsSummary, effective_rank, fidelity_pure, purity, residual, summarize
from .simulate import (
    MeasurementSet,
    ModeVector,
    Projector,
    TwoPhotonState,
    counts_to_probs,
    ideal_probability,
    joint_state_vector,
    make_downconversion_state,
    make_max_entangled,
    random_mode,
    random_projector,
    simulate_counts,
    simulate_measurements,
    state_to_density,
)
from .solver import (
    CorrectionDiagnostics,
    OrthoSystem,
    ReconstructionConfig,
    ReconstructionReport,
    clip_to_psd,
    enforce_structure,
    kaczmarz_sweep,
    measurement_rows,
    normalize_trace,
    orthogonalize,
    project_hyperplane,
    reconstruct,
    threshold_eigs,
    threshold_elements,
    vectorize_projector,
)

__version__ = "0.1.0"
