"""Quantum-limited localization of two incoherent point sources.

Library layout:

* :mod:`twosource.psf` -- point-spread functions, scene parameters and the
  overlap integrals (closed forms plus a quadrature oracle).
* :mod:`twosource.state` -- the 4x4 density-matrix model, canonical
  logarithmic derivatives and the quantum Fisher information.
* :mod:`twosource.gauge` -- SLD gauge freedom, the commuting-pair solvers
  and the joint measurement eigenbasis.
* :mod:`twosource.measure` -- measurement catalogue (direct imaging, mode
  sorting, projective), classical Fisher information and regrets.
* :mod:`twosource.montecarlo` -- photon sampling, maximum likelihood and
  Cramer-Rao comparison.
* :mod:`twosource.cli` -- the ``twosource`` command-line tool.
"""

from .errors import (
    AlignmentOutOfRange,
    ConfigError,
    Degenerate,
    DegeneracyUnresolved,
    DomainError,
    FimExceedsQfi,
    GaugeInvalid,
    NoSolution,
    NotCommuting,
    QuadratureError,
    ShapeError,
    SingularBasis,
    TwoSourceError,
)
from .gauge import (
    BlockDecomposition,
    GaugePair,
    JointBasis,
    PauliVector,
    assemble_sld,
    closed_form_gauge,
    decompose_blocks,
    joint_basis_wavefunction,
    joint_eigenbasis,
    necessary_condition_residual,
    solve_gauge_least_norm,
)
from .measure import (
    DirectImaging,
    OutcomeDistribution,
    ProjectiveE,
    RegretReport,
    Spade,
    classical_fim,
    outcome_distribution,
    regret_report,
)
from .montecarlo import (
    SearchBox,
    TrialConfig,
    TrialResult,
    crb_comparison,
    mle_fit,
    run_trials,
    sample_outcomes,
)
from .psf import (
    GaussianPsf,
    OverlapSet,
    PsfSpec,
    QuadratureConfig,
    SceneParams,
    TabulatedPsf,
    compute_overlaps,
    compute_overlaps_quadrature,
    psf_derivative,
    psf_value,
)
from .state import (
    QfiReport,
    QuantumModel,
    basis_wavefunction,
    build_model,
    canonical_slds,
    qfi_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "AlignmentOutOfRange", "BlockDecomposition", "ConfigError", "Degenerate",
    "DegeneracyUnresolved", "DirectImaging", "DomainError", "FimExceedsQfi",
    "GaugeInvalid", "GaugePair", "GaussianPsf", "JointBasis", "NoSolution",
    "NotCommuting", "OutcomeDistribution", "OverlapSet", "PauliVector",
    "ProjectiveE", "PsfSpec", "QfiReport", "QuadratureConfig", "QuadratureError",
    "QuantumModel", "RegretReport", "SceneParams", "SearchBox", "ShapeError",
    "SingularBasis", "Spade", "TabulatedPsf", "TrialConfig", "TrialResult",
    "TwoSourceError", "assemble_sld", "basis_wavefunction", "build_model",
    "canonical_slds", "classical_fim", "closed_form_gauge", "compute_overlaps",
    "compute_overlaps_quadrature", "crb_comparison", "decompose_blocks",
    "joint_basis_wavefunction", "joint_eigenbasis", "mle_fit",
    "necessary_condition_residual", "outcome_distribution", "psf_derivative",
    "psf_value", "qfi_matrix", "regret_report", "run_trials", "sample_outcomes",
    "solve_gauge_least_norm",
]
