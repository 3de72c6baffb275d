"""
Updated on 2026-10
Created on 2026-09

@author: NewtCode Anna Burova

NewtEKI - Ensemble Kalman inversion with Tikhonov regularization by NewtCode.

Modules:
    console: Error reporting and validation
    utility: Config parsing helpers and seeded random streams
    files: Text, key=value and CSV files, console capture
    field: Spectral Gaussian random fields on the unit square
    problem: Forward models, noise and inverse problems
    kalman: Ensembles and the discrete Kalman updates
    flow: Continuous-time EKI / TEKI flows and run records
    models: Eikonal (fast marching) and Darcy (finite volume) solvers
    theory: Numerical checks of the convergence theory
    experiment: Experiment configs, arms and outputs
    cli: The `teki` command
"""

# === Imports from modules ===

# Console
from .console import (
    error_msg,
    validate_type,
    validate_positive,
)

# Utility
from .utility import (
    check_dict_keys,
    make_rng,
)

# Files
from .files import (
    read_keyvalue_from_file,
    save_keyvalue_to_file,
    read_csv_from_file,
    save_csv_to_file,
    setup_logging,
    cleanup_logging,
)

# Field
from .field import (
    CovarianceSpec,
    SpectralField,
    GridField,
    eigenvalue,
    sample_prior,
    sample_cm,
    synthesize,
    analyze,
)

# Problem
from .problem import (
    ForwardModel,
    LinearModel,
    NoiseSpec,
    InverseProblem,
    augment,
    misfit,
    noise_level,
)

# Kalman
from .kalman import (
    Ensemble,
    eki_step,
    teki_step,
)

# Flow
from .flow import (
    RunConfig,
    RunRecord,
    interaction,
    rhs,
    euler_step,
    run,
)

# Models
from .models import (
    EikonalModel,
    DarcyModel,
    fmm_solve,
    darcy_solve,
)

# Theory
from .theory import (
    span_basis,
    collapse_bound_check,
    kkt_solutions,
    convergence_bound_check,
    riccati_check,
)

# Experiment
from .experiment import (
    ExperimentConfig,
    load_config,
    run_experiment,
    run_matrix,
    check_trajectory,
    forward_once,
)

# === Metadata ===

__all__ = [
    # Console ----------
    "error_msg",
    "validate_type",
    "validate_positive",
    # Utility ----------
    "check_dict_keys",
    "make_rng",
    # Files ----------
    "read_keyvalue_from_file",
    "save_keyvalue_to_file",
    "read_csv_from_file",
    "save_csv_to_file",
    "setup_logging",
    "cleanup_logging",
    # Field ----------
    "CovarianceSpec",
    "SpectralField",
    "GridField",
    "eigenvalue",
    "sample_prior",
    "sample_cm",
    "synthesize",
    "analyze",
    # Problem ----------
    "ForwardModel",
    "LinearModel",
    "NoiseSpec",
    "InverseProblem",
    "augment",
    "misfit",
    "noise_level",
    # Kalman ----------
    "Ensemble",
    "eki_step",
    "teki_step",
    # Flow ----------
    "RunConfig",
    "RunRecord",
    "interaction",
    "rhs",
    "euler_step",
    "run",
    # Models ----------
    "EikonalModel",
    "DarcyModel",
    "fmm_solve",
    "darcy_solve",
    # Theory ----------
    "span_basis",
    "collapse_bound_check",
    "kkt_solutions",
    "convergence_bound_check",
    "riccati_check",
    # Experiment ----------
    "ExperimentConfig",
    "load_config",
    "run_experiment",
    "run_matrix",
    "check_trajectory",
    "forward_once",
]

__version__ = "0.1.0"
__author__ = "NewtCode Anna Burova"
__description__ = (
    "NewtEKI - Ensemble Kalman inversion with Tikhonov regularization, "
    "eikonal and Darcy forward models, and convergence checks."
)
__license__ = "MIT"
__url__ = "https://github.com/AnnaBurova/dev-newteki"
