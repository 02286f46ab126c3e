"""Simulation and low-rank spectral estimation for time-changed Lévy models."""

from .estimator import (
    DesignRow,
    EstimateReport,
    SolverConfig,
    SolverFailure,
    build_design,
    error_matrix_diagnostic,
    nearest_psd,
    nuclear_norm,
    numerical_rank,
    objective,
    prox_nuclear,
    solve,
)
from .frequencies import (
    FrequencyScheme,
    annulus_quadrature,
    isometry_constants,
    monte_carlo_cube,
    weighted_norm,
)
from .harness import (
    ExperimentConfig,
    LambdaRule,
    RunRecord,
    URule,
    config_from_dict,
    figures_export,
    intercept_study,
    laplace_study,
    model_from_dict,
    random_orthogonal,
    replicate_seed,
    rotated_sigma,
    run_experiment,
)
from .laplace import (
    DomainError,
    EmpiricalLaplaceInverse,
    InversionError,
    LaplaceFamily,
    empirical_laplace_inverse,
    evaluate_series,
    laplace_family,
    partial_bell,
)
from .models import (
    CompoundPoissonGaussian,
    Deterministic,
    Exponential,
    GammaSubordinator,
    IndependentNIG,
    IntegratedCIR,
    ModelSpec,
    SampleSet,
    SpecError,
    characteristic_exponent,
    clock_from_dict,
    jump_mass,
    jumps_from_dict,
    mean_clock_increment,
)
from .sim import sample_clock, sample_increments, stream, true_characteristic_function
from .spectral import (
    EmptySpectrumError,
    ExponentEstimate,
    default_guard,
    ecf,
    exponent_estimate,
    exponent_from_cf,
)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
