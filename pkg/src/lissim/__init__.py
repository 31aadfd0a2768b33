"""Simulation toolkit for large coupled antenna surfaces.

Models a transmitting surface as a grid of mutually coupled elements,
builds the coupling (impedance) matrix and line-of-sight channel for
isotropic and planar element types, computes coupling-aware matched
filters with exact, truncated-spectrum, and extended-precision solves,
and reports SNR/directivity metrics plus reproducible CSV sweeps.
"""

from .channel import (
    FieldModel,
    channel_for,
    channel_isotropic,
    channel_planar,
    field_at,
    radiated_power_quadrature,
)
from .coupling import (
    ImpedanceMatrix,
    condition_number,
    impedance,
    quadratic_form,
    rank_truncated_inverse,
    solve,
    sym_eig,
    truncated_inverse,
    write_matrix_text,
)
from .errors import (
    AccuracyWarning,
    CapacityError,
    ConfigError,
    DegenerateInputError,
    DomainError,
    EmptySpectrumError,
    IllConditionedSolveError,
    InvalidArgumentError,
    InvalidGeometryError,
    LisSimError,
    NonRadiatingCurrentError,
    NumericalFailureError,
)
from .experiments import (
    ExperimentConfig,
    SweepResult,
    default_config,
    load_config,
    run_conditioning_sweep,
    run_experiment,
    run_singular_profile,
    run_spacing_sweep,
    run_truncation_sweep,
)
from .geometry import (
    SPEED_OF_LIGHT,
    ArrayGeometry,
    ElementKind,
    custom_geometry,
    departure_angle,
    distance,
    linear_array,
    planar_grid,
)
from .metrics import LinkBudget, d_nc, directivity, excitation_power, snr, to_dbi
from .precoding import ca_mf, ca_pmf, ca_pmf_rank, nca_mf, power_normalize
from .specfun import Precision, j1_over_x, j1_series_oracle, sinc_unnormalized

__version__ = "0.1.0"

__all__ = [
    "AccuracyWarning",
    "ArrayGeometry",
    "CapacityError",
    "ConfigError",
    "DegenerateInputError",
    "DomainError",
    "ElementKind",
    "EmptySpectrumError",
    "ExperimentConfig",
    "FieldModel",
    "IllConditionedSolveError",
    "ImpedanceMatrix",
    "InvalidArgumentError",
    "InvalidGeometryError",
    "LinkBudget",
    "LisSimError",
    "NonRadiatingCurrentError",
    "NumericalFailureError",
    "Precision",
    "SPEED_OF_LIGHT",
    "SweepResult",
    "ca_mf",
    "ca_pmf",
    "ca_pmf_rank",
    "channel_for",
    "channel_isotropic",
    "channel_planar",
    "condition_number",
    "custom_geometry",
    "d_nc",
    "default_config",
    "departure_angle",
    "directivity",
    "distance",
    "excitation_power",
    "field_at",
    "impedance",
    "j1_over_x",
    "j1_series_oracle",
    "linear_array",
    "load_config",
    "nca_mf",
    "planar_grid",
    "power_normalize",
    "quadratic_form",
    "radiated_power_quadrature",
    "rank_truncated_inverse",
    "run_conditioning_sweep",
    "run_experiment",
    "run_singular_profile",
    "run_spacing_sweep",
    "run_truncation_sweep",
    "sinc_unnormalized",
    "snr",
    "solve",
    "sym_eig",
    "to_dbi",
    "truncated_inverse",
    "write_matrix_text",
]
