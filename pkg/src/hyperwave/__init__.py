"""Forward, derivative and adjoint solvers for hyperelastic waves with
dictionary-based stored energies, plus Landweber recovery of the
dictionary coefficients."""

from .adjoint import apply_adjoint, apply_adjoint_continuous, apply_adjoint_discrete
from .energy import (AdmissibilityThresholds, EnergyDictionary, EnergyEntry, QuadraticForm,
                     SaturatingForm, SpatialWeight, check_admissible, check_dim_condition,
                     combine, kappa_mu, partition_weights, stability_constants)
from .errors import (BlowUp, CFLViolation, ConfigError, FieldFormatError, HyperwaveError,
                     SolverError)
from .forward import ProblemSetup, energy_budget, residual, solve_forward
from .grid import Grid, MaterialField, divergence, inner_product_L2, jacobian
from .inversion import InversionConfig, IterateTrace, add_noise, invert, landweber_step, misfit
from .sensitivity import continuity_bound_check, solve_frechet, v_norm

__version__ = "0.1.0"
