"""Spectral lab for 2x2 Dirac systems with non-regular boundary conditions."""

__version__ = "0.1.0"

from .determinant import Sector, bound_profile, delta, delta_many, delta0
from .errors import (BudgetExceeded, ConfigError, DiracSpecError, ModelError,
                     NumericalError)
from .fundamental import constant_E, endpoint_values, propagate
from .model import (BcTag, BoundaryMatrix, EndpointLaw, PotentialSpec, SpectralProblem,
                    check_theorem1, classify_bc, compute_minors)
from .series import build_tables
from .spectrum import (Box, completeness_experiment, count_zeros, locate_eigenvalues,
                       root_chain)

__all__ = [
    "BcTag", "BoundaryMatrix", "Box", "BudgetExceeded", "ConfigError", "DiracSpecError",
    "EndpointLaw", "ModelError", "NumericalError", "PotentialSpec", "Sector", "SpectralProblem",
    "bound_profile", "build_tables", "check_theorem1", "classify_bc", "completeness_experiment",
    "compute_minors", "constant_E", "count_zeros", "delta", "delta0", "delta_many",
    "endpoint_values", "locate_eigenvalues", "propagate", "root_chain",
]
