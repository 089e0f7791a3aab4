"""Finite-truncation laboratory for growth and stability of evolution
equations with compact nonlinear perturbations."""
from .errors import (DomainError, InvalidArgument, InvariantViolation, IslabError, NumericFailure,
                     PreconditionError, SingularResolvent, StepInstability, UnsupportedModel)
from .operators import (OperatorModel, SemigroupModel, StepDamping, make_dense, make_diagonal,
                        make_left_shift, make_scaled_identity_block, make_wave_blocks,
                        make_weighted_shift, propagate)

__version__ = "0.1.0"

__all__ = [
    "DomainError", "InvalidArgument", "InvariantViolation", "IslabError", "NumericFailure",
    "PreconditionError", "SingularResolvent", "StepInstability", "UnsupportedModel",
    "OperatorModel", "SemigroupModel", "StepDamping", "make_dense", "make_diagonal",
    "make_left_shift", "make_scaled_identity_block", "make_wave_blocks", "make_weighted_shift",
    "propagate",
]
