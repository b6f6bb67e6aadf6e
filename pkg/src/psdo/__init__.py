from src.psdo.decay import DecayProfile, decay_profile, worst_profile
from src.psdo.operator import (
    Gram,
    SpatialOperator,
    gram_self_adjoint,
    modes,
    multiplication_matrix,
    quantize,
    sobolev_weight,
)
from src.psdo.spectral import (
    EigenDecomposition,
    hermitize_and_eig,
    inverse_sqrt,
    inverse_sqrt_quadrature,
    jacobi_eigh,
    operator_function,
    operator_function_derivative,
    resolvent,
    set_default_solver,
    sign,
    unitary_exponential,
)

__all__ = [
    'DecayProfile', 'EigenDecomposition', 'Gram', 'SpatialOperator', 'decay_profile',
    'gram_self_adjoint', 'hermitize_and_eig', 'inverse_sqrt', 'inverse_sqrt_quadrature',
    'jacobi_eigh', 'modes', 'multiplication_matrix', 'operator_function',
    'operator_function_derivative', 'quantize', 'resolvent', 'set_default_solver', 'sign',
    'sobolev_weight', 'unitary_exponential', 'worst_profile',
]
