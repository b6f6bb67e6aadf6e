"""
Dirac operator, its reduction to d_t - i H(t), density transport and
conformal covariance.
"""

from src.reduction.dirac import (
    ConformalPair,
    DiracOperator,
    assemble_dirac,
    conformal_pair,
    conformal_residual,
)
from src.reduction.hamiltonian import ReducedHamiltonianFamily, ReversedFamily, assemble_H
from src.reduction.transport import DensityTransport, density_transport

__all__ = [
    'ConformalPair',
    'DensityTransport',
    'DiracOperator',
    'ReducedHamiltonianFamily',
    'ReversedFamily',
    'assemble_H',
    'assemble_dirac',
    'conformal_pair',
    'conformal_residual',
    'density_transport',
]
