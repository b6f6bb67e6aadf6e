"""
The space-time Dirac operator on time-grid x space-grid spinor sections.

D = -gamma_0 nabla^S_{e_0} + sum_i gamma_i nabla^S_{e_i} + m in the orthonormal
frame of -A^2 dt^2 + B^2 dx^2 (+ B^2 dy^2 + B^2 dz^2 on the transverse sector).
Time derivatives use 4th-order stencils, space derivatives are spectral.
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from src.clifford import GammaRep
from src.errors import DimensionError
from src.frames import FrameData, frame_christoffels, spectral_dx, spin_coefficients
from src.modelspec.dual import Dual
from src.modelspec.model import MetricModel, SampledModel
from src.timegrid import TimeGrid, time_derivative

logger = logging.getLogger(__name__)

STENCIL_ORDER = 4


@dataclass(frozen=True)
class DiracOperator:
    """
    Applicable Dirac operator on a sampled scenario.

    Attributes:
        rep: Gamma representation
        grid: Time grid
        frames: Frame data of the metric
        sigma: Spin connection coefficients
        mass: Mass samples, shape (T, M)
        transverse_momentum: Sector momenta for n = 4
    """
    rep: GammaRep
    grid: TimeGrid
    frames: FrameData
    sigma: Dual
    mass: np.ndarray
    transverse_momentum: Tuple[int, ...] = ()

    @property
    def volume(self) -> np.ndarray:
        """sqrt|g| = A B^d on the grid."""
        return self.frames.lapse.val * self.frames.scale.val ** (self.rep.n - 1)

    def apply(self, psi: np.ndarray) -> np.ndarray:
        """
        D psi for psi of shape (T, M, N).
        """
        rep = self.rep
        if psi.shape[:2] != self.mass.shape or psi.shape[2] != rep.N:
            raise DimensionError(f"section of shape {psi.shape} does not match grid {self.mass.shape}")
        A = self.frames.lapse.val[..., None]
        B = self.frames.scale.val[..., None]
        sig = self.sigma.val

        def act(matrix: np.ndarray, field: np.ndarray) -> np.ndarray:
            return np.einsum('ij,tmj->tmi', matrix, field)

        def connection(b: int) -> np.ndarray:
            return np.einsum('tmij,tmj->tmi', sig[:, :, b], psi)

        dpsi_t = time_derivative(psi, self.grid.dt, 'fd', order=STENCIL_ORDER)
        dpsi_x = spectral_dx(psi, axis=1)

        out = -act(rep.gammas[0], dpsi_t / A + connection(0))
        out = out + act(rep.gammas[1], dpsi_x / B + connection(1))
        for j in range(2, rep.n):
            p = self.transverse_momentum[j - 2] if self.transverse_momentum else 0
            out = out + act(rep.gammas[j], 1j * p * psi / B + connection(j))
        return out + self.mass[..., None] * psi

    def pairing(self, psi1: np.ndarray, psi2: np.ndarray) -> complex:
        """(psi1 | psi2)_M = int psi1^* beta psi2 sqrt|g| dt dx."""
        dx = 2.0 * np.pi / self.mass.shape[1]
        integrand = np.einsum('tmi,ij,tmj->tm', np.conj(psi1), self.rep.beta, psi2)
        return complex(np.sum(integrand * self.volume) * self.grid.dt * dx)

    def formal_adjointness_residual(self, psi1: np.ndarray, psi2: np.ndarray) -> float:
        """|(psi1 | D psi2) - (D psi1 | psi2)| for sections vanishing near the time ends."""
        return abs(self.pairing(psi1, self.apply(psi2)) - self.pairing(self.apply(psi1), psi2))


def assemble_dirac(model, rep: GammaRep, grid: TimeGrid, space_points: int,
                   conformal: bool = False, mass: Optional[np.ndarray] = None,
                   transverse_momentum: Sequence[int] = ()) -> DiracOperator:
    """
    Build the Dirac operator of a scenario on a grid.

    Args:
        model: MetricModel
        rep: Gamma representation (dimension must match)
        grid: Time grid
        space_points: Number of x samples
        conformal: Use the metric e^{2u}(-dt^2 + h dx^2)
        mass: Mass samples (T, M); the model mass when omitted
        transverse_momentum: Sector momenta for n = 4

    Raises:
        DimensionError: If the model and representation dimensions differ
    """
    if model.n != rep.n:
        raise DimensionError(f"model is {model.n}-dimensional, representation is {rep.n}")
    sampled = model.sample(grid.t, space_points)
    frames = frame_christoffels(sampled, conformal=conformal)
    sigma = spin_coefficients(frames, rep)
    return DiracOperator(rep, grid, frames, sigma,
                         sampled.m.value if mass is None else mass,
                         tuple(int(p) for p in transverse_momentum))


@dataclass(frozen=True)
class ConformalPair:
    """
    Product-metric scenario and its conformal partner e^{2u}(-dt^2 + h dx^2).

    Attributes:
        reduced: Model on -dt^2 + h dx^2
        physical_mass: e^{-u} m, the mass of the operator on the conformal metric
        weight: W = e^{(n-1)u/2}
        inverse_weight: U = e^{(1-n)u/2}
        adjoint_weight: W^* = e^{-(n+1)u/2}
    """
    reduced: MetricModel
    sampled: SampledModel
    physical_mass: np.ndarray
    weight: np.ndarray
    inverse_weight: np.ndarray
    adjoint_weight: np.ndarray


def conformal_pair(model: MetricModel, grid: TimeGrid, space_points: int) -> ConformalPair:
    """
    Conformal reduction of a scenario with a conformal factor.

    With D the Dirac operator of -dt^2 + h dx^2 and D~ that of e^{2u}(-dt^2 + h dx^2),
    W^*(D + m)W = D~ + e^{-u} m.
    """
    n = model.n
    sampled = model.sample(grid.t, space_points)
    u = sampled.u.value
    return ConformalPair(
        reduced=model.without_conformal_factor(),
        sampled=sampled,
        physical_mass=np.exp(-u) * sampled.m.value,
        weight=np.exp((n - 1) * u / 2.0),
        inverse_weight=np.exp((1 - n) * u / 2.0),
        adjoint_weight=np.exp(-(n + 1) * u / 2.0),
    )


def conformal_residual(model: MetricModel, rep: GammaRep, grid: TimeGrid, space_points: int,
                       psi: np.ndarray) -> float:
    """
    ||W^*(D + m)W psi - (D~ + e^{-u} m) psi|| / ||psi|| on the grid interior.

    The two stencil widths at each time end are excluded, where one-sided
    stencils dominate.
    """
    pair = conformal_pair(model, grid, space_points)
    product = assemble_dirac(pair.reduced, rep, grid, space_points)
    physical = assemble_dirac(model, rep, grid, space_points, conformal=True, mass=pair.physical_mass)
    lhs = pair.adjoint_weight[..., None] * product.apply(pair.weight[..., None] * psi)
    rhs = physical.apply(psi)
    interior = slice(STENCIL_ORDER, len(grid) - STENCIL_ORDER)
    diff = (lhs - rhs)[interior]
    return float(np.linalg.norm(diff) / max(np.linalg.norm(psi[interior]), 1e-300))
