"""
Density transport between Cauchy data of D and of the reduced equation.

In the parallel frame the spinorial transport is the identity, so the map
reduces to multiplication by s_t = |h_t|^{-1/4} |h_ref|^{1/4}.
"""

import logging
from dataclasses import dataclass
from functools import cached_property
from typing import List

import numpy as np

from src.psdo.operator import Gram, multiplication_matrix
from src.timegrid import TimeGrid

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class DensityTransport:
    """
    Scaling family s_t on a time grid.

    Attributes:
        grid: Time grid
        scaling: s_t(x), shape (T, M)
        density: |h_t|^{1/2}(x), shape (T, M)
        K: Frequency cutoff
        N: Spinor rank
    """
    grid: TimeGrid
    scaling: np.ndarray
    density: np.ndarray
    K: int
    N: int

    @property
    def inverse_scaling(self) -> np.ndarray:
        return 1.0 / self.scaling

    def matrix(self, i: int) -> np.ndarray:
        """S_t = Op(s_t) (x) 1 at grid index i."""
        return multiplication_matrix(self.scaling[i], self.K, self.N)

    def inverse_matrix(self, i: int) -> np.ndarray:
        """Matrix inverse of S_t (exact inverse of the truncated operator)."""
        return np.linalg.inv(self.matrix(i))

    @cached_property
    def matrices(self) -> List[np.ndarray]:
        return [self.matrix(i) for i in range(len(self.grid))]

    def transported_gram(self, reference: Gram, i: int) -> Gram:
        """W_t = S_t^{-*} W_ref S_t^{-1}, the gram for physical data at time t."""
        inv = self.inverse_matrix(i)
        mat = inv.conj().T @ reference.matrix @ inv
        return Gram(0.5 * (mat + mat.conj().T))

    def gram_discrepancy(self, reference: Gram, i: int, spinor_form: np.ndarray) -> float:
        """
        ||S_t^* Op(|h_t|^{1/2}) S_t - W_ref|| / ||W_ref||.

        Zero in the continuum; measures the Galerkin error of the scaling identity.
        """
        S = self.matrix(i)
        local = np.kron(multiplication_matrix(self.density[i], self.K, 1), spinor_form)
        diff = S.conj().T @ local @ S - reference.matrix
        return float(np.linalg.norm(diff) / np.linalg.norm(reference.matrix))


def density_transport(model, grid: TimeGrid, space_points: int, K: int, N: int,
                      reference_time: float = 0.0) -> DensityTransport:
    """
    Scaling family s_t = (h_t / h_ref)^{-d/4} and its inverse.

    Args:
        model: MetricModel or BlendedModel
        grid: Time grid
        space_points: Number of x samples
        K: Frequency cutoff
        N: Spinor rank
        reference_time: Time with s = 1

    Returns:
        DensityTransport
    """
    d = model.n - 1
    sampled = model.sample(grid.t, space_points)
    reference = model.sample([reference_time], space_points).h.value[0]
    h = sampled.h.value
    scaling = (h / reference[None, :]) ** (-d / 4.0)
    logger.debug(f"Density transport: scaling range [{scaling.min():.6g}, {scaling.max():.6g}]")
    return DensityTransport(grid, scaling, h ** (d / 2.0), K, N)
