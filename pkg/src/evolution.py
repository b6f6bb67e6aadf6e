"""
Cauchy evolution of d_t - i H(t) and the Green time-kernels built from it.

One step is exp(i dt H(t + dt/2)), exactly gram-unitary. Propagators from
the origin are cached; U(t_i, t_j) = U(t_i, 0) U(t_j, 0)^{-1} with the
inverse taken as the gram adjoint.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from src.errors import DimensionError
from src.psdo.operator import SpatialOperator, sobolev_weight
from src.psdo.spectral import unitary_exponential
from src.reduction.transport import DensityTransport
from src.timegrid import TimeGrid

logger = logging.getLogger(__name__)

SIDES = ('+', '-')


class Propagator:
    """
    Reduced propagators U(t_i, t_j) on the grid of a Hamiltonian family.

    Attributes:
        family: Hamiltonian family
        grid: Its time grid (must contain t = 0)
        steps: exp(i dt H(t_i + dt/2)) for i = 0..T-2
        from_origin: U(t_i, 0)
        to_origin: U(0, t_i) = U(t_i, 0)^{-1}
    """

    def __init__(self, family):
        self.family = family
        self.grid: TimeGrid = family.grid
        self.gram = family.gram
        origin = self.grid.origin
        dt = self.grid.dt

        self.steps: List[np.ndarray] = []
        for t in self.grid.midpoints:
            self.steps.append(unitary_exponential(family.at(t), dt).mat)

        size = family.size
        T = len(self.grid)
        self.from_origin: List[Optional[np.ndarray]] = [None] * T
        self.from_origin[origin] = np.eye(size, dtype=complex)
        for i in range(origin + 1, T):
            self.from_origin[i] = self.steps[i - 1] @ self.from_origin[i - 1]
        for i in range(origin - 1, -1, -1):
            self.from_origin[i] = self.gram.adjoint(self.steps[i]) @ self.from_origin[i + 1]
        self.to_origin = [self.gram.adjoint(U) for U in self.from_origin]
        logger.info(f"Propagated {T} times (dt = {dt:.4g}), unitarity drift {self.unitarity_drift():.2e}")

    @property
    def origin(self) -> int:
        return self.grid.origin

    def between(self, i: int, j: int) -> np.ndarray:
        """U(t_i, t_j)."""
        return self.from_origin[i] @ self.to_origin[j]

    def unitarity_drift(self) -> float:
        """max over steps of ||U^* W U - W|| / ||W||."""
        W = self.gram.matrix
        scale = np.linalg.norm(W)
        return max((float(np.linalg.norm(U.conj().T @ W @ U - W) / scale) for U in self.steps), default=0.0)

    def groupoid_residual(self, i: int, j: int, k: int) -> float:
        """||U(t_i, t_j) U(t_j, t_k) - U(t_i, t_k)||."""
        return float(np.linalg.norm(self.between(i, j) @ self.between(j, k) - self.between(i, k), 2))

    def homogeneity_residual(self, j: int) -> float:
        """
        Relative size of (d_t - i H(t)) U(t, t_j) on interior times t > t_j.

        The time derivative is the centered difference, so the residual is O(dt^2).
        """
        dt = self.grid.dt
        worst = 0.0
        for i in range(j + 1, len(self.grid) - 1):
            derivative = (self.between(i + 1, j) - self.between(i - 1, j)) / (2 * dt)
            H = self.family.at(self.grid.t[i]).mat
            residual = derivative - 1j * H @ self.between(i, j)
            worst = max(worst, float(np.linalg.norm(residual, 2) / np.linalg.norm(H, 2)))
        return worst


def evolve(family_or_propagator, t_from: float, t_to: float,
           target: Union[np.ndarray, SpatialOperator]):
    """
    Evolve Cauchy data or an operator from t_from to t_to.

    Args:
        family_or_propagator: Hamiltonian family or a Propagator built from one
        t_from: Start time (grid point)
        t_to: End time (grid point)
        target: Coefficient vector, or SpatialOperator A (returns U(t_to, t_from) A)

    Raises:
        OffGridError: If a time is not on the grid
    """
    propagator = (family_or_propagator if isinstance(family_or_propagator, Propagator)
                  else Propagator(family_or_propagator))
    U = propagator.between(propagator.grid.index_of(t_to), propagator.grid.index_of(t_from))
    if isinstance(target, SpatialOperator):
        return target.with_matrix(U @ target.mat)
    return U @ target


def sobolev_bounds(propagator: Propagator, orders: Sequence[int] = (-2, -1, 1, 2)) -> Dict[int, float]:
    """max_t ||<D_x>^m U(t, 0) <D_x>^{-m}|| for each order m."""
    family = propagator.family
    bounds = {}
    for m in orders:
        weight = sobolev_weight(family.K, family.N, m)
        bounds[m] = max(float(np.linalg.norm((weight[:, None] * U) / weight[None, :], 2))
                        for U in propagator.from_origin)
    return bounds


@dataclass
class EvolutionKernels:
    """
    Full propagators U(t, s) = S_t U(t, s) S_s^{-1} and the time-kernels.

    Kernels are stored by (i, j, side); side '+' approaches t_i = t_j from
    t > s, side '-' from t < s. Off the diagonal the side is '+' if i > j
    and '-' otherwise.
    """
    propagator: Propagator
    transport: DensityTransport
    gamma0: np.ndarray
    retarded: Dict[Tuple[int, int, str], np.ndarray] = field(default_factory=dict)
    advanced: Dict[Tuple[int, int, str], np.ndarray] = field(default_factory=dict)
    causal: Dict[Tuple[int, int, str], np.ndarray] = field(default_factory=dict)
    feynman: Dict[Tuple[int, int, str], np.ndarray] = field(default_factory=dict)
    lambda_plus: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)
    lambda_minus: Dict[Tuple[int, int], np.ndarray] = field(default_factory=dict)

    @property
    def grid(self) -> TimeGrid:
        return self.propagator.grid

    def from_origin(self, i: int) -> np.ndarray:
        """U(t_i, 0) = S_{t_i} U(t_i, 0)."""
        return self.transport.matrices[i] @ self.propagator.from_origin[i]

    def to_origin(self, j: int) -> np.ndarray:
        """U(0, t_j) = U(0, t_j) S_{t_j}^{-1}."""
        return self.propagator.to_origin[j] @ self.transport.inverse_matrix(j)

    def full(self, i: int, j: int) -> np.ndarray:
        return self.from_origin(i) @ self.to_origin(j)

    def composition_residual(self, i: int, j: int, k: int) -> float:
        return float(np.linalg.norm(self.full(i, j) @ self.full(j, k) - self.full(i, k), 2))


def build_kernels(propagator: Propagator, transport: DensityTransport) -> EvolutionKernels:
    rep = propagator.family.rep
    gamma0 = np.kron(np.eye(2 * propagator.family.K + 1), rep.gammas[0])
    if transport.scaling.shape[0] != len(propagator.grid):
        raise DimensionError("density transport and propagator use different grids")
    return EvolutionKernels(propagator, transport, gamma0)


def _side(i: int, j: int, side: Optional[str]) -> str:
    if i != j:
        return '+' if i > j else '-'
    if side not in SIDES:
        raise ValueError(f"coincident times need side '+' or '-', got {side!r}")
    return side


def green_kernels(kernels: EvolutionKernels, pairs: Sequence[Tuple[int, int, Optional[str]]],
                  state=None) -> EvolutionKernels:
    """
    Fill G_ret, G_adv, G = G_ret - G_adv and, given c+, G_F for index pairs.

    G_ret(t,s) = theta(t-s) U(t,s) gamma_0, G_adv(t,s) = -theta(s-t) U(t,s) gamma_0,
    G_F(t,s) = U(t,0) (theta(t-s) c+ - theta(s-t) c-) U(0,s) gamma_0.

    Args:
        kernels: Evolution kernels to fill
        pairs: (i, j, side) triples; side is only read when i == j
        state: StateBundle whose reduced c+ enters G_F (G_F skipped when omitted)
    """
    g0 = kernels.gamma0
    c_plus = None if state is None else state.reduced_c_plus.mat
    for i, j, side in pairs:
        side = _side(i, j, side)
        U = kernels.full(i, j) @ g0
        zero = np.zeros_like(U)
        key = (i, j, side)
        kernels.retarded[key] = U if side == '+' else zero
        kernels.advanced[key] = -U if side == '-' else zero
        kernels.causal[key] = kernels.retarded[key] - kernels.advanced[key]
        if c_plus is not None:
            c = c_plus if side == '+' else c_plus - np.eye(c_plus.shape[0])
            kernels.feynman[key] = kernels.from_origin(i) @ c @ kernels.to_origin(j) @ g0
    return kernels


def feynman_jump(kernels: EvolutionKernels, j: int, state) -> float:
    """||G_F(s+, s) - G_F(s-, s) - gamma_0||."""
    green_kernels(kernels, [(j, j, '+'), (j, j, '-')], state)
    jump = kernels.feynman[(j, j, '+')] - kernels.feynman[(j, j, '-')]
    return float(np.linalg.norm(jump - kernels.gamma0, 2))


def kernel_stack(kernels: EvolutionKernels, name: str = 'feynman') -> np.ndarray:
    """Stack a kernel dictionary into an array (pairs, size, size) ordered by key."""
    table = getattr(kernels, name)
    if not table:
        return np.zeros((0, 0, 0), dtype=complex)
    return np.array([table[key] for key in sorted(table)])


def richardson_ratio(build_family, steps: int, psi0: np.ndarray, t_to: float) -> float:
    """
    Ratio ||psi_T - psi_2T|| / ||psi_2T - psi_4T|| of evolutions on refined grids.

    Args:
        build_family: Callable mapping a number of time points to a Hamiltonian family
        steps: Coarsest number of time points
        psi0: Data at t = 0
        t_to: Final time (a point of the coarsest grid)

    Returns:
        The ratio, close to 4 for a second-order integrator
    """
    results = []
    for level in range(3):
        count = (steps - 1) * 2 ** level + 1
        results.append(evolve(build_family(count), 0.0, t_to, psi0))
    coarse = np.linalg.norm(results[0] - results[1])
    fine = np.linalg.norm(results[1] - results[2])
    ratio = float(coarse / max(fine, 1e-300))
    logger.info(f"Richardson ratio {ratio:.3f}")
    return ratio
