"""
Reduced Hamiltonian H(t) of the Dirac equation on I x S^1.

Solutions psi of D psi = 0 on -dt^2 + h dx^2 correspond to solutions of
d_t phi = i H(t) phi through psi = s_t phi with s_t = (h_t / h_ref)^{-d/4}.
H(t) is self-adjoint for the time-independent gram W = Op(|h_ref|^{1/2})
(x) i beta gamma_0.
"""

import logging
from typing import Dict, List, Sequence, Tuple

import numpy as np

from src.clifford import GammaRep
from src.errors import AssemblyError, DimensionError, UnsupportedDimensionError
from src.frames import frame_christoffels, spin_coefficients
from src.modelspec.dual import Dual
from src.modelspec.model import SampledModel, periodicity_defect
from src.psdo.operator import (
    Gram,
    SpatialOperator,
    gram_self_adjoint,
    hermitian_part,
    modes,
    quantize,
    quantize_matrix,
    spinor_extend,
)
from src.timegrid import TimeGrid

logger = logging.getLogger(__name__)

SELF_ADJOINT_TOLERANCE = 1e-6
PERIODICITY_TOLERANCE = 1e-10


def _with_spinor(scalar: np.ndarray, mat: np.ndarray) -> np.ndarray:
    """(M, nk) scalar field times a constant N x N matrix -> (M, nk, N, N)."""
    return scalar[..., None, None] * mat


class ReducedHamiltonianFamily:
    """
    H(t), its exact time derivative and the auxiliary operators eps(t), h2(t).

    Operators are assembled on demand for any time in the model's domain and
    cached, so both grid times and the midpoints used by the evolution are
    available.

    Attributes:
        model: MetricModel or BlendedModel
        rep: Gamma representation
        K: Frequency cutoff
        grid: Time grid of the family
        space_points: Number of x samples used for quantization
        reference_time: Time whose density defines the gram
        transverse_momentum: Integer momenta along the remaining torus directions (n = 4)
    """

    def __init__(self, model, rep: GammaRep, K: int, grid: TimeGrid, space_points: int,
                 reference_time: float = 0.0, transverse_momentum: Sequence[int] = ()):
        if model.n != rep.n:
            raise DimensionError(f"model is {model.n}-dimensional, representation is {rep.n}")
        momentum = tuple(int(p) for p in transverse_momentum)
        if len(momentum) not in (0, rep.n - 2):
            raise DimensionError(f"expected {rep.n - 2} transverse momenta, got {len(momentum)}")
        self.model = model
        self.rep = rep
        self.K = K
        self.N = rep.N
        self.grid = grid
        self.space_points = space_points
        self.reference_time = float(reference_time)
        self.transverse_momentum = momentum or (0,) * (rep.n - 2)
        self.d = rep.n - 1

        self.spinor_form = 1j * rep.beta @ rep.gammas[0]
        reference = model.sample([self.reference_time], space_points)
        self.reference_density = reference.h.value[0] ** (self.d / 2.0)
        self.reference_log_dx = reference.h.dx[0] / reference.h.value[0]
        density_matrix = quantize_matrix(
            np.repeat(self.reference_density[:, None], 2 * K + 1, axis=1), K)
        self.gram = Gram(spinor_extend(density_matrix, self.spinor_form))

        self._cache: Dict[float, Tuple[SpatialOperator, SpatialOperator]] = {}
        self._aux_cache: Dict[float, Tuple[SpatialOperator, ...]] = {}
        self.max_raw_asymmetry = 0.0

    @property
    def size(self) -> int:
        return (2 * self.K + 1) * self.N

    def sample_row(self, t: float) -> SampledModel:
        return self.model.sample([float(t)], self.space_points)

    def _momentum_squared(self) -> float:
        return float(sum(p * p for p in self.transverse_momentum))

    def symbol(self, row: SampledModel) -> Tuple[np.ndarray, np.ndarray]:
        """
        Symbol of H and of d_t H on one time slice, each of shape (M, 2K+1, N, N).
        """
        rep = self.rep
        gammas = rep.gammas
        g0 = gammas[0]
        ident = np.eye(self.N)
        ks = modes(self.K).astype(float)
        d = self.d

        frames = frame_christoffels(row)
        sigma = spin_coefficients(frames, rep)
        h = row.h
        density = h.time_jet()
        dt_log_s = -(d / 4.0) * (h.dt_jet() / density)
        dx_log_s = -(d / 4.0) * (h.dx_jet() / density) + (d / 4.0) * self.reference_log_dx[None, :]
        inv_B = 1.0 / density.sqrt()
        kinetic_shift = inv_B * dx_log_s
        mass = row.m.time_jet()

        kinetic = 1j * g0 @ gammas[1]
        mass_matrix = 1j * g0
        connection = 1j * np.einsum('ij,tmbjk->tmbik', g0,
                                    np.einsum('bij,tmbjk->tmbik', np.array(gammas), sigma.val))
        connection_dot = 1j * np.einsum('ij,tmbjk->tmbik', g0,
                                        np.einsum('bij,tmbjk->tmbik', np.array(gammas), sigma.dot))

        def assemble(part: str, connection_part: np.ndarray) -> np.ndarray:
            def field(jet: Dual) -> np.ndarray:
                return np.broadcast_to(getattr(jet, part)[0][:, None], (self.space_points, len(ks)))

            result = _with_spinor(1j * field(dt_log_s), ident)
            result = result + _with_spinor(field(kinetic_shift) + 1j * ks[None, :] * field(inv_B), kinetic)
            for j, p in enumerate(self.transverse_momentum, start=2):
                if p:
                    result = result + _with_spinor(-float(p) * field(inv_B), g0 @ gammas[j])
            spatial = connection_part[0, :, 1:].sum(axis=1)
            result = result + spatial[:, None, :, :]
            result = result + _with_spinor(field(mass), mass_matrix)
            return result

        value = assemble('val', connection)
        dot = assemble('dot', connection_dot)
        return value, dot

    def _weighted(self, symbol: np.ndarray) -> np.ndarray:
        return self.reference_density[:, None, None, None] * (self.spinor_form @ symbol)

    def _assemble(self, t: float) -> Tuple[SpatialOperator, SpatialOperator]:
        row = self.sample_row(t)
        value, dot = self.symbol(row)

        raw = quantize_matrix(self._weighted(value), self.K)
        asymmetry = float(np.linalg.norm(raw - raw.conj().T) / max(np.linalg.norm(raw), 1e-300))
        self.max_raw_asymmetry = max(self.max_raw_asymmetry, asymmetry)
        if asymmetry > SELF_ADJOINT_TOLERANCE:
            raise AssemblyError(
                f"H({t:.6g}) is not gram-self-adjoint before symmetrization (residual {asymmetry:.2e})",
                invariant="hamiltonian_self_adjoint", residual=asymmetry)

        H = SpatialOperator(self.gram.solve(hermitian_part(raw)), self.gram, self.K, self.N, 1.0)
        dH = gram_self_adjoint(self._weighted(dot), self.K, self.gram, 1.0)
        return H, dH

    def _entry(self, t: float) -> Tuple[SpatialOperator, SpatialOperator]:
        key = round(float(t), 12)
        if key not in self._cache:
            self._cache[key] = self._assemble(key)
        return self._cache[key]

    def at(self, t: float) -> SpatialOperator:
        """H(t)."""
        return self._entry(t)[0]

    def derivative(self, t: float) -> SpatialOperator:
        """d_t H(t) from the exact time derivative of the symbol."""
        return self._entry(t)[1]

    def on_grid(self) -> List[SpatialOperator]:
        return [self.at(t) for t in self.grid.t]

    def _scalar_operator(self, scalar: np.ndarray) -> SpatialOperator:
        weighted = self.reference_density[:, None] * scalar
        return gram_self_adjoint(_with_spinor(weighted, self.spinor_form), self.K, self.gram, 1.0)

    def _auxiliary(self, t: float) -> Tuple[SpatialOperator, ...]:
        key = round(float(t), 12)
        if key not in self._aux_cache:
            row = self.sample_row(key)
            ks = modes(self.K).astype(float)
            h = row.h.value[0]
            momenta = ks[None, :] ** 2 + self._momentum_squared()
            h2 = momenta / h[:, None]
            h2_dt = -momenta * (row.h.dt[0] / h ** 2)[:, None]
            self._aux_cache[key] = (self._scalar_operator(np.sqrt(h2 + 1.0)),
                                    self._scalar_operator(h2),
                                    self._scalar_operator(h2_dt))
        return self._aux_cache[key]

    def epsilon(self, t: float) -> SpatialOperator:
        """eps(t) with symbol (k h_t^{-1} k + 1)^{1/2}, scalar on the spinor index."""
        return self._auxiliary(t)[0]

    def h2(self, t: float) -> SpatialOperator:
        """h2(t) with symbol k h_t^{-1} k = eps^2 - 1."""
        return self._auxiliary(t)[1]

    def h2_derivative(self, t: float) -> SpatialOperator:
        return self._auxiliary(t)[2]

    def principal_symbol(self, t: float) -> np.ndarray:
        """Samples of -gamma_0 gamma(h_t^{-1} k), shape (M, 2K+1, N, N)."""
        row = self.sample_row(t)
        ks = modes(self.K).astype(float)
        inv_B = 1.0 / np.sqrt(row.h.value[0])
        g0 = self.rep.gammas[0]
        symbol = _with_spinor(-ks[None, :] * inv_B[:, None], g0 @ self.rep.gammas[1])
        for j, p in enumerate(self.transverse_momentum, start=2):
            if p:
                symbol = symbol + _with_spinor(-float(p) * np.broadcast_to(inv_B[:, None], symbol.shape[:2]),
                                               g0 @ self.rep.gammas[j])
        return symbol

    def principal_symbol_defect(self, t: float, count: int = 4) -> List[float]:
        """
        ||H e_k - Op(sigma_pr) e_k|| / |k| for the `count` highest modes k > 0.
        """
        H = self.at(t)
        principal = quantize(self.principal_symbol(t), self.K)
        diff = H.mat - principal.mat
        defects = []
        for k in range(self.K - count + 1, self.K + 1):
            for alpha in range(self.N):
                col = (k + self.K) * self.N + alpha
                defects.append(float(np.linalg.norm(diff[:, col]) / k))
        return defects

    def self_adjointness_residual(self) -> float:
        """Largest gram-self-adjointness residual of H over the grid."""
        return max(H.self_adjointness_residual() for H in self.on_grid())

    def reversed(self) -> 'ReversedFamily':
        return ReversedFamily(self)


class ReversedFamily:
    """
    The time-reversed family t -> -t, H'(t) = -H(-t).

    Wraps any family exposing at, derivative, epsilon, h2 and h2_derivative.
    """

    def __init__(self, base):
        self.base = base
        self.rep = base.rep
        self.K = base.K
        self.N = base.N
        self.gram = base.gram
        self.grid = base.grid.reversed()
        self.space_points = base.space_points
        self.reference_time = -base.reference_time

    @property
    def size(self) -> int:
        return self.base.size

    def at(self, t: float) -> SpatialOperator:
        return -self.base.at(-t)

    def derivative(self, t: float) -> SpatialOperator:
        return self.base.derivative(-t)

    def on_grid(self) -> List[SpatialOperator]:
        return [self.at(t) for t in self.grid.t]

    def epsilon(self, t: float) -> SpatialOperator:
        return self.base.epsilon(-t)

    def h2(self, t: float) -> SpatialOperator:
        return self.base.h2(-t)

    def h2_derivative(self, t: float) -> SpatialOperator:
        return -self.base.h2_derivative(-t)

    def reversed(self):
        return self.base


def assemble_H(model, rep: GammaRep, K: int, grid: TimeGrid, space_points: int,
               reference_time: float = 0.0, transverse_momentum: Sequence[int] = (),
               tolerance: float = 1e-9) -> ReducedHamiltonianFamily:
    """
    Assemble and check the reduced Hamiltonian family on a time grid.

    Args:
        model: MetricModel or BlendedModel
        rep: Gamma representation of the model dimension
        K: Frequency cutoff
        grid: Time grid
        space_points: x samples, at least 4K + 2
        reference_time: Time defining the gram density
        transverse_momentum: Sector (p_2, p_3) for n = 4
        tolerance: Bound on the gram-self-adjointness residual

    Returns:
        ReducedHamiltonianFamily with H assembled at every grid time

    Raises:
        UnsupportedDimensionError: If the spatial frame is not parallel along d_t
        AssemblyError: On a self-adjointness violation
    """
    if hasattr(model, 'h_expr'):
        defect = periodicity_defect(model, grid.t)
        if defect > PERIODICITY_TOLERANCE:
            logger.warning(f"Model fields are not 2*pi-periodic in x (defect {defect:.2e})")

    frames = frame_christoffels(model.sample(grid.t, space_points))
    transport = frames.time_transport_residual()
    if transport > 1e-12:
        raise UnsupportedDimensionError(
            f"spatial frame is not parallel along d_t (max |Gamma^a_0b| = {transport:.2e})",
            invariant="parallel_frame", residual=transport)

    family = ReducedHamiltonianFamily(model, rep, K, grid, space_points, reference_time,
                                      transverse_momentum)
    residual = family.self_adjointness_residual()
    if residual > tolerance:
        raise AssemblyError(f"H(t) gram-self-adjointness residual {residual:.2e} exceeds {tolerance:.0e}",
                            invariant="hamiltonian_self_adjoint", residual=residual)
    logger.info(f"Assembled H(t) on {len(grid)} times, K={K}, N={rep.N}: "
                f"self-adjointness residual {residual:.2e}, raw asymmetry {family.max_raw_asymmetry:.2e}")
    return family
