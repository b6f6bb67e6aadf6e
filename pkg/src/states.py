"""
Cauchy covariances of pure states: the adiabatic state, the static vacuum
and the state deformed from an ultrastatic vacuum.

A bundle stores c+ on the slice t = 0 and the forms lambda+- = W c+-, where
W is the gram of the slice (the form of i gamma(n) against the density).
"""

import logging
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from src.clifford import GammaRep
from src.errors import ConstructionError, GapError, UnsupportedKillingError
from src.evolution import EvolutionKernels, Propagator
from src.frames import frame_christoffels, spin_coefficients
from src.modelspec.model import BlendedModel, MetricModel
from src.modelspec.parser import parse_expr
from src.projections import ProjectorFamily
from src.psdo.operator import Gram, SpatialOperator, multiplication_matrix
from src.psdo.spectral import hermitize_and_eig, operator_function
from src.reduction.dirac import STENCIL_ORDER, assemble_dirac
from src.reduction.hamiltonian import ReducedHamiltonianFamily, assemble_H
from src.reduction.transport import density_transport
from src.timegrid import TimeGrid, time_derivative

logger = logging.getLogger(__name__)

PROVENANCES = ('adiabatic', 'vacuum', 'instantaneous vacuum', 'deformed')
STATE_TOLERANCE = 1e-10


@dataclass(frozen=True)
class StateBundle:
    """
    Covariances of a quasi-free state on the slice t = 0.

    Attributes:
        c_plus: c+ acting on physical Cauchy data
        gram: Gram of the physical data (lambda+- = gram c+-)
        reduced_c_plus: c+ on the data of the reduced equation (used by the kernels)
        provenance: One of PROVENANCES
        conformal: Whether conformal weights were applied
        u: Conformal factor samples on the slice (zeros without weights)
        diagnostics: Named residuals recorded during construction
    """
    c_plus: SpatialOperator
    gram: Gram
    reduced_c_plus: SpatialOperator
    provenance: str
    conformal: bool = False
    u: Optional[np.ndarray] = None
    diagnostics: Dict[str, float] = field(default_factory=dict)

    @property
    def c_minus(self) -> SpatialOperator:
        return self.c_plus.with_matrix(np.eye(self.c_plus.size) - self.c_plus.mat)

    @property
    def lambda_plus(self) -> np.ndarray:
        return self.gram.matrix @ self.c_plus.mat

    @property
    def lambda_minus(self) -> np.ndarray:
        return self.gram.matrix @ self.c_minus.mat

    def completeness_residual(self) -> float:
        """||c+ + c- - 1||, zero by construction."""
        return float(np.linalg.norm(self.c_plus.mat + self.c_minus.mat - np.eye(self.c_plus.size), 2))

    def form_sum_residual(self) -> float:
        """||lambda+ + lambda- - W|| / ||W||."""
        W = self.gram.matrix
        return float(np.linalg.norm(self.lambda_plus + self.lambda_minus - W, 2) / np.linalg.norm(W, 2))

    def positivity(self) -> Tuple[float, float]:
        """Smallest eigenvalue of the Hermitian parts of lambda+ and lambda-, relative to ||W||."""
        scale = np.linalg.norm(self.gram.matrix, 2)
        lowest = []
        for form in (self.lambda_plus, self.lambda_minus):
            lowest.append(float(np.linalg.eigvalsh(0.5 * (form + form.conj().T))[0] / scale))
        return lowest[0], lowest[1]

    def form_hermiticity_residual(self) -> float:
        """Largest ||lambda - lambda^*|| / ||W|| of the two forms."""
        scale = np.linalg.norm(self.gram.matrix, 2)
        return max(float(np.linalg.norm(form - form.conj().T, 2) / scale)
                   for form in (self.lambda_plus, self.lambda_minus))

    def purity_residual(self) -> float:
        """max ||c^2 - c|| over c+ and c-."""
        return max(float(np.linalg.norm(c.mat @ c.mat - c.mat, 2)) for c in (self.c_plus, self.c_minus))

    def residuals(self) -> Dict[str, float]:
        low_plus, low_minus = self.positivity()
        return {
            'completeness': self.completeness_residual(),
            'form_sum': self.form_sum_residual(),
            'form_hermiticity': self.form_hermiticity_residual(),
            'positivity_plus': low_plus,
            'positivity_minus': low_minus,
            'purity': self.purity_residual(),
        }

    def check(self, tolerance: float = STATE_TOLERANCE) -> Dict[str, float]:
        """
        Verify the state conditions.

        Returns:
            The measured residuals

        Raises:
            ConstructionError: Naming the first violated condition
        """
        residuals = self.residuals()
        for name, value in residuals.items():
            failed = value < -tolerance if name.startswith('positivity') else value > tolerance
            if failed:
                raise ConstructionError(f"{self.provenance} state violates {name} ({value:.3e})",
                                        invariant=name, residual=value)
        logger.debug(f"{self.provenance} state residuals: {residuals}")
        return residuals


def make_bundle(c_plus: SpatialOperator, provenance: str, reduced_c_plus: Optional[SpatialOperator] = None,
                diagnostics: Optional[Dict[str, float]] = None) -> StateBundle:
    """Bundle from a projection c+ self-adjoint for its own gram."""
    if provenance not in PROVENANCES:
        raise ValueError(f"unknown provenance {provenance!r}")
    return StateBundle(c_plus, c_plus.gram, reduced_c_plus or c_plus, provenance,
                       diagnostics=dict(diagnostics or {}))


def conformal_weight_matrix(model: MetricModel, t: float, space_points: int, K: int, N: int) -> np.ndarray:
    """Galerkin matrix of e^{(n-1)u/2} on the slice at time t."""
    u = model.sample([t], space_points).u.value[0]
    return multiplication_matrix(np.exp((model.n - 1) * u / 2.0), K, N)


def conformal_transport(bundle: StateBundle, weight: np.ndarray, inverse: bool = False) -> StateBundle:
    """
    Move a bundle to the conformally related metric, or back with inverse=True.

    c -> E^{-1} c E and W -> E^* W E for the weight E = e^{(n-1)u/2}.
    """
    E = np.linalg.inv(weight) if inverse else weight
    E_inv = weight if inverse else np.linalg.inv(weight)
    gram = Gram(E.conj().T @ bundle.gram.matrix @ E)
    c_plus = SpatialOperator(E_inv @ bundle.c_plus.mat @ E, gram, bundle.c_plus.K, bundle.c_plus.N,
                             bundle.c_plus.order_tag)
    return replace(bundle, c_plus=c_plus, gram=gram, conformal=not inverse)


def _finish(bundle: StateBundle, model, space_points: int, t: float = 0.0,
            tolerance: float = STATE_TOLERANCE) -> StateBundle:
    if model.has_conformal_factor():
        c = bundle.c_plus
        weight = conformal_weight_matrix(model, t, space_points, c.K, c.N)
        bundle = conformal_transport(bundle, weight)
        bundle = replace(bundle, u=model.sample([t], space_points).u.value[0])
        logger.info("Applied conformal weights e^{(n-1)u/2} to the covariances")
    bundle.diagnostics.update(bundle.check(tolerance))
    return bundle


def build_adiabatic_state(proj: ProjectorFamily, model: MetricModel,
                          tolerance: float = STATE_TOLERANCE) -> StateBundle:
    """
    State with c+ = e^{(1-n)u/2} P~+(0) e^{(n-1)u/2}.

    Args:
        proj: Corrected projections on a grid containing t = 0
        model: Scenario the projections were built for
        tolerance: Bound on the state residuals

    Raises:
        ConstructionError: If a state condition fails
    """
    P = proj.at(0.0)
    bundle = make_bundle(P, 'adiabatic', diagnostics={'correction_order': float(proj.order),
                                                      'lambda': float(proj.lambda_used)})
    bundle = _finish(bundle, model, proj.hamiltonian.space_points, 0.0, tolerance)
    logger.info(f"Adiabatic state (r={proj.order}) passes the state conditions")
    return bundle


def spacetime_covariances(state: StateBundle, kernels: EvolutionKernels,
                          pairs: Sequence[Tuple[int, int]]) -> float:
    """
    Fill Lambda+-(t_i, t_j) = i U(t_i, 0) c+- U(0, t_j) gamma_0.

    Returns:
        max ||Lambda+ + Lambda- - i G|| over the pairs
    """
    c_plus = state.reduced_c_plus.mat
    c_minus = np.eye(c_plus.shape[0]) - c_plus
    g0 = kernels.gamma0
    worst = 0.0
    for i, j in pairs:
        left = kernels.from_origin(i)
        right = kernels.to_origin(j) @ g0
        kernels.lambda_plus[(i, j)] = 1j * left @ c_plus @ right
        kernels.lambda_minus[(i, j)] = 1j * left @ c_minus @ right
        causal = kernels.full(i, j) @ g0
        total = kernels.lambda_plus[(i, j)] + kernels.lambda_minus[(i, j)]
        worst = max(worst, float(np.linalg.norm(total - 1j * causal, 2)))
    logger.debug(f"Lambda+ + Lambda- = iG over {len(pairs)} pairs to {worst:.2e}")
    return worst


def feynman_consistency(kernels: EvolutionKernels, pairs: Sequence[Tuple[int, int, Optional[str]]]) -> float:
    """
    max ||(i^{-1} Lambda+ + G_adv) - (-i^{-1} Lambda- + G_ret)||, also against the stored G_F.

    Lambda+- and the causal kernels must already be filled for the pairs.
    """
    worst = 0.0
    for i, j, side in pairs:
        key = (i, j, side if i == j else ('+' if i > j else '-'))
        via_plus = -1j * kernels.lambda_plus[(i, j)] + kernels.advanced[key]
        via_minus = 1j * kernels.lambda_minus[(i, j)] + kernels.retarded[key]
        worst = max(worst, float(np.linalg.norm(via_plus - via_minus, 2)))
        if key in kernels.feynman:
            worst = max(worst, float(np.linalg.norm(via_plus - kernels.feynman[key], 2)))
    return worst


def covariance_homogeneity_residual(state: StateBundle, propagator: Propagator, j: int) -> float:
    """
    Relative size of (d_t - i H(t)) U(t, 0) c+ U(0, t_j) on interior times.

    The reduced-form statement that D annihilates Lambda+ in its first argument.
    """
    c = state.reduced_c_plus.mat
    columns = [U @ c @ propagator.to_origin[j] for U in propagator.from_origin]
    dt = propagator.grid.dt
    worst = 0.0
    for i in range(1, len(columns) - 1):
        H = propagator.family.at(propagator.grid.t[i]).mat
        residual = (columns[i + 1] - columns[i - 1]) / (2 * dt) - 1j * H @ columns[i]
        worst = max(worst, float(np.linalg.norm(residual, 2) / np.linalg.norm(H, 2)))
    return worst


def _static_family(model: MetricModel, rep: GammaRep, K: int, space_points: int, t0: float,
                   transverse_momentum: Sequence[int]) -> ReducedHamiltonianFamily:
    return ReducedHamiltonianFamily(model, rep, K, TimeGrid(np.array([t0])), space_points, t0,
                                    transverse_momentum)


def vacuum_state(model: MetricModel, rep: GammaRep, K: int, space_points: int,
                 frozen_at: Optional[float] = None, transverse_momentum: Sequence[int] = (),
                 tolerance: float = STATE_TOLERANCE) -> StateBundle:
    """
    Vacuum c+ = 1_{R+}(H_Sigma) of a static scenario.

    A time-dependent model is frozen at `frozen_at` (0 when omitted) and the
    result is tagged 'instantaneous vacuum'; it is a diagnostic, not a
    Hadamard state in general.

    Args:
        model: Scenario
        rep: Gamma representation
        K: Frequency cutoff
        space_points: Number of x samples
        frozen_at: Time to freeze a time-dependent model at
        transverse_momentum: Sector for n = 4
        tolerance: Bound on the state residuals

    Raises:
        GapError: If the mass is not positive
        ConstructionError: If the mass is not constant or H_Sigma^2 != H_0Sigma^2 + m^2
    """
    provenance = 'vacuum'
    t0 = 0.0
    if not model.is_static() or frozen_at is not None:
        t0 = 0.0 if frozen_at is None else float(frozen_at)
        if not model.is_static():
            provenance = 'instantaneous vacuum'
            logger.warning(f"Scenario is time-dependent; building the instantaneous vacuum at t = {t0:g}")
            model = model.frozen_at(t0)

    mass = model.sample([t0], space_points).m.value[0]
    if np.min(mass) <= 0.0:
        raise GapError(f"vacuum needs a positive mass (min m = {np.min(mass):.6g}); H_Sigma may have a kernel",
                       invariant="vacuum_gap", residual=float(np.min(mass)))
    if np.ptp(mass) > 1e-12:
        raise ConstructionError("vacuum construction needs a constant mass",
                                invariant="constant_mass", residual=float(np.ptp(mass)))
    m = float(mass[0])

    H = _static_family(model, rep, K, space_points, t0, transverse_momentum).at(t0)
    H0 = _static_family(model.with_mass(parse_expr("0")), rep, K, space_points, t0,
                        transverse_momentum).at(t0)
    square = H.mat @ H.mat
    identity_residual = float(np.linalg.norm(square - H0.mat @ H0.mat - m * m * np.eye(H.size), 2)
                              / np.linalg.norm(square, 2))
    if identity_residual > 1e-12:
        raise ConstructionError(f"H_Sigma^2 - H_0Sigma^2 - m^2 residual {identity_residual:.2e}",
                                invariant="vacuum_square", residual=identity_residual)

    eig = hermitize_and_eig(H)
    c_plus = operator_function(H, lambda v: (v > 0).astype(float), eig)
    bundle = make_bundle(c_plus, provenance, diagnostics={
        'vacuum_square': identity_residual,
        'vacuum_gap': float(np.min(np.abs(eig.values))),
    })
    bundle = _finish(bundle, model, space_points, t0, tolerance)
    logger.info(f"{provenance.capitalize()} built: smallest |energy| {bundle.diagnostics['vacuum_gap']:.6g}")
    return bundle


def lie_derivative_killing(model: MetricModel, rep: GammaRep, grid: TimeGrid, space_points: int,
                           psi: np.ndarray) -> np.ndarray:
    """
    Spinorial Lie derivative of psi (T, M, N) along the Killing field d_t.

    For d_t on a static product metric the curl term vanishes and
    L_X psi = nabla^S_{d_t} psi.

    Raises:
        UnsupportedKillingError: If the model is not static
    """
    if not model.is_static():
        raise UnsupportedKillingError("d_t is a Killing field only for static scenarios",
                                      invariant="killing")
    frames = frame_christoffels(model.sample(grid.t, space_points))
    sigma = spin_coefficients(frames, rep)
    connection = np.einsum('tmij,tmj->tmi', sigma.val[:, :, 0], psi)
    return time_derivative(psi, grid.dt, 'fd', order=STENCIL_ORDER) + connection


def killing_commutator_residual(model: MetricModel, rep: GammaRep, grid: TimeGrid, space_points: int,
                                psi: np.ndarray) -> float:
    """||(D L_X - L_X D) psi|| / ||psi|| on the grid interior."""
    dirac = assemble_dirac(model, rep, grid, space_points)
    lhs = dirac.apply(lie_derivative_killing(model, rep, grid, space_points, psi))
    rhs = lie_derivative_killing(model, rep, grid, space_points, dirac.apply(psi))
    interior = slice(2 * STENCIL_ORDER, len(grid) - 2 * STENCIL_ORDER)
    return float(np.linalg.norm((lhs - rhs)[interior]) / max(np.linalg.norm(psi[interior]), 1e-300))


def deformed_state(model_phys: MetricModel, model_us: MetricModel, rep: GammaRep, K: int,
                   time_steps: int, space_points: int, step: str = 'smooth',
                   transverse_momentum: Sequence[int] = (),
                   tolerance: float = STATE_TOLERANCE) -> StateBundle:
    """
    Deform the ultrastatic vacuum into a state for the physical scenario.

    The interpolating scenario equals model_us for t <= -1 and model_phys
    (shifted so t = 2 is the physical t = 0) for t >= 1. The vacuum at
    t = -2 is carried to t = 2 by the interpolating evolution,
    c_def = S_2 U(2, -2) c_vac U(-2, 2) S_2^{-1}, with the transported gram
    W_2 = S_2^{-*} W_{-2} S_2^{-1}.

    Args:
        model_phys: Physical scenario
        model_us: Static ultrastatic scenario with positive constant mass
        rep: Gamma representation
        K: Frequency cutoff
        time_steps: Points on the interpolating grid [-2, 2] (odd, so that 0 is a grid point)
        space_points: Number of x samples
        step: 'smooth' or 'tanh' interpolation
        transverse_momentum: Sector for n = 4
        tolerance: Bound on the state residuals

    Raises:
        InterpolationError: If the interpolating scenario does not match its ends
    """
    blended = BlendedModel(model_us, model_phys.without_conformal_factor(), step=step)
    if step == 'smooth':
        blended.check_ends(space_points)
    vacuum = vacuum_state(model_us.without_conformal_factor(), rep, K, space_points,
                          frozen_at=-2.0, transverse_momentum=transverse_momentum, tolerance=tolerance)

    grid = TimeGrid.from_interval(-2.0, 2.0, time_steps)
    family = assemble_H(blended, rep, K, grid, space_points, reference_time=-2.0,
                        transverse_momentum=transverse_momentum)
    propagator = Propagator(family)
    transport = density_transport(blended, grid, space_points, K, rep.N, reference_time=-2.0)

    last, first = len(grid) - 1, 0
    U = propagator.between(last, first)
    S = transport.matrices[last]
    carried = S @ U @ vacuum.c_plus.mat @ propagator.gram.adjoint(U) @ np.linalg.inv(S)
    gram = transport.transported_gram(family.gram, last)
    c_plus = SpatialOperator(carried, gram, K, rep.N, 0.0)
    discrepancy = transport.gram_discrepancy(family.gram, last, family.spinor_form)
    logger.info(f"Deformed vacuum over [-2, 2]; transported gram differs from the slice density "
                f"by {discrepancy:.2e}")

    bundle = make_bundle(c_plus, 'deformed', diagnostics={
        'gram_discrepancy': discrepancy,
        'unitarity_drift': propagator.unitarity_drift(),
    })
    return _finish(bundle, model_phys, space_points, 0.0, tolerance)
