"""
Gap regularization, spectral projections and their adiabatic correction.

The corrected projections P~(t) = e^{-iR(t)} P(t) e^{iR(t)} are built so
that the defect d_t P~+ + [P~+, i H~(t)] decays rapidly in frequency, one
order per iteration of the correction loop.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import numpy as np

from src.errors import GapError, RegularizationError
from src.psdo.decay import DecayProfile, decay_profile, default_thresholds, worst_profile
from src.psdo.operator import SpatialOperator
from src.psdo.spectral import (
    EigenDecomposition,
    hermitize_and_eig,
    operator_function,
    operator_function_derivative,
    sign,
    sign_derivative,
)
from src.reduction.hamiltonian import ReversedFamily
from src.timegrid import TimeGrid, time_derivative

logger = logging.getLogger(__name__)

LAMBDA_START = 2.0
LAMBDA_MAX = 2.0 ** 12
GAP_FLOOR = 1e-6
GAP_SLACK = 1e-10


def bump(s: np.ndarray) -> np.ndarray:
    """chi(s) = exp(1 - 1/(1 - s^2)) for |s| < 1, else 0."""
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    safe = np.where(inside, s, 0.0)
    return np.where(inside, np.exp(1.0 - 1.0 / (1.0 - safe ** 2)), 0.0)


def bump_derivative(s: np.ndarray) -> np.ndarray:
    s = np.asarray(s, dtype=float)
    inside = np.abs(s) < 1.0
    safe = np.where(inside, s, 0.0)
    return np.where(inside, bump(safe) * (-2.0 * safe / (1.0 - safe ** 2) ** 2), 0.0)


class RegularizedFamily:
    """
    H~(t) = H(t) + lambda chi(h2(t) / lambda^2) i gamma_0, symmetrized for the gram.

    The perturbation is supported at frequencies |k| < lambda |h|^{1/2} and
    vanishes identically for lambda = 0.
    """

    def __init__(self, base, lam: float):
        self.base = base
        self.lam = float(lam)
        self.rep = base.rep
        self.K = base.K
        self.N = base.N
        self.gram = base.gram
        self.grid = base.grid
        self.space_points = base.space_points
        self.reference_time = base.reference_time
        self._mass_lift = np.kron(np.eye(2 * self.K + 1), 1j * self.rep.gammas[0])
        self._cache: Dict[float, Tuple[SpatialOperator, SpatialOperator]] = {}

    @property
    def size(self) -> int:
        return self.base.size

    def _perturbation(self, t: float) -> Tuple[SpatialOperator, SpatialOperator]:
        key = round(float(t), 12)
        if key in self._cache:
            return self._cache[key]
        h2 = self.base.h2(t)
        if self.lam == 0.0:
            zero = h2.with_matrix(np.zeros_like(h2.mat), 0.0)
            self._cache[key] = (zero, zero)
            return self._cache[key]

        scale = self.lam ** 2
        eig = hermitize_and_eig(h2)
        chi = operator_function(h2, lambda v: bump(v / scale), eig, order_tag=-np.inf)
        chi_dt = operator_function_derivative(
            h2, self.base.h2_derivative(t),
            lambda v: bump(v / scale), lambda v: bump_derivative(v / scale) / scale, eig)
        value = self.gram.symmetrize(self.lam * chi.mat @ self._mass_lift)
        dot = self.gram.symmetrize(self.lam * chi_dt.mat @ self._mass_lift)
        self._cache[key] = (chi.with_matrix(value, -np.inf), chi.with_matrix(dot, -np.inf))
        return self._cache[key]

    def perturbation(self, t: float) -> SpatialOperator:
        return self._perturbation(t)[0]

    def at(self, t: float) -> SpatialOperator:
        return self.base.at(t) + self.perturbation(t)

    def derivative(self, t: float) -> SpatialOperator:
        return self.base.derivative(t) + self._perturbation(t)[1]

    def on_grid(self) -> List[SpatialOperator]:
        return [self.at(t) for t in self.grid.t]

    def epsilon(self, t: float) -> SpatialOperator:
        return self.base.epsilon(t)

    def h2(self, t: float) -> SpatialOperator:
        return self.base.h2(t)

    def h2_derivative(self, t: float) -> SpatialOperator:
        return self.base.h2_derivative(t)

    def reversed(self) -> ReversedFamily:
        return ReversedFamily(self)


def min_abs_spectrum(family) -> float:
    """Smallest |eigenvalue| of the family over its grid."""
    return min(float(np.min(np.abs(hermitize_and_eig(H).values))) for H in family.on_grid())


def gap_regularize(family, lambda_max: float = LAMBDA_MAX) -> Tuple[RegularizedFamily, float]:
    """
    Open a spectral gap [-1, 1] with a low-frequency perturbation.

    lambda = 0 when the family is already gapped; otherwise lambda doubles
    from 2 until min |spec H~(t)| >= 1 at every grid time. One lambda is
    used for the whole family.

    Args:
        family: Hamiltonian family
        lambda_max: Largest admissible lambda

    Returns:
        (regularized family, lambda used)

    Raises:
        RegularizationError: If lambda would exceed lambda_max
    """
    gap = min_abs_spectrum(family)
    if gap >= 1.0 - GAP_SLACK:
        logger.info(f"Spectrum already gapped (min |eigenvalue| = {gap:.6g}); no regularization")
        return RegularizedFamily(family, 0.0), 0.0

    lam = LAMBDA_START
    while lam <= lambda_max:
        regularized = RegularizedFamily(family, lam)
        gap = min_abs_spectrum(regularized)
        logger.debug(f"Gap regularization lambda={lam:g}: min |eigenvalue| = {gap:.6g}")
        if gap >= 1.0 - GAP_SLACK:
            profile = decay_profile(regularized.perturbation(family.grid.t[0]))
            logger.info(f"Regularized with lambda={lam:g}; perturbation block norm at K/2 "
                        f"{profile.norm_at(family.K // 2):.2e}")
            return regularized, lam
        lam *= 2.0
    raise RegularizationError(f"no lambda <= {lambda_max:g} opens the gap (last min |eigenvalue| {gap:.3g})",
                              invariant="spectral_gap", residual=gap)


@dataclass
class ProjectorFamily:
    """
    Projections P~+(t) on a time grid with their correction data.

    Attributes:
        grid: Time grid
        hamiltonian: The (regularized) family the projections belong to
        order: Number of correction iterations r
        P_plus: P~+(t_i)
        P_uncorrected: Spectral projections P+(t_i)
        dP_uncorrected: Exact d_t P+(t_i)
        generator: R(t_i) (zero for r = 0)
        defect: d_t P~+ + [P~+, i H~] at t_i
        profiles: DecayProfile of each defect
        history: Worst-over-t defect profile after each iteration, starting at r = 0
        lambda_used: Gap regularization strength
    """
    grid: TimeGrid
    hamiltonian: object
    order: int
    P_plus: List[SpatialOperator]
    P_uncorrected: List[SpatialOperator]
    dP_uncorrected: List[SpatialOperator]
    generator: List[SpatialOperator]
    defect: List[SpatialOperator]
    profiles: List[DecayProfile]
    history: List[DecayProfile] = field(default_factory=list)
    lambda_used: float = 0.0

    @property
    def K(self) -> int:
        return self.P_plus[0].K

    def P_minus(self, i: int) -> SpatialOperator:
        """P~- as the exact complement of P~+."""
        P = self.P_plus[i]
        return P.with_matrix(np.eye(P.size) - P.mat)

    def at(self, t: float) -> SpatialOperator:
        return self.P_plus[self.grid.index_of(t)]

    def worst_profile(self) -> DecayProfile:
        return worst_profile(self.profiles)

    def idempotency_residual(self) -> float:
        return max(float(np.linalg.norm(P.mat @ P.mat - P.mat, 2)) for P in self.P_plus)

    def self_adjointness_residual(self) -> float:
        return max(P.self_adjointness_residual() for P in self.P_plus)

    def off_diagonal_residual(self) -> float:
        """max ||P+ R P+|| + ||P- R P-|| with the uncorrected projections."""
        worst = 0.0
        for P, R in zip(self.P_uncorrected, self.generator):
            Q = np.eye(P.size) - P.mat
            worst = max(worst, float(np.linalg.norm(P.mat @ R.mat @ P.mat, 2)
                                     + np.linalg.norm(Q @ R.mat @ Q, 2)))
        return worst

    def splitting_profile(self, i: int) -> DecayProfile:
        """Profile of P+ H~ - eps P+, an order-0 operator."""
        P = self.P_uncorrected[i]
        t = self.grid.t[i]
        H = self.hamiltonian.at(t)
        eps = self.hamiltonian.epsilon(t)
        return decay_profile(P @ H - eps @ P)


def defect_thresholds(K: int) -> Tuple[List[int], Tuple[float, float]]:
    thresholds = sorted(set(default_thresholds(K)) | {max(1, K // 8), max(1, K // 2)})
    return thresholds, (K / 8.0, K / 2.0)


def _profile(op: SpatialOperator) -> DecayProfile:
    thresholds, fit_range = defect_thresholds(op.K)
    return decay_profile(op, thresholds, fit_range)


def spectral_projections(family) -> ProjectorFamily:
    """
    P+-(t) = (1 +- sign H~(t)) / 2 on every grid time, with exact d_t P+.

    Raises:
        GapError: If some H~(t) has an eigenvalue within 1e-6 of zero
    """
    P_plus, dP_plus, defects = [], [], []
    for t in family.grid.t:
        H = family.at(t)
        eig = hermitize_and_eig(H)
        gap = float(np.min(np.abs(eig.values)))
        if gap < GAP_FLOOR:
            raise GapError(f"H~({t:.6g}) has no spectral gap (min |eigenvalue| {gap:.2e})",
                           invariant="spectral_gap", residual=gap)
        S = operator_function(H, sign, eig)
        P = S.with_matrix(0.5 * (np.eye(S.size) + S.mat))
        dS = operator_function_derivative(H, family.derivative(t), sign, sign_derivative, eig)
        dP = dS.with_matrix(0.5 * dS.mat)
        P_plus.append(P)
        dP_plus.append(dP)
        defects.append(dP + P.commutator(H.with_matrix(1j * H.mat)))

    zero = [P.with_matrix(np.zeros_like(P.mat)) for P in P_plus]
    profiles = [_profile(D) for D in defects]
    proj = ProjectorFamily(family.grid, family, 0, P_plus, P_plus, dP_plus, zero, defects,
                           profiles, [worst_profile(profiles)], getattr(family, 'lam', 0.0))
    ranks = int(round(np.trace(P_plus[0].mat).real))
    logger.info(f"Spectral projections on {len(family.grid)} times: rank P+ = {ranks} of {P_plus[0].size}")
    return proj


def _exponentials(R: SpatialOperator) -> Tuple[SpatialOperator, SpatialOperator]:
    eig: EigenDecomposition = hermitize_and_eig(R)
    return (operator_function(R, lambda v: np.exp(1j * v), eig),
            operator_function(R, lambda v: np.exp(-1j * v), eig))


def adiabatic_correct(proj0: ProjectorFamily, family=None, order: int = 1,
                      derivative_method: str = 'fd', derivative_order: int = 6) -> ProjectorFamily:
    """
    Correct spectral projections so they intertwine with the evolution.

    Starting from S_1 = -(2 eps)^{-1} d_t P+, each iteration forms the
    gram-self-adjoint generator R = P+ S P- + P- S^* P+, the conjugated
    Hamiltonian H~_R = e^{iR} H~ e^{-iR} + (1/i) d_t(e^{iR}) e^{-iR}, the
    defect D = d_t P+ + [P+, i H~_R], and updates S -= (2 eps)^{-1} P+ D P-.

    Args:
        proj0: Uncorrected projections from spectral_projections
        family: Regularized Hamiltonian family (proj0's when omitted)
        order: Number of iterations r >= 1
        derivative_method: Time differentiation of e^{iR} ('fd' or 'spectral')
        derivative_order: Stencil order for 'fd'

    Returns:
        ProjectorFamily of the given order with P~+ = e^{-iR} P+ e^{iR}
    """
    if order < 1:
        raise ValueError(f"correction order must be >= 1, got {order}")
    family = family or proj0.hamiltonian
    grid = proj0.grid
    times = grid.t
    P = proj0.P_uncorrected
    dP = proj0.dP_uncorrected
    ident = np.eye(P[0].size)
    gram = P[0].gram

    half_inverse_eps = [operator_function(family.epsilon(t), lambda v: 0.5 / v) for t in times]
    H = [family.at(t) for t in times]
    S = [-(inv @ d).mat for inv, d in zip(half_inverse_eps, dP)]

    history = list(proj0.history)
    previous = history[-1].norm_at(max(1, proj0.K // 2))
    D: List[np.ndarray] = []
    for j in range(1, order + 1):
        if D:
            S = [S[i] - (half_inverse_eps[i].mat @ P[i].mat @ D[i] @ (ident - P[i].mat))
                 for i in range(len(times))]
        R, E, E_inv = [], [], []
        for Pi, Si in zip(P, S):
            Q = ident - Pi.mat
            raw = Pi.mat @ Si @ Q + Q @ gram.adjoint(Si) @ Pi.mat
            Ri = Pi.with_matrix(gram.symmetrize(raw), -1.0 * j)
            e, e_inv = _exponentials(Ri)
            R.append(Ri)
            E.append(e)
            E_inv.append(e_inv)

        dE = time_derivative(np.array([e.mat for e in E]), grid.dt, derivative_method, derivative_order)
        D = []
        for i in range(len(times)):
            conjugated = E[i].mat @ H[i].mat @ E_inv[i].mat - 1j * dE[i] @ E_inv[i].mat
            D.append(dP[i].mat + P[i].mat @ (1j * conjugated) - (1j * conjugated) @ P[i].mat)

        defects = [E_inv[i].with_matrix(E_inv[i].mat @ D[i] @ E[i].mat) for i in range(len(times))]
        profiles = [_profile(op) for op in defects]
        worst = worst_profile(profiles)
        history.append(worst)
        current = worst.norm_at(max(1, proj0.K // 2))
        logger.info(f"Adiabatic iteration {j}: defect at K/2 {current:.3e}, slope {worst.slope:.3f}")
        if current > previous:
            logger.warning(f"Adiabatic iteration {j} increased the defect at K/2 "
                           f"({previous:.3e} -> {current:.3e}); scenario may be too rough for K={proj0.K}")
        previous = current

    P_tilde = [E_inv[i].with_matrix(E_inv[i].mat @ P[i].mat @ E[i].mat) for i in range(len(times))]
    return ProjectorFamily(grid, family, order, P_tilde, P, dP, R, defects, profiles,
                           history, proj0.lambda_used)


def build_projections(family, order: int, derivative_method: str = 'fd',
                      derivative_order: int = 6, lambda_max: float = LAMBDA_MAX) -> ProjectorFamily:
    """Regularize, project and correct to the given order."""
    regularized, lam = gap_regularize(family, lambda_max)
    proj = spectral_projections(regularized)
    proj.lambda_used = lam
    if order == 0:
        return proj
    return adiabatic_correct(proj, regularized, order, derivative_method, derivative_order)
