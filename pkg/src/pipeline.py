"""
Construct-verify-report pipeline behind the command line.

Each subcommand runs a list of check suites against one scenario and writes
report.json, profiles.csv and optionally kernels.bin into the scenario's
output directory.
"""

import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np

from src.clifford import build_gamma_rep
from src.config import Config
from src.errors import ConfigError, ExpressionError, HadamardError
from src.evolution import (
    Propagator,
    build_kernels,
    feynman_jump,
    green_kernels,
    kernel_stack,
    richardson_ratio,
    sobolev_bounds,
)
from src.frames import (
    beta_compatibility_residual,
    frame_christoffels,
    minkowski_orthonormalize,
    spectral_dx,
    spin_coefficients,
)
from src.microlocal import Wavepacket, intertwining_defect, leakage, random_packets
from src.projections import (
    ProjectorFamily,
    adiabatic_correct,
    bump,
    gap_regularize,
    spectral_projections,
)
from src.psdo.decay import DecayProfile
from src.psdo.operator import modes
from src.psdo.spectral import (
    hermitize_and_eig,
    inverse_sqrt,
    inverse_sqrt_quadrature,
    set_default_solver,
)
from src.reduction import assemble_H, assemble_dirac, conformal_residual, density_transport
from src.reports.schema import CheckResult, RunReport
from src.reports.storage import ReportWriter
from src.states import (
    StateBundle,
    build_adiabatic_state,
    covariance_homogeneity_residual,
    deformed_state,
    feynman_consistency,
    spacetime_covariances,
    vacuum_state,
)
from src.timegrid import TimeGrid

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_INVARIANT = 1
EXIT_CONFIG = 2

SUBCOMMANDS = ('validate', 'construct', 'evolve', 'feynman', 'microlocal', 'sweep')

TOLERANCES = {
    'clifford': 1e-12,
    'frames': 1e-12,
    'hamiltonian': 1e-9,
    'oracle': 1e-6,
    'spectrum': 1e-11,
    'solver': 1e-10,
    'unitarity': 1e-12,
    'groupoid': 1e-10,
    'projection': 1e-10,
    'state': 1e-10,
    'vacuum_square': 1e-12,
    'vacuum_match': 1e-10,
    'jump': 1e-12,
    'feynman': 1e-10,
    'lambda_sum': 1e-10,
    'energy': 1e-10,
    'richardson': 0.5,
    'leakage_order': 1e-12,
}

# Per-order improvement of the fitted defect slope, and the norm at K/2 below
# which a profile is rounding noise and its slope is not compared.
MIN_SLOPE_GAIN = 0.7
DEFECT_FLOOR = 1e-10
DEFORMED_RATIO = 2.0

KERNEL_PAIRS = 10
JACOBI_MAX_SIZE = 80


@dataclass
class RunResult:
    """
    Outcome of a pipeline run.

    Attributes:
        status: Exit status (0 pass, 1 invariant failure, 2 configuration error)
        report: The run report
        paths: Written files by kind ('report', 'profiles', 'kernels')
        error: Message of the error that ended the run early, if any
    """
    status: int
    report: RunReport
    paths: Dict[str, Path] = field(default_factory=dict)
    error: Optional[str] = None


class Scenario:
    """Lazily built objects of one configured scenario."""

    def __init__(self, config: Config):
        self.config = config
        self.model = config.model()
        self.rep = build_gamma_rep(config.dimension)
        self.grid = config.grid()
        self.K = config.cutoff_k
        self.M = config.space_points
        self.momentum = config.transverse_momentum
        self.rng = np.random.default_rng(config.seed)
        self.dumps: Dict[str, np.ndarray] = {}
        self._projections: Dict[int, ProjectorFamily] = {}
        self._states: Dict[int, StateBundle] = {}

    @cached_property
    def family(self):
        return assemble_H(self.model, self.rep, self.K, self.grid, self.M,
                          transverse_momentum=self.momentum)

    @cached_property
    def propagator(self) -> Propagator:
        return Propagator(self.family)

    @cached_property
    def regularized(self):
        family, _ = gap_regularize(self.family, self.config.lambda_max)
        return family

    @cached_property
    def regularized_propagator(self) -> Propagator:
        if self.regularized.lam == 0.0:
            return self.propagator
        return Propagator(self.regularized)

    @cached_property
    def kernels(self):
        transport = density_transport(self.model, self.grid, self.M, self.K, self.rep.N)
        return build_kernels(self.propagator, transport)

    def projections(self, order: int) -> ProjectorFamily:
        if order not in self._projections:
            if 0 not in self._projections:
                self._projections[0] = spectral_projections(self.regularized)
            if order > 0:
                self._projections[order] = adiabatic_correct(
                    self._projections[0], self.regularized, order,
                    self.config.time_derivative, self.config.time_derivative_order)
        return self._projections[order]

    def state(self, order: int) -> StateBundle:
        if order not in self._states:
            self._states[order] = build_adiabatic_state(self.projections(order), self.model)
        return self._states[order]

    def test_section(self) -> np.ndarray:
        """Smooth section (T, M, N) compactly supported inside the time interval."""
        t = self.grid.t
        center = 0.5 * (t[0] + t[-1])
        half = 0.8 * 0.5 * (t[-1] - t[0])
        x = 2.0 * np.pi * np.arange(self.M) / self.M
        v = self.rng.normal(size=self.rep.N) + 1j * self.rng.normal(size=self.rep.N)
        k = int(self.rng.integers(1, max(2, self.K // 4) + 1))
        profile = bump((t - center) / half)[:, None] * np.exp(1j * k * x)[None, :]
        return profile[..., None] * v[None, None, :]

    def packet(self) -> Wavepacket:
        configured = self.config.packet
        if configured is not None:
            return Wavepacket(**configured)
        return random_packets(self.config.seed, 1, self.K, self.rep.N)[0]


def _is_flat(scenario: Scenario) -> bool:
    sampled = scenario.model.sample([0.0], scenario.M)
    return (scenario.model.is_static() and np.ptp(sampled.h.value) == 0.0
            and np.ptp(sampled.m.value) == 0.0)


def check_clifford(scenario: Scenario, report: RunReport) -> None:
    rep = scenario.rep
    tol = TOLERANCES['clifford']
    report.add_check('clifford.relations', rep.clifford_residual(), tol)
    report.add_check('clifford.beta', rep.beta_residual(), tol)
    report.add_check('clifford.kappa', rep.kappa_residual(), tol)


def check_frames(scenario: Scenario, report: RunReport) -> None:
    sampled = scenario.model.sample(scenario.grid.t, scenario.M)
    tol = TOLERANCES['frames']
    worst = 0.0
    n = scenario.rep.n
    eta = np.diag([-1.0] + [1.0] * (n - 1))
    conformal = np.exp(2.0 * sampled.u.value)
    for i in scenario.rng.integers(0, len(scenario.grid), size=4):
        for j in scenario.rng.integers(0, scenario.M, size=4):
            g = conformal[i, j] * np.diag([-1.0] + [sampled.h.value[i, j]] * (n - 1))
            F = minkowski_orthonormalize(g)
            worst = max(worst, float(np.max(np.abs(F @ g @ F.T - eta))))
    report.add_check('frames.orthonormalization', worst, tol)

    frames = frame_christoffels(sampled, conformal=scenario.model.has_conformal_factor())
    report.add_check('frames.metric_compatibility', frames.antisymmetry_residual(), tol)
    sigma = spin_coefficients(frames, scenario.rep)
    report.add_check('frames.beta_compatibility', beta_compatibility_residual(sigma, scenario.rep), tol)


def check_hamiltonian(scenario: Scenario, report: RunReport) -> None:
    family = scenario.family
    report.add_check('hamiltonian.self_adjoint', family.self_adjointness_residual(), TOLERANCES['hamiltonian'])
    report.metrics['hamiltonian.raw_asymmetry'] = family.max_raw_asymmetry
    report.metrics['hamiltonian.principal_symbol_defect'] = max(family.principal_symbol_defect(0.0))


def check_dirac(scenario: Scenario, report: RunReport) -> None:
    dirac = assemble_dirac(scenario.model, scenario.rep, scenario.grid, scenario.M,
                           conformal=scenario.model.has_conformal_factor(),
                           transverse_momentum=scenario.momentum)
    psi1, psi2 = scenario.test_section(), scenario.test_section()
    scale = abs(dirac.pairing(psi1, dirac.apply(psi2))) + 1e-300
    report.metrics['dirac.formal_adjointness'] = dirac.formal_adjointness_residual(psi1, psi2) / scale


def check_conformal(scenario: Scenario, report: RunReport) -> None:
    residual = conformal_residual(scenario.model, scenario.rep, scenario.grid, scenario.M,
                                  scenario.test_section())
    report.metrics['conformal.identity'] = residual


def check_oracles(scenario: Scenario, report: RunReport) -> None:
    model, grid = scenario.model, scenario.grid
    tol = TOLERANCES['oracle']

    t0 = float(grid.t[len(grid) // 2 + 1])
    delta = 1e-4
    near = model.sample([t0 - delta, t0, t0 + delta], scenario.M)
    for name in ('h', 'm', 'u'):
        fields = getattr(near, name)
        fd_t = (fields.value[2] - fields.value[0]) / (2 * delta)
        fd_x = spectral_dx(fields.value[1]).real
        scale = max(1.0, float(np.max(np.abs(fields.value[1]))))
        residual = max(float(np.max(np.abs(fd_t - fields.dt[1]))),
                       float(np.max(np.abs(fd_x - fields.dx[1])))) / scale
        report.add_check(f'oracles.derivatives.{name}', residual, tol)

    eps = scenario.family.epsilon(0.0)
    square = eps @ eps
    by_eigen = inverse_sqrt(square, cross_validate=False)
    by_integral = inverse_sqrt_quadrature(square)
    mismatch = float(np.linalg.norm(by_integral.mat - by_eigen.mat) / np.linalg.norm(by_eigen.mat))
    report.add_check('oracles.inverse_sqrt', mismatch, tol)

    H = scenario.family.at(0.0)
    if _is_flat(scenario):
        sampled = model.sample([0.0], scenario.M)
        h, m = float(sampled.h.value[0, 0]), float(sampled.m.value[0, 0])
        p2 = float(sum(p * p for p in scenario.momentum))
        energies = np.sqrt((modes(scenario.K) ** 2 + p2) / h + m * m)
        expected = np.sort(np.concatenate([energies, -energies] * (scenario.rep.N // 2)))
        values = hermitize_and_eig(H).values
        report.add_check('oracles.flat_spectrum',
                         float(np.max(np.abs(values - expected)) / max(1.0, float(np.max(np.abs(expected))))),
                         TOLERANCES['spectrum'])
    if H.size <= JACOBI_MAX_SIZE:
        lapack = hermitize_and_eig(H, solver='lapack').values
        jacobi = hermitize_and_eig(H, solver='jacobi').values
        report.add_check('oracles.jacobi_vs_lapack',
                         float(np.max(np.abs(lapack - jacobi)) / max(1.0, float(np.max(np.abs(lapack))))),
                         TOLERANCES['solver'])


def check_evolution(scenario: Scenario, report: RunReport) -> None:
    propagator = scenario.propagator
    last, origin = len(scenario.grid) - 1, propagator.origin
    report.add_check('evolution.unitarity', propagator.unitarity_drift(), TOLERANCES['unitarity'])
    report.add_check('evolution.groupoid', propagator.groupoid_residual(last, origin, 0), TOLERANCES['groupoid'])
    report.add_check('evolution.full_composition', scenario.kernels.composition_residual(last, origin, 0),
                     TOLERANCES['groupoid'])
    report.metrics['evolution.homogeneity'] = propagator.homogeneity_residual(origin)
    for m, bound in sobolev_bounds(propagator).items():
        report.metrics[f'evolution.sobolev_bound.{m}'] = bound


def add_slope_gain(report: RunReport, name: str, previous: DecayProfile, current: DecayProfile,
                   K: int, gain: float = MIN_SLOPE_GAIN) -> Optional[CheckResult]:
    """
    Check that `current` decays at least `gain` orders faster than `previous`.

    Skipped (None) when either profile is at the rounding floor at K/2.
    """
    half = max(1, K // 2)
    if min(previous.norm_at(half), current.norm_at(half)) <= DEFECT_FLOOR:
        logger.info(f"{name}: defect at the rounding floor, slope not compared")
        return None
    return report.add_check(name, current.slope - previous.slope, -gain,
                            detail=f"slopes {previous.slope:.3f} -> {current.slope:.3f}")


def add_leakage_ordering(report: RunReport, name: str, corrected: float, uncorrected: float) -> CheckResult:
    """Corrected leakage may not exceed the uncorrected one."""
    return report.add_check(name, corrected - uncorrected, TOLERANCES['leakage_order'],
                            detail=f"{corrected:.3e} vs {uncorrected:.3e}")


def add_deformed_ratio(report: RunReport, name: str, deformed: float, adiabatic: float,
                       bound: float = DEFORMED_RATIO) -> CheckResult:
    """Leakage of the deformed state within `bound` times that of the adiabatic one."""
    ratio = deformed / max(adiabatic, TOLERANCES['leakage_order'])
    return report.add_check(name, ratio, bound, detail=f"{deformed:.3e} vs {adiabatic:.3e}")


def check_projections(scenario: Scenario, report: RunReport) -> None:
    order = scenario.config.correction_order
    proj = scenario.projections(order)
    tol = TOLERANCES['projection']
    report.add_check('projections.idempotent', proj.idempotency_residual(), tol)
    report.add_check('projections.self_adjoint', proj.self_adjointness_residual(), tol)
    report.add_check('projections.generator_off_diagonal', proj.off_diagonal_residual(), tol)
    report.metrics['projections.lambda'] = proj.lambda_used
    for r, profile in enumerate(proj.history):
        report.metrics[f'projections.slope.r{r}'] = profile.slope
        report.metrics[f'projections.defect_half_k.r{r}'] = profile.norm_at(max(1, scenario.K // 2))
        report.add_profile(f'defect.r{r}', profile.rows(f'defect.r{r}'))
    for r in range(1, len(proj.history)):
        add_slope_gain(report, f'projections.slope_gain.r{r}', proj.history[r - 1], proj.history[r], scenario.K)
    splitting = proj.splitting_profile(proj.grid.origin)
    report.add_profile('splitting', splitting.rows('splitting'))


def _add_state_checks(report: RunReport, prefix: str, bundle: StateBundle) -> None:
    tol = TOLERANCES['state']
    for name, value in bundle.residuals().items():
        comparison = 'min' if name.startswith('positivity') else 'max'
        report.add_check(f'{prefix}.{name}', value, -tol if comparison == 'min' else tol, comparison)


def check_car(scenario: Scenario, report: RunReport) -> None:
    _add_state_checks(report, 'car', scenario.state(scenario.config.correction_order))


def check_vacuum(scenario: Scenario, report: RunReport) -> None:
    vacuum = vacuum_state(scenario.model, scenario.rep, scenario.K, scenario.M,
                          transverse_momentum=scenario.momentum)
    _add_state_checks(report, 'vacuum', vacuum)
    report.add_check('vacuum.square_identity', vacuum.diagnostics['vacuum_square'], TOLERANCES['vacuum_square'])
    report.metrics['vacuum.gap'] = vacuum.diagnostics['vacuum_gap']
    proj = scenario.projections(0)
    if vacuum.provenance == 'vacuum' and proj.lambda_used == 0.0:
        P0 = proj.P_uncorrected[proj.grid.origin].mat
        report.add_check('vacuum.matches_spectral_projection',
                         float(np.linalg.norm(vacuum.reduced_c_plus.mat - P0, 2)), TOLERANCES['vacuum_match'])


def _kernel_pairs(scenario: Scenario) -> List[tuple]:
    T = len(scenario.grid)
    pairs = [(int(i), int(j)) for i, j in scenario.rng.integers(0, T, size=(KERNEL_PAIRS, 2))]
    origin = scenario.grid.origin
    return [(origin, origin)] + pairs


def check_kernels(scenario: Scenario, report: RunReport) -> None:
    state = scenario.state(scenario.config.correction_order)
    kernels = scenario.kernels
    pairs = _kernel_pairs(scenario)
    triples = [(i, j, '+') for i, j in pairs] + [(i, i, '-') for i, _ in pairs]
    green_kernels(kernels, triples, state)
    report.add_check('kernels.lambda_sum', spacetime_covariances(state, kernels, pairs + [(i, i) for i, _ in pairs]),
                     TOLERANCES['lambda_sum'])
    report.add_check('kernels.feynman_formulas', feynman_consistency(kernels, triples), TOLERANCES['feynman'])

    origin = scenario.grid.origin
    report.add_check('kernels.jump', feynman_jump(kernels, origin, state), TOLERANCES['jump'])
    report.metrics['kernels.jump_off_origin'] = feynman_jump(kernels, pairs[1][1], state)
    coincident = kernels.lambda_plus[(origin, origin)]
    expected = 1j * state.reduced_c_plus.mat @ kernels.gamma0
    report.add_check('kernels.lambda_at_origin', float(np.linalg.norm(coincident - expected, 2)),
                     TOLERANCES['lambda_sum'])
    report.metrics['kernels.homogeneity'] = covariance_homogeneity_residual(state, scenario.propagator, origin)
    scenario.dumps['feynman'] = kernel_stack(kernels, 'feynman')
    scenario.dumps['retarded'] = kernel_stack(kernels, 'retarded')


def check_microlocal(scenario: Scenario, report: RunReport) -> None:
    order = scenario.config.correction_order
    state = scenario.state(order)
    propagator = scenario.propagator
    collar = scenario.config.collar
    packet = scenario.packet()

    plus = leakage(state, packet, propagator, '+', collar)
    minus = leakage(state, packet, propagator, '-', collar)
    bare = leakage(None, packet, propagator, '+', collar)
    report.metrics['microlocal.leakage_plus'] = plus.leakage
    report.metrics['microlocal.leakage_minus'] = minus.leakage
    report.tables['leakage'] = [plus.to_dict(), minus.to_dict()]
    report.add_check('microlocal.energy_split',
                     abs(plus.total_energy + minus.total_energy - bare.total_energy) / bare.total_energy,
                     TOLERANCES['energy'])

    uncorrected = leakage(scenario.projections(0), packet, propagator, '+', collar)
    report.metrics['microlocal.leakage_plus.r0'] = uncorrected.leakage
    if order > 0:
        add_leakage_ordering(report, 'microlocal.leakage_ordering', plus.leakage, uncorrected.leakage)
    for extra in random_packets(scenario.config.seed, scenario.config.random_packets, scenario.K, scenario.rep.N):
        report.tables.setdefault('random_packets', []).append(leakage(state, extra, propagator, '+', collar).to_dict())

    proj = scenario.projections(order)
    profile = intertwining_defect(proj, scenario.regularized_propagator)
    report.metrics['microlocal.intertwining_slope'] = profile.slope
    report.add_profile('intertwining', profile.rows('intertwining'))
    if order > 0:
        base = intertwining_defect(scenario.projections(0), scenario.regularized_propagator)
        add_slope_gain(report, 'microlocal.intertwining_gain', base, profile, scenario.K, gain=0.0)


def compare_deformed(scenario: Scenario, report: RunReport) -> None:
    """Leakage of the state deformed from the vacuum of the scenario frozen at t_min."""
    model = scenario.model
    ultrastatic = model.frozen_at(scenario.config.t_min).without_conformal_factor()
    steps = scenario.config.time_steps if scenario.config.time_steps % 2 else scenario.config.time_steps + 1
    try:
        deformed = deformed_state(model, ultrastatic, scenario.rep, scenario.K, steps, scenario.M,
                                  transverse_momentum=scenario.momentum)
    except (ConfigError, HadamardError) as e:
        logger.warning(f"Skipping the deformed state comparison: {e}")
        return
    _add_state_checks(report, 'deformed', deformed)
    packet = scenario.packet()
    ours = leakage(deformed, packet, scenario.propagator, '+', scenario.config.collar).leakage
    report.metrics['microlocal.leakage_plus.deformed'] = ours
    adiabatic = leakage(scenario.state(scenario.config.correction_order), packet, scenario.propagator, '+',
                        scenario.config.collar).leakage
    add_deformed_ratio(report, 'microlocal.deformed_ratio', ours, adiabatic)
    report.metrics['deformed.gram_discrepancy'] = deformed.diagnostics['gram_discrepancy']


def check_richardson(scenario: Scenario, report: RunReport) -> None:
    config = scenario.config
    if scenario.model.is_static():
        # the midpoint exponential is exact here; the ratio would compare rounding noise
        logger.info("Static scenario: skipping the Richardson order check")
        return

    def build_family(count: int):
        grid = TimeGrid.from_interval(config.t_min, config.t_max, count)
        return assemble_H(scenario.model, scenario.rep, scenario.K, grid, scenario.M,
                          transverse_momentum=scenario.momentum)

    psi0 = scenario.packet().coefficients(scenario.K, scenario.M)
    ratio = richardson_ratio(build_family, config.time_steps, psi0, config.t_max)
    report.metrics['evolution.richardson_ratio'] = ratio
    report.add_check('evolution.richardson', abs(ratio - 4.0), TOLERANCES['richardson'])


def run_sweep(scenario: Scenario, report: RunReport) -> None:
    config = scenario.config
    parameter, values = config.sweep or ('correction_order', [0, 1, 2])
    rows = []
    for value in values:
        if parameter == 'correction_order':
            target, order = scenario, value
        else:
            points = max(config.space_points, 4 * value + 2)
            points += points % 2
            target = Scenario(config.with_overrides(cutoff_k=value, space_points=points))
            order = config.correction_order
        proj = target.projections(order)
        worst = proj.worst_profile()
        through = intertwining_defect(proj, target.regularized_propagator)
        rows.append({
            'parameter': parameter,
            'value': value,
            'defect_slope': worst.slope,
            'defect_half_k': worst.norm_at(max(1, target.K // 2)),
            'intertwining_slope': through.slope,
        })
        report.add_profile(f'sweep.{parameter}={value}', worst.rows(f'sweep.{parameter}={value}'))
    report.tables['sweep'] = rows


SUITES: Dict[str, Callable[[Scenario, RunReport], None]] = {
    'clifford': check_clifford,
    'frames': check_frames,
    'hamiltonian': check_hamiltonian,
    'dirac': check_dirac,
    'conformal': check_conformal,
    'oracles': check_oracles,
    'evolution': check_evolution,
    'projections': check_projections,
    'car': check_car,
    'vacuum': check_vacuum,
    'kernels': check_kernels,
    'microlocal': check_microlocal,
}


def suites_for(subcommand: str, config: Config) -> List[Callable[[Scenario, RunReport], None]]:
    """Check suites run by a subcommand, in order."""
    if subcommand == 'validate':
        return [SUITES[name] for name in config.checks]
    plan = {
        'construct': ['hamiltonian', 'projections', 'car'] + (['vacuum'] if 'vacuum' in config.checks else []),
        'evolve': ['hamiltonian', 'evolution'],
        'feynman': ['projections', 'car', 'kernels'],
        'microlocal': ['projections', 'microlocal'],
        'sweep': [],
    }[subcommand]
    runners = [SUITES[name] for name in plan]
    if subcommand == 'evolve':
        runners.append(check_richardson)
    elif subcommand == 'microlocal':
        runners.append(compare_deformed)
    elif subcommand == 'sweep':
        runners.append(run_sweep)
    return runners


def _record_failure(report: RunReport, error: HadamardError) -> None:
    residual = error.residual if error.residual is not None and math.isfinite(error.residual) else 0.0
    report.checks.append(CheckResult(error.invariant or type(error).__name__, False, float(residual),
                                     0.0, detail=f"{type(error).__name__}: {error}"))


def run(subcommand: str, config: Config, kernels: bool = False) -> RunResult:
    """
    Run one subcommand on a scenario and write its reports.

    Args:
        subcommand: One of SUBCOMMANDS
        config: Validated scenario
        kernels: Also write kernels.bin (evolve and feynman)

    Returns:
        RunResult with the exit status and written paths
    """
    if subcommand not in SUBCOMMANDS:
        raise ValueError(f"unknown subcommand {subcommand!r}")
    set_default_solver(config.eigensolver)
    report = RunReport.new(subcommand, config.to_dict())
    error = None
    status = EXIT_OK

    logger.info(f"Running '{subcommand}' on scenario '{config.name}'")
    scenario = None
    try:
        scenario = Scenario(config)
        for suite in suites_for(subcommand, config):
            logger.info(f"Suite {suite.__name__}")
            suite(scenario, report)
    except (ConfigError, ExpressionError) as e:
        error = str(e)
        status = EXIT_CONFIG
        _record_failure(report, e)
    except HadamardError as e:
        error = str(e)
        logger.error(f"{type(e).__name__}: {e}")
        _record_failure(report, e)

    if status == EXIT_OK and not report.passed:
        status = EXIT_INVARIANT
        for check in report.failed_checks():
            logger.error(f"Check {check.name} failed: residual {check.residual:.3e} (tolerance {check.tolerance:.1e})")

    writer = ReportWriter(config.out_dir)
    paths = {'report': writer.write_report(report), 'profiles': writer.write_profiles(report.profiles)}
    if kernels and scenario is not None:
        name = 'retarded' if subcommand == 'evolve' else 'feynman'
        if subcommand == 'evolve' and 'retarded' not in scenario.dumps:
            pairs = [(i, scenario.grid.origin, None) for i in range(len(scenario.grid))
                     if i != scenario.grid.origin]
            green_kernels(scenario.kernels, pairs)
            scenario.dumps['retarded'] = kernel_stack(scenario.kernels, 'retarded')
        if name in scenario.dumps:
            paths['kernels'] = writer.write_kernels(scenario.dumps[name])
    logger.info(f"'{subcommand}' finished with status {status}")
    return RunResult(status, report, paths, error)
