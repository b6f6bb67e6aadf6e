"""
Frequency-domain diagnostics of how well covariances split positive and
negative energies: wrong-frequency leakage of evolved wave packets and the
high-frequency intertwining defect of projections with the evolution.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
import scipy.fft
import scipy.signal

from src.errors import ResolutionError
from src.evolution import Propagator
from src.projections import ProjectorFamily, defect_thresholds
from src.psdo.decay import DecayProfile, decay_profile, worst_profile
from src.psdo.operator import SpatialOperator, modes

logger = logging.getLogger(__name__)

DEFAULT_COLLAR = 2
CONCENTRATION = 0.99
SPREAD = 4.0


@dataclass(frozen=True)
class Wavepacket:
    """
    Periodic Gaussian packet e^{i k0 x} exp(-d(x, x0)^2 / (2 w^2)) v.

    Attributes:
        x0: Center in [0, 2*pi)
        k0: Center frequency
        width: Spatial width w
        polarization: Unit spinor v
    """
    x0: float
    k0: int
    width: float
    polarization: Tuple[complex, ...]

    def spectrum(self, M: int) -> np.ndarray:
        """Fourier coefficients of the scalar profile on modes -M/2..M/2-1 (fftfreq order)."""
        x = 2.0 * np.pi * np.arange(M) / M
        distance = np.angle(np.exp(1j * (x - self.x0)))
        profile = np.exp(1j * self.k0 * x) * np.exp(-distance ** 2 / (2.0 * self.width ** 2))
        return scipy.fft.fft(profile) / M

    def validate(self, K: int, M: int) -> float:
        """
        Check the packet fits the circle and the cutoff.

        Returns:
            Fraction of spectral energy inside |k - k0| <= 4/w

        Raises:
            ResolutionError: If the packet is too wide or too concentrated for the grid
        """
        if self.width <= 0 or 6.0 * self.width > 2.0 * np.pi:
            raise ResolutionError(f"packet width {self.width} does not fit on the circle",
                                  invariant="packet_width", residual=self.width)
        if abs(self.k0) + SPREAD / self.width > K:
            raise ResolutionError(f"packet band k0 +- {SPREAD / self.width:.3g} exceeds cutoff K={K}",
                                  invariant="packet_band", residual=abs(self.k0) + SPREAD / self.width - K)
        coeffs = self.spectrum(M)
        ks = scipy.fft.fftfreq(M, d=1.0 / M)
        energy = np.abs(coeffs) ** 2
        inside = float(energy[np.abs(ks - self.k0) <= SPREAD / self.width].sum() / energy.sum())
        if inside < CONCENTRATION:
            raise ResolutionError(f"packet keeps only {inside:.4f} of its energy near k0",
                                  invariant="packet_concentration", residual=inside)
        return inside

    def coefficients(self, K: int, M: int) -> np.ndarray:
        """Coefficient vector in the mode-major (k, spinor) layout."""
        self.validate(K, M)
        coeffs = self.spectrum(M)
        ks = modes(K)
        v = np.asarray(self.polarization, dtype=complex)
        v = v / np.linalg.norm(v)
        return np.kron(coeffs[ks % M], v)


def random_packets(seed: int, count: int, K: int, N: int) -> List[Wavepacket]:
    """Seeded packets with k0 in [K/8, K/4] and widths that keep them resolved."""
    rng = np.random.default_rng(seed)
    packets = []
    for _ in range(count):
        k0 = int(rng.integers(max(1, K // 8), max(2, K // 4) + 1))
        width = float(min(1.0, max(SPREAD / (K - k0), 0.25)))
        polarization = rng.normal(size=N) + 1j * rng.normal(size=N)
        packets.append(Wavepacket(float(rng.uniform(0, 2 * np.pi)), k0, width,
                                  tuple(polarization / np.linalg.norm(polarization))))
    return packets


@dataclass(frozen=True)
class LeakageReport:
    """
    Temporal-frequency energy split of an evolved packet.

    Attributes:
        sign: '+' or '-', the half-plane the covariance should select
        positive: Energy fraction at tau > 0 (outside the collar)
        negative: Energy fraction at tau < 0 (outside the collar)
        zero_frequency: Energy fraction at tau = 0 (outside the collar)
        collar_fraction: Energy fraction on modes |k| <= collar
        total_energy: Tapered energy sum over all modes
        window: (t_min, t_max)
        taper: Window function applied along t
        collar: Excluded modes around k = 0
    """
    sign: str
    positive: float
    negative: float
    zero_frequency: float
    collar_fraction: float
    total_energy: float
    window: Tuple[float, float]
    taper: str = 'hann'
    collar: int = DEFAULT_COLLAR

    @property
    def leakage(self) -> float:
        return self.negative if self.sign == '+' else self.positive

    def to_dict(self) -> dict:
        return {
            'sign': self.sign,
            'leakage': self.leakage,
            'positive': self.positive,
            'negative': self.negative,
            'zero_frequency': self.zero_frequency,
            'collar_fraction': self.collar_fraction,
            'total_energy': self.total_energy,
            'window': list(self.window),
            'taper': self.taper,
            'collar': self.collar,
        }


def _covariance(source, sign: str, size: int) -> Optional[np.ndarray]:
    if source is None:
        return None
    if isinstance(source, ProjectorFamily):
        c = source.at(0.0).mat
    elif hasattr(source, 'reduced_c_plus'):
        c = source.reduced_c_plus.mat
    elif isinstance(source, SpatialOperator):
        c = source.mat
    else:
        c = np.asarray(source)
    return c if sign == '+' else np.eye(size) - c


def leakage(source, packet: Union[Wavepacket, np.ndarray], propagator: Propagator, sign: str = '+',
            collar: int = DEFAULT_COLLAR) -> LeakageReport:
    """
    Evolve c+- applied to a packet and measure its temporal-frequency split.

    psi(t) = U(t, 0) c psi_0 is tapered by a Hann window in t and Fourier
    transformed along t. A positive-energy mode e^{i E t} lands at tau > 0.
    Energies use the gram norm; modes |k| <= collar are excluded.

    Args:
        source: StateBundle, ProjectorFamily, covariance matrix, or None for the bare packet
        packet: Wavepacket or coefficient vector
        propagator: Evolution on the window
        sign: '+' to measure c+, '-' for c-
        collar: Excluded modes around k = 0

    Raises:
        ResolutionError: If the packet does not fit the grid
    """
    if sign not in ('+', '-'):
        raise ValueError(f"sign must be '+' or '-', got {sign!r}")
    family = propagator.family
    K, N = family.K, family.N
    psi0 = (packet.coefficients(K, family.space_points) if isinstance(packet, Wavepacket)
            else np.asarray(packet, dtype=complex))
    c = _covariance(source, sign, family.size)
    if c is not None:
        psi0 = c @ psi0

    history = np.array([U @ psi0 for U in propagator.from_origin])
    taper = scipy.signal.get_window('hann', len(history), fftbins=False)
    spectrum = scipy.fft.fft(history * taper[:, None], axis=0)
    taus = scipy.fft.fftfreq(len(history), d=propagator.grid.dt)

    W = propagator.gram.matrix
    mask = np.repeat(np.abs(modes(K)) > collar, N)
    outside = spectrum * mask[None, :]
    energy = np.real(np.einsum('fi,ij,fj->f', outside.conj(), W, outside))
    total = np.real(np.einsum('fi,ij,fj->f', spectrum.conj(), W, spectrum))
    total_energy = float(total.sum())
    scale = max(total_energy, 1e-300)

    report = LeakageReport(
        sign=sign,
        positive=float(energy[taus > 0].sum() / scale),
        negative=float(energy[taus < 0].sum() / scale),
        zero_frequency=float(energy[taus == 0].sum() / scale),
        collar_fraction=float((total_energy - energy.sum()) / scale),
        total_energy=total_energy,
        window=(float(propagator.grid.t[0]), float(propagator.grid.t[-1])),
        collar=collar,
    )
    logger.debug(f"Leakage ({sign}) {report.leakage:.3e}, collar fraction {report.collar_fraction:.3e}")
    return report


def mean_leakage(source, packets: Sequence[Wavepacket], propagator: Propagator, sign: str = '+',
                 collar: int = DEFAULT_COLLAR) -> float:
    return float(np.mean([leakage(source, p, propagator, sign, collar).leakage for p in packets]))


def intertwining_defect(proj: ProjectorFamily, propagator: Propagator,
                        thresholds: Optional[Sequence[int]] = None) -> DecayProfile:
    """
    Worst-over-t profile of U(t, 0) P~+(0) - P~+(t) U(t, 0).

    Args:
        proj: Projections on the propagator's grid
        propagator: Evolution of the family the projections belong to
        thresholds: K' values (the projections' defect thresholds when omitted)
    """
    default, fit_range = defect_thresholds(proj.K)
    thresholds = list(thresholds) if thresholds is not None else default
    P0 = proj.P_plus[propagator.origin].mat
    profiles = []
    for i, U in enumerate(propagator.from_origin):
        Pt = proj.P_plus[i]
        delta = Pt.with_matrix(U @ P0 - Pt.mat @ U)
        profiles.append(decay_profile(delta, thresholds, fit_range))
    worst = worst_profile(profiles)
    logger.info(f"Intertwining defect (r={proj.order}): slope {worst.slope:.3f}, "
                f"norm at K/2 {worst.norm_at(max(1, proj.K // 2)):.3e}")
    return worst
