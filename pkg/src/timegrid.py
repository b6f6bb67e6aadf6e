"""
Uniform time grids and differentiation of sampled families along them.
"""

import logging
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.fft
from scipy.signal import savgol_coeffs

from src.errors import DimensionError, OffGridError

logger = logging.getLogger(__name__)

DERIVATIVE_METHODS = ('fd', 'spectral')


@dataclass(frozen=True)
class TimeGrid:
    """Uniformly spaced times t_0 < ... < t_{T-1}."""
    t: np.ndarray

    @classmethod
    def from_interval(cls, t_min: float, t_max: float, steps: int) -> 'TimeGrid':
        if steps < 2:
            raise DimensionError(f"need at least 2 time points, got {steps}")
        if not t_max > t_min:
            raise DimensionError(f"empty time interval [{t_min}, {t_max}]")
        return cls(np.linspace(t_min, t_max, steps))

    def __len__(self) -> int:
        return len(self.t)

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def midpoints(self) -> np.ndarray:
        return 0.5 * (self.t[1:] + self.t[:-1])

    def index_of(self, time: float, tol: float = 1e-9) -> int:
        """
        Raises:
            OffGridError: If time is not a grid point
        """
        i = int(np.argmin(np.abs(self.t - time)))
        if abs(self.t[i] - time) > tol * max(1.0, abs(self.dt)):
            raise OffGridError(f"t = {time} is not on the time grid (nearest {self.t[i]:.6g})")
        return i

    @property
    def origin(self) -> int:
        """Index of t = 0."""
        return self.index_of(0.0)

    def reversed(self) -> 'TimeGrid':
        """Grid of the time-reversed family, t -> -t."""
        return TimeGrid(-self.t[::-1])


@lru_cache(maxsize=64)
def _stencil(window: int, pos: int, dt: float) -> np.ndarray:
    return savgol_coeffs(window, window - 1, deriv=1, delta=dt, pos=pos, use='dot')


def _finite_difference(values: np.ndarray, dt: float, order: int) -> np.ndarray:
    T = values.shape[0]
    window = min(order + 1, T)
    if window % 2 == 0 and window < T:
        window += 1
    half = window // 2
    out = np.empty_like(values, dtype=np.result_type(values, float))
    for i in range(T):
        start = min(max(i - half, 0), T - window)
        coeffs = _stencil(window, i - start, dt)
        out[i] = np.tensordot(coeffs, values[start:start + window], axes=1)
    return out


def _spectral(values: np.ndarray, dt: float) -> np.ndarray:
    T = values.shape[0]
    if T < 3:
        raise DimensionError("spectral time derivative needs at least 3 points")
    extended = np.concatenate([values, values[-2:0:-1]], axis=0)
    L = extended.shape[0]
    freqs = 2.0 * np.pi * scipy.fft.fftfreq(L, d=dt)
    freqs[L // 2] = 0.0
    shape = (L,) + (1,) * (values.ndim - 1)
    derivative = scipy.fft.ifft(1j * freqs.reshape(shape) * scipy.fft.fft(extended, axis=0), axis=0)
    if not np.iscomplexobj(values):
        derivative = derivative.real
    return derivative[:T]


def time_derivative(values: np.ndarray, dt: float, method: str = 'fd', order: int = 6) -> np.ndarray:
    """
    Derivative along axis 0 of a family sampled on a uniform time grid.

    'fd' uses exact polynomial stencils of the given order (one-sided at
    the ends); 'spectral' differentiates the even extension by FFT, which
    forces a vanishing derivative at both ends.

    Args:
        values: Array of shape (T, ...)
        dt: Grid spacing
        method: 'fd' or 'spectral'
        order: Stencil order for 'fd'

    Returns:
        Array of the same shape
    """
    values = np.asarray(values)
    if values.shape[0] < 2:
        raise DimensionError("need at least 2 time samples to differentiate")
    if method == 'fd':
        return _finite_difference(values, dt, order)
    if method == 'spectral':
        return _spectral(values, dt)
    raise ValueError(f"unknown time derivative method {method!r}, expected one of {DERIVATIVE_METHODS}")
