"""
High-frequency block norms as the finite-rank measure of smoothing.
"""

import logging
from dataclasses import dataclass, field
from typing import Iterable, List, Optional, Sequence, Tuple

import numpy as np

from src.psdo.operator import SpatialOperator, modes

logger = logging.getLogger(__name__)

NOISE_FLOOR = 1e-300


@dataclass(frozen=True)
class DecayProfile:
    """
    Block norms mu(K') = ||Q_K' A Q_K'|| with Q_K' the projector onto |k| >= K'.

    Attributes:
        thresholds: K' values, ascending
        norms: mu(K'), nonincreasing
        slope: Least-squares slope of log mu against log K' over fit_range
        fit_range: (K'_lo, K'_hi) used for the fit
    """
    thresholds: List[int]
    norms: List[float]
    slope: float
    fit_range: Tuple[float, float] = field(default=(0.0, 0.0))

    def norm_at(self, K_prime: int) -> float:
        """mu at the largest threshold not above K_prime."""
        below = [i for i, k in enumerate(self.thresholds) if k <= K_prime]
        if not below:
            raise ValueError(f"no threshold at or below {K_prime}")
        return self.norms[below[-1]]

    def rows(self, name: str) -> List[dict]:
        return [{'name': name, 'K_prime': int(k), 'block_norm': float(mu)}
                for k, mu in zip(self.thresholds, self.norms)]


def default_thresholds(K: int, count: int = 12) -> List[int]:
    """Roughly log-spaced integer thresholds in [1, K]."""
    raw = np.geomspace(1, max(K, 1), count)
    return sorted({int(round(v)) for v in raw})


def block_norm(mat: np.ndarray, K: int, N: int, K_prime: int) -> float:
    """Spectral norm of the block of mat on modes |k| >= K_prime."""
    mask = np.repeat(np.abs(modes(K)) >= K_prime, N)
    if not np.any(mask):
        return 0.0
    return float(np.linalg.norm(mat[np.ix_(mask, mask)], 2))


def fit_slope(thresholds: Sequence[int], norms: Sequence[float],
              fit_range: Tuple[float, float]) -> float:
    """Least-squares slope of log(mu) against log(K') inside fit_range."""
    lo, hi = fit_range
    points = [(k, mu) for k, mu in zip(thresholds, norms) if lo <= k <= hi and k > 0]
    if len(points) < 2:
        return 0.0
    ks = np.log([p[0] for p in points])
    mus = np.log([max(p[1], NOISE_FLOOR) for p in points])
    slope, _ = np.polyfit(ks, mus, 1)
    return float(slope)


def decay_profile(A: SpatialOperator, thresholds: Optional[Iterable[int]] = None,
                  fit_range: Optional[Tuple[float, float]] = None) -> DecayProfile:
    """
    Decay profile of an operator's high-frequency blocks.

    Args:
        A: SpatialOperator
        thresholds: K' values (log-spaced in [1, K] when omitted)
        fit_range: K' interval for the slope fit (the largest decade when omitted)

    Returns:
        DecayProfile
    """
    K, N = A.K, A.N
    ks = sorted(set(int(k) for k in (thresholds or default_thresholds(K))))
    norms = [block_norm(A.mat, K, N, k) for k in ks]
    # enforce monotonicity against rounding in nested blocks
    norms = list(np.minimum.accumulate(norms))
    if fit_range is None:
        top = max(ks)
        fit_range = (top / 10.0, float(top))
    slope = fit_slope(ks, norms, fit_range)
    return DecayProfile(ks, [float(mu) for mu in norms], slope, (float(fit_range[0]), float(fit_range[1])))


def worst_profile(profiles: Sequence[DecayProfile]) -> DecayProfile:
    """Pointwise maximum of profiles sharing thresholds; the slope is refitted."""
    if not profiles:
        raise ValueError("no profiles to combine")
    thresholds = profiles[0].thresholds
    norms = np.max(np.array([p.norms for p in profiles]), axis=0)
    fit_range = profiles[0].fit_range
    return DecayProfile(list(thresholds), [float(mu) for mu in norms],
                        fit_slope(thresholds, norms, fit_range), fit_range)
