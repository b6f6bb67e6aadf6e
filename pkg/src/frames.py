"""
Frame geometry for diagonal metrics -A^2 dt^2 + B^2 sum_i dx_i^2.

A and B depend on (t, x) only. The product metric -dt^2 + h dx^2 is the case
A = 1, B = h^{1/2}; the conformal rescaling e^{2u}(-dt^2 + h dx^2) is
A = e^u, B = e^u h^{1/2}. Christoffel symbols are stored in the orthonormal
frame e_0 = A^{-1} d_t, e_i = B^{-1} d_i as Gamma[a, b, c] = (nabla_{e_b} e_c)^a,
each together with its exact time derivative.
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.fft

from src.clifford import GammaRep
from src.errors import DimensionError, SignatureError
from src.modelspec.dual import Dual
from src.modelspec.model import SampledModel

logger = logging.getLogger(__name__)


def minkowski_orthonormalize(g: np.ndarray) -> np.ndarray:
    """
    Upper-triangular F with positive diagonal such that F g F^T = eta.

    Writes g = G eta G^T with G = F^{-1} upper triangular, peeling one column
    of G at a time from the last index down to the first.

    Args:
        g: Real symmetric n x n matrix of Lorentzian signature

    Returns:
        The unique F described above

    Raises:
        SignatureError: If a pivot has the wrong sign
    """
    g = np.asarray(g, dtype=float)
    n = g.shape[0]
    if g.shape != (n, n) or n < 1:
        raise DimensionError(f"metric must be square, got {g.shape}")
    if not np.allclose(g, g.T, atol=1e-14 * max(1.0, np.abs(g).max())):
        raise SignatureError("metric is not symmetric", invariant="symmetry")

    eta = np.array([-1.0] + [1.0] * (n - 1))
    rest = g.copy()
    G = np.zeros_like(g)
    for k in range(n - 1, -1, -1):
        pivot = rest[k, k] / eta[k]
        if pivot <= 0:
            raise SignatureError(
                f"pivot {k} has the wrong sign ({rest[k, k]:.6g})",
                invariant="signature", residual=float(rest[k, k]))
        G[k, k] = np.sqrt(pivot)
        G[:k, k] = rest[:k, k] / (G[k, k] * eta[k])
        column = G[:k + 1, k]
        rest[:k + 1, :k + 1] -= eta[k] * np.outer(column, column)

    F = np.linalg.solve(G, np.eye(n))
    return np.triu(F)


@dataclass(frozen=True)
class FrameData:
    """
    Orthonormal frame data on a (t, x) grid.

    Attributes:
        n: Spacetime dimension
        lapse: A with its time derivative (shape T x M)
        scale: B with its time derivative
        christoffel: Gamma^a_{bc}, shape (T, M, n, n, n)
        christoffel_dt: time derivative of christoffel
    """
    n: int
    lapse: Dual
    scale: Dual
    christoffel: np.ndarray
    christoffel_dt: np.ndarray

    def lowered(self) -> np.ndarray:
        """Gamma_{abc} = eta_{ad} Gamma^d_{bc}."""
        eta = np.array([-1.0] + [1.0] * (self.n - 1))
        return eta[None, None, :, None, None] * self.christoffel

    def antisymmetry_residual(self) -> float:
        """max |Gamma_{abc} + Gamma_{cba}| over the grid."""
        low = self.lowered()
        return float(np.max(np.abs(low + np.swapaxes(low, 2, 4))))

    def time_transport_residual(self) -> float:
        """max |Gamma^a_{0b}|: zero when the spatial frame is parallel along d_t."""
        return float(np.max(np.abs(self.christoffel[:, :, :, 0, :])))


def metric_jets(sampled: SampledModel, conformal: bool = False) -> dict:
    """
    Lapse A, scale B and their derivatives, each carried with its time derivative.

    Args:
        sampled: Sampled scenario
        conformal: Use e^{2u}(-dt^2 + h dx^2) instead of -dt^2 + h dx^2
    """
    h, u = sampled.h, sampled.u
    root = h.time_jet().sqrt()
    root_dt = h.dt_jet() / (2.0 * root)
    root_dx = h.dx_jet() / (2.0 * root)
    if not conformal:
        zeros = np.zeros_like(h.value)
        return {
            'A': Dual(np.ones_like(h.value), zeros),
            'A_dx': Dual(zeros, zeros),
            'B': root,
            'B_dt': root_dt,
            'B_dx': root_dx,
        }

    A = u.time_jet().exp()
    B = A * root
    return {
        'A': A,
        'A_dx': A * u.dx_jet(),
        'B': B,
        'B_dt': B * (u.dt_jet() + root_dt / root),
        'B_dx': B * (u.dx_jet() + root_dx / root),
    }


def frame_christoffels(sampled: SampledModel, conformal: bool = False) -> FrameData:
    """
    Frame Christoffel symbols of the scenario metric.

    For -dt^2 + h dx^2 the nonzero entries are Gamma^0_{11} = Gamma^1_{10}
    = d_t h / (2h); Gamma^a_{0b} vanishes identically.

    Args:
        sampled: Sampled scenario (ellipticity already checked)
        conformal: Include the conformal factor e^{2u}

    Returns:
        FrameData on the sampled grid
    """
    n = sampled.n
    jets = metric_jets(sampled, conformal)
    A, B = jets['A'], jets['B']
    w_lapse = jets['A_dx'] / (A * B)
    w_expand = jets['B_dt'] / (A * B)
    w_bend = jets['B_dx'] / (B * B)

    shape = A.val.shape + (n, n, n)
    gamma = np.zeros(shape)
    gamma_dt = np.zeros(shape)

    def put(a, b, c, jet: Dual, sign: float = 1.0):
        gamma[..., a, b, c] = sign * jet.val
        gamma_dt[..., a, b, c] = sign * jet.dot

    put(0, 0, 1, w_lapse)
    put(1, 0, 0, w_lapse)
    put(0, 1, 1, w_expand)
    put(1, 1, 0, w_expand)
    for j in range(2, n):
        put(0, j, j, w_expand)
        put(j, j, 0, w_expand)
        put(j, j, 1, w_bend)
        put(1, j, j, w_bend, sign=-1.0)

    frames = FrameData(n=n, lapse=A, scale=B, christoffel=gamma, christoffel_dt=gamma_dt)
    logger.debug(f"Frame Christoffels on {A.val.shape} grid, antisymmetry residual "
                 f"{frames.antisymmetry_residual():.2e}")
    return frames


def _gamma_products(rep: GammaRep) -> np.ndarray:
    return np.array([[rep.gammas[a] @ rep.upper(c) for c in range(rep.n)] for a in range(rep.n)])


def spin_coefficients(frames: FrameData, rep: GammaRep) -> Dual:
    """
    Spin connection sigma_b = 1/4 Gamma^a_{bc} gamma_a gamma^c.

    Returns:
        Dual whose val and dot have shape (T, M, n, N, N); complex, since
        gamma_0 gamma_j is imaginary for some transverse directions j

    Raises:
        DimensionError: If the frame dimension differs from the representation
    """
    if frames.n != rep.n:
        raise DimensionError(f"frames are {frames.n}-dimensional, representation is {rep.n}")
    products = _gamma_products(rep)
    value = 0.25 * np.einsum('tmabc,acij->tmbij', frames.christoffel, products)
    dot = 0.25 * np.einsum('tmabc,acij->tmbij', frames.christoffel_dt, products)
    return Dual(value, dot)


def beta_compatibility_residual(sigma: Dual, rep: GammaRep) -> float:
    """max |sigma_b^* beta + beta sigma_b|."""
    s = sigma.val
    lhs = np.conj(np.swapaxes(s, -1, -2)) @ rep.beta + rep.beta @ s
    return float(np.max(np.abs(lhs))) if lhs.size else 0.0


def spectral_dx(f: np.ndarray, axis: int = 0) -> np.ndarray:
    """Derivative of periodic samples on [0, 2*pi) along `axis`."""
    M = f.shape[axis]
    k = scipy.fft.fftfreq(M, d=1.0 / M)
    if M % 2 == 0:
        k[M // 2] = 0.0
    shape = [1] * f.ndim
    shape[axis] = M
    return scipy.fft.ifft(1j * k.reshape(shape) * scipy.fft.fft(f, axis=axis), axis=axis)


def spinor_derivative_x(frames: FrameData, sigma: Dual, psi: np.ndarray, time_index: int) -> np.ndarray:
    """
    nabla^S_{e_1} psi = B^{-1} d_x psi + sigma_1 psi on one time slice.

    Args:
        psi: Spinor samples of shape (M, N)
    """
    B = frames.scale.val[time_index][:, None]
    return spectral_dx(psi, axis=0) / B + np.einsum('mij,mj->mi', sigma.val[time_index, :, 1], psi)


def vector_derivative_x(frames: FrameData, Y: np.ndarray, time_index: int) -> np.ndarray:
    """
    Frame components of nabla_{e_1} Y for Y = Y^c e_c on one time slice.

    Args:
        Y: Frame components of shape (M, n)
    """
    B = frames.scale.val[time_index][:, None]
    gamma = frames.christoffel[time_index, :, :, 1, :]
    return spectral_dx(Y, axis=0) / B + np.einsum('mac,mc->ma', gamma, Y)
