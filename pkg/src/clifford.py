"""
Gamma matrix representations of Cl(1, n-1) for even spacetime dimension.

The representation for n+2 is built from the one for n by tensoring with
Pauli blocks, seeded by the 2x2 matrices below, so every downstream golden
value is reproducible.
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np
from scipy.linalg import null_space

from src.errors import CliffordStructureError, DimensionError

logger = logging.getLogger(__name__)

MAX_DIMENSION = 8

_SIGMA1 = np.array([[0, 1], [1, 0]], dtype=complex)
_SIGMA2 = np.array([[0, -1j], [1j, 0]], dtype=complex)
_SIGMA3 = np.array([[1, 0], [0, -1]], dtype=complex)

_SEED_GAMMAS = [
    np.array([[0, 1], [-1, 0]], dtype=complex),
    np.array([[0, 1], [1, 0]], dtype=complex),
]


@dataclass(frozen=True)
class GammaRep:
    """
    Faithful irreducible representation of the Clifford algebra.

    Attributes:
        n: Spacetime dimension (even, 2..8)
        N: Spinor rank 2^(n/2)
        gammas: Matrices gamma_0 .. gamma_{n-1}
        beta: Hermitian form with gamma_a^* beta = -beta gamma_a
        kappa: Real matrix K of the charge conjugation psi -> K conj(psi),
            present when n mod 8 is 2 or 4
        eta: Minkowski metric diag(-1, 1, ..., 1)
    """
    n: int
    N: int
    gammas: List[np.ndarray] = field(repr=False)
    beta: np.ndarray = field(repr=False)
    kappa: Optional[np.ndarray] = field(repr=False, default=None)
    eta: np.ndarray = field(repr=False, default=None)

    @property
    def d(self) -> int:
        """Number of spatial dimensions."""
        return self.n - 1

    def upper(self, c: int) -> np.ndarray:
        """gamma^c = eta^{cd} gamma_d."""
        return self.eta[c, c] * self.gammas[c]

    def apply_kappa(self, psi: np.ndarray) -> np.ndarray:
        """
        Apply the antilinear charge conjugation to a spinor (last axis).

        Raises:
            CliffordStructureError: If this dimension carries no kappa
        """
        if self.kappa is None:
            raise CliffordStructureError(f"no charge conjugation stored for n={self.n}")
        return np.conj(psi) @ self.kappa.T

    def clifford_residual(self) -> float:
        """Largest Frobenius residual of gamma_a gamma_b + gamma_b gamma_a - 2 eta_ab."""
        ident = np.eye(self.N)
        worst = 0.0
        for a in range(self.n):
            for b in range(self.n):
                anti = self.gammas[a] @ self.gammas[b] + self.gammas[b] @ self.gammas[a]
                worst = max(worst, np.linalg.norm(anti - 2 * self.eta[a, b] * ident))
        return worst

    def beta_residual(self) -> float:
        """Residual of beta Hermiticity and gamma_a^* beta = -beta gamma_a."""
        worst = np.linalg.norm(self.beta - self.beta.conj().T)
        for g in self.gammas:
            worst = max(worst, np.linalg.norm(g.conj().T @ self.beta + self.beta @ g))
        return float(worst)

    def kappa_residual(self) -> float:
        """Residual of K conj(gamma_a) = gamma_a K and K conj(K) = 1 (0 when absent)."""
        if self.kappa is None:
            return 0.0
        K = self.kappa
        worst = np.linalg.norm(K @ np.conj(K) - np.eye(self.N))
        for g in self.gammas:
            worst = max(worst, np.linalg.norm(K @ np.conj(g) - g @ K))
        return float(worst)


def _double(gammas: List[np.ndarray]) -> List[np.ndarray]:
    ident = np.eye(gammas[0].shape[0], dtype=complex)
    doubled = [np.kron(g, _SIGMA3) for g in gammas]
    doubled.append(np.kron(ident, _SIGMA1))
    doubled.append(np.kron(ident, _SIGMA2))
    return doubled


def _charge_conjugation(gammas: List[np.ndarray]) -> np.ndarray:
    """Solve K conj(gamma_a) = gamma_a K over real K and normalize to K^2 = 1."""
    N = gammas[0].shape[0]
    ident = np.eye(N)
    # vec(K conj(g) - g K) = (conj(g)^T (x) I - I (x) g) vec(K), column-major vec
    blocks = [np.kron(np.conj(g).T, ident) - np.kron(ident, g) for g in gammas]
    system = np.vstack(blocks)
    real_system = np.vstack([system.real, system.imag])
    basis = null_space(real_system)
    if basis.shape[1] == 0:
        raise CliffordStructureError("no real charge conjugation matrix exists")

    K = basis[:, 0].reshape(N, N, order='F')
    square = K @ K
    scale = square[0, 0]
    if scale <= 0 or not np.allclose(square, scale * ident, atol=1e-10):
        raise CliffordStructureError("charge conjugation does not square to a positive multiple of 1")
    K = K / np.sqrt(scale)

    pivot = np.flatnonzero(np.abs(K.ravel()) > 1e-12)[0]
    if K.ravel()[pivot] < 0:
        K = -K
    # Snap rounding noise so the representation is bit-reproducible.
    return np.round(K, 14) + 0.0


def build_gamma_rep(n: int) -> GammaRep:
    """
    Build the gamma matrices, beta and kappa for spacetime dimension n.

    Args:
        n: Even spacetime dimension with 2 <= n <= 8

    Returns:
        GammaRep satisfying the Clifford, beta and kappa relations

    Raises:
        DimensionError: If n is odd or out of range
    """
    if not isinstance(n, (int, np.integer)) or n % 2 or not 2 <= n <= MAX_DIMENSION:
        raise DimensionError(f"spacetime dimension must be even and in [2, {MAX_DIMENSION}], got {n}")

    gammas = [g.copy() for g in _SEED_GAMMAS]
    while len(gammas) < n:
        gammas = _double(gammas)

    N = gammas[0].shape[0]
    eta = np.diag([-1.0] + [1.0] * (n - 1))
    beta = 1j * gammas[0]
    kappa = _charge_conjugation(gammas) if n % 8 in (2, 4) else None

    for g in gammas:
        g.setflags(write=False)
    rep = GammaRep(n=n, N=N, gammas=gammas, beta=beta, kappa=kappa, eta=eta)
    logger.debug(f"Built gamma representation n={n}, N={N}, kappa={'yes' if kappa is not None else 'no'}")
    return rep


def gamma_of_vector(rep: GammaRep, v) -> np.ndarray:
    """
    Clifford image gamma(v) = v^a gamma_a.

    Raises:
        DimensionError: If v does not have n components
    """
    v = np.asarray(v, dtype=float)
    if v.shape != (rep.n,):
        raise DimensionError(f"vector must have {rep.n} components, got shape {v.shape}")
    return np.tensordot(v, np.array(rep.gammas), axes=1)


def ad_action(rep: GammaRep, a: np.ndarray, tol: float = 1e-10) -> np.ndarray:
    """
    Lorentz matrix Ad(a) defined by a gamma(x) a^{-1} = gamma(Ad(a) x).

    Args:
        rep: Gamma representation
        a: Invertible N x N matrix in the Clifford normalizer
        tol: Tolerance on the span residual and on imaginary parts

    Returns:
        Real n x n matrix whose column c holds the components of a gamma_c a^{-1}

    Raises:
        CliffordStructureError: If a gamma_c a^{-1} leaves span{gamma_b}
    """
    a = np.asarray(a, dtype=complex)
    if a.shape != (rep.N, rep.N):
        raise DimensionError(f"matrix must be {rep.N}x{rep.N}, got {a.shape}")
    try:
        a_inv = np.linalg.inv(a)
    except np.linalg.LinAlgError as e:
        raise CliffordStructureError("matrix is not invertible") from e

    ad = np.zeros((rep.n, rep.n), dtype=complex)
    for c in range(rep.n):
        image = a @ rep.gammas[c] @ a_inv
        for b in range(rep.n):
            ad[b, c] = np.trace(rep.gammas[b] @ image) / (rep.eta[b, b] * rep.N)
        rebuilt = sum(ad[b, c] * rep.gammas[b] for b in range(rep.n))
        residual = np.linalg.norm(image - rebuilt) / max(np.linalg.norm(image), 1.0)
        if residual > tol:
            raise CliffordStructureError(
                f"a gamma_{c} a^-1 is not in the span of the generators",
                invariant="clifford_normalizer", residual=float(residual))

    if np.max(np.abs(ad.imag)) > tol:
        raise CliffordStructureError("adjoint action is not real",
                                     invariant="clifford_normalizer",
                                     residual=float(np.max(np.abs(ad.imag))))
    return ad.real
