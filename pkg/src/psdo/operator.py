"""
Operators on the Fourier-truncated spinor space of S^1.

Coefficient vectors are indexed mode-major: entry (k + K) * N + alpha holds
the component of e^{ikx} v_alpha / sqrt(2*pi), k in -K..K.
"""

import logging
from dataclasses import dataclass, replace
from typing import Optional, Union

import numpy as np
import scipy.fft
import scipy.linalg

from src.errors import DimensionError, InnerProductError

logger = logging.getLogger(__name__)

ALIASING_TOLERANCE = 1e-10


def modes(K: int) -> np.ndarray:
    """Integer modes -K..K."""
    return np.arange(-K, K + 1)


def hermitian_part(mat: np.ndarray) -> np.ndarray:
    return 0.5 * (mat + mat.conj().T)


class Gram:
    """
    Positive-definite Hermitian matrix W defining <f, W g>.

    The Cholesky factor W = L L^* is computed once and shared by every
    operator carrying this gram.
    """

    def __init__(self, matrix: np.ndarray, identity: bool = False):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
            raise DimensionError(f"gram must be square, got {matrix.shape}")
        asymmetry = np.linalg.norm(matrix - matrix.conj().T) / max(np.linalg.norm(matrix), 1e-300)
        if asymmetry > 1e-12:
            raise InnerProductError(f"gram is not Hermitian (residual {asymmetry:.2e})",
                                    invariant="gram_hermitian", residual=float(asymmetry))
        self.matrix = hermitian_part(matrix)
        self.is_identity = identity
        if identity:
            self.chol = np.eye(matrix.shape[0], dtype=complex)
            return
        try:
            self.chol = scipy.linalg.cholesky(self.matrix, lower=True)
        except np.linalg.LinAlgError as e:
            raise InnerProductError("gram is not positive definite", invariant="gram_positive") from e

    @classmethod
    def identity(cls, size: int) -> 'Gram':
        return cls(np.eye(size, dtype=complex), identity=True)

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """W^{-1} rhs."""
        if self.is_identity:
            return np.array(rhs, dtype=complex)
        return scipy.linalg.cho_solve((self.chol, True), rhs)

    def adjoint(self, mat: np.ndarray) -> np.ndarray:
        """Gram adjoint W^{-1} A^* W."""
        if self.is_identity:
            return mat.conj().T.copy()
        return self.solve(mat.conj().T @ self.matrix)

    def symmetrize(self, mat: np.ndarray) -> np.ndarray:
        """Nearest gram-self-adjoint matrix W^{-1} herm(W A)."""
        if self.is_identity:
            return hermitian_part(mat)
        return self.solve(hermitian_part(self.matrix @ mat))

    def inner(self, f: np.ndarray, g: np.ndarray) -> complex:
        return np.vdot(f, self.matrix @ g)

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix)[0])


@dataclass(frozen=True)
class SpatialOperator:
    """
    Dense operator on the truncated space with its inner-product metadata.

    Attributes:
        mat: Complex matrix of size (2K+1) N
        gram: Inner product with respect to which adjoints are taken
        K: Frequency cutoff
        N: Spinor rank
        order_tag: Declared symbol order (metadata only)
    """
    mat: np.ndarray
    gram: Gram
    K: int
    N: int
    order_tag: float = 0.0

    def __post_init__(self):
        size = (2 * self.K + 1) * self.N
        if self.mat.shape != (size, size) or self.gram.size != size:
            raise DimensionError(f"operator of shape {self.mat.shape} does not match K={self.K}, N={self.N}")

    @property
    def size(self) -> int:
        return self.mat.shape[0]

    @classmethod
    def identity(cls, K: int, N: int, gram: Optional[Gram] = None) -> 'SpatialOperator':
        size = (2 * K + 1) * N
        return cls(np.eye(size, dtype=complex), gram or Gram.identity(size), K, N, 0.0)

    def with_matrix(self, mat: np.ndarray, order_tag: Optional[float] = None) -> 'SpatialOperator':
        return replace(self, mat=mat, order_tag=self.order_tag if order_tag is None else order_tag)

    def with_gram(self, gram: Gram) -> 'SpatialOperator':
        return replace(self, gram=gram)

    def adjoint(self) -> 'SpatialOperator':
        return self.with_matrix(self.gram.adjoint(self.mat))

    def self_adjointness_residual(self) -> float:
        """||W A - A^* W|| / ||W A|| in Frobenius norm."""
        WA = self.gram.matrix @ self.mat
        scale = max(np.linalg.norm(WA), 1e-300)
        return float(np.linalg.norm(WA - WA.conj().T) / scale)

    def apply(self, vec: np.ndarray) -> np.ndarray:
        return self.mat @ vec

    def commutator(self, other: 'SpatialOperator') -> 'SpatialOperator':
        return self.with_matrix(self.mat @ other.mat - other.mat @ self.mat,
                                self.order_tag + other.order_tag - 1)

    def __matmul__(self, other: Union['SpatialOperator', np.ndarray]):
        if isinstance(other, SpatialOperator):
            return self.with_matrix(self.mat @ other.mat, self.order_tag + other.order_tag)
        return self.mat @ other

    def __add__(self, other: 'SpatialOperator') -> 'SpatialOperator':
        return self.with_matrix(self.mat + other.mat, max(self.order_tag, other.order_tag))

    def __sub__(self, other: 'SpatialOperator') -> 'SpatialOperator':
        return self.with_matrix(self.mat - other.mat, max(self.order_tag, other.order_tag))

    def __neg__(self) -> 'SpatialOperator':
        return self.with_matrix(-self.mat)

    def __mul__(self, scalar: complex) -> 'SpatialOperator':
        return self.with_matrix(scalar * self.mat)

    __rmul__ = __mul__


def _symbol_coefficients(symbol: np.ndarray, K: int) -> np.ndarray:
    M = symbol.shape[0]
    if M < 4 * K + 2:
        raise DimensionError(f"need at least {4 * K + 2} space points for cutoff K={K}, got {M}")
    coeffs = scipy.fft.fft(symbol, axis=0) / M

    freqs = np.abs(scipy.fft.fftfreq(M, d=1.0 / M))
    energy = np.abs(coeffs) ** 2
    total = energy.sum()
    beyond = energy[freqs > 2 * K].sum()
    if total > 0 and beyond > ALIASING_TOLERANCE * total:
        logger.warning(f"Symbol has {beyond / total:.2e} of its x-energy beyond mode {2 * K}; "
                       f"truncation aliases it")
    return coeffs


def quantize_matrix(symbol: np.ndarray, K: int) -> np.ndarray:
    """
    Kohn-Nirenberg matrix of a sampled symbol.

    Args:
        symbol: Samples a(x_j, k) of shape (M, 2K+1) for scalars or
            (M, 2K+1, N, N) for matrix symbols

    Returns:
        Matrix whose (k', k) block is the (k' - k)-th x-Fourier coefficient of a(., k)
    """
    scalar = symbol.ndim == 2
    if scalar:
        symbol = symbol[:, :, None, None]
    M, nk, N, _ = symbol.shape
    if nk != 2 * K + 1:
        raise DimensionError(f"symbol has {nk} modes, expected {2 * K + 1}")

    coeffs = _symbol_coefficients(symbol, K)
    ks = modes(K)
    diff = (ks[:, None] - ks[None, :]) % M
    blocks = coeffs[diff, np.arange(nk)[None, :]]
    return blocks.transpose(0, 2, 1, 3).reshape(nk * N, nk * N)


def quantize(symbol: np.ndarray, K: int, gram: Optional[Gram] = None,
             order_tag: float = 0.0) -> SpatialOperator:
    """
    Kohn-Nirenberg quantization of a symbol sampled on grid x modes.

    Multiplication operators a(x, k) = f(x) and Fourier multipliers
    a(x, k) = g(k) are reproduced exactly.

    Args:
        symbol: Array of shape (M, 2K+1) or (M, 2K+1, N, N)
        K: Frequency cutoff
        gram: Inner product (identity when omitted)
        order_tag: Declared symbol order

    Returns:
        SpatialOperator
    """
    mat = quantize_matrix(symbol, K)
    N = 1 if symbol.ndim == 2 else symbol.shape[-1]
    return SpatialOperator(mat, gram or Gram.identity(mat.shape[0]), K, N, order_tag)


def spinor_extend(mat: np.ndarray, spinor: np.ndarray) -> np.ndarray:
    """Tensor a scalar mode matrix with an N x N spinor matrix (mode-major layout)."""
    return np.kron(mat, spinor)


def multiplication_matrix(f: np.ndarray, K: int, N: int = 1) -> np.ndarray:
    """Galerkin matrix of multiplication by f(x) on the spinor space."""
    scalar = quantize_matrix(np.repeat(np.asarray(f)[:, None], 2 * K + 1, axis=1), K)
    return spinor_extend(scalar, np.eye(N))


def fourier_multiplier(values: np.ndarray, N: int = 1) -> np.ndarray:
    """Diagonal matrix of a Fourier multiplier given on modes -K..K."""
    return np.diag(np.repeat(np.asarray(values, dtype=complex), N))


def gram_self_adjoint(weighted_symbol: np.ndarray, K: int, gram: Gram,
                      order_tag: float = 0.0) -> SpatialOperator:
    """
    Gram-self-adjoint operator A from the symbol of W A.

    Returns W^{-1} herm(Op(weighted_symbol)), so W A is Hermitian to rounding.
    """
    weighted = hermitian_part(quantize_matrix(weighted_symbol, K))
    N = 1 if weighted_symbol.ndim == 2 else weighted_symbol.shape[-1]
    return SpatialOperator(gram.solve(weighted), gram, K, N, order_tag)


def sobolev_weight(K: int, N: int, m: float) -> np.ndarray:
    """Diagonal of <D_x>^m = (1 + k^2)^{m/2}."""
    return np.repeat((1.0 + modes(K).astype(float) ** 2) ** (m / 2.0), N)
