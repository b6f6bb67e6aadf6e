"""
Functional calculus for gram-self-adjoint operators.

An operator A self-adjoint for <., W .> is brought to Hermitian form by the
congruence L^* A L^{-*} with W = L L^*; eigenvectors are mapped back so they
are W-orthonormal and f(A) = V f(Lambda) V^{-1} with V^{-1} = V^* W.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Optional, Tuple

import numpy as np
import scipy.integrate
import scipy.linalg

from src.errors import (
    ConvergenceError,
    QuadratureMismatchError,
    SelfAdjointnessError,
    SpectralDomainError,
)
from src.psdo.operator import SpatialOperator, hermitian_part

logger = logging.getLogger(__name__)

SOLVERS = ('lapack', 'jacobi')
_default_solver = 'lapack'


def set_default_solver(name: str) -> None:
    """Select the eigensolver used when none is passed explicitly."""
    global _default_solver
    if name not in SOLVERS:
        raise ValueError(f"unknown eigensolver {name!r}, expected one of {SOLVERS}")
    _default_solver = name


def jacobi_eigh(H: np.ndarray, tol: float = 1e-14, max_sweeps: int = 50) -> Tuple[np.ndarray, np.ndarray]:
    """
    Cyclic complex Jacobi eigensolver for a Hermitian matrix.

    Each rotation first removes the phase of the pivot a_pq, then applies
    the real symmetric Jacobi rotation that zeroes it.

    Args:
        H: Hermitian matrix
        tol: Stop when the off-diagonal Frobenius norm falls below tol * ||H||
        max_sweeps: Sweep limit

    Returns:
        Ascending eigenvalues and unitary eigenvector matrix

    Raises:
        ConvergenceError: If the sweep limit is reached
    """
    A = np.array(H, dtype=complex)
    n = A.shape[0]
    V = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(A), 1e-300)

    for sweep in range(max_sweeps):
        off = np.sqrt(max(np.linalg.norm(A) ** 2 - np.sum(np.abs(np.diag(A)) ** 2), 0.0))
        if off <= tol * scale:
            logger.debug(f"Jacobi converged after {sweep} sweeps (off-diagonal {off:.2e})")
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                magnitude = abs(apq)
                if magnitude <= 1e-300:
                    continue
                phase = apq / magnitude
                theta = (A[q, q].real - A[p, p].real) / (2.0 * magnitude)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                rot = np.array([[c, s], [-s * np.conj(phase), c * np.conj(phase)]])

                idx = [p, q]
                A[:, idx] = A[:, idx] @ rot
                A[idx, :] = rot.conj().T @ A[idx, :]
                V[:, idx] = V[:, idx] @ rot
                A[p, q] = A[q, p] = 0.0
                A[p, p] = A[p, p].real
                A[q, q] = A[q, q].real
    else:
        off = np.sqrt(max(np.linalg.norm(A) ** 2 - np.sum(np.abs(np.diag(A)) ** 2), 0.0))
        if off > tol * scale:
            raise ConvergenceError(f"Jacobi eigensolver did not converge in {max_sweeps} sweeps",
                                   invariant="jacobi_convergence", residual=float(off / scale))

    values = np.diag(A).real
    order = np.argsort(values, kind='stable')
    return values[order], V[:, order]


@dataclass(frozen=True)
class EigenDecomposition:
    """
    Eigendecomposition A = V diag(values) V^{-1} with W-orthonormal V.

    Attributes:
        values: Real eigenvalues, ascending
        vectors: V
        inverse: V^{-1} = V^* W
        transform: Cholesky factor L of the gram
    """
    values: np.ndarray
    vectors: np.ndarray
    inverse: np.ndarray
    transform: np.ndarray

    def reconstruct(self, diagonal: np.ndarray) -> np.ndarray:
        return (self.vectors * diagonal[None, :]) @ self.inverse

    def reconstruction_residual(self, mat: np.ndarray) -> float:
        rebuilt = self.reconstruct(self.values.astype(complex))
        return float(np.linalg.norm(mat - rebuilt) / max(np.linalg.norm(mat), 1e-300))


def hermitize_and_eig(A: SpatialOperator, solver: Optional[str] = None,
                      tol: float = 1e-8) -> EigenDecomposition:
    """
    Eigendecomposition of a gram-self-adjoint operator.

    Args:
        A: Operator self-adjoint for its gram
        solver: 'lapack' or 'jacobi' (module default when omitted)
        tol: Allowed relative self-adjointness residual

    Returns:
        EigenDecomposition

    Raises:
        SelfAdjointnessError: If ||W A - A^* W|| / ||W A|| exceeds tol
        ConvergenceError: If the Jacobi solver does not converge
    """
    residual = A.self_adjointness_residual()
    if residual > tol:
        raise SelfAdjointnessError(f"operator is not gram-self-adjoint (residual {residual:.2e})",
                                   invariant="gram_self_adjoint", residual=residual)

    L = A.gram.chol
    if A.gram.is_identity:
        hermitian = hermitian_part(A.mat)
    else:
        # L^* A L^{-*} = L^* (L^{-1} A^*)^*
        right = scipy.linalg.solve_triangular(L, A.mat.conj().T, lower=True)
        hermitian = hermitian_part(L.conj().T @ right.conj().T)

    solver = solver or _default_solver
    if solver == 'jacobi':
        values, U = jacobi_eigh(hermitian)
    elif solver == 'lapack':
        values, U = np.linalg.eigh(hermitian)
    else:
        raise ValueError(f"unknown eigensolver {solver!r}")

    if A.gram.is_identity:
        return EigenDecomposition(values, U, U.conj().T, L)
    V = scipy.linalg.solve_triangular(L, U, lower=True, trans='C')
    return EigenDecomposition(values, V, U.conj().T @ L.conj().T, L)


def _apply_scalar_function(f: Callable, values: np.ndarray) -> np.ndarray:
    with np.errstate(all='ignore'):
        result = np.asarray(f(values), dtype=complex)
    if result.shape != values.shape:
        result = np.broadcast_to(result, values.shape).astype(complex)
    bad = ~np.isfinite(result)
    if np.any(bad):
        eigenvalue = float(values[np.flatnonzero(bad)[0]])
        raise SpectralDomainError(f"function undefined at eigenvalue {eigenvalue:.6g}", eigenvalue)
    return result


def operator_function(A: SpatialOperator, f: Callable[[np.ndarray], np.ndarray],
                      decomposition: Optional[EigenDecomposition] = None,
                      order_tag: float = 0.0) -> SpatialOperator:
    """
    f(A) by the eigendecomposition of A.

    Args:
        A: Gram-self-adjoint operator
        f: Vectorized function on eigenvalues; complex values are allowed
        decomposition: Reuse a decomposition of A
        order_tag: Declared order of the result

    Raises:
        SpectralDomainError: If f is not finite at some eigenvalue
    """
    eig = decomposition or hermitize_and_eig(A)
    return A.with_matrix(eig.reconstruct(_apply_scalar_function(f, eig.values)), order_tag)


def sign(values: np.ndarray) -> np.ndarray:
    """Sign function, undefined at 0."""
    return np.where(values == 0, np.nan, np.sign(values))


def sign_derivative(values: np.ndarray) -> np.ndarray:
    return np.zeros_like(values)


def divided_differences(values: np.ndarray, f: Callable, df: Optional[Callable] = None,
                        rtol: float = 1e-10) -> np.ndarray:
    """
    First divided differences (f(l_i) - f(l_j)) / (l_i - l_j), with f' on the diagonal.

    Raises:
        SpectralDomainError: If two eigenvalues coincide and df is not given
    """
    fv = _apply_scalar_function(f, values)
    diff = values[:, None] - values[None, :]
    scale = rtol * max(1.0, float(np.max(np.abs(values))) if values.size else 1.0)
    close = np.abs(diff) <= scale
    safe = np.where(close, 1.0, diff)
    phi = (fv[:, None] - fv[None, :]) / safe
    if np.any(close):
        if df is None:
            off_diagonal = close & ~np.eye(len(values), dtype=bool)
            if np.any(off_diagonal):
                raise SpectralDomainError("coincident eigenvalues need the derivative of f",
                                          float(values[np.argwhere(off_diagonal)[0][0]]))
            dfv = np.zeros_like(fv)
        else:
            dfv = _apply_scalar_function(df, values)
        mean = 0.5 * (dfv[:, None] + dfv[None, :])
        phi = np.where(close, mean, phi)
    return phi


def operator_function_derivative(A: SpatialOperator, dA: SpatialOperator, f: Callable,
                                 df: Optional[Callable] = None,
                                 decomposition: Optional[EigenDecomposition] = None) -> SpatialOperator:
    """
    Directional derivative of A -> f(A) along dA (Daleckii-Krein formula).

    For f = sign, pairs of eigenvalues of equal sign contribute nothing, so
    crossings inside one half of the spectrum do not matter.

    Args:
        A: Gram-self-adjoint operator
        dA: Direction (for example the time derivative of a family at t)
        f: Scalar function on the spectrum
        df: Its derivative, used for coincident eigenvalues
        decomposition: Reuse a decomposition of A

    Returns:
        V (Phi o (V^{-1} dA V)) V^{-1} where Phi holds the divided differences of f
    """
    eig = decomposition or hermitize_and_eig(A)
    phi = divided_differences(eig.values, f, df)
    inner = eig.inverse @ dA.mat @ eig.vectors
    return A.with_matrix(eig.vectors @ (phi * inner) @ eig.inverse)


def inverse_sqrt_quadrature(A: SpatialOperator, epsrel: float = 1e-10) -> SpatialOperator:
    """
    a^{-1/2} = 2/pi int_0^inf (a + s^2)^{-1} ds by adaptive vector quadrature.

    The substitution s = tan(theta) turns the integrand into
    (a cos^2 theta + sin^2 theta)^{-1} on [0, pi/2], which stays bounded.
    """
    ident = np.eye(A.size, dtype=complex)

    def integrand(theta: float) -> np.ndarray:
        c, s = np.cos(theta), np.sin(theta)
        return np.linalg.solve(A.mat * c * c + ident * s * s, ident)

    result, error = scipy.integrate.quad_vec(integrand, 0.0, np.pi / 2, epsrel=epsrel)
    logger.debug(f"Inverse square root quadrature error estimate {error:.2e}")
    return A.with_matrix(2.0 / np.pi * result)


def inverse_sqrt(A: SpatialOperator, cross_validate: bool = True, rtol: float = 1e-6,
                 decomposition: Optional[EigenDecomposition] = None) -> SpatialOperator:
    """
    A^{-1/2} of a positive operator, optionally checked against the integral formula.

    Raises:
        SpectralDomainError: If A has a non-positive eigenvalue
        QuadratureMismatchError: If the two routes differ by more than rtol
    """
    eig = decomposition or hermitize_and_eig(A)
    if eig.values.size and eig.values[0] <= 0:
        raise SpectralDomainError(f"inverse square root undefined at eigenvalue {eig.values[0]:.6g}",
                                  float(eig.values[0]))
    result = operator_function(A, lambda v: v ** -0.5, eig)
    if cross_validate:
        oracle = inverse_sqrt_quadrature(A)
        mismatch = float(np.linalg.norm(oracle.mat - result.mat) / np.linalg.norm(result.mat))
        if mismatch > rtol:
            raise QuadratureMismatchError(
                f"inverse square root disagrees with its integral formula ({mismatch:.2e})",
                invariant="inverse_sqrt_oracle", residual=mismatch)
        logger.debug(f"Inverse square root oracle agrees to {mismatch:.2e}")
    return result


def resolvent(A: SpatialOperator, z: complex,
              decomposition: Optional[EigenDecomposition] = None) -> Tuple[SpatialOperator, float]:
    """
    (A - z)^{-1} with the bound 1 / dist(z, spectrum) on its gram norm.

    Raises:
        SpectralDomainError: If z is an eigenvalue
    """
    eig = decomposition or hermitize_and_eig(A)
    distance = float(np.min(np.abs(eig.values - z)))
    if distance == 0.0:
        raise SpectralDomainError(f"{z} is an eigenvalue", float(np.real(z)))
    return operator_function(A, lambda v: 1.0 / (v - z), eig, order_tag=-A.order_tag), 1.0 / distance


def unitary_exponential(A: SpatialOperator, scale: float,
                        decomposition: Optional[EigenDecomposition] = None) -> SpatialOperator:
    """exp(i * scale * A), gram-unitary for gram-self-adjoint A."""
    return operator_function(A, lambda v: np.exp(1j * scale * v), decomposition)
