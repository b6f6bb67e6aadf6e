"""
Tests for the reduced Hamiltonian, density transport and the Dirac operator.
"""

import logging

import numpy as np
import pytest

from src.errors import DimensionError
from src.modelspec import MetricModel
from src.psdo import hermitize_and_eig, modes
from src.reduction import assemble_dirac, assemble_H, conformal_residual, density_transport
from src.timegrid import TimeGrid

from tests.conftest import BREATHING_H, SMALL_K, SMALL_M, points_for

SIGMA_2 = np.array([[0, -1j], [1j, 0]])
SIGMA_3 = np.diag([1.0, -1.0])


def flat_hamiltonian(K, mass):
    return np.kron(np.diag(modes(K).astype(float)), -SIGMA_3) + mass * np.kron(np.eye(2 * K + 1), -SIGMA_2)


def section(grid, M, N, rng, modes_x=2):
    """Smooth spinor section vanishing to high order at both time ends."""
    t = (grid.t - grid.t[0]) / (grid.t[-1] - grid.t[0]) * 2 - 1
    x = 2 * np.pi * np.arange(M) / M
    envelope = (1 - t ** 2) ** 6
    psi = np.zeros((len(grid), M, N), dtype=complex)
    for k in range(-modes_x, modes_x + 1):
        amplitude = rng.standard_normal(N) + 1j * rng.standard_normal(N)
        psi += envelope[:, None, None] * np.exp(1j * k * x)[None, :, None] * amplitude[None, None, :]
    return psi


class TestHamiltonian:

    def test_flat_hamiltonian_is_exact(self, rep2, flat_model, small_grid):
        family = assemble_H(flat_model, rep2, 3, small_grid, points_for(3))
        assert np.allclose(family.gram.matrix, np.eye(14), atol=1e-14)
        assert np.allclose(family.at(0.5).mat, flat_hamiltonian(3, 2.0), atol=1e-12)
        assert np.allclose(family.derivative(0.5).mat, 0.0, atol=1e-12)

    def test_flat_spectrum(self, rep2, flat_model, small_grid):
        family = assemble_H(flat_model, rep2, 3, small_grid, points_for(3))
        energies = np.sqrt(modes(3) ** 2 + 4.0)
        expected = np.sort(np.concatenate([energies, -energies]))
        assert np.allclose(hermitize_and_eig(family.at(0.0)).values, expected, atol=1e-11)

    def test_flat_principal_symbol_defect(self, rep2, flat_model, small_grid):
        family = assemble_H(flat_model, rep2, SMALL_K, small_grid, SMALL_M)
        expected = [2.0 / k for k in range(3, SMALL_K + 1) for _ in range(2)]
        assert np.allclose(family.principal_symbol_defect(0.0), expected)

    def test_breathing_hamiltonian_is_self_adjoint(self, rep2, breathing_model, small_grid):
        family = assemble_H(breathing_model, rep2, SMALL_K, small_grid, SMALL_M)
        assert family.self_adjointness_residual() < 1e-9
        assert family.max_raw_asymmetry < 1e-6
        assert family.size == (2 * SMALL_K + 1) * 2

    def test_time_derivative_matches_finite_differences(self, rep2, breathing_model, small_grid):
        family = assemble_H(breathing_model, rep2, SMALL_K, small_grid, SMALL_M)
        delta = 1e-5
        fd = (family.at(0.2 + delta).mat - family.at(0.2 - delta).mat) / (2 * delta)
        exact = family.derivative(0.2).mat
        assert np.linalg.norm(fd - exact) / np.linalg.norm(exact) < 1e-6

    def test_flat_auxiliary_operators(self, rep2, flat_model, small_grid):
        family = assemble_H(flat_model, rep2, 3, small_grid, points_for(3))
        eps = family.epsilon(0.0).mat
        assert np.allclose(eps @ eps, family.h2(0.0).mat + np.eye(14), atol=1e-12)
        assert np.allclose(np.diag(family.h2(0.0).mat), np.repeat(modes(3) ** 2, 2))

    def test_reversed_family(self, rep2, breathing_model, small_grid):
        family = assemble_H(breathing_model, rep2, 3, small_grid, points_for(3))
        reverse = family.reversed()
        assert np.allclose(reverse.at(0.4).mat, -family.at(-0.4).mat)
        assert np.allclose(reverse.grid.t, small_grid.t)
        assert reverse.reversed() is family

    def test_transverse_sector(self, rep4, small_grid):
        model = MetricModel.from_strings("1", "1", n=4)
        family = assemble_H(model, rep4, 2, small_grid, points_for(2), transverse_momentum=(1, 0))
        energies = np.sqrt(modes(2) ** 2 + 2.0)
        expected = np.sort(np.concatenate([energies, energies, -energies, -energies]))
        assert np.allclose(hermitize_and_eig(family.at(0.0)).values, expected, atol=1e-11)

    def test_dimension_checks(self, rep2, rep4, flat_model, small_grid):
        with pytest.raises(DimensionError):
            assemble_H(flat_model, rep4, 2, small_grid, points_for(2))
        model = MetricModel.from_strings("1", "1", n=4)
        with pytest.raises(DimensionError):
            assemble_H(model, rep4, 2, small_grid, points_for(2), transverse_momentum=(1,))

    def test_non_periodic_model_is_reported(self, rep2, caplog):
        model = MetricModel.from_strings("1", "1 + 0.1*x")
        grid = TimeGrid.from_interval(-0.5, 0.5, 3)
        with caplog.at_level(logging.WARNING, logger='src.reduction.hamiltonian'):
            assemble_H(model, rep2, 2, grid, points_for(2))
        assert "periodic" in caplog.text


class TestDensityTransport:

    def test_identity_at_reference_time(self, rep2, breathing_model, small_grid):
        family = assemble_H(breathing_model, rep2, SMALL_K, small_grid, SMALL_M)
        transport = density_transport(breathing_model, small_grid, SMALL_M, SMALL_K, 2)
        origin = small_grid.origin
        assert np.all(transport.scaling[origin] == 1.0)
        assert transport.gram_discrepancy(family.gram, origin, family.spinor_form) < 1e-14

    def test_scaling_and_gram(self, rep2, breathing_model, small_grid):
        family = assemble_H(breathing_model, rep2, SMALL_K, small_grid, SMALL_M)
        transport = density_transport(breathing_model, small_grid, SMALL_M, SMALL_K, 2)
        sampled = breathing_model.sample(small_grid.t, SMALL_M)
        reference = breathing_model.sample([0.0], SMALL_M).h.value[0]
        assert np.allclose(transport.scaling, (sampled.h.value / reference) ** -0.25)
        last = len(small_grid) - 1
        assert np.allclose(transport.inverse_matrix(last) @ transport.matrix(last), np.eye(family.size))
        assert transport.gram_discrepancy(family.gram, last, family.spinor_form) < 1e-3
        assert transport.transported_gram(family.gram, last).min_eigenvalue() > 0


class TestDirac:

    def test_plane_wave_solves_flat_equation(self, rep2):
        grid = TimeGrid.from_interval(-1.0, 1.0, 81)
        M, k, mass = 8, 1, 1.0
        omega = np.sqrt(k ** 2 + mass ** 2)
        g0, g1 = rep2.gammas
        v = (1j * omega * g0 + 1j * k * g1 - mass * np.eye(2)) @ np.array([1.0, 0.3])
        x = 2 * np.pi * np.arange(M) / M
        phase = np.exp(1j * (k * x[None, :] - omega * grid.t[:, None]))
        psi = phase[..., None] * v
        dirac = assemble_dirac(MetricModel.from_strings("1", "1"), rep2, grid, M)
        assert np.linalg.norm(dirac.apply(psi)) / np.linalg.norm(psi) < 1e-4

    def test_formal_adjointness(self, rep2, breathing_model, rng):
        grid = TimeGrid.from_interval(-1.0, 1.0, 81)
        M = 16
        dirac = assemble_dirac(breathing_model, rep2, grid, M)
        psi1, psi2 = section(grid, M, 2, rng), section(grid, M, 2, rng)
        scale = abs(dirac.pairing(psi1, dirac.apply(psi2)))
        assert dirac.formal_adjointness_residual(psi1, psi2) / scale < 1e-2

    def test_conformal_covariance(self, rep2, rng):
        model = MetricModel.from_strings(BREATHING_H, "1", "0.1*sin(x)*cos(t)")
        grid = TimeGrid.from_interval(-1.0, 1.0, 81)
        M = 16
        assert conformal_residual(model, rep2, grid, M, section(grid, M, 2, rng)) < 1e-2

    def test_section_shape_is_checked(self, rep2, flat_model, small_grid):
        dirac = assemble_dirac(flat_model, rep2, small_grid, 8)
        with pytest.raises(DimensionError):
            dirac.apply(np.zeros((len(small_grid), 8, 4)))
