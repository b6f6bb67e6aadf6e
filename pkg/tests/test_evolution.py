"""
Tests for the reduced propagator and the Green time-kernels.
"""

import numpy as np
import pytest
import scipy.linalg

from src.errors import DimensionError, OffGridError
from src.evolution import (
    Propagator,
    build_kernels,
    evolve,
    green_kernels,
    kernel_stack,
    richardson_ratio,
    sobolev_bounds,
)
from src.reduction import assemble_H, density_transport
from src.timegrid import TimeGrid

from tests.conftest import points_for

K = 4


def family_on(model, rep, steps, t_max=0.5):
    grid = TimeGrid.from_interval(-t_max, t_max, steps)
    return assemble_H(model, rep, K, grid, points_for(K))


@pytest.fixture
def flat_family(rep2, flat_model):
    return family_on(flat_model, rep2, 11)


@pytest.fixture
def breathing_family(rep2, breathing_model):
    return family_on(breathing_model, rep2, 21, t_max=1.0)


class TestPropagator:

    def test_static_propagation_is_exponential(self, flat_family):
        propagator = Propagator(flat_family)
        H = flat_family.at(0.0).mat
        for i, t in enumerate(flat_family.grid.t):
            assert np.allclose(propagator.from_origin[i], scipy.linalg.expm(1j * t * H), atol=1e-10)

    def test_unitarity_and_groupoid(self, breathing_family):
        propagator = Propagator(breathing_family)
        assert propagator.unitarity_drift() < 1e-12
        assert propagator.groupoid_residual(3, 17, 9) < 1e-10
        assert propagator.groupoid_residual(0, 20, 10) < 1e-10
        assert np.allclose(propagator.between(7, 7), np.eye(breathing_family.size), atol=1e-12)

    def test_homogeneity_is_second_order(self, rep2, flat_model):
        coarse = Propagator(family_on(flat_model, rep2, 11)).homogeneity_residual(0)
        fine = Propagator(family_on(flat_model, rep2, 21)).homogeneity_residual(0)
        assert 3.0 < coarse / fine < 5.0

    def test_evolve_data_and_operators(self, flat_family, rng):
        propagator = Propagator(flat_family)
        psi = rng.standard_normal(flat_family.size) + 0j
        forward = evolve(propagator, 0.0, 0.3, psi)
        assert np.allclose(evolve(propagator, 0.3, 0.0, forward), psi)
        operator = evolve(flat_family, -0.2, 0.4, flat_family.at(0.0))
        assert np.allclose(operator.mat, propagator.between(9, 3) @ flat_family.at(0.0).mat)
        with pytest.raises(OffGridError):
            evolve(propagator, 0.0, 0.33, psi)

    def test_sobolev_bounds_of_static_flat_evolution(self, flat_family):
        bounds = sobolev_bounds(Propagator(flat_family))
        assert set(bounds) == {-2, -1, 1, 2}
        assert all(np.isclose(bound, 1.0) for bound in bounds.values())

    @pytest.mark.slow
    def test_integrator_is_second_order(self, rep2, breathing_model, rng):
        psi0 = rng.standard_normal((2 * K + 1) * 2) + 0j

        def build(count):
            return family_on(breathing_model, rep2, count, t_max=1.0)

        assert abs(richardson_ratio(build, 11, psi0, 1.0) - 4.0) < 0.5


class TestKernels:

    def kernels_for(self, family):
        transport = density_transport(family.model, family.grid, family.space_points, family.K, family.N)
        return build_kernels(Propagator(family), transport)

    def test_retarded_advanced_and_causal(self, breathing_family):
        kernels = green_kernels(self.kernels_for(breathing_family),
            [(5, 2, None), (2, 5, None), (4, 4, '+'), (4, 4, '-')])
        assert np.any(kernels.retarded[(5, 2, '+')] != 0)
        assert np.all(kernels.advanced[(5, 2, '+')] == 0)
        assert np.all(kernels.retarded[(2, 5, '-')] == 0)
        for key in kernels.causal:
            assert np.allclose(kernels.causal[key], kernels.retarded[key] - kernels.advanced[key])
        # the jump of the retarded kernel at coincident times is gamma_0
        jump = kernels.retarded[(4, 4, '+')] - kernels.retarded[(4, 4, '-')]
        assert np.allclose(jump, kernels.gamma0, atol=1e-10)
        assert np.allclose(kernels.causal[(4, 4, '+')], kernels.causal[(4, 4, '-')])

    def test_coincident_times_need_a_side(self, flat_family):
        with pytest.raises(ValueError):
            green_kernels(self.kernels_for(flat_family), [(3, 3, None)])

    def test_full_propagator_composes(self, breathing_family):
        kernels = self.kernels_for(breathing_family)
        assert kernels.composition_residual(2, 15, 8) < 1e-10

    def test_flat_transport_is_trivial(self, flat_family):
        kernels = self.kernels_for(flat_family)
        assert np.allclose(kernels.full(8, 2), kernels.propagator.between(8, 2), atol=1e-12)

    def test_stack(self, flat_family):
        kernels = green_kernels(self.kernels_for(flat_family), [(1, 0, None), (0, 1, None)])
        assert kernel_stack(kernels, 'retarded').shape == (2, flat_family.size, flat_family.size)
        assert kernel_stack(kernels, 'feynman').shape == (0, 0, 0)

    def test_grids_must_agree(self, flat_family, flat_model):
        other = TimeGrid.from_interval(-0.5, 0.5, 5)
        transport = density_transport(flat_model, other, flat_family.space_points, K, 2)
        with pytest.raises(DimensionError):
            build_kernels(Propagator(flat_family), transport)
