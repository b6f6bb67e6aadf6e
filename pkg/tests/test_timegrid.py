"""
Tests for time grids and time differentiation.
"""

import numpy as np
import pytest

from src.errors import DimensionError, OffGridError
from src.timegrid import TimeGrid, time_derivative


class TestTimeGrid:

    def test_uniform_grid(self, small_grid):
        assert len(small_grid) == 21
        assert np.isclose(small_grid.dt, 0.1)
        assert np.allclose(small_grid.midpoints, np.linspace(-0.95, 0.95, 20))

    def test_origin_and_lookup(self, small_grid):
        assert small_grid.origin == 10
        assert small_grid.index_of(0.3) == 13
        with pytest.raises(OffGridError):
            small_grid.index_of(0.35)

    def test_grid_without_origin(self):
        with pytest.raises(OffGridError):
            TimeGrid.from_interval(0.5, 1.0, 5).origin

    def test_reversed(self):
        grid = TimeGrid.from_interval(-0.5, 1.0, 4)
        assert np.allclose(grid.reversed().t, [-1.0, -0.5, 0.0, 0.5])

    @pytest.mark.parametrize("t_min, t_max, steps", [(0.0, 1.0, 1), (1.0, 1.0, 5), (1.0, 0.0, 5)])
    def test_invalid_grids(self, t_min, t_max, steps):
        with pytest.raises(DimensionError):
            TimeGrid.from_interval(t_min, t_max, steps)


class TestTimeDerivative:

    @pytest.mark.parametrize("order", [2, 4, 6])
    def test_stencils_are_exact_for_polynomials(self, small_grid, order):
        t = small_grid.t
        values = t ** order + 2 * t
        derivative = time_derivative(values, small_grid.dt, 'fd', order)
        assert np.allclose(derivative, order * t ** (order - 1) + 2, atol=1e-8)

    def test_operator_valued_family(self, small_grid):
        t = small_grid.t
        family = np.einsum('t,ij->tij', t ** 2, np.array([[1.0, 2j], [-2j, 3.0]]))
        derivative = time_derivative(family, small_grid.dt)
        assert derivative.shape == family.shape
        assert np.allclose(derivative[:, 0, 1], 4j * t, atol=1e-9)

    def test_spectral_even_extension(self):
        grid = TimeGrid.from_interval(0.0, 1.0, 17)
        derivative = time_derivative(np.cos(np.pi * grid.t), grid.dt, 'spectral')
        assert np.allclose(derivative, -np.pi * np.sin(np.pi * grid.t), atol=1e-10)

    def test_invalid_input(self):
        with pytest.raises(DimensionError):
            time_derivative(np.ones(1), 0.1)
        with pytest.raises(DimensionError):
            time_derivative(np.ones(2), 0.1, 'spectral')
        with pytest.raises(ValueError):
            time_derivative(np.ones(5), 0.1, 'chebyshev')
