"""
Shared fixtures: small grids and scenarios that keep every matrix below ~60 x 60.
"""

import numpy as np
import pytest

from src.clifford import build_gamma_rep
from src.config import Config
from src.modelspec import MetricModel
from src.timegrid import TimeGrid

BREATHING_H = "(1 + 0.2*tanh(t)*cos(x))^2"

SMALL_K = 6
SMALL_M = 4 * SMALL_K + 2


def points_for(K: int) -> int:
    """Smallest admissible (even) number of space points for cutoff K."""
    return 4 * K + 2


@pytest.fixture
def rep2():
    return build_gamma_rep(2)


@pytest.fixture
def rep4():
    return build_gamma_rep(4)


@pytest.fixture
def flat_model():
    return MetricModel.from_strings("1", "2")


@pytest.fixture
def breathing_model():
    return MetricModel.from_strings(BREATHING_H, "1")


@pytest.fixture
def small_grid():
    return TimeGrid.from_interval(-1.0, 1.0, 21)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


@pytest.fixture
def scenario_data(tmp_path):
    """Valid scenario dictionary writing into a temporary directory."""
    return {
        'name': 'small',
        'dimension': 2,
        'cutoff_k': 4,
        'time_steps': 11,
        'space_points': 18,
        't_min': -0.5,
        't_max': 0.5,
        'h_expr': "1",
        'm_expr': "2",
        'u_expr': "0",
        'correction_order': 0,
        'checks': ['clifford', 'hamiltonian', 'evolution', 'projections', 'car'],
        'seed': 3,
        'out_dir': str(tmp_path / 'out'),
    }


@pytest.fixture
def small_config(scenario_data):
    return Config.from_dict(scenario_data)
