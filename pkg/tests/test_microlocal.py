"""
Tests for wave packets, temporal-frequency leakage and the intertwining defect.
"""

import numpy as np
import pytest

from src.clifford import build_gamma_rep
from src.errors import ResolutionError
from src.evolution import Propagator
from src.microlocal import Wavepacket, intertwining_defect, leakage, mean_leakage, random_packets
from src.modelspec import MetricModel
from src.projections import build_projections, gap_regularize, spectral_projections
from src.reduction import assemble_H
from src.states import vacuum_state
from src.timegrid import TimeGrid

from tests.conftest import BREATHING_H, points_for

K = 16
M = points_for(K)


@pytest.fixture(scope='module')
def flat_setup():
    rep = build_gamma_rep(2)
    model = MetricModel.from_strings("1", "1")
    family = assemble_H(model, rep, K, TimeGrid.from_interval(-4.0, 4.0, 161), M)
    return model, rep, family, Propagator(family)


@pytest.fixture
def packet():
    return Wavepacket(x0=3.0, k0=12, width=1.0, polarization=(1.0, 1.0))


class TestWavepacket:

    def test_resolved_packet(self, packet):
        assert packet.validate(K, M) >= 0.99
        coefficients = packet.coefficients(K, M)
        assert coefficients.shape == ((2 * K + 1) * 2,)
        # energy sits at k0, split evenly over the spinor components
        peak = np.argmax(np.abs(coefficients))
        assert peak == (12 + K) * 2

    @pytest.mark.parametrize("width, k0", [(1.2, 4), (1.0, 13), (0.0, 4)])
    def test_unresolved_packets(self, width, k0):
        with pytest.raises(ResolutionError):
            Wavepacket(1.0, k0, width, (1.0, 0.0)).validate(K, M)

    def test_random_packets_are_seeded(self):
        first = random_packets(7, 3, K, 2)
        assert first == random_packets(7, 3, K, 2)
        for p in first:
            assert K // 8 <= p.k0 <= K // 4
            assert np.isclose(np.linalg.norm(p.polarization), 1.0)


class TestLeakage:

    def test_vacuum_has_no_wrong_frequencies(self, flat_setup, packet):
        model, rep, family, propagator = flat_setup
        vacuum = vacuum_state(model, rep, K, M)
        plus = leakage(vacuum, packet, propagator, '+')
        minus = leakage(vacuum, packet, propagator, '-')
        assert plus.leakage < 1e-6
        assert minus.leakage < 1e-6
        assert plus.positive > 0.99

    def test_energies_split_exactly(self, flat_setup, packet):
        model, rep, family, propagator = flat_setup
        vacuum = vacuum_state(model, rep, K, M)
        bare = leakage(None, packet, propagator)
        parts = [leakage(vacuum, packet, propagator, sign).total_energy for sign in '+-']
        assert np.isclose(sum(parts), bare.total_energy, rtol=1e-10)
        # the bare packet carries both signs
        assert bare.negative > 0.1 and bare.positive > 0.1

    def test_sources_agree(self, flat_setup, packet):
        model, rep, family, propagator = flat_setup
        proj = build_projections(family, 0)
        vacuum = vacuum_state(model, rep, K, M)
        from_projection = leakage(proj, packet, propagator).leakage
        from_matrix = leakage(vacuum.c_plus.mat, packet.coefficients(K, M), propagator).leakage
        assert np.isclose(from_projection, from_matrix, atol=1e-12)

    def test_report(self, flat_setup, packet):
        propagator = flat_setup[3]
        report = leakage(None, packet, propagator, collar=3)
        data = report.to_dict()
        assert data['collar'] == 3
        assert data['window'] == [-4.0, 4.0]
        assert np.isclose(data['positive'] + data['negative'] + data['zero_frequency']
                          + data['collar_fraction'], 1.0)
        with pytest.raises(ValueError):
            leakage(None, packet, propagator, sign='0')

    def test_mean_over_packets(self, flat_setup):
        model, rep, _, propagator = flat_setup
        vacuum = vacuum_state(model, rep, K, M)
        packets = [Wavepacket(x0, 10, 1.0, (0.6, 0.8j)) for x0 in (1.0, 4.0)]
        assert mean_leakage(vacuum, packets, propagator) < 1e-6


class TestTimeReversal:

    def test_reversal_swaps_leakage_signs(self, rep2):
        # H'(t) = -H(-t) swaps P+ and P- and runs the evolution backwards
        K_small = 16
        grid = TimeGrid.from_interval(-1.0, 1.0, 41)
        family = assemble_H(MetricModel.from_strings(BREATHING_H, "1"), rep2, K_small, grid,
                            points_for(K_small))
        regularized, _ = gap_regularize(family)
        backwards = regularized.reversed()
        forward_proj, backward_proj = spectral_projections(regularized), spectral_projections(backwards)
        forward, backward = Propagator(regularized), Propagator(backwards)
        packet = Wavepacket(x0=3.0, k0=4, width=0.6, polarization=(1.0, 1.0))

        for sign, flipped in (("-", "+"), ("+", "-")):
            ours = leakage(forward_proj, packet, forward, sign)
            theirs = leakage(backward_proj, packet, backward, flipped)
            assert abs(ours.leakage - theirs.leakage) < 1e-8
            assert np.isclose(ours.total_energy, theirs.total_energy, rtol=1e-10)


class TestIntertwining:

    def test_static_projections_intertwine(self, flat_setup):
        _, _, family, propagator = flat_setup
        profile = intertwining_defect(build_projections(family, 0), propagator)
        assert max(profile.norms) < 1e-10

    @pytest.mark.slow
    def test_correction_improves_intertwining(self, rep2):
        K_small = 12
        grid = TimeGrid.from_interval(-1.0, 1.0, 41)
        family = assemble_H(MetricModel.from_strings(BREATHING_H, "1"), rep2, K_small, grid,
                            points_for(K_small))
        propagator = Propagator(family)
        plain = intertwining_defect(build_projections(family, 0), propagator)
        corrected = intertwining_defect(build_projections(family, 1), propagator)
        assert corrected.norm_at(K_small // 2) < plain.norm_at(K_small // 2)
