"""
Tests for gap regularization, spectral projections and adiabatic correction.
"""

import numpy as np
import pytest
from hypothesis import given, strategies as st

from src.errors import GapError, RegularizationError
from src.modelspec import MetricModel
from src.projections import (
    adiabatic_correct,
    build_projections,
    bump,
    gap_regularize,
    spectral_projections,
)
from src.projections import bump_derivative, min_abs_spectrum
from src.reduction import assemble_H
from src.timegrid import TimeGrid

from tests.conftest import BREATHING_H, points_for


def flat_family(rep, mass, K=4, grid=None):
    grid = grid or TimeGrid.from_interval(-0.5, 0.5, 11)
    return assemble_H(MetricModel.from_strings("1", mass), rep, K, grid, points_for(K))


class TestBump:

    @given(st.floats(min_value=-3.0, max_value=3.0))
    def test_support(self, s):
        value = float(bump(s))
        assert 0.0 <= value <= 1.0
        if abs(s) >= 1.0:
            assert value == 0.0

    def test_values(self):
        assert bump(0.0) == 1.0
        assert np.isclose(bump(0.5), np.exp(1 - 1 / 0.75))

    def test_derivative(self):
        s = np.linspace(-0.9, 0.9, 7)
        delta = 1e-6
        fd = (bump(s + delta) - bump(s - delta)) / (2 * delta)
        assert np.allclose(bump_derivative(s), fd, atol=1e-6)


class TestGapRegularization:

    def test_gapped_family_is_untouched(self, rep2):
        family = flat_family(rep2, "2")
        regularized, lam = gap_regularize(family)
        assert lam == 0.0
        assert np.all(regularized.perturbation(0.0).mat == 0.0)
        assert np.allclose(regularized.at(0.0).mat, family.at(0.0).mat)

    @pytest.mark.parametrize("mass", ["0", "0.5"])
    def test_small_mass_is_lifted(self, rep2, mass):
        family = flat_family(rep2, mass)
        regularized, lam = gap_regularize(family)
        assert lam == 2.0
        assert min_abs_spectrum(regularized) >= 1.0 - 1e-10
        assert regularized.at(0.0).self_adjointness_residual() < 1e-12

    def test_perturbation_is_low_frequency(self, rep2):
        regularized, lam = gap_regularize(flat_family(rep2, "0", K=6))
        # chi(k^2 / lambda^2) vanishes for |k| >= lambda
        mat = regularized.perturbation(0.0).mat
        high = np.repeat(np.abs(np.arange(-6, 7)) >= lam, 2)
        assert np.allclose(mat[np.ix_(high, high)], 0.0)
        assert np.allclose(mat[:, high], 0.0)

    def test_gives_up_above_lambda_max(self, rep2):
        with pytest.raises(RegularizationError):
            gap_regularize(flat_family(rep2, "0"), lambda_max=1.0)


class TestSpectralProjections:

    def test_flat_projections(self, rep2):
        regularized, _ = gap_regularize(flat_family(rep2, "2"))
        proj = spectral_projections(regularized)
        assert proj.order == 0
        assert proj.idempotency_residual() < 1e-12
        assert proj.self_adjointness_residual() < 1e-12
        P = proj.at(0.0).mat
        H = regularized.at(0.0).mat
        assert np.isclose(np.trace(P).real, P.shape[0] / 2)
        assert np.allclose(P @ H, H @ P, atol=1e-11)
        assert np.all(np.linalg.eigvalsh(P @ H @ P + (P @ H @ P).conj().T) > -1e-10)
        assert np.allclose(proj.P_minus(proj.grid.origin).mat, np.eye(P.shape[0]) - P)

    def test_static_defect_vanishes(self, rep2):
        proj = spectral_projections(gap_regularize(flat_family(rep2, "2"))[0])
        assert max(np.linalg.norm(D.mat) for D in proj.defect) < 1e-10

    def test_unit_mass_splitting_is_exact(self, rep2):
        proj = spectral_projections(gap_regularize(flat_family(rep2, "1"))[0])
        assert proj.splitting_profile(0).norms[0] < 1e-12

    def test_gap_is_required(self, rep2):
        with pytest.raises(GapError):
            spectral_projections(flat_family(rep2, "0"))


class TestAdiabaticCorrection:

    def test_order_must_be_positive(self, rep2):
        proj = spectral_projections(gap_regularize(flat_family(rep2, "2"))[0])
        with pytest.raises(ValueError):
            adiabatic_correct(proj, order=0)

    def test_static_correction_is_trivial(self, rep2):
        proj = build_projections(flat_family(rep2, "2"), order=2)
        assert proj.order == 2
        assert len(proj.history) == 3
        for corrected, plain in zip(proj.P_plus, proj.P_uncorrected):
            assert np.allclose(corrected.mat, plain.mat, atol=1e-12)

    def test_breathing_projections_stay_projections(self, rep2):
        grid = TimeGrid.from_interval(-1.0, 1.0, 21)
        family = assemble_H(MetricModel.from_strings(BREATHING_H, "1"), rep2, 6, grid, points_for(6))
        proj = build_projections(family, order=1)
        assert proj.idempotency_residual() < 1e-10
        assert proj.self_adjointness_residual() < 1e-10
        assert proj.off_diagonal_residual() < 1e-10

    def test_each_order_steepens_defect_decay(self, rep2):
        K = 16
        grid = TimeGrid.from_interval(-1.0, 1.0, 41)
        family = assemble_H(MetricModel.from_strings(BREATHING_H, "1"), rep2, K, grid, points_for(K))
        proj = build_projections(family, order=3)
        slopes = [profile.slope for profile in proj.history]
        assert len(slopes) == 4
        for r in range(3):
            assert slopes[r + 1] <= slopes[r] - 0.7, slopes
        r0, r1 = proj.history[:2]
        assert r1.norm_at(K // 2) * 4 <= r0.norm_at(K // 2)
