"""
Tests for the construct-verify-report pipeline.
"""

import json

import numpy as np
import pytest

from src import pipeline
from src.config import Config, load_config
from src.pipeline import (
    EXIT_INVARIANT,
    EXIT_OK,
    add_deformed_ratio,
    add_leakage_ordering,
    add_slope_gain,
    run,
    suites_for,
)
from src.psdo.decay import DecayProfile
from src.reports import read_kernels, read_profiles, read_report
from src.reports.schema import RunReport


class TestSuites:
    def test_validate_runs_listed_checks(self, small_config):
        names = [suite.__name__ for suite in suites_for('validate', small_config)]
        assert names == ['check_clifford', 'check_hamiltonian', 'check_evolution',
                         'check_projections', 'check_car']

    def test_plans(self, small_config):
        assert [s.__name__ for s in suites_for('evolve', small_config)][-1] == 'check_richardson'
        assert [s.__name__ for s in suites_for('microlocal', small_config)][-1] == 'compare_deformed'
        assert [s.__name__ for s in suites_for('sweep', small_config)] == ['run_sweep']

    def test_construct_adds_vacuum_when_listed(self, scenario_data):
        scenario_data['checks'] = ['vacuum']
        names = [s.__name__ for s in suites_for('construct', Config.from_dict(scenario_data))]
        assert names[-1] == 'check_vacuum'

    def test_unknown_subcommand(self, small_config):
        with pytest.raises(ValueError):
            run('simulate', small_config)


class TestValidate:
    def test_flat_scenario_passes(self, small_config):
        result = run('validate', small_config)
        assert result.status == EXIT_OK
        assert result.error is None
        assert result.report.passed
        names = [check.name for check in result.report.checks]
        assert 'clifford.relations' in names
        assert 'projections.idempotent' in names
        assert 'car.form_sum' in names

    def test_files_written(self, small_config):
        result = run('validate', small_config)
        assert set(result.paths) == {'report', 'profiles'}
        data = json.loads(result.paths['report'].read_text(encoding='utf-8'))
        assert data['passed'] is True
        assert data['scenario']['cutoff_k'] == 4
        assert data['scenario']['numerics']['eigensolver'] == 'lapack'
        rows = read_profiles(str(result.paths['profiles']))
        assert {row.name for row in rows} >= {'defect.r0', 'splitting'}

    def test_reports_identical_apart_from_timestamp(self, small_config):
        first = read_report(str(run('validate', small_config).paths['report'])).to_dict()
        second = read_report(str(run('validate', small_config).paths['report'])).to_dict()
        first.pop('generated_at')
        second.pop('generated_at')
        assert first == second

    def test_failed_tolerance_gives_invariant_status(self, small_config, monkeypatch):
        monkeypatch.setitem(pipeline.TOLERANCES, 'clifford', -1.0)
        result = run('validate', small_config)
        assert result.status == EXIT_INVARIANT
        assert 'clifford.relations' in [c.name for c in result.report.failed_checks()]
        assert result.paths['report'].exists()

    def test_massless_vacuum_reports_gap_error(self, scenario_data):
        scenario_data['m_expr'] = "0"
        scenario_data['checks'] = ['vacuum']
        result = run('validate', Config.from_dict(scenario_data))
        assert result.status == EXIT_INVARIANT
        assert result.error is not None
        failed = result.report.failed_checks()
        assert len(failed) == 1
        assert failed[0].detail.startswith('GapError')
        assert read_report(str(result.paths['report'])).checks[-1].passed is False

    def test_oracles_on_flat_scenario(self, scenario_data):
        scenario_data['checks'] = ['oracles', 'frames', 'vacuum']
        result = run('validate', Config.from_dict(scenario_data))
        assert result.status == EXIT_OK
        names = [check.name for check in result.report.checks]
        assert 'oracles.flat_spectrum' in names
        assert 'oracles.jacobi_vs_lapack' in names
        assert 'vacuum.matches_spectral_projection' in names


class TestSubcommands:
    def test_construct(self, small_config):
        result = run('construct', small_config)
        assert result.status == EXIT_OK
        assert result.report.metrics['projections.lambda'] == 0.0

    def test_evolve_writes_retarded_kernels(self, small_config):
        result = run('evolve', small_config, kernels=True)
        assert result.status == EXIT_OK
        kernels = read_kernels(str(result.paths['kernels']))
        assert kernels.shape == (10, 18, 18)
        assert 'evolution.homogeneity' in result.report.metrics

    def test_no_kernels_by_default(self, small_config):
        assert 'kernels' not in run('evolve', small_config).paths

    def test_feynman(self, small_config):
        result = run('feynman', small_config, kernels=True)
        assert result.status == EXIT_OK
        kernels = read_kernels(str(result.paths['kernels']))
        assert kernels.ndim == 3
        assert kernels.shape[1:] == (18, 18)
        assert np.all(np.isfinite(kernels))

    def test_microlocal(self, scenario_data):
        scenario_data.update(cutoff_k=8, space_points=34)
        scenario_data['microlocal'] = {'packet': {'x0': 3.0, 'k0': 3, 'width': 1.0, 'polarization': [1, 1]}}
        result = run('microlocal', Config.from_dict(scenario_data))
        assert result.error is None
        metrics = result.report.metrics
        assert 0.0 <= metrics['microlocal.leakage_plus'] <= 1.0
        assert len(result.report.tables['leakage']) == 2

    def test_sweep_over_orders(self, small_config):
        result = run('sweep', small_config)
        rows = result.report.tables['sweep']
        assert [row['value'] for row in rows] == [0, 1, 2]
        assert all(row['parameter'] == 'correction_order' for row in rows)

    def test_sweep_over_cutoff(self, scenario_data):
        scenario_data['sweep'] = {'parameter': 'cutoff_k', 'values': [3, 5]}
        result = run('sweep', Config.from_dict(scenario_data))
        assert [row['value'] for row in result.report.tables['sweep']] == [3, 5]
        names = {row.name for row in result.report.profiles}
        assert names == {'sweep.cutoff_k=3', 'sweep.cutoff_k=5'}


def profile(slope, norm_at_half):
    return DecayProfile(thresholds=[1, 2, 4, 8], norms=[1.0, 0.1, norm_at_half, norm_at_half / 4],
                        slope=slope, fit_range=(2.0, 8.0))


@pytest.fixture
def blank_report():
    return RunReport.new('construct', {})


class TestOrderingChecks:
    def test_slope_gain_satisfied(self, blank_report):
        check = add_slope_gain(blank_report, 'gain', profile(-0.7, 1e-3), profile(-1.5, 1e-4), K=8)
        assert check.passed
        assert check.residual == pytest.approx(-0.8)
        assert blank_report.passed

    def test_insufficient_gain_fails_report(self, blank_report):
        add_slope_gain(blank_report, 'gain', profile(-0.7, 1e-3), profile(-1.0, 5e-4), K=8)
        assert not blank_report.passed
        assert blank_report.failed_checks()[0].name == 'gain'

    def test_rounding_floor_skipped(self, blank_report):
        assert add_slope_gain(blank_report, 'gain', profile(-0.7, 1e-3), profile(0.2, 1e-14), K=8) is None
        assert blank_report.checks == []

    def test_zero_gain_accepts_equal_slopes(self, blank_report):
        assert add_slope_gain(blank_report, 'gain', profile(-1.0, 1e-3), profile(-1.0, 1e-3), K=8, gain=0.0).passed

    def test_leakage_ordering(self, blank_report):
        assert add_leakage_ordering(blank_report, 'order', 2.6e-6, 3.4e-6).passed
        assert not add_leakage_ordering(blank_report, 'order', 3.4e-6, 2.6e-6).passed

    def test_deformed_ratio(self, blank_report):
        assert add_deformed_ratio(blank_report, 'ratio', 2.605e-6, 2.603e-6).passed
        assert not add_deformed_ratio(blank_report, 'ratio', 6e-6, 2.6e-6).passed

    def test_deformed_ratio_with_vanishing_leakage(self, blank_report):
        assert add_deformed_ratio(blank_report, 'ratio', 1e-20, 0.0).passed


@pytest.fixture(scope='module')
def breathing_microlocal(tmp_path_factory):
    config = load_config('breathing').with_overrides(out_dir=str(tmp_path_factory.mktemp('breathing')))
    return run('microlocal', config).report


class TestBreathingPreset:
    def test_corrected_leakage_below_uncorrected(self, breathing_microlocal):
        metrics = breathing_microlocal.metrics
        assert metrics['microlocal.leakage_plus'] <= metrics['microlocal.leakage_plus.r0']
        checks = {check.name: check for check in breathing_microlocal.checks}
        assert checks['microlocal.leakage_ordering'].passed

    def test_deformed_leakage_close_to_adiabatic(self, breathing_microlocal):
        metrics = breathing_microlocal.metrics
        deformed = metrics['microlocal.leakage_plus.deformed']
        assert deformed <= 2.0 * metrics['microlocal.leakage_plus']
        checks = {check.name: check for check in breathing_microlocal.checks}
        assert checks['microlocal.deformed_ratio'].passed

    def test_defect_slopes_improve_per_order(self, breathing_microlocal):
        checks = {check.name: check for check in breathing_microlocal.checks}
        for r in (1, 2):
            assert checks[f'projections.slope_gain.r{r}'].passed
