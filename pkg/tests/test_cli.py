"""
Tests for the hadamard command line.
"""

import json
from pathlib import Path

import pytest
import yaml
from click.testing import CliRunner

from src.cli import __version__
from src.cli.main import cli
from src.cli.run import resolve_config
from src.errors import ConfigError


def tmp_out(scenario_data):
    return Path(scenario_data['out_dir'])


@pytest.fixture
def runner():
    return CliRunner()


@pytest.fixture
def scenario_file(tmp_path, scenario_data):
    path = tmp_path / 'scenario.yaml'
    path.write_text(yaml.safe_dump(scenario_data))
    return path


class TestResolveConfig:
    def test_overrides(self, scenario_file, tmp_path):
        config = resolve_config(str(scenario_file), out_dir=str(tmp_path / 'elsewhere'), order=1)
        assert config.out_dir == str(tmp_path / 'elsewhere')
        assert config.correction_order == 1

    def test_cutoff_raises_space_points(self, scenario_file):
        config = resolve_config(str(scenario_file), cutoff=8)
        assert config.cutoff_k == 8
        assert config.space_points == 34

    def test_lower_cutoff_keeps_space_points(self, scenario_file):
        assert resolve_config(str(scenario_file), cutoff=2).space_points == 18

    def test_preset_wins(self, scenario_file):
        assert resolve_config(str(scenario_file), preset='flat-massive').name == 'flat-massive'

    def test_invalid_override(self, scenario_file):
        with pytest.raises(ConfigError):
            resolve_config(str(scenario_file), order=-1)


class TestCommands:
    def test_version(self, runner):
        result = runner.invoke(cli, ['--version'])
        assert result.exit_code == 0
        assert __version__ in result.output

    def test_presets(self, runner):
        result = runner.invoke(cli, ['presets'])
        assert result.exit_code == 0
        assert 'flat-massive' in result.output

    def test_presets_detailed(self, runner):
        result = runner.invoke(cli, ['presets', '--detailed'])
        assert result.exit_code == 0, result.output

    def test_validate(self, runner, scenario_file, scenario_data):
        result = runner.invoke(cli, ['validate', '--config', str(scenario_file)])
        assert result.exit_code == 0, result.output
        report = json.loads((tmp_out(scenario_data) / 'report.json').read_text(encoding='utf-8'))
        assert report['subcommand'] == 'validate'
        assert report['passed'] is True

    def test_out_dir_override(self, runner, scenario_file, tmp_path):
        target = tmp_path / 'override'
        result = runner.invoke(cli, ['construct', '-c', str(scenario_file), '-o', str(target)])
        assert result.exit_code == 0, result.output
        assert (target / 'report.json').exists()
        assert (target / 'profiles.csv').exists()

    def test_evolve_kernels_flag(self, runner, scenario_file, scenario_data):
        result = runner.invoke(cli, ['evolve', '-c', str(scenario_file), '--kernels'])
        assert result.exit_code == 0, result.output
        assert (tmp_out(scenario_data) / 'kernels.bin').exists()

    def test_invariant_failure_exits_one(self, runner, tmp_path, scenario_data):
        scenario_data['m_expr'] = "0"
        scenario_data['checks'] = ['vacuum']
        path = tmp_path / 'massless.yaml'
        path.write_text(yaml.safe_dump(scenario_data))
        result = runner.invoke(cli, ['validate', '-c', str(path)])
        assert result.exit_code == 1
        assert (tmp_out(scenario_data) / 'report.json').exists()

    def test_invalid_scenario_exits_two(self, runner, tmp_path, scenario_data):
        scenario_data['space_points'] = 17
        path = tmp_path / 'bad.yaml'
        path.write_text(yaml.safe_dump(scenario_data))
        result = runner.invoke(cli, ['validate', '-c', str(path)])
        assert result.exit_code == 2
        assert '/space_points' in result.output

    def test_unknown_preset_exits_two(self, runner):
        result = runner.invoke(cli, ['construct', '--preset', 'nowhere'])
        assert result.exit_code == 2

    def test_bad_log_level_rejected_by_click(self, runner, scenario_file):
        result = runner.invoke(cli, ['validate', '-c', str(scenario_file), '--log-level', 'LOUD'])
        assert result.exit_code == 2


class TestConfigCommand:
    def test_validate(self, runner, scenario_file):
        result = runner.invoke(cli, ['config', '-c', str(scenario_file), '--validate'])
        assert result.exit_code == 0
        assert 'Configuration is valid' in result.output

    def test_show(self, runner, scenario_file):
        result = runner.invoke(cli, ['config', '-c', str(scenario_file), '--show'])
        assert result.exit_code == 0
        assert 'cutoff_k' in result.output

    def test_preset(self, runner):
        result = runner.invoke(cli, ['config', '--preset', 'conformal', '--validate'])
        assert result.exit_code == 0

    def test_invalid(self, runner, tmp_path, scenario_data):
        scenario_data['h_expr'] = "1 +"
        path = tmp_path / 'bad.yaml'
        path.write_text(yaml.safe_dump(scenario_data))
        result = runner.invoke(cli, ['config', '-c', str(path), '--validate'])
        assert result.exit_code == 2
        assert 'validation failed' in result.output

    def test_missing_file(self, runner, tmp_path):
        result = runner.invoke(cli, ['config', '-c', str(tmp_path / 'absent.yaml')])
        assert result.exit_code == 2
