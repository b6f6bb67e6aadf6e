"""
Scenario configuration for the Hadamard state pipeline.
"""

import copy
import math
import os
import yaml
import logging
from pathlib import Path
from typing import Dict, Any, Optional, List, Tuple

from src.errors import ConfigError, ExpressionError
from src.modelspec.model import MetricModel
from src.modelspec.parser import parse_expr
from src.psdo.spectral import SOLVERS
from src.timegrid import DERIVATIVE_METHODS, TimeGrid

PRESETS_DIR = Path(__file__).parent / 'presets'

REQUIRED_FIELDS = ['dimension', 'cutoff_k', 'time_steps', 'space_points', 't_min', 't_max',
                   'h_expr', 'm_expr', 'u_expr', 'correction_order', 'checks', 'seed', 'out_dir']
OPTIONAL_SECTIONS = ['name', 'description', 'numerics', 'microlocal', 'sweep',
                     'transverse_momentum', 'logging']
KNOWN_CHECKS = ['clifford', 'frames', 'hamiltonian', 'dirac', 'conformal', 'oracles', 'evolution',
                'projections', 'car', 'vacuum', 'kernels', 'microlocal']
LOG_LEVELS = ['DEBUG', 'INFO', 'WARNING', 'ERROR']
SWEEP_PARAMETERS = ['cutoff_k', 'correction_order']

# dense matrices held per grid time during a construct run
MATRICES_PER_TIME = 12


def _is_int(value: Any) -> bool:
    return isinstance(value, int) and not isinstance(value, bool)


def _is_number(value: Any) -> bool:
    return (isinstance(value, (int, float)) and not isinstance(value, bool)
            and math.isfinite(float(value)))


class Config:
    """Scenario configuration with validation and typed accessors."""

    def __init__(self, config_path: str = 'config.yaml', data: Optional[Dict[str, Any]] = None):
        """
        Initialize configuration from a YAML or JSON file, or from a dictionary.

        Args:
            config_path: Path to the scenario file
            data: Already parsed scenario (config_path is then only a label)

        Raises:
            ConfigError: If the scenario violates the schema
        """
        self.logger = logging.getLogger(__name__)
        self.config_path = config_path
        self.config = self._load_config() if data is None else copy.deepcopy(data)
        self._validate_config(self.config)
        self.logger.info(f"Configuration '{self.name}' validated")

    @classmethod
    def from_dict(cls, data: Dict[str, Any], label: str = '<dict>') -> 'Config':
        return cls(label, data)

    def _load_config(self) -> Dict[str, Any]:
        """
        Load configuration from file.

        Returns:
            Configuration dictionary
        """
        if not os.path.exists(self.config_path):
            raise ConfigError('', f"configuration file not found: {self.config_path}")

        with open(self.config_path, 'r') as f:
            try:
                config = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise ConfigError('', f"not valid YAML/JSON: {e}") from e

        if not isinstance(config, dict):
            raise ConfigError('', "scenario must be a mapping")
        self.logger.debug(f"Loaded configuration from {self.config_path}")
        return config

    def _validate_config(self, config: Dict[str, Any]) -> None:
        """
        Validate the scenario.

        Raises:
            ConfigError: With the JSON pointer of the first offending field
        """
        for key in config:
            if key not in REQUIRED_FIELDS and key not in OPTIONAL_SECTIONS:
                raise ConfigError(f'/{key}', "unknown field")
        for key in REQUIRED_FIELDS:
            if key not in config:
                raise ConfigError(f'/{key}', "required field is missing")

        if config['dimension'] not in (2, 4) or not _is_int(config['dimension']):
            raise ConfigError('/dimension', "must be 2 or 4")
        for key, minimum in (('cutoff_k', 1), ('time_steps', 3), ('space_points', 4),
                             ('correction_order', 0), ('seed', 0)):
            if not _is_int(config[key]) or config[key] < minimum:
                raise ConfigError(f'/{key}', f"must be an integer >= {minimum}")
        if config['space_points'] % 2:
            raise ConfigError('/space_points', "must be even")
        if config['space_points'] < 4 * config['cutoff_k'] + 2:
            raise ConfigError('/space_points', f"must be at least 4 * cutoff_k + 2 = {4 * config['cutoff_k'] + 2}")

        for key in ('t_min', 't_max'):
            if not _is_number(config[key]):
                raise ConfigError(f'/{key}', "must be a finite number")
        if not config['t_min'] < config['t_max']:
            raise ConfigError('/t_max', "must exceed t_min")
        if not config['t_min'] <= 0.0 <= config['t_max']:
            raise ConfigError('/t_min', "time interval must contain t = 0")
        dt = (config['t_max'] - config['t_min']) / (config['time_steps'] - 1)
        position = -config['t_min'] / dt
        if abs(position - round(position)) > 1e-9:
            raise ConfigError('/time_steps', "t = 0 is not a grid point of the time grid")

        for key in ('h_expr', 'm_expr', 'u_expr'):
            source = config[key]
            if isinstance(source, (int, float)) and not isinstance(source, bool):
                config[key] = source = repr(source)
            if not isinstance(source, str):
                raise ConfigError(f'/{key}', "must be an expression string")
            try:
                parse_expr(source)
            except ExpressionError as e:
                raise ConfigError(f'/{key}', str(e)) from e

        if not isinstance(config['checks'], list):
            raise ConfigError('/checks', "must be a list")
        for i, check in enumerate(config['checks']):
            if check not in KNOWN_CHECKS:
                raise ConfigError(f'/checks/{i}', f"unknown check {check!r}; expected one of {KNOWN_CHECKS}")
        if not isinstance(config['out_dir'], str) or not config['out_dir']:
            raise ConfigError('/out_dir', "must be a non-empty path")

        self._validate_numerics(config.get('numerics', {}) or {})
        self._validate_microlocal(config.get('microlocal', {}) or {}, config['dimension'])
        self._validate_sweep(config.get('sweep'))
        self._validate_transverse(config.get('transverse_momentum'), config['dimension'])
        self._validate_logging(config.get('logging', {}) or {})
        self._validate_memory(config)

    def _validate_numerics(self, numerics: Dict[str, Any]) -> None:
        allowed = {'eigensolver', 'time_derivative', 'time_derivative_order', 'h_floor',
                   'lambda_max', 'memory_cap_mb'}
        for key in numerics:
            if key not in allowed:
                raise ConfigError(f'/numerics/{key}', "unknown field")
        if numerics.get('eigensolver', 'lapack') not in SOLVERS:
            raise ConfigError('/numerics/eigensolver', f"must be one of {list(SOLVERS)}")
        if numerics.get('time_derivative', 'fd') not in DERIVATIVE_METHODS:
            raise ConfigError('/numerics/time_derivative', f"must be one of {list(DERIVATIVE_METHODS)}")
        order = numerics.get('time_derivative_order', 6)
        if not _is_int(order) or order < 2 or order % 2:
            raise ConfigError('/numerics/time_derivative_order', "must be an even integer >= 2")
        for key, default, minimum in (('h_floor', 1e-3, 0.0), ('lambda_max', 4096.0, 2.0),
                                      ('memory_cap_mb', 2048.0, 0.0)):
            value = numerics.get(key, default)
            if not _is_number(value) or value <= minimum:
                raise ConfigError(f'/numerics/{key}', f"must be a number > {minimum}")

    def _validate_microlocal(self, microlocal: Dict[str, Any], dimension: int) -> None:
        allowed = {'collar', 'packet', 'random_packets'}
        for key in microlocal:
            if key not in allowed:
                raise ConfigError(f'/microlocal/{key}', "unknown field")
        collar = microlocal.get('collar', 2)
        if not _is_int(collar) or collar < 0:
            raise ConfigError('/microlocal/collar', "must be an integer >= 0")
        count = microlocal.get('random_packets', 0)
        if not _is_int(count) or count < 0:
            raise ConfigError('/microlocal/random_packets', "must be an integer >= 0")
        packet = microlocal.get('packet')
        if packet is None:
            return
        if not isinstance(packet, dict):
            raise ConfigError('/microlocal/packet', "must be a mapping")
        for key in ('x0', 'k0', 'width'):
            if key not in packet:
                raise ConfigError(f'/microlocal/packet/{key}', "required field is missing")
        if not _is_number(packet['x0']) or not 0.0 <= packet['x0'] < 2 * math.pi:
            raise ConfigError('/microlocal/packet/x0', "must lie in [0, 2*pi)")
        if not _is_int(packet['k0']):
            raise ConfigError('/microlocal/packet/k0', "must be an integer")
        if not _is_number(packet['width']) or packet['width'] <= 0:
            raise ConfigError('/microlocal/packet/width', "must be a positive number")
        polarization = packet.get('polarization')
        if polarization is not None:
            N = 2 ** (dimension // 2)
            if not isinstance(polarization, list) or len(polarization) != N:
                raise ConfigError('/microlocal/packet/polarization', f"must list {N} components")
            for i, entry in enumerate(polarization):
                ok = _is_number(entry) or (isinstance(entry, list) and len(entry) == 2
                                           and all(_is_number(v) for v in entry))
                if not ok:
                    raise ConfigError(f'/microlocal/packet/polarization/{i}', "must be a number or [re, im]")
            if all(_complex(entry) == 0 for entry in polarization):
                raise ConfigError('/microlocal/packet/polarization', "must not vanish")

    def _validate_sweep(self, sweep: Optional[Dict[str, Any]]) -> None:
        if sweep is None:
            return
        if not isinstance(sweep, dict):
            raise ConfigError('/sweep', "must be a mapping")
        if sweep.get('parameter') not in SWEEP_PARAMETERS:
            raise ConfigError('/sweep/parameter', f"must be one of {SWEEP_PARAMETERS}")
        values = sweep.get('values')
        if not isinstance(values, list) or not values:
            raise ConfigError('/sweep/values', "must be a non-empty list")
        for i, value in enumerate(values):
            if not _is_int(value) or value < 0:
                raise ConfigError(f'/sweep/values/{i}', "must be an integer >= 0")

    def _validate_transverse(self, momentum: Optional[List[int]], dimension: int) -> None:
        if momentum is None:
            return
        if dimension != 4:
            raise ConfigError('/transverse_momentum', "only allowed for dimension 4")
        if not isinstance(momentum, list) or len(momentum) != 2 or not all(_is_int(p) for p in momentum):
            raise ConfigError('/transverse_momentum', "must be two integers")

    def _validate_logging(self, section: Dict[str, Any]) -> None:
        level = section.get('level', 'INFO')
        if not isinstance(level, str) or level.upper() not in LOG_LEVELS:
            raise ConfigError('/logging/level', f"must be one of {LOG_LEVELS}")

    def _validate_memory(self, config: Dict[str, Any]) -> None:
        size = (2 * config['cutoff_k'] + 1) * 2 ** (config['dimension'] // 2)
        megabytes = 16.0 * size * size * config['time_steps'] * MATRICES_PER_TIME / 2 ** 20
        cap = (config.get('numerics') or {}).get('memory_cap_mb', 2048.0)
        if megabytes > cap:
            raise ConfigError('/numerics/memory_cap_mb',
                              f"estimated footprint {megabytes:.0f} MB exceeds the cap of {cap} MB")

    def get(self, key: str, default: Any = None) -> Any:
        """
        Get configuration value by key (supports dot notation).

        Args:
            key: Configuration key (e.g., 'numerics.eigensolver')
            default: Default value if key not found

        Returns:
            Configuration value
        """
        keys = key.split('.')
        value = self.config

        for k in keys:
            if isinstance(value, dict) and k in value:
                value = value[k]
            else:
                return default

        return value

    def with_overrides(self, **overrides: Any) -> 'Config':
        """
        Copy with top-level fields replaced (None values are ignored).

        Raises:
            ConfigError: If the result violates the schema
        """
        data = copy.deepcopy(self.config)
        data.update({key: value for key, value in overrides.items() if value is not None})
        return Config(self.config_path, data)

    def to_dict(self) -> Dict[str, Any]:
        """Resolved scenario with defaults filled in."""
        resolved = {key: copy.deepcopy(self.config[key]) for key in REQUIRED_FIELDS}
        resolved.update({
            'name': self.name,
            'numerics': {
                'eigensolver': self.eigensolver,
                'time_derivative': self.time_derivative,
                'time_derivative_order': self.time_derivative_order,
                'h_floor': self.h_floor,
                'lambda_max': self.lambda_max,
                'memory_cap_mb': self.memory_cap_mb,
            },
            'microlocal': {
                'collar': self.collar,
                'packet': copy.deepcopy(self.get('microlocal.packet')),
                'random_packets': self.random_packets,
            },
            'transverse_momentum': list(self.transverse_momentum),
        })
        if self.get('sweep'):
            resolved['sweep'] = copy.deepcopy(self.get('sweep'))
        return resolved

    def model(self) -> MetricModel:
        return MetricModel.from_strings(self.h_expr, self.m_expr, self.u_expr,
                                        (self.t_min, self.t_max), self.dimension, self.h_floor)

    def grid(self) -> TimeGrid:
        return TimeGrid.from_interval(self.t_min, self.t_max, self.time_steps)

    @property
    def name(self) -> str:
        return self.get('name', Path(self.config_path).stem)

    @property
    def description(self) -> str:
        return self.get('description', '')

    @property
    def dimension(self) -> int:
        return self.config['dimension']

    @property
    def cutoff_k(self) -> int:
        return self.config['cutoff_k']

    @property
    def time_steps(self) -> int:
        return self.config['time_steps']

    @property
    def space_points(self) -> int:
        return self.config['space_points']

    @property
    def t_min(self) -> float:
        return float(self.config['t_min'])

    @property
    def t_max(self) -> float:
        return float(self.config['t_max'])

    @property
    def h_expr(self) -> str:
        return self.config['h_expr']

    @property
    def m_expr(self) -> str:
        return self.config['m_expr']

    @property
    def u_expr(self) -> str:
        return self.config['u_expr']

    @property
    def correction_order(self) -> int:
        return self.config['correction_order']

    @property
    def checks(self) -> List[str]:
        return list(self.config['checks'])

    @property
    def seed(self) -> int:
        return self.config['seed']

    @property
    def out_dir(self) -> str:
        return self.config['out_dir']

    @property
    def eigensolver(self) -> str:
        return self.get('numerics.eigensolver', 'lapack')

    @property
    def time_derivative(self) -> str:
        return self.get('numerics.time_derivative', 'fd')

    @property
    def time_derivative_order(self) -> int:
        return self.get('numerics.time_derivative_order', 6)

    @property
    def h_floor(self) -> float:
        return float(self.get('numerics.h_floor', 1e-3))

    @property
    def lambda_max(self) -> float:
        return float(self.get('numerics.lambda_max', 4096.0))

    @property
    def memory_cap_mb(self) -> float:
        return float(self.get('numerics.memory_cap_mb', 2048.0))

    @property
    def collar(self) -> int:
        return self.get('microlocal.collar', 2)

    @property
    def packet(self) -> Optional[Dict[str, Any]]:
        """Configured packet with the polarization as complex numbers."""
        packet = self.get('microlocal.packet')
        if packet is None:
            return None
        N = 2 ** (self.dimension // 2)
        polarization = packet.get('polarization') or [1.0] + [0.0] * (N - 1)
        return {
            'x0': float(packet['x0']),
            'k0': int(packet['k0']),
            'width': float(packet['width']),
            'polarization': tuple(_complex(entry) for entry in polarization),
        }

    @property
    def random_packets(self) -> int:
        return self.get('microlocal.random_packets', 0)

    @property
    def sweep(self) -> Optional[Tuple[str, List[int]]]:
        sweep = self.get('sweep')
        if not sweep:
            return None
        return sweep['parameter'], list(sweep['values'])

    @property
    def transverse_momentum(self) -> Tuple[int, ...]:
        return tuple(self.get('transverse_momentum') or ())

    @property
    def log_level(self) -> str:
        return self.get('logging.level', 'INFO').upper()

    @property
    def log_file(self) -> Optional[str]:
        return self.get('logging.file')


def _complex(entry: Any) -> complex:
    if isinstance(entry, list):
        return complex(float(entry[0]), float(entry[1]))
    return complex(float(entry))


def list_presets() -> Dict[str, str]:
    """
    Shipped presets.

    Returns:
        Dictionary mapping preset name to its description
    """
    presets = {}
    for path in sorted(PRESETS_DIR.glob('*.yaml')):
        with open(path, 'r') as f:
            data = yaml.safe_load(f) or {}
        presets[path.stem] = data.get('description', '')
    return presets


def preset_path(name: str) -> Path:
    """
    Raises:
        ConfigError: If no preset has this name
    """
    path = PRESETS_DIR / f'{name}.yaml'
    if not path.exists():
        raise ConfigError('', f"unknown preset {name!r}; available: {', '.join(list_presets())}")
    return path


def load_config(source: str = 'config.yaml') -> Config:
    """
    Load configuration from a file path or a preset name.

    Args:
        source: Path to a YAML/JSON scenario, or a preset name

    Returns:
        Config instance
    """
    if os.path.exists(source):
        return Config(source)
    return Config(str(preset_path(source)))
