"""
Run configuration for the verification commands.

A run config is a JSON document:

    {"command": "verify-sobolev", "seed": 20240601,
     "quadrature": {"grassmann_samples": 2000, ...},
     "sigma": 3.0,
     "cases": [{...}, ...]}

All numerical state comes from the file and the explicit seed. Library-wide
defaults (sample counts, acceptance sigma) come from settings.PROJAVE.
"""
import copy
import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from django.conf import settings

from .exceptions import ConfigurationError
from .quadrature import QuadratureSpec

logger = logging.getLogger(__name__)

COMMANDS = ('constants', 'verify-sobolev', 'chain', 'petty', 'geom-ineq', 'bv', 'validate-fixture')

DEFAULTS = {
    'RADIAL_NODES': 64,
    'SPHERE_SAMPLES': 20000,
    'GRASSMANN_SAMPLES': 2000,
    'BATCH_SIZE': 4096,
    'TARGET_REL_ERROR': 1e-3,
    'SIGMA': 3.0,
    'REPORT_DIR': 'reports',
    'AUDIT_RUNS': 5,
    'AUDIT_HOUR': 3,
}


def library_defaults():
    """DEFAULTS overlaid with settings.PROJAVE."""
    merged = dict(DEFAULTS)
    if settings.configured:
        merged.update(getattr(settings, 'PROJAVE', {}) or {})
    return merged


def default_quadrature(seed, **overrides):
    defaults = library_defaults()
    values = {
        'seed': seed,
        'radial_nodes': defaults['RADIAL_NODES'],
        'sphere_samples': defaults['SPHERE_SAMPLES'],
        'grassmann_samples': defaults['GRASSMANN_SAMPLES'],
        'batch_size': defaults['BATCH_SIZE'],
        'target_rel_error': defaults['TARGET_REL_ERROR'],
    }
    values.update(overrides)
    return QuadratureSpec.from_dict(values)


@dataclass
class RunConfig:
    command: str
    seed: int
    quadrature: QuadratureSpec
    cases: list = field(default_factory=list)
    sigma: float = 3.0
    base_dir: str = '.'
    options: dict = field(default_factory=dict)

    def to_dict(self):
        """Self-contained description; replaying it reproduces the run."""
        quadrature = self.quadrature.to_dict()
        quadrature.pop('seed')
        data = {
            'command': self.command,
            'seed': self.seed,
            'quadrature': quadrature,
            'sigma': self.sigma,
            'base_dir': self.base_dir,
            'cases': copy.deepcopy(self.cases),
        }
        data.update(copy.deepcopy(self.options))
        return data


def run_config_from_dict(data, seed=None, command=None, base_dir=None):
    """
    Validate a config dict. `seed` and `command` override the file; a missing
    seed is an error (runs never draw entropy from the OS).
    """
    if not isinstance(data, dict):
        raise ConfigurationError("run config must be a JSON object")
    data = copy.deepcopy(data)
    command = command or data.pop('command', None)
    data.pop('command', None)
    if command not in COMMANDS:
        raise ConfigurationError(f"unknown command {command!r}; expected one of {COMMANDS}")
    file_seed = data.pop('seed', None)
    seed = file_seed if seed is None else seed
    if seed is None:
        raise ConfigurationError("a seed is mandatory: set 'seed' in the config or pass --seed")
    try:
        seed = int(seed)
    except (TypeError, ValueError) as e:
        raise ConfigurationError(f"seed must be an integer, got {seed!r}") from e
    quadrature = default_quadrature(seed, **(data.pop('quadrature', None) or {}))
    cases = data.pop('cases', [])
    if not isinstance(cases, list):
        raise ConfigurationError("'cases' must be a list")
    sigma = float(data.pop('sigma', library_defaults()['SIGMA']))
    if not sigma > 0:
        raise ConfigurationError(f"sigma must be positive, got {sigma}")
    base_dir = str(data.pop('base_dir', None) or base_dir or '.')
    return RunConfig(command=command, seed=seed, quadrature=quadrature, cases=cases,
                     sigma=sigma, base_dir=base_dir, options=data)


def load_run_config(path, seed=None, command=None):
    path = Path(path)
    try:
        with path.open() as f:
            data = json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ConfigurationError(f"cannot read config {path}: {e}") from e
    config = run_config_from_dict(data, seed=seed, command=command,
                                  base_dir=str(path.resolve().parent))
    logger.info(f"[Config] loaded {path} ({config.command}, seed={config.seed}, {len(config.cases)} cases)")
    return config
