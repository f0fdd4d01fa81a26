"""
SplitLab Configuration
"""

import os
from pathlib import Path
from typing import Optional

from errors import ConfigError

# Base directory
BASE_DIR = Path(__file__).parent

# Run ledger
DB_PATH = os.environ.get("SPLITLAB_DB", str(BASE_DIR / "splitlab.db"))

# Output
OUTPUT_DIR = os.environ.get("SPLITLAB_OUT_DIR", str(BASE_DIR / "results"))

# Parallelism
DEFAULT_WORKERS = int(os.environ.get("SPLITLAB_WORKERS", os.cpu_count() or 1))
STREAM_BLOCK = int(os.environ.get("SPLITLAB_STREAM_BLOCK", 16384))  # particles per RNG stream
NAN_CHECK_INTERVAL = 64  # steps between divergence checks

# Experiment scale
DESK_PARTICLES = 200_000
DESK_T_FINAL = 20.0
FULL_PARTICLES = 10_000_000
FULL_T_FINAL = 50.0
DEFAULT_REPLICATES = int(os.environ.get("SPLITLAB_REPLICATES", 3))
DEFAULT_BETA = 1.0
DEFAULT_SEED = 20240601

# Density estimation
KDE_FLOOR = 1e-12
KDE_TRUNCATION = 8.0  # kernel support in bandwidths
QUANTILE_LO = 1e-4
QUANTILE_HI = 1.0 - 1e-4

# Logging
LOG_LEVEL = os.environ.get("LOG_LEVEL", "INFO")

# Keys accepted in config files, with the type each value is parsed as
CONFIG_KEYS = {
    'target': str,
    'scheme': str,
    'tau_list': lambda s: [float(t) for t in s.replace(',', ' ').split()],
    'particles': int,
    't_final': float,
    'beta': float,
    'seed': int,
    'workers': int,
    'replicates': int,
    'drift_integrator': str,
    'init': str,
    'bandwidth_scale': float,
    'grid_nodes': int,
    'out_dir': str,
    'shared_coin': lambda s: s.strip().lower() in ('1', 'true', 'yes', 'on'),
    'reference_method': str,
    'reference_file': str,
}


def load_config_file(path: str) -> dict:
    """
    Parse a flat key=value config file.
    Blank lines and '#' comments are ignored.
    """
    values = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as e:
        raise ConfigError(f"cannot read config file {path}: {e}")

    for lineno, raw in enumerate(lines, start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        if '=' not in line:
            raise ConfigError(f"{path}:{lineno}: expected key=value, got {line!r}")

        key, value = (part.strip() for part in line.split('=', 1))
        key = key.replace('-', '_')
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        try:
            values[key] = CONFIG_KEYS[key](value)
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {value!r}")

    return values


def resolve_settings(preset: dict, file_values: Optional[dict], cli_values: Optional[dict]) -> dict:
    """Merge settings: CLI flags > config file > preset defaults"""
    settings = dict(preset)
    for layer in (file_values or {}, cli_values or {}):
        settings.update({k: v for k, v in layer.items() if v is not None})
    return settings
