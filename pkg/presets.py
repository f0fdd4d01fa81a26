"""
Named experiment presets for the four benchmark targets
"""

import math
from dataclasses import dataclass
from typing import Dict, Optional, Tuple

from config import DESK_PARTICLES, DESK_T_FINAL, KDE_FLOOR, FULL_PARTICLES, FULL_T_FINAL
from errors import ConfigError, ParameterDomainError
from samplers.ensemble import parse_init
from study import ExperimentSpec


@dataclass(frozen=True)
class Preset:
    name: str
    target: str
    tau_list: Tuple[float, ...]
    grid_nodes: int
    bandwidth_scale: float
    description: str
    grid_range: Optional[Tuple[float, float]] = None  # None: reference quantile box
    drift_integrator: Optional[str] = None
    kde_floor: float = KDE_FLOOR
    benchmark_kl_endpoints: Tuple[Tuple[float, float], Tuple[float, float]] = None  # (tau, KL) coarsest, finest

    @property
    def endpoint_slope(self) -> float:
        """Two-point log-log slope through the benchmark KL endpoints"""
        (t1, k1), (t2, k2) = self.benchmark_kl_endpoints
        return math.log(k1 / k2) / math.log(t1 / t2)

    def settings(self, full_scale: bool = False) -> dict:
        """Flat settings in config-file keys, for layering under file and CLI values"""
        return {
            'target': self.target,
            'scheme': 'rslmc',
            'tau_list': list(self.tau_list),
            'particles': FULL_PARTICLES if full_scale else DESK_PARTICLES,
            't_final': FULL_T_FINAL if full_scale else DESK_T_FINAL,
            'grid_nodes': self.grid_nodes,
            'bandwidth_scale': self.bandwidth_scale,
            'drift_integrator': self.drift_integrator,
        }


PRESETS: Dict[str, Preset] = {
    'fig1-logcosh': Preset(
        name='fig1-logcosh',
        target='quad-logcosh',
        tau_list=(1.0, 0.5, 0.25, 0.125, 0.0625),
        grid_nodes=512,
        bandwidth_scale=2.0,
        drift_integrator='heun',
        description='quadratic plus log-cosh, rejection reference, Heun drift',
        benchmark_kl_endpoints=((1.0, 3.5e-1), (0.0625, 1e-5)),
    ),
    'fig2-doublewell': Preset(
        name='fig2-doublewell',
        target='double-well',
        tau_list=(2.0 ** -4, 2.0 ** -5, 2.0 ** -6, 2.0 ** -7, 2.0 ** -8),
        grid_nodes=1024,
        grid_range=(-4.0, 4.0),
        bandwidth_scale=1.0,
        drift_integrator='strang-double-well',
        description='double well, rejection reference, analytic Strang drift',
        benchmark_kl_endpoints=((2.0 ** -4, 1.5e-1), (2.0 ** -8, 4e-6)),
    ),
    'fig3-logistic': Preset(
        name='fig3-logistic',
        target='logistic',
        tau_list=(0.2, 0.4, 0.6, 0.8, 1.0),
        grid_nodes=512,
        bandwidth_scale=3.0,
        drift_integrator='heun',
        description='logistic, inverse-CDF reference, Heun drift',
        benchmark_kl_endpoints=((1.0, 2e-3), (0.2, 3e-6)),
    ),
    'fig4-mog2d': Preset(
        name='fig4-mog2d',
        target='mog2d',
        tau_list=(0.1, 0.2, 0.4, 0.6, 0.8),
        grid_nodes=300,
        bandwidth_scale=1.0,
        drift_integrator='heun',
        description='2D Gaussian mixture, direct reference, Heun drift',
        benchmark_kl_endpoints=((0.8, 8.5e-1), (0.1, 2e-4)),
    ),
}

# settings that map straight onto ExperimentSpec fields
SPEC_KEYS = (
    'target', 'scheme', 'tau_list', 'particles', 't_final', 'beta', 'seed', 'workers', 'replicates',
    'drift_integrator', 'init', 'bandwidth_scale', 'grid_nodes', 'out_dir', 'shared_coin', 'reference_method',
    'reference_file',
)


def get_preset(name: str) -> Preset:
    if name not in PRESETS:
        raise ConfigError(f"unknown preset {name!r}; available: {', '.join(PRESETS)}")
    return PRESETS[name]


def spec_from_settings(settings: dict, preset: Optional[Preset] = None) -> ExperimentSpec:
    """Build an ExperimentSpec from merged settings"""
    if 'target' not in settings or 'tau_list' not in settings:
        raise ConfigError("settings need at least a target and a tau list")

    kwargs = {k: settings[k] for k in SPEC_KEYS if settings.get(k) is not None}
    init = kwargs.pop('init', None)
    if init is not None:
        law, arg = parse_init(init)
        kwargs['init'] = law
        if law == 'samples':
            kwargs['init_file'] = arg
        elif arg is not None:
            kwargs['x0'] = arg
    if preset is not None:
        kwargs.setdefault('name', preset.name)
        kwargs['grid_range'] = preset.grid_range
        kwargs['kde_floor'] = preset.kde_floor

    try:
        return ExperimentSpec(**kwargs)
    except TypeError as e:
        raise ParameterDomainError(f"bad experiment settings: {e}")


def preset_spec(name: str, full_scale: bool = False, **overrides) -> ExperimentSpec:
    """ExperimentSpec for a named preset, with optional field overrides"""
    preset = get_preset(name)
    settings = preset.settings(full_scale)
    settings.update({k: v for k, v in overrides.items() if v is not None})
    return spec_from_settings(settings, preset)
