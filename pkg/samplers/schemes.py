"""
RSLMC and baseline discretizations of overdamped Langevin dynamics
"""

import logging
from typing import Dict, Type

import numpy as np

from errors import ParameterDomainError
from targets.models import TargetModel
from .base import BaseScheme, EnsembleState, SamplerConfig

logger = logging.getLogger(__name__)


class RSLMCScheme(BaseScheme):
    """Random splitting: each particle flips a coin for the substep order"""

    def get_scheme_name(self) -> str:
        return "rslmc"

    def advance(self, x: np.ndarray, rng: np.random.Generator, step_index: int) -> np.ndarray:
        n = x.shape[0]
        drift_first = (self.order_coins(rng, n, step_index) <= 0.5)[:, None]
        z = rng.standard_normal(x.shape)

        # one drift evaluation per particle: kick before it only on the diffusion-first branch
        pre = np.where(drift_first, x, self.kick(x, z))
        moved = self.drift_step(pre, self.cfg.tau)
        return np.where(drift_first, self.kick(moved, z), moved)


class LMCEulerScheme(BaseScheme):
    """Euler-Maruyama: X - tau grad U(X) + sqrt(2 tau / beta) Z"""

    def get_scheme_name(self) -> str:
        return "lmc-euler"

    def advance(self, x: np.ndarray, rng: np.random.Generator, step_index: int) -> np.ndarray:
        z = rng.standard_normal(x.shape)
        return self.kick(x - self.cfg.tau * self.target.gradient(x), z)


class DriftFirstScheme(BaseScheme):
    """Lie-Trotter with the drift substep always first"""

    def get_scheme_name(self) -> str:
        return "lie-trotter-drift-first"

    def advance(self, x: np.ndarray, rng: np.random.Generator, step_index: int) -> np.ndarray:
        z = rng.standard_normal(x.shape)
        return self.kick(self.drift_step(x, self.cfg.tau), z)


class DiffusionFirstScheme(BaseScheme):
    """Lie-Trotter with the diffusion kick always first"""

    def get_scheme_name(self) -> str:
        return "lie-trotter-diffusion-first"

    def advance(self, x: np.ndarray, rng: np.random.Generator, step_index: int) -> np.ndarray:
        z = rng.standard_normal(x.shape)
        return self.drift_step(self.kick(x, z), self.cfg.tau)


class StrangSymmetricScheme(BaseScheme):
    """Half drift, full diffusion, half drift"""

    def get_scheme_name(self) -> str:
        return "strang-symmetric"

    def advance(self, x: np.ndarray, rng: np.random.Generator, step_index: int) -> np.ndarray:
        z = rng.standard_normal(x.shape)
        half = 0.5 * self.cfg.tau
        return self.drift_step(self.kick(self.drift_step(x, half), z), half)


SCHEMES: Dict[str, Type[BaseScheme]] = {
    'rslmc': RSLMCScheme,
    'lmc-euler': LMCEulerScheme,
    'lie-trotter-drift-first': DriftFirstScheme,
    'lie-trotter-diffusion-first': DiffusionFirstScheme,
    'strang-symmetric': StrangSymmetricScheme,
}


def make_scheme(cfg: SamplerConfig, target: TargetModel) -> BaseScheme:
    return SCHEMES[cfg.scheme](cfg, target)


def _step_with(expected: tuple, state: EnsembleState, cfg: SamplerConfig, target: TargetModel) -> EnsembleState:
    if cfg.scheme not in expected:
        raise ParameterDomainError(f"scheme {cfg.scheme!r} not accepted here (expected {', '.join(expected)})")
    return make_scheme(cfg, target).step(state)


def rslmc_step(state: EnsembleState, cfg: SamplerConfig, target: TargetModel) -> EnsembleState:
    """One RSLMC step for every particle"""
    return _step_with(('rslmc',), state, cfg, target)


def lmc_euler_step(state: EnsembleState, cfg: SamplerConfig, target: TargetModel) -> EnsembleState:
    return _step_with(('lmc-euler',), state, cfg, target)


def fixed_order_step(state: EnsembleState, cfg: SamplerConfig, target: TargetModel) -> EnsembleState:
    return _step_with(('lie-trotter-drift-first', 'lie-trotter-diffusion-first'), state, cfg, target)


def strang_symmetric_step(state: EnsembleState, cfg: SamplerConfig, target: TargetModel) -> EnsembleState:
    return _step_with(('strang-symmetric',), state, cfg, target)
