"""
Uniform-in-time moment check

Tracks E|X_n|^p along a long run and compares its running maximum with the
value at a reference step; a bounded ratio means no drift to infinity.
"""

import logging
from dataclasses import dataclass

import numpy as np

from errors import ParameterDomainError
from samplers.base import MomentTrace, SamplerConfig
from samplers.ensemble import run_ensemble
from targets.models import TargetModel

logger = logging.getLogger(__name__)


@dataclass
class MomentCheck:
    trace: MomentTrace
    order: float
    reference_step: int
    reference_value: float
    running_max: np.ndarray

    @property
    def ratio(self) -> float:
        return float(self.running_max[-1] / self.reference_value)

    def bounded(self, factor: float = 3.0) -> bool:
        return self.ratio <= factor


def moment_uniformity_check(target: TargetModel, cfg: SamplerConfig, order: float = 4.0,
                            reference_step: int = 1000, record_every: int = 10,
                            init: str = 'point', x0=None) -> MomentCheck:
    """Record E|X_n|^order every record_every steps over cfg.n_steps steps"""
    if reference_step % record_every or reference_step > cfg.n_steps:
        raise ParameterDomainError(
            f"reference step {reference_step} must be a recorded step within {cfg.n_steps} steps"
        )

    state = run_ensemble(cfg, target, init=init, x0=x0, moment_orders=(order,), record_every=record_every)
    trace = state.moment_trace
    values = trace.column(order)
    reference_value = float(values[reference_step // record_every])
    if not reference_value > 0:
        raise ParameterDomainError(f"moment at step {reference_step} is {reference_value}; ratio undefined")

    check = MomentCheck(
        trace=trace,
        order=order,
        reference_step=reference_step,
        reference_value=reference_value,
        running_max=np.maximum.accumulate(values),
    )
    logger.info(f"E|X|^{order:g}: value at step {reference_step} {reference_value:.4g}, max ratio {check.ratio:.3f}")
    return check
