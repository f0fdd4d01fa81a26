"""
Reference sample set model
"""

from dataclasses import dataclass
from typing import Optional

import numpy as np

from errors import ParameterDomainError
from targets.models import as_points


@dataclass
class ReferenceSampleSet:
    """Exact (or asymptotically exact) draws from a target's Gibbs law"""

    samples: np.ndarray  # (M, d)
    target_name: str
    method: str
    seed: Optional[int]  # None for files written without one
    acceptance_rate: Optional[float] = None  # rejection only

    def __post_init__(self):
        self.samples = np.array(as_points(self.samples))
        if self.samples.size and not np.isfinite(self.samples).all():
            raise ParameterDomainError(f"non-finite reference samples for {self.target_name}")
        if self.method == 'rejection' and self.acceptance_rate is None:
            raise ParameterDomainError("rejection sample sets must record an acceptance rate")

    @property
    def count(self) -> int:
        return self.samples.shape[0]

    @property
    def dim(self) -> int:
        return self.samples.shape[1]
