"""
Divergences and moments between densities and sample sets
"""

import numpy as np
from scipy.stats import wasserstein_distance

from config import KDE_FLOOR
from errors import GridError, ParameterDomainError
from targets.models import as_points
from .models import DensityGrid


def kl_divergence_grid(p: DensityGrid, q: DensityGrid, floor: float = KDE_FLOOR) -> float:
    """sum p log(max(p, eps) / max(q, eps)) times the cell measure"""
    if not p.same_nodes(q):
        raise GridError("KL needs both densities on the identical grid")
    pv = p.values
    ratio = np.log(np.maximum(pv, floor)) - np.log(np.maximum(q.values, floor))
    return float(np.sum(pv * ratio) * p.cell_measure)


def w1_sorted_1d(a: np.ndarray, b: np.ndarray) -> float:
    """
    Wasserstein-1 distance between two 1D empirical measures.
    For equal sizes this is the mean gap between sorted samples;
    unequal sizes are handled exactly through the CDFs.
    """
    a = np.ravel(np.asarray(a, dtype=float))
    b = np.ravel(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise ParameterDomainError("W1 needs two nonempty sample sets")
    return float(wasserstein_distance(a, b))


def empirical_moment(samples: np.ndarray, p: float) -> float:
    """Mean of |x|^p over the rows"""
    if p < 1:
        raise ParameterDomainError(f"moment order must be at least 1, got {p}")
    samples = as_points(samples)
    return float(np.mean(np.linalg.norm(samples, axis=1) ** p))


def empirical_moment_stderr(samples: np.ndarray, p: float) -> float:
    samples = as_points(samples)
    values = np.linalg.norm(samples, axis=1) ** p
    return float(np.std(values, ddof=1) / np.sqrt(values.size))
