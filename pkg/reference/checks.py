"""
Goodness-of-fit checks for 1D reference samplers
"""

from typing import Callable

import numpy as np
from scipy import stats
from scipy.integrate import cumulative_trapezoid

from targets.models import TargetModel

CDF = Callable[[np.ndarray], np.ndarray]


def gibbs_cdf(target: TargetModel, beta: float = 1.0, lo: float = -12.0, hi: float = 12.0,
              n_nodes: int = 200_001) -> CDF:
    """CDF of exp(-beta U) by trapezoidal quadrature on [lo, hi]"""
    grid = np.linspace(lo, hi, n_nodes)
    log_w = -beta * target.potential(grid[:, None])
    weights = np.exp(log_w - log_w.max())
    cdf = cumulative_trapezoid(weights, grid, initial=0.0)
    cdf /= cdf[-1]
    return lambda x: np.interp(x, grid, cdf)


def analytic_cdf(target: TargetModel, beta: float = 1.0) -> CDF:
    """Closed-form CDF where one exists, quadrature otherwise"""
    if target.name == 'logistic' and beta == 1.0:
        return stats.logistic.cdf
    if target.name == 'ou':
        return stats.norm(scale=1.0 / np.sqrt(beta * target.params['lambda'])).cdf
    return gibbs_cdf(target, beta)


def ks_threshold(m: int) -> float:
    return 1.95 * 2.0 / np.sqrt(m)


def ks_statistic(samples: np.ndarray, cdf: CDF) -> float:
    """Two-sided Kolmogorov-Smirnov distance between samples and a CDF"""
    return float(stats.kstest(np.ravel(samples), cdf).statistic)
