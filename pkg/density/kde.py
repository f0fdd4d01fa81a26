"""
Gaussian kernel density estimation on tensor grids

rho(x) = 1/(M h^d) sum_j (2 pi)^(-d/2) exp(-|x - X_j|^2 / (2 h^2))

The Gaussian kernel factorizes over axes, so a 2D grid is one matrix
product per sample chunk. Kernels are cut at KDE_TRUNCATION bandwidths:
samples are sorted along the first axis and each node block only visits
the samples within reach of it. Node blocks have a fixed size so results
do not depend on the worker count.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Sequence, Union

import numpy as np
from scipy.stats import norm

from config import DEFAULT_WORKERS, KDE_TRUNCATION, QUANTILE_HI, QUANTILE_LO
from errors import GridError, ParameterDomainError
from targets.models import as_points
from .models import DensityGrid, KDEParams

logger = logging.getLogger(__name__)

SAMPLE_CHUNK = 8192
NODE_BLOCK = 64


def silverman_bandwidth(samples: np.ndarray, dim: int = None) -> float:
    """h = sigma (4 / ((d + 2) M))^(1/(d + 4)); sigma averages per-axis deviations"""
    samples = as_points(samples)
    m, d = samples.shape
    d = dim or d
    if m < 2:
        raise ParameterDomainError(f"Silverman's rule needs at least two samples, got {m}")

    sigma = float(np.mean(np.std(samples, axis=0, ddof=1)))
    if not sigma > 0:
        raise ParameterDomainError("samples have zero variance; bandwidth undefined")

    return sigma * (4.0 / ((d + 2) * m)) ** (1.0 / (d + 4))


def _axis_kernel(nodes: np.ndarray, points: np.ndarray, h: float) -> np.ndarray:
    """phi((node - point) / h) / h, zero beyond the truncation radius"""
    u = (nodes[:, None] - points[None, :]) / h
    k = norm.pdf(u) / h
    k[np.abs(u) > KDE_TRUNCATION] = 0.0
    return k


def _evaluate_block(first_axis: np.ndarray, other_axes: Sequence[np.ndarray],
                    samples: np.ndarray, h: float) -> np.ndarray:
    out = np.zeros((first_axis.size,) + tuple(a.size for a in other_axes))
    for start in range(0, samples.shape[0], SAMPLE_CHUNK):
        chunk = samples[start:start + SAMPLE_CHUNK]
        k0 = _axis_kernel(first_axis, chunk[:, 0], h)
        if not other_axes:
            out += k0.sum(axis=1)
        else:
            k1 = _axis_kernel(other_axes[0], chunk[:, 1], h)
            out += k0 @ k1.T
    return out


def kde_evaluate(samples: np.ndarray, params: KDEParams, grid: DensityGrid,
                 normalize: bool = True, n_workers: int = DEFAULT_WORKERS) -> DensityGrid:
    """Fill the grid with the KDE of samples, then normalize on the grid"""
    samples = as_points(samples)
    if samples.shape[1] != grid.dim or grid.dim > 2:
        raise GridError(f"KDE supports 1D/2D grids matching the samples, got grid dim {grid.dim}, samples {samples.shape}")

    h = params.h
    reach = KDE_TRUNCATION * h
    first, others = grid.axes[0], list(grid.axes[1:])
    starts = range(0, first.size, NODE_BLOCK)
    m = samples.shape[0]
    samples = samples[np.argsort(samples[:, 0], kind='stable')]
    keys = samples[:, 0]

    def work(start):
        block = first[start:start + NODE_BLOCK]
        lo = np.searchsorted(keys, block[0] - reach, side='left')
        hi = np.searchsorted(keys, block[-1] + reach, side='right')
        return _evaluate_block(block, others, samples[lo:hi], h)

    if n_workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(work, starts))
    else:
        parts = [work(s) for s in starts]

    values = np.concatenate(parts, axis=0) / m
    estimate = grid.with_values(values)
    return estimate.normalized() if normalize else estimate


def uniform_grid(lo: Union[float, Sequence[float]], hi: Union[float, Sequence[float]],
                 n_nodes: Union[int, Sequence[int]], dim: int = 1) -> DensityGrid:
    lo = np.broadcast_to(np.asarray(lo, dtype=float), (dim,))
    hi = np.broadcast_to(np.asarray(hi, dtype=float), (dim,))
    counts = np.broadcast_to(np.asarray(n_nodes, dtype=int), (dim,))
    if np.any(lo >= hi):
        raise GridError(f"grid bounds must satisfy lo < hi, got {lo}, {hi}")
    return DensityGrid.empty(tuple(np.linspace(a, b, n) for a, b, n in zip(lo, hi, counts)))


def build_quantile_grid(reference_samples: np.ndarray, n_nodes: Union[int, Sequence[int]],
                        q_lo: float = QUANTILE_LO, q_hi: float = QUANTILE_HI) -> DensityGrid:
    """Uniform grid between the q_lo and q_hi empirical quantiles of each axis"""
    if not q_lo < q_hi:
        raise GridError(f"quantile bounds must satisfy q_lo < q_hi, got {q_lo}, {q_hi}")
    samples = as_points(reference_samples)
    if samples.shape[0] < 2:
        raise GridError("need at least two samples to place a quantile grid")

    bounds = np.quantile(samples, [q_lo, q_hi], axis=0)
    if np.any(bounds[0] >= bounds[1]):
        raise GridError(f"degenerate quantile box {bounds.tolist()}")
    logger.debug(f"Quantile grid box {bounds.tolist()} with {n_nodes} nodes")
    return uniform_grid(bounds[0], bounds[1], n_nodes, dim=samples.shape[1])
