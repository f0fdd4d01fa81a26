"""
Target models for SplitLab

Potentials are evaluated at unit temperature on arrays shaped (..., dim);
samplers apply the inverse temperature beta.
"""

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from errors import ParameterDomainError

ArrayMap = Callable[[np.ndarray], np.ndarray]
FlowMap = Callable[[np.ndarray, float], np.ndarray]

REFERENCE_RECIPES = ('inverse-cdf', 'rejection', 'mixture-direct', 'gaussian-exact')


@dataclass(frozen=True)
class MixtureSpec:
    """Weighted Gaussian mixture"""

    weights: np.ndarray
    means: np.ndarray  # (k, d)
    covariances: np.ndarray  # (k, d, d)

    def __post_init__(self):
        weights = np.asarray(self.weights, dtype=float)
        means = np.atleast_2d(np.asarray(self.means, dtype=float))
        covs = np.asarray(self.covariances, dtype=float)

        if abs(weights.sum() - 1.0) > 1e-12 or np.any(weights < 0):
            raise ParameterDomainError(f"mixture weights must be a probability vector, got {weights}")
        if not (len(weights) == len(means) == len(covs)):
            raise ParameterDomainError("mixture weights, means and covariances differ in length")
        if covs.shape[1:] != (means.shape[1], means.shape[1]):
            raise ParameterDomainError(f"covariance shape {covs.shape} does not match dim {means.shape[1]}")

        for k, cov in enumerate(covs):
            if not np.allclose(cov, cov.T):
                raise ParameterDomainError(f"covariance {k} is not symmetric")
            try:
                np.linalg.cholesky(cov)
            except np.linalg.LinAlgError:
                raise ParameterDomainError(f"covariance {k} is not positive definite")

        object.__setattr__(self, 'weights', weights)
        object.__setattr__(self, 'means', means)
        object.__setattr__(self, 'covariances', covs)

    @property
    def dim(self) -> int:
        return self.means.shape[1]

    @property
    def cholesky_factors(self) -> np.ndarray:
        return np.linalg.cholesky(self.covariances)

    @property
    def precisions(self) -> np.ndarray:
        return np.linalg.inv(self.covariances)

    def component_log_densities(self, x: np.ndarray) -> np.ndarray:
        """log(w_k N(x; mu_k, Sigma_k)) for every component, shape (..., k)"""
        x = np.asarray(x, dtype=float)
        delta = x[..., None, :] - self.means  # (..., k, d)
        maha = np.einsum('...ki,kij,...kj->...k', delta, self.precisions, delta)
        _, logdet = np.linalg.slogdet(self.covariances)
        log_norm = -0.5 * (self.dim * np.log(2 * np.pi) + logdet)
        return np.log(self.weights) + log_norm - 0.5 * maha


@dataclass(frozen=True)
class TargetModel:
    """A Gibbs target exp(-beta U) together with its sampling recipe"""

    name: str
    dim: int
    potential: ArrayMap
    gradient: ArrayMap
    reference_recipe: str
    laplacian: Optional[ArrayMap] = None
    drift_flow: Optional[FlowMap] = None
    params: dict = field(default_factory=dict)
    mixture: Optional[MixtureSpec] = None

    def __post_init__(self):
        if self.dim < 1:
            raise ParameterDomainError(f"dim must be positive, got {self.dim}")
        if self.reference_recipe not in REFERENCE_RECIPES:
            raise ParameterDomainError(f"unknown reference recipe {self.reference_recipe!r}")

    def drift(self, x: np.ndarray) -> np.ndarray:
        """b(x) = -grad U(x)"""
        return -self.gradient(x)

    def drift_divergence(self, x: np.ndarray) -> np.ndarray:
        """div b(x) = -Laplacian U(x)"""
        if self.laplacian is None:
            raise ParameterDomainError(f"target {self.name} has no Laplacian")
        return -self.laplacian(x)

    @property
    def has_exact_flow(self) -> bool:
        return self.drift_flow is not None

    def gradient_defect(self, points: np.ndarray, step: float = 1e-5) -> float:
        """
        Largest relative gap between the gradient and a central
        finite difference of the potential over the given points.
        """
        points = np.atleast_2d(np.asarray(points, dtype=float))
        exact = self.gradient(points)
        fd = np.empty_like(points)
        for i in range(self.dim):
            e = np.zeros(self.dim)
            e[i] = step
            fd[:, i] = (self.potential(points + e) - self.potential(points - e)) / (2 * step)
        scale = np.maximum(np.abs(exact), 1.0)
        return float(np.max(np.abs(fd - exact) / scale))


def as_points(x) -> np.ndarray:
    """Coerce samples to shape (M, d); a flat array is M points in 1D"""
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return x.reshape(1, 1)
    if x.ndim == 1:
        return x.reshape(-1, 1)
    return x
