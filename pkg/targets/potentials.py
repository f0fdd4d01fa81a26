"""
Benchmark potentials

Each factory returns an immutable TargetModel. Names match the CLI
target names.
"""

import logging
from typing import Callable, Dict

import numpy as np
from scipy.special import logsumexp, softmax

from errors import ParameterDomainError
from samplers.substeps import strang_dw_step
from .models import MixtureSpec, TargetModel

logger = logging.getLogger(__name__)


def _log2cosh(x: np.ndarray) -> np.ndarray:
    # log(2 cosh x) = |x| + log1p(exp(-2|x|))
    ax = np.abs(x)
    return ax + np.log1p(np.exp(-2.0 * ax))


def make_quadratic_logcosh(lam: float = 1.0, epsilon: float = 0.8) -> TargetModel:
    """U(x) = lam/2 x^2 + epsilon log(2 cosh x)"""
    if lam <= 0:
        raise ParameterDomainError(f"lambda must be positive, got {lam}")
    if epsilon < 0:
        raise ParameterDomainError(f"epsilon must be nonnegative, got {epsilon}")

    def potential(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return 0.5 * lam * x * x + epsilon * _log2cosh(x)

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return lam * x + epsilon * np.tanh(x)

    def laplacian(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return lam + epsilon / np.cosh(x) ** 2

    return TargetModel(
        name='quad-logcosh',
        dim=1,
        potential=potential,
        gradient=gradient,
        laplacian=laplacian,
        reference_recipe='rejection',
        params={'lambda': lam, 'epsilon': epsilon},
    )


def make_double_well() -> TargetModel:
    """U(x) = (x^2 - 1)^2, drift -4x^3 + 4x"""

    def potential(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return (x * x - 1.0) ** 2

    def gradient(x):
        x = np.asarray(x, dtype=float)
        return 4.0 * x ** 3 - 4.0 * x

    def laplacian(x):
        x = np.asarray(x, dtype=float)[..., 0]
        return 12.0 * x * x - 4.0

    return TargetModel(
        name='double-well',
        dim=1,
        potential=potential,
        gradient=gradient,
        laplacian=laplacian,
        drift_flow=strang_dw_step,
        reference_recipe='rejection',
    )


def make_logistic() -> TargetModel:
    """U(x) = |x| + 2 log1p(exp(-|x|)), so exp(-U) is the standard logistic density"""

    def potential(x):
        ax = np.abs(np.asarray(x, dtype=float)[..., 0])
        return ax + 2.0 * np.log1p(np.exp(-ax))

    def gradient(x):
        return np.tanh(0.5 * np.asarray(x, dtype=float))

    def laplacian(x):
        t = np.tanh(0.5 * np.asarray(x, dtype=float)[..., 0])
        return 0.5 * (1.0 - t * t)

    return TargetModel(
        name='logistic',
        dim=1,
        potential=potential,
        gradient=gradient,
        laplacian=laplacian,
        reference_recipe='inverse-cdf',
    )


def default_mixture_spec() -> MixtureSpec:
    return MixtureSpec(
        weights=np.array([0.5, 0.5]),
        means=np.array([[-2.0, 0.0], [2.0, 0.0]]),
        covariances=np.array([
            [[0.6, 0.2], [0.2, 0.5]],
            [[0.5, -0.1], [-0.1, 0.7]],
        ]),
    )


def make_mixture_2d(spec: MixtureSpec = None) -> TargetModel:
    """U(x) = -log sum_k w_k N(x; mu_k, Sigma_k)"""
    spec = spec or default_mixture_spec()
    precisions = spec.precisions
    traces = np.trace(precisions, axis1=1, axis2=2)

    def potential(x):
        return -logsumexp(spec.component_log_densities(x), axis=-1)

    def _pulls(x):
        # responsibilities r_k and P_k (x - mu_k)
        x = np.asarray(x, dtype=float)
        resp = softmax(spec.component_log_densities(x), axis=-1)
        pulls = np.einsum('kij,...kj->...ki', precisions, x[..., None, :] - spec.means)
        return resp, pulls

    def gradient(x):
        resp, pulls = _pulls(x)
        return np.einsum('...k,...ki->...i', resp, pulls)

    def laplacian(x):
        # Lap U = |grad U|^2 - sum_k r_k (|P_k d_k|^2 - tr P_k)
        resp, pulls = _pulls(x)
        grad = np.einsum('...k,...ki->...i', resp, pulls)
        per_comp = np.sum(pulls * pulls, axis=-1) - traces
        return np.sum(grad * grad, axis=-1) - np.sum(resp * per_comp, axis=-1)

    return TargetModel(
        name='mog2d',
        dim=spec.dim,
        potential=potential,
        gradient=gradient,
        laplacian=laplacian,
        reference_recipe='mixture-direct',
        mixture=spec,
    )


def make_ou(lam: float = 1.0, dim: int = 1) -> TargetModel:
    """U(x) = lam/2 |x|^2 with exact drift flow exp(-lam h) x"""
    if lam <= 0:
        raise ParameterDomainError(f"lambda must be positive, got {lam}")

    def potential(x):
        x = np.asarray(x, dtype=float)
        return 0.5 * lam * np.sum(x * x, axis=-1)

    def gradient(x):
        return lam * np.asarray(x, dtype=float)

    def laplacian(x):
        x = np.asarray(x, dtype=float)
        return np.full(x.shape[:-1], lam * dim)

    def drift_flow(x, h):
        return np.exp(-lam * h) * np.asarray(x, dtype=float)

    return TargetModel(
        name='ou',
        dim=dim,
        potential=potential,
        gradient=gradient,
        laplacian=laplacian,
        drift_flow=drift_flow,
        reference_recipe='gaussian-exact',
        params={'lambda': lam},
    )


def ou_stationary_variance(lam: float, beta: float) -> float:
    return 1.0 / (beta * lam)


TARGETS: Dict[str, Callable[..., TargetModel]] = {
    'quad-logcosh': make_quadratic_logcosh,
    'double-well': make_double_well,
    'logistic': make_logistic,
    'mog2d': make_mixture_2d,
    'ou': make_ou,
}


def make_target(name: str, **params) -> TargetModel:
    """Build a registered target by CLI name"""
    key = name.lower()
    if key not in TARGETS:
        raise ParameterDomainError(f"unknown target {name!r}; available: {', '.join(TARGETS)}")
    logger.debug(f"Building target {key} with {params}")
    return TARGETS[key](**params)
