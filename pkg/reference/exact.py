"""
Reference samplers: inverse CDF, rejection, direct mixture, exact Gaussian

Draws are partitioned into fixed blocks, each with its own counter-based
stream, so a sample set depends only on (seed, m).
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, Optional, Tuple

import numpy as np
from scipy.special import logit

from config import DEFAULT_WORKERS, STREAM_BLOCK
from db.samples import load_samples
from errors import EnvelopeViolation, ParameterDomainError
from samplers.streams import REFERENCE, block_slices, make_stream
from targets.models import MixtureSpec, TargetModel
from .models import ReferenceSampleSet

logger = logging.getLogger(__name__)

# inverse-CDF uniform guard
U_EPS = 2.0 ** -53

# double-well rejection proposal
DW_PROPOSAL_STD = 0.8
DW_ENVELOPE_RANGE = (-4.0, 4.0)
DW_ENVELOPE_NODES = 100_000
ENVELOPE_MARGIN = 1.1


def _map_blocks(m: int, seed: int, n_workers: int, draw: Callable[[np.random.Generator, int], np.ndarray]) -> List:
    """Run draw(rng, count) for every block, in block order"""
    blocks = block_slices(m, STREAM_BLOCK)
    jobs = [(make_stream(seed, REFERENCE, i), b.stop - b.start) for i, b in enumerate(blocks)]
    if n_workers > 1 and len(jobs) > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            return list(pool.map(lambda job: draw(*job), jobs))
    return [draw(*job) for job in jobs]


def logistic_quantile(u: np.ndarray) -> np.ndarray:
    """Standard logistic quantile log(u / (1 - u)) with the uniform guard applied"""
    return logit(np.clip(u, U_EPS, 1.0 - U_EPS))


def sample_logistic_inverse_cdf(m: int, seed: int, n_workers: int = DEFAULT_WORKERS) -> ReferenceSampleSet:
    if m < 1:
        raise ParameterDomainError(f"need at least one draw, got m={m}")

    parts = _map_blocks(m, seed, n_workers, lambda rng, k: logistic_quantile(rng.random(k)))
    return ReferenceSampleSet(
        samples=np.concatenate(parts)[:, None],
        target_name='logistic',
        method='inverse-cdf',
        seed=seed,
    )


@dataclass(frozen=True)
class RejectionPlan:
    """Gaussian proposal plus log acceptance probability"""
    mean: float
    std: float
    log_acceptance: Callable[[np.ndarray], np.ndarray]


def logcosh_plan(target: TargetModel, beta: float = 1.0) -> RejectionPlan:
    """
    Proposal N(0, 1/(beta lambda)) matched to the quadratic part.
    Acceptance simplifies to (cosh x)^(-beta epsilon).
    """
    lam = target.params['lambda']
    eps = target.params['epsilon']
    log2 = np.log(2.0)

    def log_acceptance(x):
        ax = np.abs(x)
        log_cosh = ax + np.log1p(np.exp(-2.0 * ax)) - log2
        return -beta * eps * log_cosh

    return RejectionPlan(mean=0.0, std=float(1.0 / np.sqrt(beta * lam)), log_acceptance=log_acceptance)


def certified_plan(target: TargetModel, beta: float = 1.0, std: float = DW_PROPOSAL_STD,
                   mean: float = 0.0, lo: float = DW_ENVELOPE_RANGE[0], hi: float = DW_ENVELOPE_RANGE[1],
                   n_nodes: int = DW_ENVELOPE_NODES, margin: float = ENVELOPE_MARGIN) -> RejectionPlan:
    """
    Envelope K = margin * max over a grid of exp(-beta U) / q, with q the
    unnormalized Gaussian proposal. Violations are caught at proposal time.
    """
    grid = np.linspace(lo, hi, n_nodes)

    def log_ratio(x):
        return -beta * target.potential(x[:, None]) + 0.5 * ((x - mean) / std) ** 2

    log_k = float(np.max(log_ratio(grid)) + np.log(margin))
    logger.info(f"Certified envelope for {target.name}: log K = {log_k:.6f} (proposal N({mean}, {std}^2))")

    return RejectionPlan(mean=mean, std=std, log_acceptance=lambda x: log_ratio(x) - log_k)


def rejection_plan_for(target: TargetModel, beta: float = 1.0) -> RejectionPlan:
    if target.name == 'quad-logcosh':
        return logcosh_plan(target, beta)
    return certified_plan(target, beta)


def rejection_sample(target: TargetModel, plan: RejectionPlan, m: int, seed: int,
                     n_workers: int = DEFAULT_WORKERS) -> ReferenceSampleSet:
    """Accept x ~ N(mean, std^2) with probability exp(log_acceptance(x))"""
    if target.dim != 1:
        raise ParameterDomainError("rejection sampling is implemented for 1D targets")
    if m < 1:
        raise ParameterDomainError(f"need at least one draw, got m={m}")

    def draw(rng: np.random.Generator, count: int) -> Tuple[np.ndarray, int]:
        accepted = []
        n_accepted = 0
        proposed = 0
        while n_accepted < count:
            batch = max(2 * (count - n_accepted), 64)
            x = plan.mean + plan.std * rng.standard_normal(batch)
            log_u = np.log(rng.random(batch))
            log_a = plan.log_acceptance(x)

            over = np.flatnonzero(log_a > 1e-12)
            if over.size:
                i = over[0]
                raise EnvelopeViolation(float(x[i]), float(np.exp(log_a[i])))

            keep = x[log_u < log_a][:count - n_accepted]
            if keep.size < count - n_accepted:
                proposed += batch
            else:
                # count proposals only up to the last accepted one
                last = np.flatnonzero(log_u < log_a)[count - n_accepted - 1]
                proposed += last + 1
            accepted.append(keep)
            n_accepted += keep.size
        return np.concatenate(accepted), proposed

    parts = _map_blocks(m, seed, n_workers, draw)
    samples = np.concatenate([p[0] for p in parts])
    proposed = sum(p[1] for p in parts)
    rate = m / proposed

    logger.info(f"Rejection sampling {target.name}: {m} draws, acceptance rate {rate:.4f}")
    return ReferenceSampleSet(
        samples=samples[:, None],
        target_name=target.name,
        method='rejection',
        seed=seed,
        acceptance_rate=rate,
    )


def mixture_draw(spec: MixtureSpec, components: np.ndarray, z: np.ndarray) -> np.ndarray:
    """mu_k + L_k z for the given component labels"""
    chol = spec.cholesky_factors
    return spec.means[components] + np.einsum('nij,nj->ni', chol[components], z)


def sample_mixture_2d(spec: MixtureSpec, m: int, seed: int, n_workers: int = DEFAULT_WORKERS,
                      target_name: str = 'mog2d') -> ReferenceSampleSet:
    def draw(rng: np.random.Generator, count: int) -> np.ndarray:
        components = rng.choice(len(spec.weights), size=count, p=spec.weights)
        z = rng.standard_normal((count, spec.dim))
        return mixture_draw(spec, components, z)

    parts = _map_blocks(m, seed, n_workers, draw) if m else [np.empty((0, spec.dim))]
    return ReferenceSampleSet(
        samples=np.concatenate(parts),
        target_name=target_name,
        method='mixture-direct',
        seed=seed,
    )


def sample_ou_exact(lam: float, beta: float, m: int, seed: int, dim: int = 1,
                    n_workers: int = DEFAULT_WORKERS) -> ReferenceSampleSet:
    """i.i.d. N(0, 1/(beta lambda)) draws"""
    if lam <= 0 or beta <= 0:
        raise ParameterDomainError(f"lambda and beta must be positive, got {lam}, {beta}")

    scale = 1.0 / np.sqrt(beta * lam)
    parts = _map_blocks(m, seed, n_workers, lambda rng, k: scale * rng.standard_normal((k, dim))) if m else [np.empty((0, dim))]
    return ReferenceSampleSet(
        samples=np.concatenate(parts),
        target_name='ou',
        method='gaussian-exact',
        seed=seed,
    )


def sample_reference(target: TargetModel, m: int, seed: int, beta: float = 1.0,
                     method: Optional[str] = None, n_workers: int = DEFAULT_WORKERS) -> ReferenceSampleSet:
    """Draw a reference set with the target's recipe (or an override)"""
    method = method or target.reference_recipe
    logger.info(f"Drawing {m} reference samples for {target.name} via {method}")

    if method == 'inverse-cdf':
        if target.name != 'logistic' or beta != 1.0:
            raise ParameterDomainError("inverse-CDF sampling is available for the logistic target at beta=1")
        return sample_logistic_inverse_cdf(m, seed, n_workers)
    if method == 'rejection':
        if target.dim != 1:
            raise ParameterDomainError("rejection sampling is implemented for 1D targets")
        return rejection_sample(target, rejection_plan_for(target, beta), m, seed, n_workers)
    if method == 'mixture-direct':
        if target.mixture is None or beta != 1.0:
            raise ParameterDomainError("direct mixture sampling needs a mixture target at beta=1")
        return sample_mixture_2d(target.mixture, m, seed, n_workers, target.name)
    if method == 'gaussian-exact':
        if target.name != 'ou':
            raise ParameterDomainError("exact Gaussian sampling is available for the OU target")
        return sample_ou_exact(target.params['lambda'], beta, m, seed, target.dim, n_workers)

    raise ParameterDomainError(f"unknown reference method {method!r}")


def load_reference_set(path: str, target: TargetModel) -> ReferenceSampleSet:
    """Reference draws saved earlier with `sample reference`"""
    stored = load_samples(path, expected_dim=target.dim)
    if stored.count == 0:
        raise ParameterDomainError(f"{path} holds no samples")
    logger.info(f"Loaded {stored.count} reference samples for {target.name} from {path}")
    return ReferenceSampleSet(
        samples=stored.samples,
        target_name=target.name,
        method='file',
        seed=stored.seed,
    )
