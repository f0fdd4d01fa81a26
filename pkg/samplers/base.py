"""
Base classes for Langevin sampling schemes
"""

import logging
from abc import ABC, abstractmethod
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from config import DEFAULT_BETA, DEFAULT_SEED, DEFAULT_WORKERS, NAN_CHECK_INTERVAL, STREAM_BLOCK
from errors import ParameterDomainError, SamplerDivergence
from targets.models import TargetModel, as_points
from .streams import ENSEMBLE, block_slices, block_streams, shared_coin
from .substeps import diffusion_kick, heun_step, strang_dw_step

logger = logging.getLogger(__name__)

SCHEME_NAMES = (
    'rslmc',
    'lmc-euler',
    'lie-trotter-drift-first',
    'lie-trotter-diffusion-first',
    'strang-symmetric',
)
DRIFT_INTEGRATORS = ('heun', 'strang-double-well', 'exact-flow')

DriftStep = Callable[[np.ndarray, float], np.ndarray]


@dataclass(frozen=True)
class SamplerConfig:
    """Step size, temperature, run length, randomness and parallel layout"""

    tau: float
    n_steps: int = 0
    beta: float = DEFAULT_BETA
    seed: int = DEFAULT_SEED
    scheme: str = 'rslmc'
    drift_integrator: Optional[str] = None  # None: pick per target
    n_particles: int = 1
    n_workers: int = DEFAULT_WORKERS
    shared_coin: bool = False

    def __post_init__(self):
        if not self.tau > 0:
            raise ParameterDomainError(f"tau must be positive, got {self.tau}")
        if not self.beta > 0:
            raise ParameterDomainError(f"beta must be positive, got {self.beta}")
        if self.n_steps < 0:
            raise ParameterDomainError(f"n_steps must be nonnegative, got {self.n_steps}")
        if self.n_particles < 1:
            raise ParameterDomainError(f"n_particles must be positive, got {self.n_particles}")
        if self.n_workers < 1:
            raise ParameterDomainError(f"n_workers must be positive, got {self.n_workers}")
        if self.scheme not in SCHEME_NAMES:
            raise ParameterDomainError(f"unknown scheme {self.scheme!r}; available: {', '.join(SCHEME_NAMES)}")
        if self.drift_integrator is not None and self.drift_integrator not in DRIFT_INTEGRATORS:
            raise ParameterDomainError(f"unknown drift integrator {self.drift_integrator!r}")

    @property
    def noise_scale(self) -> float:
        return float(np.sqrt(2.0 * self.tau / self.beta))

    @property
    def t_final(self) -> float:
        return self.n_steps * self.tau

    def integrator_for(self, target: TargetModel) -> str:
        """Configured drift integrator, or the default for this target"""
        if self.drift_integrator is not None:
            return self.drift_integrator
        if target.name == 'double-well':
            return 'strang-double-well'
        if target.has_exact_flow:
            return 'exact-flow'
        return 'heun'

    def with_tau(self, tau: float, t_final: float) -> 'SamplerConfig':
        """Same config at another step size, n_steps = ceil(T / tau)"""
        return replace(self, tau=tau, n_steps=steps_for(t_final, tau))


def steps_for(t_final: float, tau: float) -> int:
    # ceil with a guard against 50/0.1 = 500.00000000000006
    return int(np.ceil(t_final / tau - 1e-9))


def resolve_drift_step(cfg: SamplerConfig, target: TargetModel) -> DriftStep:
    """The map S(x, h) used for the drift substep"""
    integrator = cfg.integrator_for(target)

    if integrator == 'exact-flow':
        if not target.has_exact_flow:
            raise ParameterDomainError(f"target {target.name} has no exact drift flow")
        return target.drift_flow
    if integrator == 'strang-double-well':
        if target.name != 'double-well':
            raise ParameterDomainError("strang-double-well integrator only applies to the double-well target")
        return strang_dw_step
    return lambda x, h: heun_step(x, h, target.drift)


@dataclass
class MomentTrace:
    """Empirical moments E|X_n|^p recorded every few steps"""
    steps: np.ndarray
    orders: Tuple[float, ...]
    values: np.ndarray  # (n_records, n_orders)

    def column(self, p: float) -> np.ndarray:
        return self.values[:, self.orders.index(p)]


@dataclass
class EnsembleState:
    """Positions of M trajectories plus the streams that move them"""
    positions: np.ndarray  # (M, d)
    step_index: int
    rng_streams: List[np.random.Generator]
    seed: int
    block_size: int = STREAM_BLOCK
    moment_trace: Optional[MomentTrace] = None

    @property
    def n_particles(self) -> int:
        return self.positions.shape[0]

    @property
    def dim(self) -> int:
        return self.positions.shape[1]

    @property
    def blocks(self) -> List[slice]:
        return block_slices(self.n_particles, self.block_size)

    def elapsed(self, tau: float) -> float:
        return self.step_index * tau


def new_state(positions: np.ndarray, seed: int, block_size: int = STREAM_BLOCK) -> EnsembleState:
    positions = np.array(as_points(positions))
    return EnsembleState(
        positions=positions,
        step_index=0,
        rng_streams=block_streams(seed, ENSEMBLE, positions.shape[0], block_size),
        seed=seed,
        block_size=block_size,
    )


def first_bad_particle(x: np.ndarray) -> Optional[int]:
    bad = np.flatnonzero(~np.isfinite(x).all(axis=1))
    return int(bad[0]) if bad.size else None


class BaseScheme(ABC):
    """Base class for one-step Langevin discretizations"""

    def __init__(self, cfg: SamplerConfig, target: TargetModel):
        if cfg.scheme != self.get_scheme_name():
            raise ParameterDomainError(f"config scheme {cfg.scheme!r} does not match {self.get_scheme_name()!r}")
        self.cfg = cfg
        self.target = target
        self.scheme_name = self.get_scheme_name()
        self.drift_step = resolve_drift_step(cfg, target)
        self.noise_scale = cfg.noise_scale

    @abstractmethod
    def get_scheme_name(self) -> str:
        """Return the scheme tag (e.g., 'rslmc', 'lmc-euler')"""
        pass

    @abstractmethod
    def advance(self, x: np.ndarray, rng: np.random.Generator, step_index: int) -> np.ndarray:
        """
        Advance one block of particles by a single step.
        step_index is the index of the step being taken.
        """
        pass

    def kick(self, x: np.ndarray, z: np.ndarray) -> np.ndarray:
        return diffusion_kick(x, self.cfg.tau, self.cfg.beta, z)

    def order_coins(self, rng: np.random.Generator, n: int, step_index: int) -> np.ndarray:
        """Uniform coins deciding drift-first (<= 1/2) or diffusion-first"""
        if self.cfg.shared_coin:
            return np.full(n, shared_coin(self.cfg.seed, step_index))
        return rng.random(n)

    def step(self, state: EnsembleState) -> EnsembleState:
        """Advance every block one step (serial)"""
        positions = state.positions.copy()
        with np.errstate(over='ignore', invalid='ignore'):
            for block, rng in zip(state.blocks, state.rng_streams):
                positions[block] = self.advance(positions[block], rng, state.step_index)

        bad = first_bad_particle(positions)
        if bad is not None:
            raise SamplerDivergence(state.step_index + 1, bad, self.cfg.tau)

        return replace(state, positions=positions, step_index=state.step_index + 1, moment_trace=None)

    def _run_block(self, x: np.ndarray, rng: np.random.Generator, offset: int, start: int,
                   n_steps: int, orders: Sequence[float], record_every: Optional[int]) -> Tuple[np.ndarray, np.ndarray]:
        """Run one block through all steps; returns final positions and moment partial sums"""
        n_records = n_steps // record_every + 1 if record_every else 0
        sums = np.zeros((n_records, len(orders)))

        def record(k, y):
            norms = np.linalg.norm(y, axis=1)
            sums[k] = [np.sum(norms ** p) for p in orders]

        if record_every:
            record(0, x)

        with np.errstate(over='ignore', invalid='ignore'):
            for n in range(n_steps):
                x = self.advance(x, rng, start + n)
                done = n + 1
                if done % NAN_CHECK_INTERVAL == 0 or done == n_steps:
                    bad = first_bad_particle(x)
                    if bad is not None:
                        raise SamplerDivergence(start + done, offset + bad, self.cfg.tau)
                if record_every and done % record_every == 0:
                    record(done // record_every, x)

        return x, sums

    def run(self, state: EnsembleState, n_steps: int, moment_orders: Sequence[float] = (),
            record_every: Optional[int] = None) -> EnsembleState:
        """
        Advance the ensemble n_steps steps.
        Blocks run in parallel; results do not depend on the worker count.
        """
        orders = tuple(moment_orders)
        if orders and not record_every:
            record_every = max(n_steps, 1)

        logger.info(
            f"Running {self.scheme_name} on {self.target.name}: M={state.n_particles}, "
            f"tau={self.cfg.tau}, steps={n_steps}, workers={self.cfg.n_workers}"
        )

        blocks = state.blocks
        jobs = [
            (state.positions[block].copy(), rng, block.start)
            for block, rng in zip(blocks, state.rng_streams)
        ]

        def work(job):
            x, rng, offset = job
            return self._run_block(x, rng, offset, state.step_index, n_steps, orders, record_every)

        if self.cfg.n_workers > 1 and len(jobs) > 1:
            with ThreadPoolExecutor(max_workers=self.cfg.n_workers) as pool:
                results = list(pool.map(work, jobs))
        else:
            results = [work(job) for job in jobs]

        positions = np.empty_like(state.positions)
        for block, (x, _) in zip(blocks, results):
            positions[block] = x

        trace = None
        if orders:
            # block-ordered reduction keeps the moments worker-independent
            total = np.zeros_like(results[0][1])
            for _, sums in results:
                total = total + sums
            n_records = total.shape[0]
            trace = MomentTrace(
                steps=state.step_index + record_every * np.arange(n_records),
                orders=orders,
                values=total / state.n_particles,
            )

        return replace(state, positions=positions, step_index=state.step_index + n_steps, moment_trace=trace)
