"""
Ensemble runner

Initial laws and the top-level run loop over M independent chains.
"""

import logging
from typing import Optional, Sequence, Union

import numpy as np

from config import STREAM_BLOCK
from db.samples import load_samples
from errors import ParameterDomainError
from targets.models import TargetModel, as_points
from .base import EnsembleState, SamplerConfig, new_state
from .schemes import make_scheme
from .streams import INITIAL, block_slices, make_stream

logger = logging.getLogger(__name__)

INIT_LAWS = ('point', 'normal', 'samples')


def parse_init(text: str):
    """
    Parse a CLI initial-law spec: 'point', 'point:<x0>', 'normal' or
    'samples:<path>'. Returns (law, arg) with arg the float x0, the sample
    file path, or None.
    """
    law, _, arg = text.partition(':')
    law = law.strip().lower()
    arg = arg.strip()
    if law not in INIT_LAWS:
        raise ParameterDomainError(f"unknown initial law {text!r}; available: {', '.join(INIT_LAWS)}")
    if law == 'samples':
        if not arg:
            raise ParameterDomainError("initial law 'samples' needs a file: samples:<path>")
        return law, arg
    if law == 'normal' and arg:
        raise ParameterDomainError(f"initial law 'normal' takes no argument, got {text!r}")
    try:
        x0 = float(arg) if arg else None
    except ValueError:
        raise ParameterDomainError(f"bad start point in {text!r}")
    return law, x0


def load_initial_samples(path: str, target: TargetModel, n_particles: int) -> np.ndarray:
    """Starting positions from a sample file; one row per particle"""
    stored = load_samples(path, expected_dim=target.dim)
    if stored.count != n_particles:
        raise ParameterDomainError(
            f"{path} holds {stored.count} samples, the ensemble has {n_particles} particles"
        )
    logger.info(f"Loaded {stored.count} initial positions for {target.name} from {path}")
    return stored.samples


def initial_positions(cfg: SamplerConfig, target: TargetModel, init: str = 'point',
                      x0: Optional[Union[float, Sequence[float]]] = None,
                      samples: Optional[np.ndarray] = None,
                      block_size: int = STREAM_BLOCK) -> np.ndarray:
    """Draw X_0 for every particle"""
    m, d = cfg.n_particles, target.dim

    if init == 'point':
        origin = np.zeros(d) if x0 is None else np.broadcast_to(np.asarray(x0, dtype=float), (d,))
        return np.tile(origin, (m, 1))

    if init == 'normal':
        positions = np.empty((m, d))
        for i, block in enumerate(block_slices(m, block_size)):
            rng = make_stream(cfg.seed, INITIAL, i)
            positions[block] = rng.standard_normal((block.stop - block.start, d))
        return positions

    if init == 'samples':
        if samples is None:
            raise ParameterDomainError("initial law 'samples' needs a sample set")
        samples = as_points(samples)
        if samples.shape != (m, d):
            raise ParameterDomainError(f"initial samples have shape {samples.shape}, expected {(m, d)}")
        return samples.copy()

    raise ParameterDomainError(f"unknown initial law {init!r}; available: {', '.join(INIT_LAWS)}")


def run_ensemble(cfg: SamplerConfig, target: TargetModel, init: str = 'point',
                 x0=None, samples: Optional[np.ndarray] = None,
                 moment_orders: Sequence[float] = (), record_every: Optional[int] = None,
                 block_size: int = STREAM_BLOCK) -> EnsembleState:
    """
    Advance M particles n_steps steps from the initial law.
    Deterministic in (seed, block_size); independent of n_workers.
    """
    scheme = make_scheme(cfg, target)
    positions = initial_positions(cfg, target, init, x0, samples, block_size)
    state = new_state(positions, cfg.seed, block_size)
    return scheme.run(state, cfg.n_steps, moment_orders=moment_orders, record_every=record_every)
