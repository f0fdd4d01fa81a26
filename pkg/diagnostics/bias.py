"""
Invariant-measure bias of long runs

The first half of every run is discarded as burn-in; the law after that is
compared with the target, either by W1 between pooled snapshots and a
reference set, or (OU only) through the Gaussian W1 implied by the
time-averaged second moment.
"""

import logging
from dataclasses import dataclass, replace
from typing import List, Optional, Sequence

import numpy as np

from config import DEFAULT_REPLICATES
from db.models import ConvergenceReport, ConvergenceRow
from density.metrics import w1_sorted_1d
from errors import ParameterDomainError, SplitLabError, at_tau
from reference.exact import sample_reference
from reference.models import ReferenceSampleSet
from samplers.base import SamplerConfig, new_state, steps_for
from samplers.ensemble import initial_positions
from samplers.schemes import make_scheme
from samplers.streams import replicate_seed
from study import fit_report_slopes, replicate_summary
from targets.models import TargetModel
from .ou_oracle import gaussian_w1, stationary_variance

logger = logging.getLogger(__name__)

ESTIMATORS = ('samples', 'gaussian')


def _require_ou(target: TargetModel):
    if target.name != 'ou' or target.dim != 1:
        raise ParameterDomainError("this estimator needs the 1D OU target")


def _snapshot_cuts(burn_in: int, n_steps: int, snapshots: int) -> List[int]:
    remaining = n_steps - burn_in
    cuts = [burn_in + (remaining * (j + 1)) // snapshots for j in range(snapshots)]
    return sorted(set(cuts))


def long_run(target: TargetModel, cfg: SamplerConfig, snapshots: int = 1, init: str = 'point',
             x0=None, record_moments: bool = False):
    """
    Run cfg.n_steps steps and return (pooled post-burn-in snapshots,
    time-averaged second moment over the second half or None).
    """
    if snapshots < 1:
        raise ParameterDomainError(f"need at least one snapshot, got {snapshots}")
    scheme = make_scheme(cfg, target)
    state = new_state(initial_positions(cfg, target, init, x0), cfg.seed)
    burn_in = cfg.n_steps // 2

    state = scheme.run(state, burn_in)
    pooled, moments = [], []
    done = burn_in
    for cut in _snapshot_cuts(burn_in, cfg.n_steps, snapshots):
        if record_moments:
            state = scheme.run(state, cut - done, moment_orders=(2,), record_every=1)
            # first record repeats the previous snapshot
            moments.append(state.moment_trace.column(2)[1:])
        else:
            state = scheme.run(state, cut - done)
        pooled.append(state.positions)
        done = cut

    second_moment = float(np.mean(np.concatenate(moments))) if moments else None
    return np.concatenate(pooled), second_moment


def invariant_bias_sweep(target: TargetModel, scheme: str, tau_list: Sequence[float], cfg: SamplerConfig,
                         t_final: float, replicates: int = DEFAULT_REPLICATES, estimator: str = 'samples',
                         snapshots: int = 1, reference_size: Optional[int] = None,
                         reference: Optional[ReferenceSampleSet] = None) -> ConvergenceReport:
    """
    W1 between the long-run law and the target for every tau, averaged
    over seed replicates, with the log-log W1 slope. A given reference set
    is used for every replicate instead of fresh exact draws.
    """
    if estimator not in ESTIMATORS:
        raise ParameterDomainError(f"unknown estimator {estimator!r}; available: {', '.join(ESTIMATORS)}")
    if target.dim != 1:
        raise ParameterDomainError("W1 bias sweeps are one-dimensional")
    if estimator == 'gaussian':
        _require_ou(target)
        if reference is not None:
            raise ParameterDomainError("the gaussian estimator takes no reference set")
        exact_variance = 1.0 / (cfg.beta * target.params['lambda'])

    taus = sorted(float(t) for t in tau_list)
    values = {tau: [] for tau in taus}

    for r in range(replicates):
        seed = replicate_seed(cfg.seed, r)
        replicate_reference = reference
        if estimator == 'samples' and replicate_reference is None:
            replicate_reference = sample_reference(target, reference_size or cfg.n_particles * snapshots,
                                                   seed, cfg.beta, n_workers=cfg.n_workers)

        for tau in taus:
            run_cfg = replace(cfg, scheme=scheme, seed=seed, tau=tau, n_steps=steps_for(t_final, tau))
            try:
                pooled, m2 = long_run(target, run_cfg, snapshots, record_moments=estimator == 'gaussian')
            except SplitLabError as e:
                raise at_tau(e, tau)

            if estimator == 'gaussian':
                values[tau].append(gaussian_w1(m2, exact_variance))
            else:
                values[tau].append(w1_sorted_1d(pooled, replicate_reference.samples))
            logger.info(f"{scheme} tau={tau} replicate {r + 1}: W1={values[tau][-1]:.4g}")

    rows = []
    for tau in taus:
        row = ConvergenceRow(tau=tau)
        row.w1, row.w1_stderr = replicate_summary(values[tau])
        rows.append(row)

    report = ConvergenceReport(rows=rows, metadata={
        'target': target.name, 'scheme': scheme, 'estimator': estimator,
        't_final': t_final, 'particles': cfg.n_particles, 'replicates': replicates, 'seed': cfg.seed,
    })
    return fit_report_slopes(report)


@dataclass
class MomentMatch:
    """Simulated stationary second moment against the OU oracle"""
    scheme: str
    tau: float
    simulated: float
    stderr: float
    oracle: float

    @property
    def z_score(self) -> float:
        return abs(self.simulated - self.oracle) / self.stderr

    def within(self, k: float = 3.0) -> bool:
        return self.z_score <= k


def ou_stationary_moment_check(target: TargetModel, scheme: str, tau_list: Sequence[float],
                               cfg: SamplerConfig, t_final: float) -> List[MomentMatch]:
    """Terminal E|X|^2 of the ensemble against the scheme's exact fixed point"""
    _require_ou(target)
    lam = target.params['lambda']
    matches = []
    for tau in sorted(float(t) for t in tau_list):
        run_cfg = replace(cfg, scheme=scheme, tau=tau, n_steps=steps_for(t_final, tau))
        state = make_scheme(run_cfg, target).run(
            new_state(initial_positions(run_cfg, target, 'point'), run_cfg.seed), run_cfg.n_steps
        )
        squares = state.positions[:, 0] ** 2
        match = MomentMatch(
            scheme=scheme,
            tau=tau,
            simulated=float(squares.mean()),
            stderr=float(squares.std(ddof=1) / np.sqrt(squares.size)),
            oracle=stationary_variance(scheme, lam, cfg.beta, tau),
        )
        logger.info(f"{scheme} tau={tau}: E|X|^2={match.simulated:.6f} oracle={match.oracle:.6f} z={match.z_score:.2f}")
        matches.append(match)
    return matches
