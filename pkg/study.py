"""
SplitLab convergence studies

Runs a step-size sweep end to end: ensemble to T, reference set, KDE on a
shared grid, KL (and W1 in 1D) per tau, seed replicates, log-log slopes,
then CSV, SVG and a JSON summary.
"""

import json
import logging
import math
import time
from dataclasses import asdict, dataclass, field, replace
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from config import (
    DEFAULT_BETA, DEFAULT_REPLICATES, DEFAULT_SEED, DEFAULT_WORKERS, DESK_PARTICLES,
    DESK_T_FINAL, KDE_FLOOR, OUTPUT_DIR, QUANTILE_HI, QUANTILE_LO,
)
from db.database import LabDatabase
from db.models import ConvergenceReport, ConvergenceRow, ExperimentLog, SlopeFit
from density.kde import build_quantile_grid, kde_evaluate, silverman_bandwidth, uniform_grid
from density.metrics import kl_divergence_grid, w1_sorted_1d
from density.models import DensityGrid, KDEParams
from errors import ParameterDomainError, SplitLabError, at_tau
from reference.exact import load_reference_set, sample_reference
from reporters.figure import FigureStyle, emit_figure
from reporters.tables import write_report_csv
from samplers.base import SCHEME_NAMES, SamplerConfig, steps_for
from samplers.ensemble import INIT_LAWS, load_initial_samples, run_ensemble
from samplers.streams import replicate_seed
from targets.potentials import make_target

logger = logging.getLogger(__name__)

MIN_PARTICLES = 1000
MIN_SLOPE_ROWS = 3


@dataclass(frozen=True)
class ExperimentSpec:
    """Everything one convergence study needs"""
    target: str
    tau_list: Tuple[float, ...]
    scheme: str = 'rslmc'
    particles: int = DESK_PARTICLES
    t_final: float = DESK_T_FINAL
    beta: float = DEFAULT_BETA
    seed: int = DEFAULT_SEED
    grid_nodes: int = 512
    grid_range: Optional[Tuple[float, float]] = None  # None: quantile box of the reference
    quantile_bounds: Tuple[float, float] = (QUANTILE_LO, QUANTILE_HI)
    bandwidth_scale: float = 1.0
    kde_floor: float = KDE_FLOOR
    replicates: int = DEFAULT_REPLICATES
    workers: int = DEFAULT_WORKERS
    drift_integrator: Optional[str] = None
    init: str = 'point'
    x0: Optional[float] = None
    init_file: Optional[str] = None  # sample file for init='samples'
    shared_coin: bool = False
    reference_method: Optional[str] = None
    reference_size: Optional[int] = None  # None: same as particles
    reference_file: Optional[str] = None  # saved reference set, reused by every replicate
    target_params: dict = field(default_factory=dict)
    out_dir: str = OUTPUT_DIR
    name: Optional[str] = None

    def __post_init__(self):
        taus = tuple(float(t) for t in self.tau_list)
        if not taus:
            raise ParameterDomainError("tau list is empty")
        if any(not t > 0 for t in taus):
            raise ParameterDomainError(f"step sizes must be positive, got {list(taus)}")
        if len(set(taus)) != len(taus):
            raise ParameterDomainError(f"step sizes must be distinct, got {list(taus)}")
        if self.particles < MIN_PARTICLES:
            raise ParameterDomainError(f"KDE studies need at least {MIN_PARTICLES} particles, got {self.particles}")
        if not self.t_final > 0:
            raise ParameterDomainError(f"t_final must be positive, got {self.t_final}")
        if self.replicates < 1:
            raise ParameterDomainError(f"need at least one replicate, got {self.replicates}")
        if self.grid_nodes < 2:
            raise ParameterDomainError(f"grid needs at least two nodes per axis, got {self.grid_nodes}")
        if self.scheme not in SCHEME_NAMES:
            raise ParameterDomainError(f"unknown scheme {self.scheme!r}; available: {', '.join(SCHEME_NAMES)}")
        if self.init not in INIT_LAWS:
            raise ParameterDomainError(f"unknown initial law {self.init!r}; available: {', '.join(INIT_LAWS)}")
        if self.init == 'samples' and not self.init_file:
            raise ParameterDomainError("initial law 'samples' needs init_file")
        object.__setattr__(self, 'tau_list', tuple(sorted(taus)))
        if self.name is None:
            object.__setattr__(self, 'name', f"{self.target}-{self.scheme}")

    @property
    def n_reference(self) -> int:
        return self.reference_size or self.particles

    def sampler_config(self, tau: float, seed: int) -> SamplerConfig:
        return SamplerConfig(
            tau=tau,
            n_steps=steps_for(self.t_final, tau),
            beta=self.beta,
            seed=seed,
            scheme=self.scheme,
            drift_integrator=self.drift_integrator,
            n_particles=self.particles,
            n_workers=self.workers,
            shared_coin=self.shared_coin,
        )

    def build_grid(self, reference_samples: np.ndarray, dim: int) -> DensityGrid:
        if self.grid_range is not None:
            lo, hi = self.grid_range
            return uniform_grid(lo, hi, self.grid_nodes, dim)
        q_lo, q_hi = self.quantile_bounds
        return build_quantile_grid(reference_samples, self.grid_nodes, q_lo, q_hi)


def fit_loglog_slope(taus: Sequence[float], values: Sequence[float], min_points: int = 2,
                     warnings: Optional[List[str]] = None) -> Optional[SlopeFit]:
    """
    Least-squares line through (log tau, log value).
    Nonpositive or missing values are dropped with a warning.
    Returns None when fewer than min_points remain.
    """
    kept_t, kept_v = [], []
    for tau, value in zip(taus, values):
        if math.isnan(value):
            continue
        if value <= 0:
            message = f"excluded tau={tau} from slope fit: nonpositive value {value}"
            logger.warning(message)
            if warnings is not None:
                warnings.append(message)
            continue
        kept_t.append(tau)
        kept_v.append(value)

    if len(kept_t) < max(min_points, 2):
        return None

    x = np.log(kept_t)
    y = np.log(kept_v)
    slope, intercept = np.polyfit(x, y, 1)
    residual = float(np.sqrt(np.mean((y - (slope * x + intercept)) ** 2)))
    return SlopeFit(slope=float(slope), intercept=float(intercept), residual=residual, points=len(kept_t))


def fit_report_slopes(report: ConvergenceReport, min_rows: int = MIN_SLOPE_ROWS) -> ConvergenceReport:
    """Fill kl_fit / w1_fit; a report with too few rows gets a warning instead"""
    if len(report.rows) < min_rows:
        message = f"slope not fitted: {len(report.rows)} row(s), need at least {min_rows}"
        logger.warning(message)
        report.warnings.append(message)
        return report

    for column, attr in (('kl', 'kl_fit'), ('w1', 'w1_fit')):
        if report.has_column(column):
            fit = fit_loglog_slope(report.taus, report.column(column), min_rows, report.warnings)
            setattr(report, attr, fit)
            if fit is None:
                report.warnings.append(f"{column} slope not fitted: fewer than {min_rows} positive rows")
    return report


def kl_inversions(report: ConvergenceReport) -> int:
    """Number of places where KL grows as tau shrinks"""
    kl = [v for _, v in sorted(zip(report.taus, report.column('kl')), reverse=True)]
    return sum(1 for a, b in zip(kl, kl[1:]) if b > a)


def replicate_summary(values: Sequence[float]) -> Tuple[float, float]:
    """Mean and standard error over replicates"""
    values = np.asarray(values, dtype=float)
    if values.size < 2:
        return float(values.mean()), float('nan')
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(values.size))


class ConvergenceStudy:
    """Runs one ExperimentSpec and records it in the ledger"""

    def __init__(self, spec: ExperimentSpec, db: Optional[LabDatabase] = None, command: str = 'run'):
        self.spec = spec
        self.db = db
        self.command = command
        self.target = make_target(spec.target, **spec.target_params)
        self.out_dir = Path(spec.out_dir)

    def run(self) -> ConvergenceReport:
        """
        Execute the sweep and write its artifacts.
        Failures are logged to the ledger and re-raised.
        """
        spec = self.spec
        log = ExperimentLog(
            command=self.command,
            target=spec.target,
            scheme=spec.scheme,
            seed=spec.seed,
            started_at=datetime.utcnow(),
            out_dir=str(self.out_dir),
        )

        try:
            logger.info(f"Starting study {spec.name}: taus={list(spec.tau_list)}, M={spec.particles}, T={spec.t_final}")
            started = time.perf_counter()
            report = self.compute()
            report.metadata['wall_time'] = time.perf_counter() - started
            self.write_artifacts(report)

            log.kl_slope = report.kl_fit.slope if report.kl_fit else None
            log.w1_slope = report.w1_fit.slope if report.w1_fit else None
            log.success = True
            logger.info(f"Study {spec.name} complete: {len(report.rows)} rows, KL slope {log.kl_slope}")

        except SplitLabError as e:
            log.success = False
            log.error_message = str(e)
            logger.error(f"Study {spec.name} failed: {e}", exc_info=True)
            raise

        finally:
            log.completed_at = datetime.utcnow()
            if self.db is not None:
                self.db.log_experiment(log)

        return report

    def compute(self) -> ConvergenceReport:
        """Rows of replicate-averaged KL/W1 plus fitted slopes"""
        spec = self.spec
        kl = {tau: [] for tau in spec.tau_list}
        w1 = {tau: [] for tau in spec.tau_list}
        one_dim = self.target.dim == 1
        initial = None
        if spec.init == 'samples':
            initial = load_initial_samples(spec.init_file, self.target, spec.particles)
        stored_reference = load_reference_set(spec.reference_file, self.target) if spec.reference_file else None

        for r in range(spec.replicates):
            seed = replicate_seed(spec.seed, r)
            logger.info(f"Replicate {r + 1}/{spec.replicates} (seed {seed})")
            reference = stored_reference
            if reference is None:
                reference = sample_reference(self.target, spec.n_reference, seed, spec.beta,
                                             spec.reference_method, spec.workers)
            grid = spec.build_grid(reference.samples, self.target.dim)
            params = KDEParams(silverman_bandwidth(reference.samples), self.target.dim, spec.bandwidth_scale)
            reference_density = kde_evaluate(reference.samples, params, grid, n_workers=spec.workers)

            for tau in spec.tau_list:
                try:
                    state = run_ensemble(spec.sampler_config(tau, seed), self.target, init=spec.init, x0=spec.x0,
                                         samples=initial)
                    density = kde_evaluate(state.positions, params, grid, n_workers=spec.workers)
                    kl[tau].append(kl_divergence_grid(density, reference_density, spec.kde_floor))
                    if one_dim:
                        w1[tau].append(w1_sorted_1d(state.positions, reference.samples))
                except SplitLabError as e:
                    raise at_tau(e, tau)
                logger.info(f"tau={tau}: KL={kl[tau][-1]:.4g}" + (f", W1={w1[tau][-1]:.4g}" if one_dim else ""))

        rows = []
        for tau in spec.tau_list:
            row = ConvergenceRow(tau=tau)
            row.kl, row.kl_stderr = replicate_summary(kl[tau])
            if one_dim:
                row.w1, row.w1_stderr = replicate_summary(w1[tau])
            rows.append(row)

        report = ConvergenceReport(rows=rows, metadata=self.metadata())
        if spec.replicates < 3:
            report.warnings.append(f"standard errors from {spec.replicates} replicate(s); at least 3 recommended")
        fit_report_slopes(report)

        inversions = kl_inversions(report)
        if inversions > 1:
            message = f"KL is not monotone in tau ({inversions} inversions)"
            logger.warning(message)
            report.warnings.append(message)
        return report

    def metadata(self) -> dict:
        spec = asdict(self.spec)
        spec['tau_list'] = list(self.spec.tau_list)
        return {'spec': spec, 'seed': self.spec.seed, 'dim': self.target.dim}

    def write_artifacts(self, report: ConvergenceReport) -> dict:
        """CSV, figures and JSON summary under out_dir"""
        name = self.spec.name
        paths = {'csv': write_report_csv(self.out_dir / f"{name}.csv", report)}
        paths['kl_figure'] = emit_figure(report, self.out_dir / f"{name}.svg",
                                         FigureStyle(column='kl', title=name, label=self.spec.scheme))
        if report.has_column('w1'):
            paths['w1_figure'] = emit_figure(report, self.out_dir / f"{name}_w1.svg",
                                             FigureStyle(column='w1', title=name, ylabel='Wasserstein-1',
                                                         label=self.spec.scheme))
        paths['summary'] = write_summary(self.out_dir / f"{name}_report.json", report)
        return paths


def write_summary(path: Path, report: ConvergenceReport) -> Path:
    """Slopes, warnings and the spec echo as JSON"""
    summary = {
        'kl_fit': asdict(report.kl_fit) if report.kl_fit else None,
        'w1_fit': asdict(report.w1_fit) if report.w1_fit else None,
        'warnings': report.warnings,
        'metadata': report.metadata,
    }
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w') as fh:
        json.dump(summary, fh, indent=2, default=str)
    return path


def run_convergence_study(spec: ExperimentSpec, db: Optional[LabDatabase] = None) -> ConvergenceReport:
    """Run a study for the spec and return its report"""
    return ConvergenceStudy(spec, db).run()


def with_overrides(spec: ExperimentSpec, **overrides) -> ExperimentSpec:
    return replace(spec, **{k: v for k, v in overrides.items() if v is not None})
