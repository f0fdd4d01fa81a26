#!/usr/bin/env python3
"""
SplitLab CLI

Command-line interface for convergence studies, diagnostics and samples.
"""

import argparse
import logging
import sys
from datetime import datetime
from pathlib import Path

import numpy as np
from scipy.stats import norm

from config import DB_PATH, DEFAULT_SEED, DEFAULT_WORKERS, LOG_LEVEL, OUTPUT_DIR, load_config_file, resolve_settings
from db.database import LabDatabase
from db.models import ExperimentLog
from db.samples import persist_samples
from density.kde import uniform_grid
from diagnostics.bias import invariant_bias_sweep, ou_stationary_moment_check
from diagnostics.coupling import CouplingParams, reflection_coupling_run
from diagnostics.moments import moment_uniformity_check
from diagnostics.semigroup import jacobian_variational, transport_mass_check
from errors import ConfigError, SplitLabError
from presets import PRESETS, get_preset, spec_from_settings
from reference.exact import load_reference_set, sample_reference
from reporters.figure import FigureStyle, emit_figure
from reporters.tables import write_grid_csv, write_report_csv, write_rows
from samplers.base import DRIFT_INTEGRATORS, SCHEME_NAMES, SamplerConfig, steps_for
from samplers.ensemble import load_initial_samples, parse_init, run_ensemble
from study import ConvergenceStudy
from targets.potentials import TARGETS, make_target

logging.basicConfig(
    level=LOG_LEVEL,
    format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
)
logger = logging.getLogger(__name__)

CHECKS = ('ou-oracle', 'bias', 'mass', 'jacobian', 'coupling', 'moments')

# per-check defaults, used where the flag is not given
CHECK_DEFAULTS = {
    'ou-oracle': {'target': 'ou', 'tau': [0.1, 0.2, 0.5], 'particles': 1_000_000, 't_final': 50.0},
    'bias': {'target': 'ou', 'tau': [0.05, 0.1, 0.2, 0.4], 'particles': 1_000_000, 't_final': 50.0},
    'mass': {'target': 'double-well', 'time': 0.25},
    'jacobian': {'target': 'double-well', 'time': 0.25},
    'coupling': {'target': 'double-well', 'tau': [2.0 ** -5], 'particles': 100_000, 'steps': 2000,
                 'x0': -1.0, 'y0': 1.0},
    'moments': {'target': 'double-well', 'tau': [2.0 ** -4], 'particles': 100_000, 'steps': 10_000},
}


def run_logged(db: LabDatabase, command: str, target: str, scheme: str, seed, out_dir, work):
    """Run work() and record it in the ledger"""
    log = ExperimentLog(command=command, target=target, scheme=scheme, seed=seed,
                        started_at=datetime.utcnow(), out_dir=str(out_dir) if out_dir else None)
    try:
        result = work()
        log.success = True
        return result
    except SplitLabError as e:
        log.success = False
        log.error_message = str(e)
        logger.error(f"{command} failed: {e}", exc_info=True)
        raise
    finally:
        log.completed_at = datetime.utcnow()
        db.log_experiment(log)


def run_settings(args) -> dict:
    """CLI flags in config-file keys; unset flags are None"""
    return {
        'target': args.target,
        'scheme': args.scheme,
        'tau_list': args.tau,
        'particles': args.particles,
        't_final': args.t_final,
        'beta': args.beta,
        'seed': args.seed,
        'workers': args.workers,
        'replicates': args.replicates,
        'drift_integrator': args.drift_integrator,
        'init': args.init,
        'bandwidth_scale': args.bandwidth_scale,
        'grid_nodes': args.grid_nodes,
        'out_dir': args.out_dir,
        'shared_coin': True if args.shared_coin else None,
        'reference_method': args.reference_method,
        'reference_file': args.reference_file,
    }


def cmd_run(args):
    """Run a convergence study"""
    preset = get_preset(args.preset) if args.preset else None
    base = preset.settings(args.full_scale) if preset else {}
    file_values = load_config_file(args.config) if args.config else None
    settings = resolve_settings(base, file_values, run_settings(args))

    spec = spec_from_settings(settings, preset)
    report = ConvergenceStudy(spec, LabDatabase(args.db)).run()

    print(f"\n✅ Study {spec.name} complete!")
    print(f"  {'tau':>10s} {'KL':>12s} {'KL stderr':>12s} {'W1':>12s} {'W1 stderr':>12s}")
    for row in report.rows:
        print(f"  {row.tau:10.5g} {row.kl:12.4e} {row.kl_stderr:12.4e} {row.w1:12.4e} {row.w1_stderr:12.4e}")
    if report.kl_fit:
        print(f"  KL slope: {report.kl_fit.slope:.3f} (residual {report.kl_fit.residual:.3g})")
    if report.w1_fit:
        print(f"  W1 slope: {report.w1_fit.slope:.3f} (residual {report.w1_fit.residual:.3g})")
    for warning in report.warnings:
        print(f"  ⚠️  {warning}")
    print(f"  Output: {spec.out_dir}")


def check_setting(args, check: str, name: str):
    value = getattr(args, name)
    return value if value is not None else CHECK_DEFAULTS[check].get(name)


def diagnose_ou_oracle(args, target, out_dir: Path) -> Path:
    schemes = [args.scheme] if args.scheme else ['rslmc', 'lie-trotter-drift-first', 'lmc-euler']
    cfg = SamplerConfig(tau=1.0, beta=args.beta, seed=args.seed,
                        n_particles=check_setting(args, 'ou-oracle', 'particles'), n_workers=args.workers)
    rows = []
    for scheme in schemes:
        for match in ou_stationary_moment_check(target, scheme, check_setting(args, 'ou-oracle', 'tau'),
                                                cfg, check_setting(args, 'ou-oracle', 't_final')):
            rows.append((scheme, match.tau, match.simulated, match.stderr, match.oracle, match.z_score, match.within()))
            print(f"  {scheme:28s} tau={match.tau:<6g} E|X|^2={match.simulated:.6f} "
                  f"oracle={match.oracle:.6f} z={match.z_score:.2f} {'✅' if match.within() else '❌'}")
    return write_rows(out_dir / 'ou_oracle.csv', ('scheme', 'tau', 'simulated', 'stderr', 'oracle', 'z', 'within'), rows)


def diagnose_bias(args, target, out_dir: Path) -> Path:
    scheme = args.scheme or 'rslmc'
    cfg = SamplerConfig(tau=1.0, beta=args.beta, seed=args.seed,
                        n_particles=check_setting(args, 'bias', 'particles'), n_workers=args.workers)
    reference = load_reference_set(args.reference_file, target) if args.reference_file else None
    estimator = args.estimator or ('gaussian' if target.name == 'ou' and reference is None else 'samples')
    report = invariant_bias_sweep(target, scheme, check_setting(args, 'bias', 'tau'), cfg,
                                  check_setting(args, 'bias', 't_final'), replicates=args.replicates or 3,
                                  estimator=estimator, reference=reference)
    if report.w1_fit:
        print(f"  {scheme} W1 slope: {report.w1_fit.slope:.3f}")
    emit_figure(report, out_dir / f'bias_{scheme}.svg', FigureStyle(column='w1', ylabel='Wasserstein-1', label=scheme))
    return write_report_csv(out_dir / f'bias_{scheme}.csv', report)


def diagnose_mass(args, target, out_dir: Path) -> Path:
    t = check_setting(args, 'mass', 'time')
    grid = uniform_grid(-4.0, 4.0, 8192)
    pdf = lambda y: norm.pdf(y, scale=0.5)
    density = grid.with_values(pdf(grid.axes[0])).normalized()
    check = transport_mass_check(target, density, t, pdf=pdf)
    print(f"  t={t}: mass defect {check.defect:.3e} ({check.escaped_nodes} escaped nodes) "
          f"{'✅' if check.defect <= 1e-6 else '❌'}")
    write_grid_csv(out_dir / 'mass_transported.csv', check.transported)
    return write_rows(out_dir / 'mass.csv', ('t', 'defect', 'escaped_nodes'), [(t, check.defect, check.escaped_nodes)])


def diagnose_jacobian(args, target, out_dir: Path) -> Path:
    t = check_setting(args, 'jacobian', 'time')
    x = np.linspace(-1.0, 1.0, 21)[:, None]
    phi, jac = jacobian_variational(target, x, t)
    back, jac_back = jacobian_variational(target, phi, -t)
    product = jac * jac_back
    worst = float(np.max(np.abs(product - 1.0)))
    print(f"  t={t}: max |J(-t, phi_t x) J(t, x) - 1| = {worst:.3e} {'✅' if worst <= 1e-8 else '❌'}")
    rows = zip(x[:, 0], phi[:, 0], jac, product, np.abs(back[:, 0] - x[:, 0]))
    return write_rows(out_dir / 'jacobian.csv', ('x', 'phi', 'J', 'group_product', 'roundtrip_error'), rows)


def diagnose_coupling(args, target, out_dir: Path) -> Path:
    params = CouplingParams(
        tau=check_setting(args, 'coupling', 'tau')[0],
        n_steps=check_setting(args, 'coupling', 'steps'),
        c_f=args.c_f,
        R1=args.r1,
        beta=args.beta,
        seed=args.seed,
        drift_integrator=args.drift_integrator,
    )
    x0, y0 = check_setting(args, 'coupling', 'x0'), check_setting(args, 'coupling', 'y0')
    trace = reflection_coupling_run(target, params, check_setting(args, 'coupling', 'particles'),
                                    x0=x0, y0=y0, n_workers=args.workers)
    print(f"  chains start at x0={x0:g}, y0={y0:g}")
    print(f"  rate {trace.rate:.4f} +/- {trace.rate_halfwidth:.4f}, "
          f"coupled {100 * trace.coupled_fraction[-1]:.2f}% after {params.n_steps} steps")
    rows = zip(trace.steps, trace.mean_distance, trace.mean_f, trace.coupled_fraction)
    return write_rows(out_dir / 'coupling.csv', ('step', 'mean_distance', 'mean_f', 'coupled_fraction'), rows)


def diagnose_moments(args, target, out_dir: Path) -> Path:
    cfg = SamplerConfig(
        tau=check_setting(args, 'moments', 'tau')[0],
        n_steps=check_setting(args, 'moments', 'steps'),
        beta=args.beta,
        seed=args.seed,
        scheme=args.scheme or 'rslmc',
        drift_integrator=args.drift_integrator,
        n_particles=check_setting(args, 'moments', 'particles'),
        n_workers=args.workers,
    )
    check = moment_uniformity_check(target, cfg)
    print(f"  running max / value at step {check.reference_step}: {check.ratio:.3f} "
          f"{'✅' if check.bounded() else '❌'}")
    rows = zip(check.trace.steps, check.trace.column(check.order), check.running_max)
    return write_rows(out_dir / 'moments.csv', ('step', 'moment', 'running_max'), rows)


DIAGNOSTICS = {
    'ou-oracle': diagnose_ou_oracle,
    'bias': diagnose_bias,
    'mass': diagnose_mass,
    'jacobian': diagnose_jacobian,
    'coupling': diagnose_coupling,
    'moments': diagnose_moments,
}


def cmd_diagnose(args):
    """Run one diagnostic check and write its CSV"""
    target_name = check_setting(args, args.check, 'target')
    target = make_target(target_name)
    out_dir = Path(args.out_dir or OUTPUT_DIR) / 'diagnostics'

    print(f"\n🔬 {args.check} on {target_name}")
    path = run_logged(LabDatabase(args.db), f'diagnose:{args.check}', target_name, args.scheme or '',
                      args.seed, out_dir, lambda: DIAGNOSTICS[args.check](args, target, out_dir))
    print(f"\n✅ Wrote {path}")


def cmd_sample(args):
    """Write reference or numerical samples to a file"""
    target = make_target(args.target)

    def work():
        if args.source == 'reference':
            return sample_reference(target, args.particles, args.seed, args.beta,
                                    args.reference_method, args.workers).samples
        if not args.tau:
            raise ConfigError("numerical samples need --tau")
        tau = args.tau[0]
        n_steps = args.steps if args.steps is not None else steps_for(args.t_final, tau)
        cfg = SamplerConfig(tau=tau, n_steps=n_steps, beta=args.beta, seed=args.seed,
                            scheme=args.scheme or 'rslmc', drift_integrator=args.drift_integrator,
                            n_particles=args.particles, n_workers=args.workers, shared_coin=args.shared_coin)
        law, arg = parse_init(args.init)
        if law == 'samples':
            initial = load_initial_samples(arg, target, args.particles)
            return run_ensemble(cfg, target, init=law, samples=initial).positions
        return run_ensemble(cfg, target, init=law, x0=arg).positions

    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    samples = run_logged(LabDatabase(args.db), f'sample:{args.source}', args.target, args.scheme or '',
                         args.seed, out.parent, work)
    persist_samples(out, samples, args.seed)
    print(f"\n✅ Wrote {samples.shape[0]} samples to {out}")


def cmd_presets(args):
    """List the benchmark presets"""
    print("\n📋 Presets")
    print("=" * 80)
    for preset in PRESETS.values():
        (t1, k1), (t2, k2) = preset.benchmark_kl_endpoints
        grid = f"[{preset.grid_range[0]:g}, {preset.grid_range[1]:g}]" if preset.grid_range else "quantile box"
        print(f"\n{preset.name} ({preset.target})")
        print(f"  {preset.description}")
        print(f"  tau: {', '.join(f'{t:g}' for t in preset.tau_list)}")
        print(f"  grid: {preset.grid_nodes} nodes/axis on {grid} | bandwidth x{preset.bandwidth_scale:g}")
        print(f"  benchmark KL {k1:g} at tau={t1:g} -> {k2:g} at tau={t2:g} "
              f"(two-point slope {preset.endpoint_slope:.2f})")


def cmd_stats(args):
    """Show ledger statistics"""
    db = LabDatabase(args.db)
    stats = db.get_stats()

    print("\n📊 SplitLab Statistics")
    print("=" * 40)
    print(f"Total runs:        {stats['total_runs']:,}")
    print(f"Successful runs:   {stats['successful_runs']:,}")
    print(f"Success rate:      {stats['success_rate']:.1%}")
    print(f"Last run:          {stats['last_run'] or '-'}")
    print("\nBy command:")
    for command, count in sorted(stats['by_command'].items(), key=lambda x: x[1], reverse=True):
        print(f"  {command:20s} {count:,}")
    print("\nBy target:")
    for target, count in sorted(stats['by_target'].items(), key=lambda x: x[1], reverse=True):
        print(f"  {target:20s} {count:,}")


def cmd_logs(args):
    """Show recent runs"""
    db = LabDatabase(args.db)
    logs = db.get_recent_logs(limit=args.limit)

    print(f"\n📝 Recent runs ({len(logs)})")
    print("=" * 80)

    for log in logs:
        status = "✅" if log['success'] else "❌"
        print(f"\n{status} {log['command']} {log['target']} {log['scheme'] or ''} - {log['started_at']}")
        slopes = [f"{name}: {log[key]:.3f}" for name, key in (('KL slope', 'kl_slope'), ('W1 slope', 'w1_slope'))
                  if log[key] is not None]
        print(f"   Seed: {log['seed']} | Output: {log['out_dir']}" + (f" | {' | '.join(slopes)}" if slopes else ""))
        if log['error_message']:
            print(f"   Error: {log['error_message']}")


def add_sampler_flags(p, with_tau_list: bool = True):
    p.add_argument('--target', choices=sorted(TARGETS), help='Target distribution')
    p.add_argument('--scheme', choices=SCHEME_NAMES, help='Sampling scheme')
    p.add_argument('--tau', type=float, nargs='+' if with_tau_list else None, help='Step size(s)')
    p.add_argument('--beta', type=float, help='Inverse temperature')
    p.add_argument('--particles', type=int, help='Number of particles M')
    p.add_argument('--seed', type=int, help='Master seed')
    p.add_argument('--workers', type=int, help='Worker threads')
    p.add_argument('--drift-integrator', choices=DRIFT_INTEGRATORS, help='Drift substep integrator')
    p.add_argument('--init', help="Initial law: point, point:<x0>, normal or samples:<path>")
    p.add_argument('--shared-coin', action='store_true', help='One order coin per step for all particles')
    p.add_argument('--reference-method', help='Override the reference sampling recipe')
    p.add_argument('--out-dir', help='Output directory')


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description='SplitLab CLI')
    parser.add_argument('--db', default=DB_PATH, help='Run ledger path')

    subparsers = parser.add_subparsers(dest='command', help='Command to run')

    # Run command
    run_parser = subparsers.add_parser('run', help='Run a convergence study')
    run_parser.add_argument('--preset', choices=sorted(PRESETS), help='Start from a named preset')
    add_sampler_flags(run_parser)
    run_parser.add_argument('--t-final', type=float, help='Final time T')
    run_parser.add_argument('--bandwidth-scale', type=float, help='Factor on the Silverman bandwidth')
    run_parser.add_argument('--grid-nodes', type=int, help='Grid nodes per axis')
    run_parser.add_argument('--replicates', type=int, help='Seed replicates')
    run_parser.add_argument('--paper-scale', '--full-scale', dest='full_scale', action='store_true',
                            help='Use the full-scale particle count (10^7) and T (50)')
    run_parser.add_argument('--config', help='Flat key=value config file')
    run_parser.add_argument('--reference-file', help='Sample file to use as the reference set')

    # Diagnose command
    diagnose_parser = subparsers.add_parser('diagnose', help='Run a diagnostic check')
    diagnose_parser.add_argument('--check', required=True, choices=CHECKS, help='Check to run')
    add_sampler_flags(diagnose_parser)
    diagnose_parser.add_argument('--steps', type=int, help='Number of steps')
    diagnose_parser.add_argument('--t-final', type=float, help='Final time T')
    diagnose_parser.add_argument('--time', type=float, help='Flow time for mass/jacobian checks')
    diagnose_parser.add_argument('--replicates', type=int, help='Seed replicates (bias check)')
    diagnose_parser.add_argument('--estimator', choices=('samples', 'gaussian'), help='W1 estimator (bias check)')
    diagnose_parser.add_argument('--c-f', type=float, default=4.0, help='Concavity c_f of the distance transform')
    diagnose_parser.add_argument('--r1', type=float, default=3.0, help='Cutoff R1 of the distance transform')
    diagnose_parser.add_argument('--x0', type=float, help='Start of the first chain (coupling check)')
    diagnose_parser.add_argument('--y0', type=float, help='Start of the second chain (coupling check)')
    diagnose_parser.add_argument('--reference-file', help='Sample file to use as the reference set (bias check)')

    # Sample command
    sample_parser = subparsers.add_parser('sample', help='Write reference or numerical samples')
    sample_parser.add_argument('source', choices=('reference', 'numerical'), help='Sample source')
    add_sampler_flags(sample_parser, with_tau_list=False)
    sample_parser.add_argument('--steps', type=int, help='Number of steps (default ceil(T / tau))')
    sample_parser.add_argument('--t-final', type=float, default=20.0, help='Final time T')
    sample_parser.add_argument('--output', required=True, help='Sample file to write')

    # Presets command
    subparsers.add_parser('presets', help='List benchmark presets')

    # Stats command
    subparsers.add_parser('stats', help='Show ledger statistics')

    # Logs command
    logs_parser = subparsers.add_parser('logs', help='Show recent runs')
    logs_parser.add_argument('--limit', type=int, default=20, help='Number of runs to show')

    return parser


def fill_defaults(args):
    """Defaults for flags that only apply outside of run, where presets and config files layer"""
    if args.command in ('diagnose', 'sample'):
        args.beta = 1.0 if args.beta is None else args.beta
        args.seed = DEFAULT_SEED if args.seed is None else args.seed
        args.workers = DEFAULT_WORKERS if args.workers is None else args.workers
    if args.command == 'sample':
        if args.target is None:
            raise ConfigError("sample needs --target")
        args.particles = args.particles or 10_000
        args.init = args.init or 'point'
        args.tau = [args.tau] if args.tau is not None else None


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)

    if not args.command:
        parser.print_help()
        sys.exit(1)

    commands = {
        'run': cmd_run,
        'diagnose': cmd_diagnose,
        'sample': cmd_sample,
        'presets': cmd_presets,
        'stats': cmd_stats,
        'logs': cmd_logs,
    }

    try:
        fill_defaults(args)
        commands[args.command](args)
    except SplitLabError as e:
        print(f"\n❌ {args.command} failed: {e}")
        print(f"error={type(e).__name__} message={e}", file=sys.stderr)
        sys.exit(1)


if __name__ == '__main__':
    main()
