import numpy as np
import pytest

from db.samples import persist_samples
from diagnostics.ou_oracle import stationary_variance
from diagnostics.semigroup import jacobian_variational
from errors import ParameterDomainError, SampleFileError, SamplerDivergence
from samplers.base import SamplerConfig, new_state, steps_for
from samplers.ensemble import initial_positions, load_initial_samples, parse_init, run_ensemble
from samplers.schemes import (
    RSLMCScheme, fixed_order_step, lmc_euler_step, make_scheme, rslmc_step, strang_symmetric_step,
)
from samplers.streams import (
    ENSEMBLE, REFERENCE, block_slices, make_stream, replicate_seed, shared_coin,
)
from samplers.substeps import diffusion_kick, dw_cubic_flow, heun_step, strang_dw_step
from targets.potentials import make_double_well, make_logistic, make_mixture_2d, make_ou, make_quadratic_logcosh


def test_heun_step_values():
    x = np.array([1.0])
    assert heun_step(x, 0.1, lambda y: -y)[0] == pytest.approx(0.905, abs=1e-15)
    assert abs(heun_step(x, 0.1, lambda y: -y)[0] - np.exp(-0.1)) <= 0.1 ** 3
    assert heun_step(np.array([3.0]), 0.7, np.zeros_like)[0] == 3.0
    assert heun_step(np.array([0.0]), 1.0, lambda y: np.full_like(y, 2.5))[0] == 2.5


def test_strang_double_well_substeps():
    assert strang_dw_step(np.array([0.0]), 0.3)[0] == 0.0
    assert dw_cubic_flow(np.array([1.0]), 0.125)[0] == pytest.approx(1.0 / np.sqrt(2.0), abs=1e-12)


def test_strang_double_well_is_third_order_at_the_well():
    # x = 1 is a fixed point of the exact flow
    err_h = abs(strang_dw_step(np.array([1.0]), 0.02)[0] - 1.0)
    err_half = abs(strang_dw_step(np.array([1.0]), 0.01)[0] - 1.0)
    assert 7.0 < err_h / err_half < 9.0


def reference_flow(target, x, h):
    phi, _ = jacobian_variational(target, np.array([[x]]), h, n_substeps=2000)
    return phi[0, 0]


def test_heun_local_error_is_third_order():
    target = make_quadratic_logcosh()
    errors = [abs(heun_step(np.array([[0.5]]), h, target.drift)[0, 0] - reference_flow(target, 0.5, h))
              for h in (0.05, 0.025)]
    assert 7.0 < errors[0] / errors[1] < 9.0


def test_strang_double_well_is_third_order_away_from_the_wells():
    target = make_double_well()
    errors = [abs(strang_dw_step(np.array([0.5]), h)[0] - reference_flow(target, 0.5, h)) for h in (0.01, 0.005)]
    assert 7.0 < errors[0] / errors[1] < 9.0


def test_diffusion_kick():
    x = np.array([[0.3, -1.0]])
    np.testing.assert_array_equal(diffusion_kick(x, 0.5, 1.0, np.zeros_like(x)), x)
    assert diffusion_kick(np.zeros((1, 2)), 0.5, 2.0, np.ones((1, 2)))[0, 0] == pytest.approx(np.sqrt(0.5))


def test_diffusion_kick_variance():
    n = 1_000_000
    z = make_stream(11, ENSEMBLE).standard_normal((n, 1))
    kicked = diffusion_kick(np.zeros((n, 1)), 0.3, 1.5, z)
    var = kicked.var(ddof=1)
    expected = 2 * 0.3 / 1.5
    assert abs(var - expected) < 3 * expected * np.sqrt(2.0 / n)


def test_sampler_config_validation():
    with pytest.raises(ParameterDomainError):
        SamplerConfig(tau=0.0)
    with pytest.raises(ParameterDomainError):
        SamplerConfig(tau=0.1, beta=-1.0)
    with pytest.raises(ParameterDomainError):
        SamplerConfig(tau=0.1, scheme='leapfrog')
    with pytest.raises(ParameterDomainError):
        SamplerConfig(tau=0.1, drift_integrator='rk45')


def test_default_drift_integrators():
    cfg = SamplerConfig(tau=0.1)
    assert cfg.integrator_for(make_double_well()) == 'strang-double-well'
    assert cfg.integrator_for(make_ou()) == 'exact-flow'
    assert cfg.integrator_for(make_logistic()) == 'heun'
    with pytest.raises(ParameterDomainError):
        make_scheme(SamplerConfig(tau=0.1, drift_integrator='exact-flow'), make_logistic())


def test_steps_for_rounds_up():
    assert steps_for(50.0, 0.1) == 500
    assert steps_for(20.0, 0.0625) == 320
    assert steps_for(1.0, 0.3) == 4


def test_rslmc_branches_on_ou_exact_flow():
    lam, tau = 1.0, 0.5
    target = make_ou(lam)
    cfg = SamplerConfig(tau=tau, seed=5)
    x = np.linspace(-2.0, 2.0, 9)[:, None]

    moved = RSLMCScheme(cfg, target).advance(x, make_stream(5, ENSEMBLE), 0)

    replay = make_stream(5, ENSEMBLE)
    coins = replay.random(x.shape[0])[:, None]
    z = replay.standard_normal(x.shape)
    s = np.sqrt(2 * tau)
    expected = np.where(coins <= 0.5, np.exp(-lam * tau) * x + s * z, np.exp(-lam * tau) * (x + s * z))
    np.testing.assert_allclose(moved, expected, rtol=1e-14, atol=1e-14)


def test_lmc_euler_deterministic_part():
    # beta huge switches the noise off
    cfg = SamplerConfig(tau=0.1, beta=1e30, scheme='lmc-euler', n_particles=1)
    state = lmc_euler_step(new_state(np.array([[1.0]]), cfg.seed), cfg, make_ou(1.0))
    assert state.positions[0, 0] == pytest.approx(0.9, abs=1e-12)
    assert state.step_index == 1


def test_step_functions_check_scheme():
    cfg = SamplerConfig(tau=0.1, scheme='lmc-euler')
    state = new_state(np.zeros((3, 1)), cfg.seed)
    with pytest.raises(ParameterDomainError):
        rslmc_step(state, cfg, make_ou())
    with pytest.raises(ParameterDomainError):
        fixed_order_step(state, cfg, make_ou())
    with pytest.raises(ParameterDomainError):
        strang_symmetric_step(state, cfg, make_ou())


def test_fixed_orders_and_strang_coincide_without_drift(flat_target):
    runs = []
    for scheme in ('lie-trotter-drift-first', 'lie-trotter-diffusion-first', 'strang-symmetric', 'lmc-euler'):
        cfg = SamplerConfig(tau=0.2, n_steps=5, scheme=scheme, n_particles=100, seed=9, n_workers=1)
        runs.append(run_ensemble(cfg, flat_target).positions)
    for other in runs[1:]:
        np.testing.assert_allclose(runs[0], other, rtol=0, atol=1e-14)


def test_rslmc_without_drift_is_pure_diffusion(flat_target):
    m, tau, n = 200_000, 0.2, 5
    cfg = SamplerConfig(tau=tau, n_steps=n, n_particles=m, seed=21)
    x = run_ensemble(cfg, flat_target).positions[:, 0]
    expected = 2 * tau * n
    assert abs(x.var(ddof=1) - expected) < 4 * expected * np.sqrt(2.0 / m)


def test_zero_steps_returns_initial_ensemble():
    cfg = SamplerConfig(tau=0.1, n_steps=0, n_particles=10)
    state = run_ensemble(cfg, make_ou(), init='point', x0=0.7)
    np.testing.assert_array_equal(state.positions, np.full((10, 1), 0.7))
    assert state.step_index == 0


def test_determinism_across_worker_counts():
    target = make_double_well()
    base = dict(tau=0.05, n_steps=40, n_particles=40_000, seed=77)
    serial = run_ensemble(SamplerConfig(n_workers=1, **base), target, init='normal').positions
    threaded = run_ensemble(SamplerConfig(n_workers=4, **base), target, init='normal').positions
    again = run_ensemble(SamplerConfig(n_workers=4, **base), target, init='normal').positions
    np.testing.assert_array_equal(serial, threaded)
    np.testing.assert_array_equal(threaded, again)


def test_step_matches_run():
    target = make_ou()
    cfg = SamplerConfig(tau=0.1, n_steps=3, n_particles=50, seed=4)
    scheme = make_scheme(cfg, target)
    stepped = new_state(np.zeros((50, 1)), cfg.seed)
    for _ in range(3):
        stepped = scheme.step(stepped)
    ran = scheme.run(new_state(np.zeros((50, 1)), cfg.seed), 3)
    np.testing.assert_array_equal(stepped.positions, ran.positions)


@pytest.mark.parametrize('scheme,tau', [
    ('rslmc', 0.5),
    ('lie-trotter-drift-first', 0.5),
    ('lie-trotter-diffusion-first', 0.5),
    ('strang-symmetric', 0.5),
    ('lmc-euler', 0.1),
])
def test_ou_stationary_variance_matches_oracle(scheme, tau):
    m = 200_000
    cfg = SamplerConfig(tau=tau, n_steps=steps_for(50.0, tau), scheme=scheme, n_particles=m, seed=2024)
    x = run_ensemble(cfg, make_ou(1.0)).positions[:, 0]
    squares = x ** 2
    stderr = squares.std(ddof=1) / np.sqrt(m)
    assert abs(squares.mean() - stationary_variance(scheme, 1.0, 1.0, tau)) < 4 * stderr


def test_divergence_names_particle_and_step():
    cfg = SamplerConfig(tau=1.0, n_steps=10, scheme='lmc-euler', n_particles=4)
    with pytest.raises(SamplerDivergence) as info:
        run_ensemble(cfg, make_double_well(), init='point', x0=3.0)
    assert info.value.particle == 0
    assert info.value.step == 10
    assert info.value.tau == 1.0


def test_single_step_divergence():
    cfg = SamplerConfig(tau=1.0, scheme='lmc-euler')
    state = new_state(np.array([[0.0], [1e120]]), cfg.seed)
    with pytest.raises(SamplerDivergence) as info:
        lmc_euler_step(state, cfg, make_double_well())
    assert info.value.particle == 1
    assert info.value.step == 1


def test_shared_coin_gives_one_order_per_step():
    cfg = SamplerConfig(tau=0.1, shared_coin=True, seed=8)
    scheme = make_scheme(cfg, make_ou())
    coins = scheme.order_coins(make_stream(8, ENSEMBLE), 1000, 17)
    assert np.all(coins == shared_coin(8, 17))
    assert shared_coin(8, 17) == shared_coin(8, 17)


def test_moment_trace_records_every_k_steps():
    cfg = SamplerConfig(tau=0.1, n_steps=50, n_particles=100, seed=3)
    state = run_ensemble(cfg, make_ou(), init='point', x0=2.0, moment_orders=(2, 4), record_every=10)
    trace = state.moment_trace
    np.testing.assert_array_equal(trace.steps, [0, 10, 20, 30, 40, 50])
    assert trace.column(2)[0] == pytest.approx(4.0)
    assert trace.column(4)[0] == pytest.approx(16.0)
    assert trace.column(2)[-1] == pytest.approx(np.mean(state.positions[:, 0] ** 2))


def test_streams_are_keyed():
    a = make_stream(1, ENSEMBLE, 0).random(5)
    b = make_stream(1, ENSEMBLE, 0).random(5)
    c = make_stream(1, REFERENCE, 0).random(5)
    d = make_stream(1, ENSEMBLE, 1).random(5)
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)
    assert replicate_seed(123, 0) == 123
    assert replicate_seed(123, 1) != replicate_seed(123, 2)
    assert [s.stop - s.start for s in block_slices(40_000, 16_384)] == [16_384, 16_384, 7_232]


def test_initial_laws():
    cfg = SamplerConfig(tau=0.1, n_particles=4)
    assert parse_init('point:1.5') == ('point', 1.5)
    assert parse_init('normal') == ('normal', None)
    assert parse_init('samples:runs/start.txt') == ('samples', 'runs/start.txt')
    for bad in ('uniform', 'samples', 'samples:', 'normal:1', 'point:abc'):
        with pytest.raises(ParameterDomainError):
            parse_init(bad)
    with pytest.raises(ParameterDomainError):
        initial_positions(cfg, make_ou(), 'samples', samples=np.zeros((3, 1)))
    custom = initial_positions(cfg, make_ou(), 'samples', samples=np.arange(4.0))
    np.testing.assert_array_equal(custom[:, 0], np.arange(4.0))


def test_initial_samples_from_file(tmp_path):
    path = tmp_path / 'start.txt'
    persist_samples(str(path), np.array([0.25, -0.5, 1.0]))
    np.testing.assert_array_equal(load_initial_samples(str(path), make_ou(), 3)[:, 0], [0.25, -0.5, 1.0])
    with pytest.raises(ParameterDomainError):
        load_initial_samples(str(path), make_ou(), 4)
    with pytest.raises(SampleFileError):
        load_initial_samples(str(path), make_mixture_2d(), 3)
