import numpy as np
import pytest

from errors import ParameterDomainError
from targets.models import MixtureSpec, as_points
from targets.potentials import (
    make_double_well, make_logistic, make_mixture_2d, make_ou, make_quadratic_logcosh,
    make_target, ou_stationary_variance,
)


def test_logcosh_values():
    target = make_quadratic_logcosh(lam=1.0, epsilon=0.8)
    assert target.gradient(np.array([[0.0]]))[0, 0] == 0.0
    assert target.gradient(np.array([[1.0]]))[0, 0] == pytest.approx(1.0 + 0.8 * np.tanh(1.0), abs=1e-12)
    assert target.gradient(np.array([[1.0]]))[0, 0] == pytest.approx(1.60928, abs=1e-5)
    assert target.potential(np.array([[0.0]]))[0] == pytest.approx(0.55452, abs=1e-5)


def test_logcosh_potential_is_stable_far_out():
    target = make_quadratic_logcosh()
    u = target.potential(np.array([[800.0]]))
    assert np.isfinite(u).all()


def test_logcosh_rejects_bad_parameters():
    with pytest.raises(ParameterDomainError):
        make_quadratic_logcosh(lam=0.0)
    with pytest.raises(ParameterDomainError):
        make_quadratic_logcosh(lam=-1.0)
    with pytest.raises(ParameterDomainError):
        make_quadratic_logcosh(epsilon=-0.1)


def test_double_well_values():
    target = make_double_well()
    assert target.drift(np.array([[1.0]]))[0, 0] == 0.0
    assert target.drift(np.array([[0.5]]))[0, 0] == pytest.approx(1.5)
    assert target.potential(np.array([[-1.0]]))[0] == 0.0
    assert target.has_exact_flow


def test_logistic_values():
    target = make_logistic()
    assert target.gradient(np.array([[0.0]]))[0, 0] == 0.0
    assert target.gradient(np.array([[2.0]]))[0, 0] == pytest.approx(0.76159, abs=1e-5)
    assert target.gradient(np.array([[60.0]]))[0, 0] == pytest.approx(1.0)
    # exp(-U) is the standard logistic density, 1/4 at the mode
    assert np.exp(-target.potential(np.array([[0.0]]))[0]) == pytest.approx(0.25)


@pytest.mark.parametrize('factory', [make_quadratic_logcosh, make_double_well, make_logistic, make_ou])
def test_gradient_matches_finite_difference(factory):
    target = factory()
    points = np.linspace(-3.0, 3.0, 13)[:, None]
    assert target.gradient_defect(points) < 1e-6


def test_mixture_gradient_matches_finite_difference():
    target = make_mixture_2d()
    rng = np.random.default_rng(3)
    points = rng.uniform(-4.0, 4.0, size=(20, 2))
    assert target.gradient_defect(points) < 1e-6


def test_mixture_laplacian_matches_gradient_divergence():
    target = make_mixture_2d()
    points = np.array([[-2.0, 0.3], [0.1, -0.4], [1.7, 1.1], [3.0, -2.0]])
    h = 1e-5
    fd = np.zeros(len(points))
    for i in range(2):
        e = np.zeros(2)
        e[i] = h
        fd += (target.gradient(points + e)[:, i] - target.gradient(points - e)[:, i]) / (2 * h)
    np.testing.assert_allclose(target.laplacian(points), fd, rtol=1e-5, atol=1e-6)


def test_mixture_critical_point_by_gradient_descent():
    target = make_mixture_2d()
    x = np.array([[2.0, 0.0]])
    for _ in range(3000):
        x = x - 0.1 * target.gradient(x)
    assert np.linalg.norm(target.gradient(x)) <= 1e-8


def test_mixture_spec_rejects_bad_covariance():
    with pytest.raises(ParameterDomainError):
        MixtureSpec(weights=[1.0], means=[[0.0, 0.0]], covariances=[[[1.0, 2.0], [2.0, 1.0]]])
    with pytest.raises(ParameterDomainError):
        MixtureSpec(weights=[0.7, 0.7], means=[[0.0, 0.0], [1.0, 0.0]], covariances=[np.eye(2), np.eye(2)])


def test_ou_flow_and_variance():
    target = make_ou(lam=1.0)
    assert target.drift_flow(np.array([[1.0]]), 0.0)[0, 0] == 1.0
    assert target.drift_flow(np.array([[2.0]]), 0.5)[0, 0] == pytest.approx(1.21306, abs=1e-5)
    assert ou_stationary_variance(1.0, 1.0) == 1.0
    with pytest.raises(ParameterDomainError):
        make_ou(lam=0.0)


def test_ou_flow_is_a_semigroup():
    target = make_ou(lam=1.3, dim=3)
    x = np.random.default_rng(4).normal(size=(50, 3))
    for h in (0.01, 0.3, 2.0):
        twice = target.drift_flow(target.drift_flow(x, h), h)
        assert np.max(np.abs(twice - target.drift_flow(x, 2 * h))) <= 1e-10


def test_logistic_potential_is_finite_far_out():
    target = make_logistic()
    x = np.array([[-800.0], [-50.0], [50.0], [800.0]])
    assert np.all(np.isfinite(target.potential(x)))
    assert target.potential(x)[1] == pytest.approx(50.0, abs=1e-12)
    np.testing.assert_allclose(target.gradient(x)[:, 0], [-1.0, -1.0, 1.0, 1.0], atol=1e-12)


def test_mixture_density_has_unit_mass():
    target = make_mixture_2d()
    axis = np.linspace(-8.0, 8.0, 801)
    xx, yy = np.meshgrid(axis, axis, indexing='ij')
    density = np.exp(-target.potential(np.column_stack([xx.ravel(), yy.ravel()])))
    mass = density.sum() * (axis[1] - axis[0]) ** 2
    assert mass == pytest.approx(1.0, abs=1e-6)


def test_make_target_registry():
    assert make_target('ou', lam=2.0).params['lambda'] == 2.0
    assert make_target('Double-Well').name == 'double-well'
    with pytest.raises(ParameterDomainError):
        make_target('banana')


def test_as_points_shapes():
    assert as_points(1.0).shape == (1, 1)
    assert as_points(np.zeros(5)).shape == (5, 1)
    assert as_points(np.zeros((5, 2))).shape == (5, 2)
