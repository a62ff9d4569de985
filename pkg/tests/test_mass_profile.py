import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import adaptive_simpson, central_derivative
from pdem.errors import NonPositiveMass, OutOfDomain
from pdem.mass_profile import (
    Grid,
    GridFunction,
    MassProfile,
    coordinate_map,
    inverse_coordinate,
    mass_at,
    sample_on_grid,
    sqrt_mass,
)


def test_constant_mass_is_one():
    assert tuple(float(v) for v in mass_at(MassProfile.constant(), 3.7)) == (1.0, 0.0, 0.0)


def test_rational_q1_at_origin():
    M, Mp, Mpp = mass_at(MassProfile.rational(1.0), 0.0)
    assert M == 4.0 and Mp == 0.0
    # s = 1 + q/(1+x^2): s''(0) = -2q, M'' = 2 s s'' at the origin
    assert Mpp == pytest.approx(-8.0, abs=1e-15)


@pytest.mark.parametrize("step", [1e-2, 5e-3, 1e-3])
def test_rational_derivatives_match_finite_differences(step):
    prof = MassProfile.rational(0.5)
    m = lambda t: (1.0 + 0.5 / (1.0 + t * t)) ** 2  # noqa: E731
    M, Mp, Mpp = mass_at(prof, 1.0)
    assert M == pytest.approx(m(1.0), abs=1e-15)
    assert Mp == pytest.approx(central_derivative(m, 1.0, step), abs=1e-8)
    assert Mpp == pytest.approx(central_derivative(m, 1.0, step, order=2), abs=1e-8)


def test_coordinate_map_examples():
    assert coordinate_map(MassProfile.constant(), 2.5) == 2.5
    assert coordinate_map(MassProfile.rational(1.0), 1.0) == pytest.approx(1 + math.pi / 4, abs=1e-15)


def test_coordinate_map_against_quadrature():
    q = 2.0
    root = lambda t: 1.0 + q / (1.0 + t * t)  # noqa: E731
    ref = adaptive_simpson(root, 0.0, 5.0, tol=1e-12)
    assert coordinate_map(MassProfile.rational(q), 5.0) == pytest.approx(ref, abs=1e-10)
    assert ref == pytest.approx(5 + 2 * math.atan(5), abs=1e-10)


def test_sample_on_grid_constant():
    M, Mp, Mpp, u = sample_on_grid(MassProfile.constant(), -1.0, 1.0, 3)
    assert list(M.values) == [1.0, 1.0, 1.0]
    assert list(u.values) == [-1.0, 0.0, 1.0]
    assert all(g.same_grid(M) for g in (Mp, Mpp, u))


def test_sample_on_grid_spot_checks():
    prof = MassProfile.rational(1.0)
    M, Mp, Mpp, u = sample_on_grid(prof, -10.0, 0.01, 2001)
    rng = np.random.default_rng(7)
    for i in rng.integers(0, 2001, size=5):
        xi = -10.0 + 0.01 * i
        ref = mass_at(prof, xi)
        assert (M.values[i], Mp.values[i], Mpp.values[i]) == pytest.approx(tuple(ref), abs=1e-14)
        assert u.values[i] == pytest.approx(coordinate_map(prof, xi), abs=1e-14)


def test_q_zero_is_bitwise_constant():
    a = sample_on_grid(MassProfile.rational(0.0), -3.0, 0.013, 501)
    b = sample_on_grid(MassProfile.constant(), -3.0, 0.013, 501)
    for ga, gb in zip(a, b):
        assert np.array_equal(ga.values, gb.values)


def test_negative_q_rejected():
    with pytest.raises(ValueError):
        MassProfile.rational(-0.5)


def test_grid_function_is_read_only():
    g = GridFunction(0.0, 0.1, np.ones(5))
    with pytest.raises(ValueError):
        g.values[0] = 2.0


def test_grid_refined_keeps_interval():
    g = Grid.spanning(-2.0, 3.0, 101)
    r = g.refined()
    assert r.n == 201 and r.h == g.h / 2 and r.right == pytest.approx(g.right)


@settings(max_examples=40, deadline=None)
@given(q=st.floats(0.0, 5.0), x=st.floats(-20.0, 20.0))
def test_coordinate_map_derivative_is_root_mass(q, x):
    prof = MassProfile.rational(q)
    d = central_derivative(lambda t: float(coordinate_map(prof, t)), x, 1e-2)
    assert d == pytest.approx(float(sqrt_mass(prof, x)), abs=1e-9)


@settings(max_examples=40, deadline=None)
@given(q=st.floats(0.0, 5.0), u=st.floats(-30.0, 30.0))
def test_inverse_coordinate_roundtrip(q, u):
    prof = MassProfile.rational(q)
    assert coordinate_map(prof, inverse_coordinate(prof, u)) == pytest.approx(u, abs=1e-11)


@pytest.mark.parametrize("q", [0.5, 1.0, 2.0])
def test_sampled_derivatives_are_second_order(q):
    prof = MassProfile.rational(q)
    errs = []
    for h in (0.02, 0.01, 0.005):
        n = int(round(8 / h)) + 1
        M, Mp, Mpp, _ = sample_on_grid(prof, -4.0, h, n)
        d1 = (M.values[2:] - M.values[:-2]) / (2 * h)
        d2 = (Mp.values[2:] - Mp.values[:-2]) / (2 * h)
        errs.append(max(np.max(np.abs(d1 - Mp.values[1:-1])), np.max(np.abs(d2 - Mpp.values[1:-1]))))
    slope = np.polyfit(np.log([0.02, 0.01, 0.005]), np.log(errs), 1)[0]
    assert 1.8 <= slope <= 2.2


def test_custom_profile_reproduces_rational():
    q = 1.0
    xs = np.linspace(-6.0, 6.0, 2401)
    prof = MassProfile.custom(xs[0], xs[1] - xs[0], (1 + q / (1 + xs**2)) ** 2)
    ref = MassProfile.rational(q)
    x = np.array([-3.3, -0.7, 0.0, 1.1, 4.2])
    assert np.allclose(mass_at(prof, x)[0], mass_at(ref, x)[0], atol=1e-10)
    assert np.allclose(mass_at(prof, x)[1], mass_at(ref, x)[1], atol=1e-4)
    assert np.allclose(coordinate_map(prof, x), coordinate_map(ref, x), atol=1e-8)
    with pytest.raises(OutOfDomain):
        mass_at(prof, 7.0)


def test_custom_profile_rejects_nonpositive():
    with pytest.raises(NonPositiveMass):
        MassProfile.custom(-1.0, 0.5, [1.0, 1.0, 0.0, 1.0, 1.0])


def test_sample_errors_carry_index():
    xs = np.linspace(-1.0, 1.0, 21)
    prof = MassProfile.custom(xs[0], xs[1] - xs[0], np.ones_like(xs))
    with pytest.raises(OutOfDomain, match="grid index 21"):
        sample_on_grid(prof, -1.0, 0.1, 22)
