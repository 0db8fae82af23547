"""Curvature operations of the rescaled metric, checked against an
independent finite-difference Christoffel oracle."""

import numpy as np
import pytest
from scipy.integrate import quad

from conftest import random_orthonormal_pair, riemann_oracle
from fbstab import conformal
from fbstab.errors import PreconditionError
from fbstab.fields import make_field


def test_connection_correction_zero_field(rng):
    zero = make_field("zero")
    x = rng.normal(size=4)
    out = conformal.connection_correction(zero, x, rng.normal(size=4), rng.normal(size=4))
    assert np.allclose(out, 0.0)


def test_connection_correction_linear_field_closed_form(rng):
    a = np.array([0.4, -0.3, 0.2, 0.6])
    lin = make_field("linear", a=a)
    e1 = np.eye(4)[0]
    for _ in range(5):
        x = rng.normal(size=4)
        out = conformal.connection_correction(lin, x, e1, e1)
        assert np.allclose(out, 2 * a[0] * e1 - a, atol=1e-14)


def test_connection_correction_bilinear(rng):
    field = make_field("radial-custom", coeffs=[0.1, 0.5, -0.2])
    x = rng.uniform(-0.5, 0.5, size=3)
    X, Xp, Y = rng.normal(size=(3, 3))
    lhs = conformal.connection_correction(field, x, X + Xp, Y)
    rhs = conformal.connection_correction(field, x, X, Y) + conformal.connection_correction(
        field, x, Xp, Y
    )
    assert np.allclose(lhs, rhs, atol=1e-12)


def test_connection_correction_equals_christoffel_contraction(rng):
    field = make_field("polynomial", terms=[[0.3, [1, 2, 0]], [-0.2, [0, 1, 1]]])
    x = rng.uniform(-0.5, 0.5, size=3)
    X, Y = rng.normal(size=(2, 3))
    gamma = conformal.christoffel(field, x)
    assert np.allclose(
        conformal.connection_correction(field, x, X, Y),
        np.einsum("cab,a,b->c", gamma, X, Y),
        atol=1e-12,
    )


def test_riemann_trivial_cases(rng):
    zero = make_field("zero")
    x = rng.normal(size=4)
    args = rng.normal(size=(3, 4))
    assert np.allclose(conformal.riemann(zero, x, *args), 0.0)
    field = make_field("radial-spherical")
    X = rng.normal(size=4)
    Z = rng.normal(size=4)
    x = rng.uniform(-0.4, 0.4, size=4)
    assert np.allclose(conformal.riemann(field, x, X, X, Z), 0.0, atol=1e-13)


def test_riemann_antisymmetric_and_multilinear(rng):
    field = make_field("radial-custom", coeffs=[0.0, 0.3, 0.1])
    x = rng.uniform(-0.5, 0.5, size=4)
    X, Y, Z, W = rng.normal(size=(4, 4))
    R = conformal.riemann
    assert np.allclose(R(field, x, X, Y, Z), -R(field, x, Y, X, Z), atol=1e-12)
    assert np.allclose(
        R(field, x, X, Y, Z + 2 * W),
        R(field, x, X, Y, Z) + 2 * R(field, x, X, Y, W),
        atol=1e-11,
    )


@pytest.mark.parametrize("spec", [
    ("radial-custom", {"coeffs": [0.1, 0.4, -0.2]}),
    ("polynomial", {"terms": [[0.25, [2, 0, 0, 1]], [-0.15, [0, 1, 1, 0]], [0.1, [1, 0, 0, 2]]]}),
    ("radial-spherical", {}),
])
def test_riemann_matches_christoffel_oracle(spec, rng):
    field = make_field(spec[0], **spec[1])
    for _ in range(6):
        x = rng.uniform(-0.45, 0.45, size=4)
        X, Y, Z = rng.normal(size=(3, 4))
        got = conformal.riemann(field, x, X, Y, Z)
        want = riemann_oracle(field, x, X, Y, Z)
        assert np.max(np.abs(got - want)) < 5e-6


@pytest.mark.parametrize("name,expected", [
    ("radial-spherical", 1.0),
    ("radial-hyperbolic", -1.0),
])
def test_constant_curvature_fields(name, expected, rng):
    field = make_field(name)
    for _ in range(100):
        x = rng.uniform(-0.45, 0.45, size=4)
        X, Y = random_orthonormal_pair(rng, 4)
        assert abs(conformal.sectional_curvature(field, x, X, Y) - expected) < 1e-8


def test_sectional_zero_field(rng):
    zero = make_field("zero")
    X, Y = random_orthonormal_pair(rng, 3)
    assert conformal.sectional_curvature(zero, rng.normal(size=3), X, Y) == 0.0


def test_sectional_symmetric_and_plane_invariant(rng):
    field = make_field("radial-custom", coeffs=[0.0, 0.25, 0.1])
    x = rng.uniform(-0.4, 0.4, size=4)
    X, Y = random_orthonormal_pair(rng, 4)
    k1 = conformal.sectional_curvature(field, x, X, Y)
    assert abs(k1 - conformal.sectional_curvature(field, x, Y, X)) < 1e-12
    for _ in range(5):
        t = rng.uniform(0, 2 * np.pi)
        Xr = np.cos(t) * X + np.sin(t) * Y
        Yr = -np.sin(t) * X + np.cos(t) * Y
        assert abs(conformal.sectional_curvature(field, x, Xr, Yr) - k1) < 1e-9


def test_sectional_consistent_with_riemann_pairing(rng):
    field = make_field("polynomial", terms=[[0.2, [2, 1, 0]], [0.1, [0, 0, 3]]])
    for _ in range(10):
        x = rng.uniform(-0.4, 0.4, size=3)
        X, Y = random_orthonormal_pair(rng, 3)
        fac = np.exp(2 * field.value(x))
        pairing = fac * float(conformal.riemann(field, x, X, Y, X) @ Y)
        denom = fac**2  # rescaled norms of an orthonormal pair
        want = conformal.sectional_curvature(field, x, X, Y)
        assert abs(pairing / denom - want) < 1e-8


def test_sectional_rejects_non_orthonormal(rng):
    field = make_field("zero")
    with pytest.raises(PreconditionError):
        conformal.sectional_curvature(field, np.zeros(3), np.eye(3)[0] * 2.0, np.eye(3)[1])
    with pytest.raises(PreconditionError):
        conformal.sectional_curvature(field, np.zeros(3), np.eye(3)[0], np.eye(3)[0])


def test_volume_factor():
    zero = make_field("zero")
    assert conformal.volume_factor(zero, np.zeros(3), 2) == 1.0
    const = make_field("radial-custom", coeffs=[0.7])
    assert np.isclose(conformal.volume_factor(const, np.ones(3), 2), np.exp(1.4))


def test_volume_factor_integrates_to_hemisphere_area():
    # independent 1-d radial quadrature of the rescaled disk area
    integral, _ = quad(lambda r: (2.0 / (1 + r * r)) ** 2 * r, 0.0, 1.0)
    assert abs(2 * np.pi * integral - 2 * np.pi) < 1e-10
    field = make_field("radial-spherical")
    rs = np.linspace(0.05, 0.95, 19)
    vals = [conformal.volume_factor(field, np.array([r, 0.0, 0.0, 0.0]), 2) for r in rs]
    assert np.allclose(vals, (2.0 / (1 + rs**2)) ** 2)
