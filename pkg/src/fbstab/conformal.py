"""Curvature of the conformally flat metric e^{2u} * Euclidean.

Sign convention used throughout the package (and by every oracle in the test
suite): R(X,Y)Z = D_Y D_X Z - D_X D_Y Z + D_[X,Y] Z, and the sectional
curvature of an orthonormal plane is K(X,Y) = <R(X,Y)X, Y>/(|X|^2|Y|^2 -
<X,Y>^2).  With this pairing the round sphere has K = +1.

All operations are pure functions of immutable inputs and safe to call
concurrently.
"""

from __future__ import annotations

import numpy as np

from .errors import PreconditionError
from .fields import ScalarField

ORTHONORMAL_TOL = 1e-10


def connection_correction(field: ScalarField, x, X, Y) -> np.ndarray:
    """Difference of Levi-Civita connections: corr = X(u)Y + Y(u)X - <X,Y> grad u.

    For constant extensions of X, Y the rescaled-metric connection is the flat
    directional derivative plus this vector.
    """
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    g = field.gradient(x)
    return (X @ g) * Y + (Y @ g) * X - (X @ Y) * g


def riemann(field: ScalarField, x, X, Y, Z) -> np.ndarray:
    """Curvature vector R(X,Y)Z of e^{2u} * Euclidean at x (flat base).

    Multilinear in X, Y, Z and antisymmetric under swapping X and Y.
    """
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    Z = np.asarray(Z, float)
    g = field.gradient(x)
    h = field.hessian(x)
    xu, yu, zu = X @ g, Y @ g, Z @ g
    xz, yz = X @ Z, Y @ Z
    g2 = g @ g
    hY = h @ Y
    hX = h @ X
    return (
        xu * zu * Y
        - yu * zu * X
        - xu * yz * g
        + yu * xz * g
        - xz * hY
        + yz * hX
        - xz * g2 * Y
        + yz * g2 * X
        - (X @ h @ Z) * Y
        + (Y @ h @ Z) * X
    )


def sectional_curvature(field: ScalarField, x, X, Y) -> float:
    """Sectional curvature of span{X, Y} for Euclid-orthonormal X, Y.

    K = e^{-2u} (X(u)^2 + Y(u)^2 - |grad u|^2 - Hess u(X,X) - Hess u(Y,Y)).
    Symmetric in X and Y and invariant under rotating the plane.
    """
    X = np.asarray(X, float)
    Y = np.asarray(Y, float)
    if (
        abs(X @ X - 1.0) > ORTHONORMAL_TOL
        or abs(Y @ Y - 1.0) > ORTHONORMAL_TOL
        or abs(X @ Y) > ORTHONORMAL_TOL
    ):
        raise PreconditionError("sectional curvature needs an orthonormal pair")
    u = field.value(x)
    g = field.gradient(x)
    h = field.hessian(x)
    return float(
        np.exp(-2.0 * u)
        * ((X @ g) ** 2 + (Y @ g) ** 2 - g @ g - X @ h @ X - Y @ h @ Y)
    )


def sectional_curvature_batch(field: ScalarField, xs, Xs, Ys) -> np.ndarray:
    """Vectorized sectional curvature over batches of points and plane bases.

    ``xs``: (m, n); ``Xs``/``Ys``: (m, n) Euclid-orthonormal pairs per row.
    Used by the hypothesis samplers; the scalar version performs the
    precondition check, callers here are trusted to pass orthonormal pairs.
    """
    xs = np.asarray(xs, float)
    Xs = np.asarray(Xs, float)
    Ys = np.asarray(Ys, float)
    u = field.value(xs)
    g = field.gradient(xs)
    h = field.hessian(xs)
    xu = np.sum(Xs * g, axis=-1)
    yu = np.sum(Ys * g, axis=-1)
    g2 = np.sum(g * g, axis=-1)
    hxx = np.einsum("mi,mij,mj->m", Xs, h, Xs)
    hyy = np.einsum("mi,mij,mj->m", Ys, h, Ys)
    return np.exp(-2.0 * u) * (xu**2 + yu**2 - g2 - hxx - hyy)


def volume_factor(field: ScalarField, x, k: int) -> float:
    """Density e^{k u(x)} of the rescaled k-dimensional measure."""
    return float(np.exp(k * field.value(x)))


def christoffel(field: ScalarField, x) -> np.ndarray:
    """Christoffel symbols Gamma^c_{ab} of e^{2u} * Euclidean at x.

    Gamma^c_{ab} = delta_a^c u_b + delta_b^c u_a - delta_{ab} u^c.
    """
    g = field.gradient(x)
    n = g.shape[-1]
    eye = np.eye(n)
    return (
        eye[:, None, :] * g[None, :, None]
        + eye[None, :, :] * g[:, None, None]
        - eye[:, :, None] * g[None, None, :]
    ).transpose(2, 0, 1)
