"""Conformal exponents u and the rescaled metrics e^{2u} * Euclidean.

A ``ScalarField`` bundles a scalar function with its gradient and Hessian.
All curvature and second-variation formulas downstream consume exactly these
three evaluations, so the field is the single entry point for analytic data.
Fields come in two modes: ``analytic`` (closed-form derivatives) and
``finite-difference`` (central differences of the value at a declared step).

Evaluation is vectorized: points may be a single ``(n,)`` vector or any
``(..., n)`` batch; results broadcast over the leading axes.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field
from typing import Callable

import numpy as np

from .errors import ConfigError, DomainError

Array = np.ndarray

DEFAULT_FD_STEP = 1e-5


def _as_points(x) -> Array:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        raise ValueError("a point must have at least one coordinate")
    return x


@dataclass(frozen=True)
class ScalarField:
    """Scalar function on R^n with gradient and Hessian evaluation.

    ``value_fn`` maps ``(..., n) -> (...)``; ``grad_fn`` maps
    ``(..., n) -> (..., n)``; ``hess_fn`` maps ``(..., n) -> (..., n, n)``.
    In finite-difference mode the derivative callables are generated from
    ``value_fn`` by central differences at ``step``.
    """

    value_fn: Callable[[Array], Array]
    grad_fn: Callable[[Array], Array]
    hess_fn: Callable[[Array], Array]
    mode: str = "analytic"
    step: float = 0.0
    name: str = dc_field(default="", compare=False)

    def value(self, x) -> Array:
        return np.asarray(self.value_fn(_as_points(x)), dtype=float)

    def gradient(self, x) -> Array:
        return np.asarray(self.grad_fn(_as_points(x)), dtype=float)

    def hessian(self, x) -> Array:
        h = np.asarray(self.hess_fn(_as_points(x)), dtype=float)
        return 0.5 * (h + np.swapaxes(h, -1, -2))

    @staticmethod
    def analytic(value_fn, grad_fn, hess_fn, name="") -> "ScalarField":
        return ScalarField(value_fn, grad_fn, hess_fn, mode="analytic", name=name)

    @staticmethod
    def finite_difference(value_fn, step=DEFAULT_FD_STEP, name="") -> "ScalarField":
        """Wrap a plain scalar function, deriving grad/hess by central differences."""
        if step <= 0:
            raise ValueError("finite-difference step must be positive")

        def grad_fn(x):
            n = x.shape[-1]
            shifts = step * np.eye(n)
            xp = x[..., None, :] + shifts          # (..., n, n)
            xm = x[..., None, :] - shifts
            return (value_fn(xp) - value_fn(xm)) / (2.0 * step)

        def hess_fn(x):
            n = x.shape[-1]
            eye = np.eye(n)
            f0 = value_fn(x)
            hess = np.zeros(x.shape[:-1] + (n, n))
            for i in range(n):
                ei = step * eye[i]
                hess[..., i, i] = (
                    value_fn(x + ei) - 2.0 * f0 + value_fn(x - ei)
                ) / step**2
                for j in range(i):
                    ej = step * eye[j]
                    hess[..., i, j] = (
                        value_fn(x + ei + ej)
                        - value_fn(x + ei - ej)
                        - value_fn(x - ei + ej)
                        + value_fn(x - ei - ej)
                    ) / (4.0 * step**2)
                    hess[..., j, i] = hess[..., i, j]
            return hess

        return ScalarField(
            value_fn, grad_fn, hess_fn, mode="finite-difference", step=step, name=name
        )


@dataclass(frozen=True)
class ConformalMetric:
    """The metric e^{2u} * <.,.> on a subset of R^n.

    The Euclidean metric is the ``u == 0`` case (``euclidean_metric``).
    """

    field: ScalarField
    dim: int

    def factor(self, x) -> Array:
        """Conformal factor e^{2u(x)}."""
        return np.exp(2.0 * self.field.value(x))

    def inner(self, x, X, Y) -> Array:
        X = np.asarray(X, float)
        Y = np.asarray(Y, float)
        return self.factor(x) * np.sum(X * Y, axis=-1)

    def norm(self, x, X) -> Array:
        return np.sqrt(self.inner(x, X, X))

    def volume_scale(self, x, k: int) -> Array:
        """Scale factor e^{k u(x)} of the induced k-dimensional measure."""
        return np.exp(k * self.field.value(x))


def euclidean_metric(n: int) -> ConformalMetric:
    return ConformalMetric(make_field("zero"), n)


# ---------------------------------------------------------------------------
# field catalog
# ---------------------------------------------------------------------------

def _zero_field() -> ScalarField:
    return ScalarField.analytic(
        lambda x: np.zeros(x.shape[:-1]),
        lambda x: np.zeros_like(x),
        lambda x: np.zeros(x.shape[:-1] + (x.shape[-1], x.shape[-1])),
        name="zero",
    )


def _linear_field(a) -> ScalarField:
    a = np.asarray(a, dtype=float)

    def value(x):
        return x @ a

    def grad(x):
        return np.broadcast_to(a, x.shape).copy()

    def hess(x):
        n = x.shape[-1]
        return np.zeros(x.shape[:-1] + (n, n))

    return ScalarField.analytic(value, grad, hess, name="linear")


def _radial_field(p, dp, d2p, name, open_unit_ball=False) -> ScalarField:
    """u(x) = p(s) with s = |x|^2; derivatives follow by the chain rule."""

    def check(s):
        if open_unit_ball and np.any(s >= 1.0):
            raise DomainError(f"field '{name}' is defined only for |x| < 1")

    def value(x):
        s = np.sum(x * x, axis=-1)
        check(s)
        return p(s)

    def grad(x):
        s = np.sum(x * x, axis=-1)
        check(s)
        return 2.0 * dp(s)[..., None] * x

    def hess(x):
        s = np.sum(x * x, axis=-1)
        check(s)
        n = x.shape[-1]
        eye = np.eye(n)
        outer = x[..., :, None] * x[..., None, :]
        return 2.0 * dp(s)[..., None, None] * eye + 4.0 * d2p(s)[..., None, None] * outer

    return ScalarField.analytic(value, grad, hess, name=name)


def _radial_custom_field(coeffs) -> ScalarField:
    c = np.asarray(coeffs, dtype=float)
    dc = np.polynomial.polynomial.polyder(c) if c.size > 1 else np.zeros(1)
    d2c = np.polynomial.polynomial.polyder(dc) if dc.size > 1 else np.zeros(1)
    pv = np.polynomial.polynomial.polyval
    return _radial_field(
        lambda s: pv(s, c), lambda s: pv(s, dc), lambda s: pv(s, d2c), "radial-custom"
    )


def _polynomial_field(terms) -> ScalarField:
    """Multivariate polynomial u(x) = sum_t c_t * prod_i x_i^{e_ti}.

    ``terms`` is a list of ``[coeff, [e_1, ..., e_n]]`` entries.
    """
    coeffs = np.array([t[0] for t in terms], dtype=float)
    exps = np.array([t[1] for t in terms], dtype=int)
    if exps.ndim != 2 or np.any(exps < 0):
        raise ConfigError("polynomial terms need non-negative exponent tuples")
    n = exps.shape[1]

    def monomials(x, e):
        # prod_i x_i^{e_i} with 0^0 = 1
        return np.prod(np.where(e > 0, x ** e, 1.0), axis=-1)

    def value(x):
        out = np.zeros(x.shape[:-1])
        for c, e in zip(coeffs, exps):
            out += c * monomials(x, e)
        return out

    def grad(x):
        out = np.zeros_like(x)
        for c, e in zip(coeffs, exps):
            for i in range(n):
                if e[i] == 0:
                    continue
                ei = e.copy()
                ei[i] -= 1
                out[..., i] += c * e[i] * monomials(x, ei)
        return out

    def hess(x):
        out = np.zeros(x.shape[:-1] + (n, n))
        for c, e in zip(coeffs, exps):
            for i in range(n):
                if e[i] == 0:
                    continue
                for j in range(i + 1):
                    eij = e.copy()
                    eij[i] -= 1
                    if eij[j] == 0:
                        continue
                    fac = e[i] * eij[j]
                    eij[j] -= 1
                    term = c * fac * monomials(x, eij)
                    out[..., i, j] += term
                    if i != j:
                        out[..., j, i] += term
        return out

    return ScalarField.analytic(value, grad, hess, name="polynomial")


def make_field(name: str, **params) -> ScalarField:
    """Build a catalog field by name.

    Catalog: ``zero``, ``linear(a)``, ``radial-spherical``,
    ``radial-hyperbolic``, ``radial-custom(coeffs)`` (polynomial in |x|^2) and
    ``polynomial(terms)``.  ``radial-spherical`` is ln(2/(1+|x|^2)), the
    exponent of the constant-curvature +1 metric; ``radial-hyperbolic`` is
    ln(2/(1-|x|^2)) on the open unit ball, curvature -1.
    """
    if name == "zero":
        return _zero_field()
    if name == "linear":
        return _linear_field(params["a"])
    if name == "radial-spherical":
        return _radial_field(
            lambda s: np.log(2.0) - np.log1p(s),
            lambda s: -1.0 / (1.0 + s),
            lambda s: 1.0 / (1.0 + s) ** 2,
            "radial-spherical",
        )
    if name == "radial-hyperbolic":
        return _radial_field(
            lambda s: np.log(2.0) - np.log(1.0 - s),
            lambda s: 1.0 / (1.0 - s),
            lambda s: 1.0 / (1.0 - s) ** 2,
            "radial-hyperbolic",
            open_unit_ball=True,
        )
    if name == "radial-custom":
        return _radial_custom_field(params["coeffs"])
    if name == "polynomial":
        return _polynomial_field(params["terms"])
    raise ConfigError(f"unknown field catalog name: {name!r}")


FIELD_NAMES = (
    "zero",
    "linear",
    "radial-spherical",
    "radial-hyperbolic",
    "radial-custom",
    "polynomial",
)
