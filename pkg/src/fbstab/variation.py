"""Second-variation quadratic forms, trace identities and the certificate.

For a normal field X along a k-submanifold, the interior density is
S(X,X) = |D^perp X|^2 - sum_i <R(X,v_i)X, v_i> - <alpha, X>^2 and the
boundary density T(X,X) = <D_X X, nu> reduces, through the free boundary
condition, to the ambient boundary's second fundamental form.  Q = int S +
int T is the second variation when the immersion is minimal and meets the
boundary orthogonally.

Everything here is evaluated pointwise from ambient data (u, grad u, Hess u,
frames, alpha); no differencing across samples.  Traces over the projected
coordinate fields e_l^perp use the canonical basis; invariance under basis
rotation is a test obligation, not a normalization step.
"""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np
from scipy.stats import qmc

from . import conformal
from .domain import LevelSetDomain, boundary_form, outward_normal
from .errors import DimensionError, PreconditionError
from .fields import ConformalMetric
from .submanifold import (
    BoundarySample,
    InteriorSample,
    SampledImmersion,
    _batched_frames,
    boundary_defects,
    integrate_boundary,
    integrate_interior,
    minimality_residuals,
)

Array = np.ndarray

NORMALITY_TOL = 1e-9
TANGENCY_TOL = 1e-8


@dataclass(frozen=True)
class SampleContext:
    """Frame and fundamental-form data at one interior sample."""

    x: Array
    tangent: Array   # (k, n)
    normal: Array    # (q, n)
    alpha: Array     # (k, k, q)

    @property
    def k(self) -> int:
        return self.tangent.shape[0]

    @property
    def n(self) -> int:
        return self.tangent.shape[1]


@dataclass(frozen=True)
class BoundaryContext:
    """Frame data and conormal at one boundary sample."""

    x: Array
    tangent: Array
    normal: Array
    nu: Array

    @property
    def k(self) -> int:
        return self.tangent.shape[0]

    @property
    def n(self) -> int:
        return self.tangent.shape[1]


@dataclass(frozen=True)
class NormalFieldSample:
    """Value and covariant normal derivative of a normal field at a sample.

    ``dperp[i, r]`` are the components of D^perp_{v_i} X against the frame's
    normal basis.
    """

    value: Array     # (n,)
    dperp: Array     # (k, q)


@dataclass(frozen=True)
class NormalField:
    """A normal field sampled over a whole immersion."""

    interior: tuple[NormalFieldSample, ...]
    boundary_values: Array   # (mb, n)


def interior_context(imm: SampledImmersion, i: int) -> SampleContext:
    geo = imm.geometry()
    return SampleContext(imm.xs[i], geo.tangent[i], geo.normal[i], geo.alpha[i])


def boundary_context(imm: SampledImmersion, i: int) -> BoundaryContext:
    geo = imm.geometry()
    return BoundaryContext(imm.bxs[i], geo.b_tangent[i], geo.b_normal[i], imm.bnus[i])


def _ctx(s) -> SampleContext:
    if isinstance(s, SampleContext):
        return s
    if isinstance(s, InteriorSample):
        J = s.J[None]
        T, N, C = _batched_frames(J)
        hn = np.einsum("mrx,mabx->mabr", N, s.Hchart[None])
        alpha = np.einsum("mai,mbj,mabr->mijr", C, C, hn)[0]
        return SampleContext(s.x, T[0], N[0], alpha)
    raise TypeError(f"expected an interior sample or context, got {type(s)!r}")


def _bctx(b) -> BoundaryContext:
    if isinstance(b, BoundaryContext):
        return b
    if isinstance(b, BoundarySample):
        T, N, _ = _batched_frames(b.J[None])
        return BoundaryContext(b.x, T[0], N[0], b.nu)
    raise TypeError(f"expected a boundary sample or context, got {type(b)!r}")


def _check_normal(ctx, value):
    tan = ctx.tangent @ value
    if np.max(np.abs(tan)) > NORMALITY_TOL * (1.0 + float(np.linalg.norm(value))):
        raise PreconditionError("field is not normal to the submanifold at this sample")


# ---------------------------------------------------------------------------
# pointwise quadratic forms
# ---------------------------------------------------------------------------

def projected_constant_field(E, s) -> NormalFieldSample:
    """Normal projection of a constant ambient direction, with its covariant
    derivative D^perp_{v_i} E^perp = -alpha(v_i, E^tan).

    Boundary samples carry no chart curvature, so their field samples hold
    the value only (zero derivative data); the boundary densities are
    tensorial and never consume it.
    """
    E = np.asarray(E, float)
    if isinstance(s, (BoundaryContext, BoundarySample)):
        bctx = _bctx(s)
        value = E - bctx.tangent.T @ (bctx.tangent @ E)
        return NormalFieldSample(value, np.zeros((bctx.k, bctx.normal.shape[0])))
    ctx = _ctx(s)
    Et = ctx.tangent @ E
    value = E - ctx.tangent.T @ Et
    dperp = -np.einsum("ijr,j->ir", ctx.alpha, Et)
    return NormalFieldSample(value, dperp)


def s_euclid(s, X: NormalFieldSample) -> float:
    """Interior density in the Euclidean metric: |D^perp X|^2 - <alpha, X>^2."""
    ctx = _ctx(s)
    _check_normal(ctx, X.value)
    Xn = ctx.normal @ X.value
    grad_term = float(np.sum(X.dperp**2))
    alpha_term = float(np.sum(np.einsum("ijr,r->ij", ctx.alpha, Xn) ** 2))
    return grad_term - alpha_term


def t_euclid(b, X_value, domain: LevelSetDomain, tangency_tol: float = TANGENCY_TOL) -> float:
    """Boundary density <alpha_boundary(X, X), nu> through the level set.

    Requires X tangent to the ambient boundary (the free boundary condition
    transports normal fields into the boundary's tangent space); callers
    working with approximately orthogonal immersions may widen the tolerance
    to the measured boundary defect.
    """
    bctx = _bctx(b)
    X = np.asarray(X_value, float)
    nhat = outward_normal(domain, bctx.x)
    if abs(X @ nhat) > tangency_tol * (1.0 + float(np.linalg.norm(X))):
        raise PreconditionError("field is not tangent to the domain boundary")
    M = boundary_form(domain, bctx.x)
    eta_dot_nu = float(-nhat @ bctx.nu)
    return float(X @ M @ X) * eta_dot_nu


def s_tilde_transformed(s, X: NormalFieldSample, metric: ConformalMetric) -> float:
    """Interior density of the rescaled metric from Euclidean data.

    S~(X,X) = S(X,X) + (grad^tan u)(|X|^2) + |X|^2 div_Sigma(grad u)
    + k |X|^2 |grad u|^2 + k Hess u(X, X); valid where the immersion is
    minimal for the rescaled metric.
    """
    ctx = _ctx(s)
    X2 = float(X.value @ X.value)
    g = metric.field.gradient(ctx.x)
    h = metric.field.hessian(ctx.x)
    u_i = ctx.tangent @ g
    Xn = ctx.normal @ X.value
    deriv_term = 2.0 * float(u_i @ (X.dperp @ Xn))
    div_term = float(np.einsum("in,np,ip->", ctx.tangent, h, ctx.tangent))
    k = ctx.k
    return (
        s_euclid(ctx, X)
        + deriv_term
        + X2 * div_term
        + k * X2 * float(g @ g)
        + k * float(X.value @ h @ X.value)
    )


def s_tilde_transformed_rescaled(s, X: NormalFieldSample, metric: ConformalMetric) -> float:
    """e^{2u} S~(X~, X~) for the rescaled field X~ = e^{-u} X.

    Same expansion with -|X|^2 |grad^tan u|^2 in place of the derivative term.
    """
    ctx = _ctx(s)
    X2 = float(X.value @ X.value)
    g = metric.field.gradient(ctx.x)
    h = metric.field.hessian(ctx.x)
    u_i = ctx.tangent @ g
    div_term = float(np.einsum("in,np,ip->", ctx.tangent, h, ctx.tangent))
    k = ctx.k
    return (
        s_euclid(ctx, X)
        - X2 * float(u_i @ u_i)
        + X2 * div_term
        + k * X2 * float(g @ g)
        + k * float(X.value @ h @ X.value)
    )


def s_tilde_direct(s, X: NormalFieldSample, metric: ConformalMetric) -> float:
    """Interior density of the rescaled metric computed from first principles.

    Uses only the conformal connection, curvature tensor and second
    fundamental form; no minimality assumption.  Dual route to
    ``s_tilde_transformed`` for closure testing.
    """
    ctx = _ctx(s)
    _check_normal(ctx, X.value)
    field = metric.field
    g = field.gradient(ctx.x)
    u_i = ctx.tangent @ g
    gn = ctx.normal @ g
    Xn = ctx.normal @ X.value
    grad_term = float(np.sum((X.dperp + np.outer(u_i, Xn)) ** 2))
    curv = 0.0
    for i in range(ctx.k):
        R = conformal.riemann(field, ctx.x, X.value, ctx.tangent[i], X.value)
        curv += float(R @ ctx.tangent[i])
    sff = np.einsum("ijr,r->ij", ctx.alpha, Xn) - np.eye(ctx.k) * float(gn @ Xn)
    return grad_term - curv - float(np.sum(sff**2))


def t_tilde_transformed(b, X_value, metric: ConformalMetric, domain: LevelSetDomain,
                  rescaled: bool = True, tangency_tol: float = TANGENCY_TOL) -> float:
    """Boundary density of the rescaled metric from Euclidean data.

    For the rescaled field X~ = e^{-u} X this is e^{-u} (T(X,X) -
    |X|^2 nu(u)); without rescaling, e^{+u} (same bracket).
    """
    bctx = _bctx(b)
    X = np.asarray(X_value, float)
    u = float(metric.field.value(bctx.x))
    nu_u = float(metric.field.gradient(bctx.x) @ bctx.nu)
    bracket = t_euclid(bctx, X, domain, tangency_tol) - float(X @ X) * nu_u
    return float(np.exp(-u if rescaled else u) * bracket)


def t_tilde_direct(b, X_value, metric: ConformalMetric, domain: LevelSetDomain,
                   rescaled: bool = True, tangency_tol: float = TANGENCY_TOL) -> float:
    """Boundary density of the rescaled metric via the conformal boundary form.

    Applies the conformal transformation of the ambient boundary's second
    fundamental form and the rescaled conormal; dual route to
    ``t_tilde_transformed``.
    """
    bctx = _bctx(b)
    X = np.asarray(X_value, float)
    nhat = outward_normal(domain, bctx.x)
    if abs(X @ nhat) > tangency_tol * (1.0 + float(np.linalg.norm(X))):
        raise PreconditionError("field is not tangent to the domain boundary")
    u = float(metric.field.value(bctx.x))
    eta_u = float(metric.field.gradient(bctx.x) @ -nhat)
    M = boundary_form(domain, bctx.x)
    eta_dot_nu = float(-nhat @ bctx.nu)
    form = (float(X @ M @ X) - float(X @ X) * eta_u) * eta_dot_nu
    return float(np.exp(-u if rescaled else u) * form)


# ---------------------------------------------------------------------------
# traces over projected constant fields
# ---------------------------------------------------------------------------

def _basis(n, basis=None) -> Array:
    if basis is None:
        return np.eye(n)
    basis = np.asarray(basis, float)
    if basis.shape != (n, n) or np.max(np.abs(basis @ basis.T - np.eye(n))) > 1e-10:
        raise PreconditionError("trace basis must be orthonormal")
    return basis


def trace_s_euclid(s, basis=None) -> float:
    """Sum of S(E^perp, E^perp) over an orthonormal basis; zero pointwise on
    any immersion (tested, not assumed) -- the returned value is the achieved
    residual for reporting."""
    ctx = _ctx(s)
    B = _basis(ctx.n, basis)
    return float(sum(s_euclid(ctx, projected_constant_field(E, ctx)) for E in B))


def trace_s_euclid_pointwise(imm: SampledImmersion) -> Array:
    """Vectorized trace of S over the canonical basis at every interior sample."""
    geo = imm.geometry()
    a1 = np.einsum("mijr,mjl->milr", geo.alpha, geo.tangent)
    first = np.sum(a1**2, axis=(1, 3))
    a2 = np.einsum("mijr,mrl->mijl", geo.alpha, geo.normal)
    second = np.sum(a2**2, axis=(1, 2))
    return np.sum(first - second, axis=1)


def trace_t_euclid(b, domain: LevelSetDomain, basis=None) -> float:
    """Boundary trace: sum of <alpha_boundary(E^perp, E^perp), nu>."""
    bctx = _bctx(b)
    B = _basis(bctx.n, basis)
    total = 0.0
    for E in B:
        X = projected_constant_field(E, bctx).value
        total += t_euclid(bctx, X, domain)
    return float(total)


def _sectional_sum_tn(field, x, tangent, normal) -> float:
    """Sum of rescaled-metric sectional curvatures over tangent-normal pairs."""
    u = float(field.value(x))
    g = field.gradient(x)
    h = field.hessian(x)
    g2 = float(g @ g)
    ut = tangent @ g
    un = normal @ g
    ht = np.einsum("in,np,ip->i", tangent, h, tangent)
    hn = np.einsum("rn,np,rp->r", normal, h, normal)
    terms = ut[:, None] ** 2 + un[None, :] ** 2 - g2 - ht[:, None] - hn[None, :]
    return float(np.exp(-2.0 * u) * np.sum(terms))


def trace_s_tilde(s, metric: ConformalMetric, basis=None) -> tuple[float, float]:
    """Traced rescaled interior density over projected rescaled constants.

    Returns ``(value, identity_residual)`` where the residual compares
    e^{2u} * value with k |grad^perp u|^2 - e^{2u} K~(T, N), the total
    tangent-normal sectional curvature."""
    ctx = _ctx(s)
    B = _basis(ctx.n, basis)
    u = float(metric.field.value(ctx.x))
    value = sum(
        s_tilde_transformed_rescaled(ctx, projected_constant_field(E, ctx), metric) for E in B
    ) * np.exp(-2.0 * u)
    gn = ctx.normal @ metric.field.gradient(ctx.x)
    ksum = _sectional_sum_tn(metric.field, ctx.x, ctx.tangent, ctx.normal)
    residual = abs(
        np.exp(2.0 * u) * value - (ctx.k * float(gn @ gn) - np.exp(2.0 * u) * ksum)
    )
    return float(value), float(residual)


def trace_t_tilde(b, metric: ConformalMetric, domain: LevelSetDomain,
                  basis=None) -> tuple[float, float]:
    """Traced rescaled boundary density over projected rescaled constants.

    Returns ``(value, identity_residual)``; the residual compares e^u * value
    with -(n-k) nu(u) + sum_l <alpha_boundary(E_l^perp, E_l^perp), nu>, the
    latter evaluated as a projector trace."""
    bctx = _bctx(b)
    B = _basis(bctx.n, basis)
    value = 0.0
    for E in B:
        X = projected_constant_field(E, bctx).value
        value += t_tilde_transformed(bctx, X, metric, domain, rescaled=True)
    u = float(metric.field.value(bctx.x))
    nu_u = float(metric.field.gradient(bctx.x) @ bctx.nu)
    nhat = outward_normal(domain, bctx.x)
    M = boundary_form(domain, bctx.x)
    PN = bctx.normal.T @ bctx.normal
    pair_sum = float(-nhat @ bctx.nu) * float(np.einsum("np,pn->", M, PN))
    k, n = bctx.k, bctx.n
    display = -(n - k) * nu_u + pair_sum
    residual = abs(np.exp(u) * value - display)
    return float(value), float(residual)


# ---------------------------------------------------------------------------
# vectorized traced densities over a whole immersion
# ---------------------------------------------------------------------------

def traced_interior_density(imm: SampledImmersion, metric: ConformalMetric):
    """Per-interior-sample traced rescaled density and identity residual.

    Returns ``(values (m,), residuals (m,))``, the vectorized counterpart of
    ``trace_s_tilde`` over the canonical basis.
    """
    geo = imm.geometry()
    k, n = imm.k, imm.n
    T, N, alpha = geo.tangent, geo.normal, geo.alpha
    u = metric.field.value(imm.xs)
    g = metric.field.gradient(imm.xs)
    h = metric.field.hessian(imm.xs)
    g2 = np.sum(g * g, axis=1)
    ut = np.einsum("mkn,mn->mk", T, g)
    un = np.einsum("mqn,mn->mq", N, g)
    div = np.einsum("mkn,mnp,mkp->m", T, h, T)

    a1 = np.einsum("mijr,mjl->milr", alpha, T)
    first = np.sum(a1**2, axis=(1, 3))
    a2 = np.einsum("mijr,mrl->mijl", alpha, N)
    second = np.sum(a2**2, axis=(1, 2))
    s_g = first - second                       # (m, n) per basis direction

    XV = np.einsum("mqn,mql->mnl", N, N)       # E_l^perp ambient components
    X2 = np.einsum("mql->ml", N[:, :, :] ** 2)
    hxx = np.einsum("mnl,mnp,mpl->ml", XV, h, XV)
    ut2 = np.sum(ut**2, axis=1)

    display = (
        s_g
        - X2 * ut2[:, None]
        + X2 * div[:, None]
        + k * X2 * g2[:, None]
        + k * hxx
    )
    values = np.exp(-2.0 * u) * np.sum(display, axis=1)

    ht = np.einsum("mkn,mnp,mkp->mk", T, h, T)
    hn = np.einsum("mqn,mnp,mqp->mq", N, h, N)
    terms = (
        ut[:, :, None] ** 2
        + un[:, None, :] ** 2
        - g2[:, None, None]
        - ht[:, :, None]
        - hn[:, None, :]
    )
    ksum = np.exp(-2.0 * u) * np.sum(terms, axis=(1, 2))
    gperp2 = np.sum(un**2, axis=1)
    residuals = np.abs(np.exp(2.0 * u) * values - (k * gperp2 - np.exp(2.0 * u) * ksum))
    return values, residuals


def traced_boundary_density(imm: SampledImmersion, metric: ConformalMetric,
                            domain: LevelSetDomain,
                            tangency_tol: float = TANGENCY_TOL):
    """Per-boundary-sample traced rescaled density and identity residual."""
    geo = imm.geometry()
    k, n = imm.k, imm.n
    if imm.n_boundary == 0:
        return np.zeros(0), np.zeros(0)
    bN = geo.b_normal
    u = metric.field.value(imm.bxs)
    g = metric.field.gradient(imm.bxs)
    nu_u = np.sum(g * imm.bnus, axis=1)

    grad_phi = domain.phi.gradient(imm.bxs)
    norms = np.linalg.norm(grad_phi, axis=1)
    nhat = grad_phi / norms[:, None]
    P = np.eye(n)[None] - nhat[:, :, None] * nhat[:, None, :]
    M = np.einsum("mab,mbc,mcd->mad", P, domain.phi.hessian(imm.bxs), P) / norms[:, None, None]
    eta_dot_nu = -np.sum(nhat * imm.bnus, axis=1)

    XV = np.einsum("mqn,mql->mnl", bN, bN)
    tangency = np.abs(np.einsum("mnl,mn->ml", XV, nhat))
    if np.max(tangency) > tangency_tol:
        raise PreconditionError(
            "projected fields are not tangent to the domain boundary; "
            "free boundary condition violated"
        )
    X2 = np.sum(bN**2, axis=1)
    t_g = np.einsum("mnl,mnp,mpl->ml", XV, M, XV) * eta_dot_nu[:, None]
    values = np.exp(-u) * np.sum(t_g - X2 * nu_u[:, None], axis=1)

    PN = np.einsum("mqn,mqp->mnp", bN, bN)
    pair_sum = eta_dot_nu * np.einsum("mnp,mpn->m", M, PN)
    display = -(n - k) * nu_u + pair_sum
    residuals = np.abs(np.exp(u) * values - display)
    return values, residuals


# ---------------------------------------------------------------------------
# integral bound, second variation, certificate
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundReport:
    """Traced interior integral against its boundary-flux upper bound."""

    lhs: float
    rhs: float
    slack: float
    curvature_min: float
    warnings: tuple[str, ...]

    @property
    def holds(self) -> bool:
        return self.slack >= -1e-6


def _curvature_min_on_samples(field, xs, planes: int, seed: int) -> float:
    """Minimum sampled sectional curvature over given points, random planes."""
    rng = np.random.default_rng(seed)
    m, n = xs.shape
    lo = np.inf
    for _ in range(planes):
        A = rng.normal(size=(m, n, 2))
        Q, _ = np.linalg.qr(A)
        vals = conformal.sectional_curvature_batch(field, xs, Q[:, :, 0], Q[:, :, 1])
        lo = min(lo, float(np.min(vals)))
    return lo


def interior_bound(imm: SampledImmersion, metric: ConformalMetric,
                   minimality_tol: float = 1e-6,
                   curvature_planes: int = 10, seed: int = 0) -> BoundReport:
    """Traced interior integral <= 2 * boundary flux of u along the conormal.

    lhs integrates the traced rescaled interior density; rhs = 2 times the
    integral over the boundary of the conormal derivative of u in the
    rescaled metric.  Valid for 2 <= k <= n-2 on immersions minimal for the
    rescaled metric with non-negative sampled curvature; violated hypotheses
    are attached as warnings, never silently dropped.
    """
    k, n = imm.k, imm.n
    if not 2 <= k <= n - 2:
        raise DimensionError(f"interior bound needs 2 <= k <= n-2, got k={k}, n={n}")
    warnings = []
    res = minimality_residuals(imm, metric)
    if float(np.max(res)) > minimality_tol:
        warnings.append(
            f"minimality residual {float(np.max(res)):.3e} exceeds {minimality_tol:g}"
        )
    curv_min = _curvature_min_on_samples(metric.field, imm.xs, curvature_planes, seed)
    if curv_min < -1e-9:
        warnings.append(f"curvature hypothesis unverified: sampled min {curv_min:.3e} < 0")
    values, _ = traced_interior_density(imm, metric)
    lhs = integrate_interior(imm, values, metric)
    u_b = metric.field.value(imm.bxs)
    nu_u = np.sum(metric.field.gradient(imm.bxs) * imm.bnus, axis=1)
    rhs = 2.0 * integrate_boundary(imm, np.exp(-u_b) * nu_u, metric)
    return BoundReport(lhs, rhs, rhs - lhs, curv_min, tuple(warnings))


def projected_field(imm: SampledImmersion, E) -> NormalField:
    """The projected constant field E^perp over a whole immersion."""
    geo = imm.geometry()
    E = np.asarray(E, float)
    Et = np.einsum("mkn,n->mk", geo.tangent, E)
    values = E[None, :] - np.einsum("mkn,mk->mn", geo.tangent, Et)
    dperp = -np.einsum("mijr,mj->mir", geo.alpha, Et)
    interior = tuple(
        NormalFieldSample(values[i], dperp[i]) for i in range(imm.n_interior)
    )
    if imm.n_boundary:
        bEt = np.einsum("mkn,n->mk", geo.b_tangent, E)
        bvalues = E[None, :] - np.einsum("mkn,mk->mn", geo.b_tangent, bEt)
    else:
        bvalues = np.zeros((0, imm.n))
    return NormalField(interior, bvalues)


@dataclass(frozen=True)
class SecondVariationResult:
    value: float
    interior_term: float
    boundary_term: float
    q_form_only: bool
    warnings: tuple[str, ...]


def second_variation(imm: SampledImmersion, metric: ConformalMetric,
                     X: NormalField, domain: LevelSetDomain,
                     minimality_tol: float = 1e-6,
                     free_boundary_tol: float = 1e-6) -> SecondVariationResult:
    """Q(X, X) = int S + int T with the requested metric's volume elements.

    Coincides with the second variation of volume when the immersion is
    minimal and meets the boundary orthogonally; otherwise the result is
    flagged as the bare quadratic form.
    """
    warnings = []
    res = minimality_residuals(imm, metric)
    if float(np.max(res)) > minimality_tol:
        warnings.append(f"not minimal at tolerance {minimality_tol:g}")
    defects = boundary_defects(imm, domain)
    if defects.size and float(np.max(defects)) > free_boundary_tol:
        warnings.append(f"free boundary defect exceeds {free_boundary_tol:g}")
    zero_u = metric.field.name == "zero"
    # the defect is 1 - cos(angle); field misalignment scales with sin(angle)
    max_defect = float(np.max(defects)) if defects.size else 0.0
    tangency = max(TANGENCY_TOL, 2.0 * np.sqrt(2.0 * max_defect))
    s_vals = np.empty(imm.n_interior)
    for i in range(imm.n_interior):
        ctx = interior_context(imm, i)
        xi = X.interior[i]
        s_vals[i] = s_euclid(ctx, xi) if zero_u else s_tilde_direct(ctx, xi, metric)
    t_vals = np.empty(imm.n_boundary)
    for i in range(imm.n_boundary):
        bctx = boundary_context(imm, i)
        Xb = X.boundary_values[i]
        t_vals[i] = (
            t_euclid(bctx, Xb, domain, tangency)
            if zero_u
            else t_tilde_direct(bctx, Xb, metric, domain, rescaled=False,
                                tangency_tol=tangency)
        )
    interior_term = integrate_interior(imm, s_vals, metric)
    boundary_term = integrate_boundary(imm, t_vals, metric)
    return SecondVariationResult(
        interior_term + boundary_term,
        interior_term,
        boundary_term,
        q_form_only=bool(warnings),
        warnings=tuple(warnings),
    )


@dataclass(frozen=True)
class CertificateConfig:
    """Tolerances and sampling budgets for the instability certificate."""

    p: int | None = None                 # defaults to n - k
    certify_tol: float = 1e-6            # traced total must be below -certify_tol
    minimality_tol: float = 1e-6
    free_boundary_tol: float = 1e-6
    hypothesis_margin: float = 1e-9
    curvature_points: int = 10_000
    curvature_planes: int = 10
    convexity_samples: int = 1024
    seed: int = 0


@dataclass(frozen=True)
class StabilityReport:
    """Traced second variation, bound chain, hypothesis checks and verdict."""

    n: int
    k: int
    p: int
    traced_interior: float
    traced_boundary: float
    traced_total: float
    bound_rhs: float
    bound_slack: float
    ineq2_min: float
    ineq2_max: float
    ineq2_mean: float
    ineq2_residual_max: float
    interior_identity_residual_max: float
    minimality_residual: float
    free_boundary_defect: float
    curvature_min: float
    margin_g: float
    margin_gtilde: float
    strict_conditions: tuple[str, ...]
    failed_hypotheses: tuple[str, ...]
    verdict: str
    warnings: tuple[str, ...]
    interior_trace_values: Array = dc_field(repr=False, default=None)
    boundary_trace_values: Array = dc_field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "schema": "fbstab-stability/1",
            "n": self.n,
            "k": self.k,
            "p": self.p,
            "traced_interior": self.traced_interior,
            "traced_boundary": self.traced_boundary,
            "traced_total": self.traced_total,
            "bound_rhs": self.bound_rhs,
            "bound_slack": self.bound_slack,
            "ineq2": {
                "min": self.ineq2_min,
                "max": self.ineq2_max,
                "mean": self.ineq2_mean,
                "residual_max": self.ineq2_residual_max,
            },
            "interior_identity_residual_max": self.interior_identity_residual_max,
            "residuals": {
                "minimality": self.minimality_residual,
                "free_boundary": self.free_boundary_defect,
            },
            "curvature_min": self.curvature_min,
            "margin_g": self.margin_g,
            "margin_gtilde": self.margin_gtilde,
            "strict_conditions": list(self.strict_conditions),
            "failed_hypotheses": list(self.failed_hypotheses),
            "verdict": self.verdict,
            "warnings": list(self.warnings),
        }


def _sample_domain_interior(domain: LevelSetDomain, count: int, seed: int) -> Array:
    sob = qmc.Sobol(d=domain.n, scramble=True, seed=seed)
    R = domain.bounding_radius
    pts = np.zeros((0, domain.n))
    attempts = 0
    draw = 1 << int(np.ceil(np.log2(max(count, 256) * 2)))
    while pts.shape[0] < count and attempts < 12:
        raw = sob.random(draw) * (2 * R) - R
        inside = raw[domain.phi.value(raw) < 0.0]
        pts = np.vstack([pts, inside])
        attempts += 1
    if pts.shape[0] < count:
        raise PreconditionError("could not sample enough interior points of the domain")
    return pts[:count]


def curvature_margin(metric: ConformalMetric, domain: LevelSetDomain,
                     points: int = 10_000, planes: int = 10, seed: int = 0) -> float:
    """Sampled minimum sectional curvature of the rescaled metric over Omega.

    A margin from sampling, reported as such; not a proof of the sign.
    """
    xs = _sample_domain_interior(domain, points, seed)
    return _curvature_min_on_samples(metric.field, xs, planes, seed + 1)


def instability_certificate(imm: SampledImmersion, metric: ConformalMetric,
                            domain: LevelSetDomain,
                            config: CertificateConfig | None = None) -> StabilityReport:
    """Trace the second variation over projected rescaled constants and
    certify instability when the traced total is negative and every
    hypothesis check passes.

    The verdict is ``unstable-certified`` only if the traced total lies below
    ``-certify_tol`` and the sampled curvature sign, the p-convexity margins
    in both metrics, the minimality residual and the free-boundary defect all
    pass; each failed hypothesis is listed in the report.
    """
    from .domain import p_convexity_margin

    cfg = config or CertificateConfig()
    k, n = imm.k, imm.n
    p = cfg.p if cfg.p is not None else n - k
    if not 2 <= k <= min(n - 2, n - p):
        raise DimensionError(
            f"certificate requires 2 <= k <= min(n-2, n-p); got k={k}, n={n}, p={p}"
        )

    failed = []
    warnings = []

    res = minimality_residuals(imm, metric)
    minimality = float(np.max(res))
    if minimality > cfg.minimality_tol:
        failed.append(f"minimality: residual {minimality:.3e} > {cfg.minimality_tol:g}")
    defects = boundary_defects(imm, domain)
    fb_defect = float(np.max(defects)) if defects.size else np.inf
    if fb_defect > cfg.free_boundary_tol:
        failed.append(f"free-boundary: defect {fb_defect:.3e} > {cfg.free_boundary_tol:g}")

    s_vals, s_res = traced_interior_density(imm, metric)
    tangency = TANGENCY_TOL
    if np.isfinite(fb_defect):
        tangency = max(TANGENCY_TOL, 2.0 * np.sqrt(2.0 * fb_defect))
    t_vals, t_res = traced_boundary_density(imm, metric, domain, tangency)
    traced_interior = integrate_interior(imm, s_vals, metric)
    traced_boundary = integrate_boundary(imm, t_vals, metric)
    traced_total = traced_interior + traced_boundary

    u_b = metric.field.value(imm.bxs)
    nu_u = np.sum(metric.field.gradient(imm.bxs) * imm.bnus, axis=1)
    bound_rhs = 2.0 * integrate_boundary(imm, np.exp(-u_b) * nu_u, metric)

    curv_min = curvature_margin(
        metric, domain, cfg.curvature_points, cfg.curvature_planes, cfg.seed
    )
    if curv_min < -cfg.hypothesis_margin:
        failed.append(f"curvature: sampled min {curv_min:.3e} < 0")

    margin_g, _ = p_convexity_margin(
        domain, p, None, cfg.convexity_samples, cfg.seed
    )
    margin_gt, _ = p_convexity_margin(
        domain, p, metric, cfg.convexity_samples, cfg.seed
    )
    if margin_g < -cfg.hypothesis_margin:
        failed.append(f"convexity (euclidean): margin {margin_g:.3e} < 0")
    if margin_gt < -cfg.hypothesis_margin:
        failed.append(f"convexity (rescaled): margin {margin_gt:.3e} < 0")

    strict = []
    if curv_min > cfg.hypothesis_margin:
        strict.append("positive-curvature")
    if margin_g > cfg.hypothesis_margin:
        strict.append("strict-convexity-euclidean")
    if margin_gt > cfg.hypothesis_margin:
        strict.append("strict-convexity-rescaled")
    if not strict:
        warnings.append("no strictness condition holds; certified sign rests on margins")

    certified = traced_total < -cfg.certify_tol and not failed
    if not failed and traced_total >= -cfg.certify_tol:
        warnings.append("traced total is not negative at the declared tolerance")

    return StabilityReport(
        n=n, k=k, p=p,
        traced_interior=traced_interior,
        traced_boundary=traced_boundary,
        traced_total=traced_total,
        bound_rhs=bound_rhs,
        bound_slack=bound_rhs - traced_interior,
        ineq2_min=float(np.min(t_vals)) if t_vals.size else 0.0,
        ineq2_max=float(np.max(t_vals)) if t_vals.size else 0.0,
        ineq2_mean=float(np.mean(t_vals)) if t_vals.size else 0.0,
        ineq2_residual_max=float(np.max(t_res)) if t_res.size else 0.0,
        interior_identity_residual_max=float(np.max(s_res)),
        minimality_residual=minimality,
        free_boundary_defect=fb_defect,
        curvature_min=curv_min,
        margin_g=margin_g,
        margin_gtilde=margin_gt,
        strict_conditions=tuple(strict),
        failed_hypotheses=tuple(failed),
        verdict="unstable-certified" if certified else "inconclusive",
        warnings=tuple(warnings),
        interior_trace_values=s_vals,
        boundary_trace_values=t_vals,
    )
