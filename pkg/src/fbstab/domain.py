"""Level-set domains, boundary shape operators and convexity margins.

The ambient domain is Omega = {phi < 0} for a smooth level-set function, so
the outward normal is grad phi / |grad phi| and the inward normal eta its
negative.  Signs are calibrated on the unit sphere: with the inward normal,
its shape operator is the identity, so p-convexity of the ball is positive.

Boundary sweeps sample the margin from below; they are lower bounds refined
by a deterministic local polish, not exact global minima.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import optimize
from scipy.stats import qmc
from scipy.special import ndtri

from .errors import ConfigError, DomainError, ProjectionError
from .fields import ConformalMetric, ScalarField, make_field

Array = np.ndarray

GRAD_FLOOR = 1e-10


@dataclass(frozen=True)
class LevelSetDomain:
    """Bounded domain Omega = {phi < 0} with boundary {phi = 0}."""

    phi: ScalarField
    n: int
    bounding_radius: float
    name: str = ""


@dataclass(frozen=True)
class ConvexityReport:
    """Sampled p-convexity margins of the boundary in both metrics.

    ``margin`` entries are minima over sampled boundary points of the sum of
    the p smallest shape-operator eigenvalues (inward-normal convention).
    ``nu_u_range`` is the (min, max) of the exterior normal derivative of u.
    """

    p: int
    margin_g: float
    margin_gtilde: float
    worst_point_g: Array
    worst_point_gtilde: Array
    nu_u_range: tuple[float, float]
    n_samples: int

    def to_dict(self) -> dict:
        return {
            "schema": "fbstab-convexity/1",
            "p": self.p,
            "margin_g": self.margin_g,
            "margin_gtilde": self.margin_gtilde,
            "worst_point_g": list(map(float, self.worst_point_g)),
            "worst_point_gtilde": list(map(float, self.worst_point_gtilde)),
            "nu_u_min": self.nu_u_range[0],
            "nu_u_max": self.nu_u_range[1],
            "n_samples": self.n_samples,
        }


def outward_normal(domain: LevelSetDomain, x) -> Array:
    g = domain.phi.gradient(x)
    norm = np.linalg.norm(g, axis=-1, keepdims=True)
    if np.any(norm < GRAD_FLOOR):
        raise DomainError("level-set gradient vanishes at a boundary point")
    return g / norm


def inward_normal(domain: LevelSetDomain, x) -> Array:
    """Inward unit normal eta = -grad phi / |grad phi| (phi < 0 inside)."""
    return -outward_normal(domain, x)


def project_to_boundary(domain: LevelSetDomain, x, tol: float = 1e-12,
                        max_iter: int = 50) -> Array:
    """Newton iteration along grad phi until |phi| <= tol."""
    y = np.array(x, dtype=float)
    for _ in range(max_iter):
        val = float(domain.phi.value(y))
        if abs(val) <= tol:
            return y
        g = domain.phi.gradient(y)
        g2 = float(g @ g)
        if g2 < GRAD_FLOOR**2:
            raise ProjectionError("level-set gradient vanished during projection")
        y = y - (val / g2) * g
    raise ProjectionError(f"projection did not reach |phi| <= {tol:g} in {max_iter} steps")


def boundary_form(domain: LevelSetDomain, x) -> Array:
    """Ambient matrix M with X^T M Y = <alpha_boundary(X, Y), eta> for tangent X, Y.

    M = P (Hess phi) P / |grad phi| with P the tangential projector; the unit
    sphere gets +1 eigenvalues on the tangent space (inward-normal sign).
    """
    g = domain.phi.gradient(x)
    norm = float(np.linalg.norm(g))
    if norm < GRAD_FLOOR:
        raise DomainError("level-set gradient vanishes at a boundary point")
    nhat = g / norm
    P = np.eye(domain.n) - np.outer(nhat, nhat)
    return P @ domain.phi.hessian(x) @ P / norm


def boundary_tangent_basis(domain: LevelSetDomain, x) -> Array:
    """Deterministic orthonormal basis of the boundary tangent space, (n-1, n)."""
    nhat = outward_normal(domain, x)
    A = np.concatenate([nhat[:, None], np.eye(domain.n)], axis=1)
    Q, R = np.linalg.qr(A)
    d = np.diag(R[:, : domain.n])
    Q = Q * np.where(d == 0.0, 1.0, np.sign(d))[None, :]
    return Q[:, 1:].T


def shape_operator(domain: LevelSetDomain, x, metric: ConformalMetric | None = None) -> Array:
    """Symmetric (n-1) x (n-1) shape operator in an orthonormal tangent basis.

    Euclidean: restriction of ``boundary_form``.  Rescaled metric: the
    eigenvalues transform as kappa~ = e^{-u} (kappa - eta(u)), which is the
    operator e^{-u} (S - eta(u) I) in the same basis.
    """
    B = boundary_tangent_basis(domain, x)
    S = B @ boundary_form(domain, x) @ B.T
    S = 0.5 * (S + S.T)
    if metric is None:
        return S
    u = float(metric.field.value(x))
    eta_u = float(metric.field.gradient(x) @ inward_normal(domain, x))
    return np.exp(-u) * (S - eta_u * np.eye(domain.n - 1))


def principal_curvatures(domain: LevelSetDomain, x, metric=None) -> Array:
    return np.linalg.eigvalsh(shape_operator(domain, x, metric))


# ---------------------------------------------------------------------------
# boundary sampling
# ---------------------------------------------------------------------------

def _root_along_ray(domain: LevelSetDomain, direction: Array) -> Array:
    """First boundary crossing of t -> phi(t * direction), then Newton polish.

    Assumes the origin is interior and the domain star-shaped about it, which
    holds for every catalog domain.
    """
    d = direction / np.linalg.norm(direction)
    hi = 1.001 * domain.bounding_radius
    for _ in range(8):
        if float(domain.phi.value(hi * d)) > 0.0:
            break
        hi *= 2.0
    else:
        raise ProjectionError("could not bracket the boundary along a ray")
    lo = 0.0
    if float(domain.phi.value(np.zeros(domain.n))) >= 0.0:
        raise DomainError("boundary sampler assumes the origin lies inside the domain")
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if float(domain.phi.value(mid * d)) < 0.0:
            lo = mid
        else:
            hi = mid
    return project_to_boundary(domain, 0.5 * (lo + hi) * d)


def sample_boundary(domain: LevelSetDomain, count: int = 2048, seed: int = 0) -> Array:
    """Deterministic boundary sweep: axis points plus Sobol directions."""
    n = domain.n
    dirs = [e for i in range(n) for e in (np.eye(n)[i], -np.eye(n)[i])]
    if count > len(dirs):
        need = count - len(dirs)
        sob = qmc.Sobol(d=n, scramble=True, seed=seed)
        uu = sob.random(1 << int(np.ceil(np.log2(need))))[:need]
        zz = ndtri(np.clip(uu, 1e-12, 1.0 - 1e-12))
        norms = np.linalg.norm(zz, axis=1)
        norms[norms == 0.0] = 1.0
        dirs.extend(zz / norms[:, None])
    return np.array([_root_along_ray(domain, d) for d in dirs])


def _eig_sum(domain, x, p, metric):
    eigs = principal_curvatures(domain, x, metric)
    return float(np.sum(np.sort(eigs)[:p]))


def p_convexity_margin(domain: LevelSetDomain, p: int,
                       metric: ConformalMetric | None = None,
                       count: int = 2048, seed: int = 0,
                       polish: bool = True) -> tuple[float, Array]:
    """Sampled lower envelope of the sum of the p smallest principal curvatures.

    Returns ``(margin, worst_point)``.  ``polish`` runs a derivative-free
    local refinement from the worst sampled direction (deterministic).
    """
    if not 1 <= p <= domain.n - 1:
        raise ConfigError(f"need 1 <= p <= n-1, got p={p}")
    pts = sample_boundary(domain, count, seed)
    vals = np.array([_eig_sum(domain, x, p, metric) for x in pts])
    worst = int(np.argmin(vals))
    margin, worst_point = float(vals[worst]), pts[worst]
    if polish:
        def objective(v):
            nv = np.linalg.norm(v)
            if nv < 1e-8:
                return margin + 1.0
            try:
                return _eig_sum(domain, _root_along_ray(domain, v / nv), p, metric)
            except (ProjectionError, DomainError):
                return margin + 1.0

        res = optimize.minimize(
            objective, worst_point / np.linalg.norm(worst_point),
            method="Nelder-Mead",
            options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 400},
        )
        if res.fun < margin:
            margin = float(res.fun)
            worst_point = _root_along_ray(domain, res.x / np.linalg.norm(res.x))
    return margin, worst_point


def convexity_report(domain: LevelSetDomain, field: ScalarField, p: int,
                     count: int = 2048, seed: int = 0, polish: bool = True) -> ConvexityReport:
    """Margins in both the Euclidean and the rescaled metric, plus the
    exterior normal derivative range of u over the sampled boundary."""
    metric = ConformalMetric(field, domain.n)
    margin_g, worst_g = p_convexity_margin(domain, p, None, count, seed, polish)
    margin_gt, worst_gt = p_convexity_margin(domain, p, metric, count, seed, polish)
    pts = sample_boundary(domain, count, seed)
    grads = field.gradient(pts)
    nu_ext = np.sum(grads * outward_normal(domain, pts), axis=1)
    return ConvexityReport(
        p=p,
        margin_g=margin_g,
        margin_gtilde=margin_gt,
        worst_point_g=worst_g,
        worst_point_gtilde=worst_gt,
        nu_u_range=(float(np.min(nu_ext)), float(np.max(nu_ext))),
        n_samples=count,
    )


MARGIN_SLACK = 1e-9


def corollary_gate(domain: LevelSetDomain, field: ScalarField, p: int,
                   count: int = 2048, seed: int = 0) -> str:
    """Classify the domain/exponent pair by boundary monotonicity of u.

    ``case-i``: boundary p-convex in the Euclidean metric and u strictly
    increasing in the exterior direction; ``case-ii``: p-convex in the
    rescaled metric and u strictly decreasing outward; otherwise ``none``.
    Either case upgrades the other metric's p-convexity to strict.
    """
    report = convexity_report(domain, field, p, count, seed)
    nu_min, nu_max = report.nu_u_range
    if report.margin_g >= -MARGIN_SLACK and nu_min > 0.0:
        return "case-i"
    if report.margin_gtilde >= -MARGIN_SLACK and nu_max < 0.0:
        return "case-ii"
    return "none"


# ---------------------------------------------------------------------------
# domain catalog
# ---------------------------------------------------------------------------

def make_domain(kind: str, n: int, **params) -> LevelSetDomain:
    """Catalog domains: ``ball(radius)``, ``ellipsoid(semi_axes)``,
    ``superellipsoid(exponent)``."""
    if kind == "ball":
        r = float(params.get("radius", 1.0))
        phi = make_field("radial-custom", coeffs=[-(r**2), 1.0])
        return LevelSetDomain(phi, n, bounding_radius=r, name=f"ball({r:g})")
    if kind == "ellipsoid":
        axes = np.asarray(params["semi_axes"], float)
        if axes.shape != (n,) or np.any(axes <= 0):
            raise ConfigError("ellipsoid needs n positive semi-axes")
        terms = [[1.0 / axes[i] ** 2, [2 if j == i else 0 for j in range(n)]] for i in range(n)]
        terms.append([-1.0, [0] * n])
        phi = make_field("polynomial", terms=terms)
        name = "ellipsoid(" + ",".join(f"{a:g}" for a in axes) + ")"
        return LevelSetDomain(phi, n, bounding_radius=float(np.max(axes)), name=name)
    if kind == "superellipsoid":
        m = int(params.get("exponent", 2))
        if m < 2:
            raise ConfigError("superellipsoid exponent must be >= 2")
        terms = [[1.0, [2 * m if j == i else 0 for j in range(n)]] for i in range(n)]
        terms.append([-1.0, [0] * n])
        phi = make_field("polynomial", terms=terms)
        radius = float(n ** (0.5 - 0.5 / m))
        return LevelSetDomain(phi, n, bounding_radius=radius, name=f"superellipsoid({m})")
    raise ConfigError(f"unknown domain catalog name: {kind!r}")


def check_gradient_tube(domain: LevelSetDomain, count: int = 256, seed: int = 0,
                        floor: float = 1e-6, tube: float = 1e-2) -> float:
    """Sampled minimum of |grad phi| on the tube |phi| <= tube."""
    pts = sample_boundary(domain, count, seed)
    lo = np.inf
    for x in pts:
        nhat = outward_normal(domain, x)
        for t in (-1.0, 0.0, 1.0):
            y = x + t * tube * nhat
            if abs(float(domain.phi.value(y))) <= tube:
                lo = min(lo, float(np.linalg.norm(domain.phi.gradient(y))))
    if lo < floor:
        raise DomainError(f"|grad phi| = {lo:.2e} below {floor:g} near the boundary")
    return float(lo)
