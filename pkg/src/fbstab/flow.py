"""Constrained volume-gradient descent toward free boundary minimal disks.

The moving surface is a k=2 polar grid of control points in R^n: Gauss
radial rings plus a boundary ring pinned to the ambient boundary.  Chart
derivatives come from barycentric polynomial differentiation in the radius
and Fourier differentiation in the angle, so every step yields a full
``SampledImmersion`` and reuses the usual geometry kernels.

The descent direction is the rescaled mean curvature vector in the interior
(the first variation is minus its pairing with the variation field, so
moving with the mean curvature vector shrinks volume) and, on the boundary
ring, the part of the negative rescaled conormal tangent to the ambient
boundary (admissible boundary variations slide along it).  Steps are
explicit Euler with volume-backtracking, then boundary re-projection.

High angular modes on small-radius rings carry (m/r)^2 stiffness; smooth
fields have O(r^m) content there, so the direction field is low-pass
filtered per ring with a cutoff proportional to the radius before stepping,
and the grid exposes the matching explicit-Euler step limit.

Free boundary critical points in a ball are saddle points: a disk lowers
volume by sliding its rim toward a pole, so an untempered boundary speed
drags the rim away before the interior has relaxed.  ``boundary_rate``
scales the rim speed (scaling a descent component keeps the descent sign)
so the interior residual reaches its target first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .domain import LevelSetDomain, outward_normal, project_to_boundary
from .errors import StepFailureError
from .fields import ConformalMetric
from .submanifold import (
    SampledImmersion,
    _gauss01,
    boundary_defects,
    integrate_boundary,
    integrate_interior,
    minimality_residuals,
    volume,
)

Array = np.ndarray


def _diff_matrix(nodes: Array) -> Array:
    """Barycentric differentiation matrix on arbitrary distinct nodes."""
    x = np.asarray(nodes, float)
    diff = x[:, None] - x[None, :]
    np.fill_diagonal(diff, 1.0)
    w = 1.0 / np.prod(diff, axis=1)
    D = (w[None, :] / w[:, None]) / diff
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -np.sum(D, axis=1))
    return D


def _theta_derivative(values: Array, order: int) -> Array:
    """Spectral d/dtheta along axis 1 of a (nr, ntheta, ...) array."""
    ntheta = values.shape[1]
    spec = np.fft.rfft(values, axis=1)
    m = np.arange(spec.shape[1])
    if order == 1:
        mult = 1j * m.astype(float)
        if ntheta % 2 == 0:
            mult[-1] = 0.0
    elif order == 2:
        mult = -(m.astype(float) ** 2)
    else:
        raise ValueError("order must be 1 or 2")
    shape = (1, -1) + (1,) * (values.ndim - 2)
    spec = spec * mult.reshape(shape)
    return np.fft.irfft(spec, n=ntheta, axis=1)


class PolarGrid:
    """Control-point grid for a k=2 disk immersion in R^n.

    ``positions`` has shape (nr + 1, ntheta, n); the last radial ring is the
    boundary.
    """

    def __init__(self, n: int, nr: int = 8, ntheta: int = 16):
        if ntheta % 2:
            raise ValueError("ntheta must be even")
        self.n = n
        self.nr = nr
        self.ntheta = ntheta
        r, wr = _gauss01(nr)
        self.rs = np.concatenate([r, [1.0]])
        self.wr = wr
        self.theta = np.arange(ntheta) * (2.0 * np.pi / ntheta)
        self.D = _diff_matrix(self.rs)
        self.D2 = self.D @ self.D
        self.positions = np.zeros((nr + 1, ntheta, n))
        mmax = ntheta // 2
        keep = np.minimum(np.maximum(1, np.floor(2.0 * mmax * self.rs).astype(int)), mmax)
        # explicit Euler limit of the filtered angular Laplacian, (m/r)^2
        self.dt_stable = float(1.0 / np.max((keep / self.rs) ** 2))

    @classmethod
    def from_graph(cls, n: int, height_fn, nr: int = 8, ntheta: int = 16,
                   radius: float = 1.0) -> "PolarGrid":
        """Start from a graph over the equatorial disk: x = (y, psi(y)).

        ``height_fn(y) -> (m, n - 2)`` heights for planar points (m, 2).
        """
        grid = cls(n, nr, ntheta)
        rr = grid.rs[:, None]
        cc = np.cos(grid.theta)[None, :]
        ss = np.sin(grid.theta)[None, :]
        y = radius * np.stack([rr * cc, rr * ss], axis=-1)
        flat = y.reshape(-1, 2)
        heights = np.asarray(height_fn(flat), float).reshape(nr + 1, ntheta, n - 2)
        grid.positions[:, :, :2] = y
        grid.positions[:, :, 2:] = heights
        return grid

    def with_positions(self, positions: Array) -> "PolarGrid":
        out = PolarGrid.__new__(PolarGrid)
        out.n, out.nr, out.ntheta = self.n, self.nr, self.ntheta
        out.rs, out.wr, out.theta = self.rs, self.wr, self.theta
        out.D, out.D2 = self.D, self.D2
        out.dt_stable = self.dt_stable
        out.positions = np.asarray(positions, float)
        return out

    def chart_derivatives(self):
        P = self.positions
        P_r = np.einsum("ij,jtn->itn", self.D, P)
        P_rr = np.einsum("ij,jtn->itn", self.D2, P)
        P_t = _theta_derivative(P, 1)
        P_tt = _theta_derivative(P, 2)
        P_rt = np.einsum("ij,jtn->itn", self.D, P_t)
        return P_r, P_rr, P_t, P_tt, P_rt

    def immersion(self, validate: bool = False) -> SampledImmersion:
        nr, ntheta, n = self.nr, self.ntheta, self.n
        P_r, P_rr, P_t, P_tt, P_rt = self.chart_derivatives()
        wt = 2.0 * np.pi / ntheta
        xs = self.positions[:nr].reshape(-1, n)
        Js = np.stack([P_r[:nr].reshape(-1, n), P_t[:nr].reshape(-1, n)], axis=2)
        Hs = np.zeros((nr * ntheta, 2, 2, n))
        Hs[:, 0, 0] = P_rr[:nr].reshape(-1, n)
        Hs[:, 0, 1] = Hs[:, 1, 0] = P_rt[:nr].reshape(-1, n)
        Hs[:, 1, 1] = P_tt[:nr].reshape(-1, n)
        ws = np.repeat(self.wr, ntheta) * wt

        bxs = self.positions[nr]
        bt = P_t[nr]
        t_norm = np.linalg.norm(bt, axis=1, keepdims=True)
        t_hat = bt / t_norm
        d = P_r[nr]
        nu = d - np.sum(d * t_hat, axis=1, keepdims=True) * t_hat
        nu /= np.linalg.norm(nu, axis=1, keepdims=True)
        bJs = np.stack([P_r[nr], bt], axis=2)
        bws = t_norm[:, 0] * wt
        return SampledImmersion(
            2, n, xs, Js, Hs, ws, bxs, bJs, bws, nu, validate=validate
        )


def first_variation_direction(imm: SampledImmersion, metric: ConformalMetric,
                              domain: LevelSetDomain):
    """Steepest-descent direction of rescaled volume.

    Interior: the rescaled mean curvature vector (its pairing with the first
    variation is -|H~|^2 <= 0).  Boundary: minus the rescaled conormal,
    projected onto the ambient boundary's tangent space.
    """
    geo = imm.geometry()
    g = metric.field.gradient(imm.xs)
    gperp = np.einsum("mrx,mr->mx", geo.normal, np.einsum("mrx,mx->mr", geo.normal, g))
    u = metric.field.value(imm.xs)
    interior = np.exp(-2.0 * u)[:, None] * (geo.H - imm.k * gperp)
    if imm.n_boundary:
        u_b = metric.field.value(imm.bxs)
        nhat = outward_normal(domain, imm.bxs)
        nu_t = imm.bnus - np.sum(imm.bnus * nhat, axis=1, keepdims=True) * nhat
        boundary = -np.exp(-u_b)[:, None] * nu_t
    else:
        boundary = np.zeros((0, imm.n))
    return interior, boundary


def first_variation_value(imm: SampledImmersion, metric: ConformalMetric,
                          interior_dirs, boundary_dirs) -> float:
    """Pairing of a variation field with the first variation of volume:
    -int <X, H~> dV + int <X, nu~> dA in the rescaled metric."""
    geo = imm.geometry()
    g = metric.field.gradient(imm.xs)
    gperp = np.einsum("mrx,mr->mx", geo.normal, np.einsum("mrx,mx->mr", geo.normal, g))
    u = metric.field.value(imm.xs)
    H_conf = np.exp(-2.0 * u)[:, None] * (geo.H - imm.k * gperp)
    fac = metric.factor(imm.xs)
    vals = -fac * np.sum(np.asarray(interior_dirs) * H_conf, axis=1)
    total = integrate_interior(imm, vals, metric)
    if imm.n_boundary:
        u_b = metric.field.value(imm.bxs)
        nu_conf = np.exp(-u_b)[:, None] * imm.bnus
        bvals = metric.factor(imm.bxs) * np.sum(np.asarray(boundary_dirs) * nu_conf, axis=1)
        total += integrate_boundary(imm, bvals, metric)
    return float(total)


@dataclass(frozen=True)
class FlowConfig:
    dt: float | None = None           # None: half the grid's stability limit
    dt_max: float | None = None       # None: the grid's stability limit
    max_iter: int = 5000
    tol: float = 1e-3                 # target max |H~|
    boundary_tol: float = 1e-2        # target max angle defect
    boundary_rate: float = 0.1        # rim speed relative to interior
    max_backtracks: int = 20
    volume_slack: float = 1e-12


@dataclass(frozen=True)
class FlowState:
    grid: PolarGrid
    step: float
    iteration: int
    volume: float
    residual: float                   # max |H~| over interior samples
    boundary_defect: float
    residual_history: tuple[tuple[float, float], ...]


def _grid_direction(grid: PolarGrid, imm: SampledImmersion,
                    metric: ConformalMetric, domain: LevelSetDomain,
                    boundary_rate: float) -> Array:
    interior, boundary = first_variation_direction(imm, metric, domain)
    direction = np.zeros_like(grid.positions)
    direction[: grid.nr] = interior.reshape(grid.nr, grid.ntheta, grid.n)
    direction[grid.nr] = boundary_rate * boundary
    return _filter_direction(grid, direction)


def _filter_direction(grid: PolarGrid, direction: Array) -> Array:
    """Per-ring angular low-pass: keep modes m <= max(1, 2 * mmax * r)."""
    mmax = grid.ntheta // 2
    spec = np.fft.rfft(direction, axis=1)
    m = np.arange(spec.shape[1])
    keep = np.maximum(1, np.floor(2.0 * mmax * grid.rs).astype(int))
    mask = (m[None, :] <= keep[:, None]).astype(float)
    spec *= mask[:, :, None]
    return np.fft.irfft(spec, n=grid.ntheta, axis=1)


def _measurements(grid: PolarGrid, metric: ConformalMetric, domain: LevelSetDomain):
    imm = grid.immersion()
    res = float(np.max(minimality_residuals(imm, metric)))
    defect = float(np.max(boundary_defects(imm, domain)))
    return imm, volume(imm, metric), res, defect


def flow_state(grid: PolarGrid, metric: ConformalMetric, domain: LevelSetDomain,
               dt: float | None = None) -> FlowState:
    _, vol, res, defect = _measurements(grid, metric, domain)
    if dt is None:
        dt = 0.5 * grid.dt_stable
    return FlowState(grid, dt, 0, vol, res, defect, ((res, defect),))


def flow_step(state: FlowState, metric: ConformalMetric, domain: LevelSetDomain,
              config: FlowConfig | None = None) -> FlowState:
    """One explicit-Euler step with boundary re-projection and volume
    backtracking: the accepted rescaled volume never grows beyond the slack."""
    cfg = config or FlowConfig()
    grid = state.grid
    dt_max = cfg.dt_max if cfg.dt_max is not None else grid.dt_stable
    imm = grid.immersion()
    direction = _grid_direction(grid, imm, metric, domain, cfg.boundary_rate)
    dt = min(state.step, dt_max)
    for _ in range(cfg.max_backtracks + 1):
        trial = grid.positions + dt * direction
        boundary = np.array([project_to_boundary(domain, x, tol=1e-12) for x in trial[grid.nr]])
        trial[grid.nr] = boundary
        new_grid = grid.with_positions(trial)
        _, vol, res, defect = _measurements(new_grid, metric, domain)
        if vol <= state.volume + cfg.volume_slack:
            next_dt = min(dt * 1.15, dt_max) if dt == state.step else dt
            return FlowState(
                new_grid, next_dt, state.iteration + 1, vol, res, defect,
                state.residual_history + ((res, defect),),
            )
        dt *= 0.5
    raise StepFailureError(
        f"backtracking exhausted after {cfg.max_backtracks} halvings at "
        f"iteration {state.iteration}"
    )


def run_flow(grid: PolarGrid, metric: ConformalMetric, domain: LevelSetDomain,
             config: FlowConfig | None = None):
    """Iterate flow steps until residual targets or the iteration budget.

    Returns ``(final immersion, converged, final state)``; the state carries
    the residual history.
    """
    cfg = config or FlowConfig()
    state = flow_state(grid, metric, domain, cfg.dt)
    for _ in range(cfg.max_iter):
        if state.residual <= cfg.tol and state.boundary_defect <= cfg.boundary_tol:
            break
        state = flow_step(state, metric, domain, cfg)
    converged = state.residual <= cfg.tol and state.boundary_defect <= cfg.boundary_tol
    return state.grid.immersion(validate=True), converged, state
