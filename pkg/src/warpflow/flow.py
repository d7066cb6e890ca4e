"""Explicit time stepping of the scalar graph flow.

The normal speed is  n/F(kappa) - u/lambda'  and the radial graph moves by
d r / d t = speed * v, so slices (where F = n lambda'/lambda and u = lambda)
are stationary.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields

import numpy as np

from . import _kernels
from . import quantities as qty
from .errors import ConeViolation, DomainError, NonFiniteError
from .geometry import (
    GraphSurface,
    SLICE_SNAP,
    curvature_field,
    dF_dkappa1,
    require_cone,
    sigma_all_axisymmetric,
    _quotient_constant,
)
from .warp import Kind


@dataclass(frozen=True)
class FlowConfig:
    k: int = 1
    cfl: float = 0.5
    t_end: float = math.inf
    stop_speed_tol: float = 1e-8
    stop_osc_tol: float = 1e-6
    record_every: int = 100
    max_steps: int = 10_000_000
    # with False the run always continues to t_end or max_steps
    stop_on_convergence: bool = True

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0 < self.cfl <= 1:
            raise ValueError(f"cfl must lie in (0, 1], got {self.cfl}")
        if self.stop_speed_tol <= 0 or self.stop_osc_tol <= 0:
            raise ValueError("stopping tolerances must be positive")
        if self.record_every < 1 or self.max_steps < 0:
            raise ValueError("record_every must be >= 1 and max_steps >= 0")
        if not self.t_end > 0:
            raise ValueError("t_end must be positive")


TRACE_COLUMNS = (
    "time", "area", "weighted_volume", "weighted_area", "Q", "F_max", "F_min",
    "grad_max", "A_norm_max", "kappa_min", "speed_max", "minkowski_residual",
    "hk_deficit",
)


@dataclass(frozen=True)
class DiagnosticsRecord:
    time: float
    area: float
    weighted_volume: float
    weighted_area: float
    Q: float
    F_max: float
    F_min: float
    grad_max: float
    A_norm_max: float
    kappa_min: float
    speed_max: float
    minkowski_residual: float
    hk_deficit: float
    # not part of the CSV schema, kept for barrier audits
    step: int = 0
    r_min: float = math.nan
    r_max: float = math.nan

    def row(self):
        return [getattr(self, c) for c in TRACE_COLUMNS]

    def is_finite(self):
        return all(math.isfinite(getattr(self, f.name)) for f in fields(self))


@dataclass
class FlowResult:
    surface: GraphSurface
    trace: list
    converged: bool
    steps: int
    reason: str

    def __iter__(self):
        # allows  final, trace = evolve(...)
        return iter((self.surface, self.trace))


# --- speed and step ---------------------------------------------------------


@dataclass
class _Terms:
    speed: np.ndarray
    v: np.ndarray
    lam: np.ndarray
    F: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    sigma: np.ndarray


def _terms(r, model, grid, k):
    """Speed and auxiliaries from raw radii (no GraphSurface validation)."""
    n = model.n
    lam, dlam = model.eval(r)[:2]
    if float(np.max(np.abs(r - r[0]))) <= SLICE_SNAP:
        v = np.ones_like(lam)
        kappa1 = dlam / lam
        kappa2 = kappa1.copy() if n >= 2 else np.full_like(lam, np.nan)
        sigma = sigma_all_axisymmetric(kappa1, kappa2, n)
        F = n * dlam / lam
        # exact cancellation: n / F = lam / dlam = u / lambda'
        return _Terms(np.zeros_like(lam), v, lam, F, kappa1, kappa2, sigma)
    dr = grid.d1(r)
    ddr = grid.d2(r)
    phi1 = dr / lam
    v2 = 1.0 + phi1 * phi1
    v = np.sqrt(v2)
    phi2 = ddr / lam - dlam * dr * dr / (lam * lam)
    lv = lam * v
    kappa1 = (dlam - phi2 / v2) / lv
    if n >= 2:
        kappa2 = (dlam - grid.cot * phi1) / lv
    else:
        kappa2 = np.full_like(kappa1, np.nan)
    sigma = sigma_all_axisymmetric(kappa1, kappa2, n)
    inside = np.all(sigma[1:k + 1] > 0, axis=0)
    if not inside.all():
        node = int(np.flatnonzero(~inside)[0])
        kappa = (float(kappa1[node]), float(kappa2[node]))
        raise ConeViolation(
            f"node {node}: curvatures {kappa} outside Gamma_{k}", node=node, kappa=kappa
        )
    F = _quotient_constant(n, k) * sigma[k] / sigma[k - 1]
    speed = n / F - lam / (v * dlam)
    return _Terms(speed, v, lam, F, kappa1, kappa2, sigma)


def speed(surface, k):
    """Normal speed n/F - u/lambda' at every node."""
    return _terms(surface.r, surface.model, surface.grid, k).speed


def _dt_from_terms(t, n, k, dtheta, cfl):
    Fk1 = dF_dkappa1(t.kappa1, t.kappa2, n, k, t.sigma)
    D = n * Fk1 / (t.lam**2 * t.v**2 * t.F**2)
    return cfl * dtheta**2 / float(np.max(D))


def cfl_dt(surface, k, cfl):
    """Explicit step bound cfl * dtheta^2 / max D, D the theta-theta diffusion."""
    t = _terms(surface.r, surface.model, surface.grid, k)
    return _dt_from_terms(t, surface.n, k, surface.grid.dtheta, cfl)


def _rk4(r, model, grid, k, dt, first=None):
    def rhs(x):
        t = _terms(x, model, grid, k)
        return t.speed * t.v

    k1 = rhs(r) if first is None else first.speed * first.v
    k2 = rhs(r + 0.5 * dt * k1)
    k3 = rhs(r + 0.5 * dt * k2)
    k4 = rhs(r + dt * k3)
    return r + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def step(surface, k, dt):
    """One classical RK4 step of d r/d t = speed * v."""
    r_new = _rk4(surface.r, surface.model, surface.grid, k, dt)
    if not np.all(np.isfinite(r_new)):
        node = int(np.flatnonzero(~np.isfinite(r_new))[0])
        raise NonFiniteError(f"non-finite radius at node {node}")
    return surface.with_radii(r_new, surface.time + dt)


# --- diagnostics ------------------------------------------------------------


def diagnostics(surface, k, step_index=0):
    """DiagnosticsRecord of one surface (cone membership required)."""
    cf = curvature_field(surface)
    require_cone(cf, k)
    F = cf.F(k)
    spd = surface.n / F - cf.u / cf.dlam
    try:
        hk = qty.heintze_karcher_deficit(surface, cf)
    except ArithmeticError:
        hk = math.nan
    return DiagnosticsRecord(
        time=float(surface.time),
        area=qty.area(surface, cf),
        weighted_volume=qty.weighted_volume(surface),
        weighted_area=qty.weighted_area(surface, cf),
        Q=qty.Q_functional(surface, cf),
        F_max=float(F.max()),
        F_min=float(F.min()),
        grad_max=float(np.abs(cf.phi1).max()),
        A_norm_max=float(cf.A_norm.max()),
        kappa_min=float(cf.kappa_min),
        speed_max=float(np.abs(spd).max()),
        minkowski_residual=qty.minkowski_residual(surface, cf),
        hk_deficit=hk,
        step=int(step_index),
        r_min=float(surface.r.min()),
        r_max=float(surface.r.max()),
    )


def _require_convex(terms, model):
    if model.kind is not Kind.SPHERICAL_CAP:
        return
    kmin = terms.kappa1 if model.n == 1 else np.minimum(terms.kappa1, terms.kappa2)
    if not np.all(kmin > 0):
        node = int(np.argmin(kmin))
        raise ConeViolation(
            f"node {node}: surface is not strictly convex (min kappa {kmin[node]:.3e})",
            node=node,
            kappa=(float(terms.kappa1[node]), float(terms.kappa2[node])),
        )


def _fail(status, node, steps, fail_r, model, grid, k):
    """Translate a kernel failure code into the matching exception."""
    where = f"step {steps + 1}"
    if status == _kernels.DOMAIN_FAIL:
        value = float(fail_r[node])
        raise DomainError(
            f"{where}: radius {value!r} at node {node} outside ({model.a}, {model.b})",
            node=int(node), value=value,
        )
    if status == _kernels.CONE_FAIL:
        try:
            _terms(fail_r, model, grid, k)
        except ConeViolation as exc:
            raise ConeViolation(f"{where}: {exc}", node=exc.node, kappa=exc.kappa) from exc
        raise ConeViolation(f"{where}: node {node} outside Gamma_{k}", node=int(node))
    if status == _kernels.CONVEXITY_FAIL:
        try:
            _require_convex(_terms(fail_r, model, grid, k), model)
        except ConeViolation as exc:
            raise ConeViolation(f"step {steps}: {exc}", node=exc.node, kappa=exc.kappa) from exc
        raise ConeViolation(f"step {steps}: convexity lost at node {node}", node=int(node))
    record = _partial_record(math.nan, steps + 1, fail_r)
    raise NonFiniteError(f"{where}: non-finite value at node {node}", record=record)


def evolve(surface, config):
    """Run the flow until t_end, max_steps or convergence.

    Returns a FlowResult; unpacks as (final surface, trace). One record is
    taken at the start, every record_every steps and at the end.
    """
    model, grid, k, n = surface.model, surface.grid, config.k, surface.n
    if k > n:
        raise ValueError(f"k={k} exceeds n={n}")
    # reference path validates cone membership with a full error message
    _require_convex(_terms(surface.r, model, grid, k), model)

    kind, a, b, h, tlam, tslope, m, lam0 = _kernels.model_params(model)
    binom = _kernels.binomial_table(n)
    qconst = float(_quotient_constant(n, k))
    cot = np.ascontiguousarray(grid.cot)
    N = grid.N
    main, scratch, stages = np.zeros((7, N)), np.zeros((7, N)), np.zeros((4, N))
    fail_r = np.zeros(N)
    check_convex = model.kind is Kind.SPHERICAL_CAP

    trace = [diagnostics(surface, k, 0)]
    r = np.array(surface.r)
    t = float(surface.time)
    steps = 0
    converged = False
    reason = "max_steps"
    while True:
        chunk = min(config.record_every - steps % config.record_every, config.max_steps - steps)
        status, node, done, t, converged = _kernels.advance(
            r, t, chunk, config.t_end, config.cfl, config.stop_speed_tol, config.stop_osc_tol,
            config.stop_on_convergence, check_convex, kind, a, b, h, tlam, tslope, m, lam0,
            cot, grid.dtheta, n, k, qconst, binom, grid.periodic, main, scratch, stages, fail_r,
        )
        steps += done
        if status >= _kernels.DOMAIN_FAIL:
            _fail(status, node, steps, fail_r, model, grid, k)
        if status == _kernels.CONVERGED:
            reason = "converged"
            break
        if status == _kernels.REACHED_T_END:
            reason = "t_end"
            break
        if steps % config.record_every == 0 and done > 0:
            trace.append(diagnostics(surface.with_radii(r, t), k, steps))
        if steps >= config.max_steps:
            break

    final = surface.with_radii(r, t)
    if trace[-1].step != steps:
        trace.append(diagnostics(final, k, steps))
    for rec in trace:
        if not rec.is_finite():
            raise NonFiniteError(f"non-finite diagnostics at step {rec.step}", record=rec)
    return FlowResult(final, trace, converged, steps, reason)


def _partial_record(t, step_index, r):
    nan = math.nan
    finite = r[np.isfinite(r)]
    return DiagnosticsRecord(
        t, *([nan] * (len(TRACE_COLUMNS) - 1)), step=step_index,
        r_min=float(finite.min()) if finite.size else nan,
        r_max=float(finite.max()) if finite.size else nan,
    )
