"""Initial hypersurfaces: slices, perturbed slices and off-centre geodesic spheres."""

from __future__ import annotations

import math

import numpy as np
from scipy.optimize import brentq

from .errors import DomainError, GeometryError
from .geometry import GraphSurface
from .warp import Kind

ROOT_TOL = 1e-12


def slice(model, grid, s):
    """The coordinate slice r = s."""
    if not model.a < s < model.b:
        raise DomainError(f"slice radius {s} outside ({model.a}, {model.b})", value=s)
    return GraphSurface(np.full(grid.N, float(s)), model, grid)


def perturbed_slice(model, grid, s, amplitude, mode):
    """r(theta) = s + amplitude * cos(mode * theta)."""
    mode = int(mode)
    if mode < 1:
        raise ValueError("mode must be a positive integer")
    if amplitude == 0:
        return slice(model, grid, s)
    r = s + amplitude * np.cos(mode * grid.theta)
    if not (model.a < s - abs(amplitude) and s + abs(amplitude) < model.b):
        bad = np.flatnonzero(~((r > model.a) & (r < model.b)))
        node = int(bad[0]) if bad.size else None
        where = f" (radius {r[node]!r} at node {node})" if node is not None else ""
        raise DomainError(
            f"band [{s - abs(amplitude)}, {s + abs(amplitude)}] leaves "
            f"({model.a}, {model.b}){where}",
            node=node, value=float(r[node]) if node is not None else s,
        )
    return GraphSurface(r, model, grid)


def offcenter_sphere(model, grid, rho, d):
    """Geodesic sphere of radius rho whose centre lies at distance d along theta = 0.

    The radial function solves the law of cosines per node,
        cosh(rho) = cosh r cosh d - sinh r sinh d cos(theta)   (hyperbolic)
        cos(rho)  = cos r cos d + sin r sin d cos(theta)       (sphere)
    with the bracket [rho - d, rho + d] from the triangle inequality.
    """
    if d < 0 or rho <= 0:
        raise GeometryError("need rho > 0 and d >= 0")
    hyperbolic = model.kind is Kind.HYPERBOLIC or (
        model.kind is Kind.ADS_SCHWARZSCHILD and model.m == 0
    )
    if not hyperbolic and model.kind is not Kind.SPHERICAL_CAP:
        raise GeometryError("off-centre spheres are only defined for hyperbolic or spherical ambients")
    if d == 0:
        return slice(model, grid, rho)
    if d >= rho:
        raise GeometryError(f"origin is not inside the sphere (d={d} >= rho={rho})")
    if model.kind is Kind.SPHERICAL_CAP and rho + d >= math.pi / 2:
        raise GeometryError(f"sphere leaves the hemisphere (rho + d = {rho + d})")

    cos_t = np.cos(grid.theta)
    if hyperbolic:
        target = math.cosh(rho)
        ch, sh = math.cosh(d), math.sinh(d)
        g = lambda r, c: math.cosh(r) * ch - math.sinh(r) * sh * c - target
    else:
        target = math.cos(rho)
        cd, sd = math.cos(d), math.sin(d)
        g = lambda r, c: math.cos(r) * cd + math.sin(r) * sd * c - target
    lo, hi = rho - d, rho + d
    r = np.empty(grid.N)
    for i, c in enumerate(cos_t):
        try:
            r[i] = brentq(g, lo, hi, args=(float(c),), xtol=ROOT_TOL, rtol=4 * np.finfo(float).eps)
        except ValueError as exc:
            raise GeometryError(f"no admissible root at node {i}: {exc}") from exc
    return GraphSurface(r, model, grid)
