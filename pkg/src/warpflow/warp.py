"""Warping factors for metrics dr^2 + lambda(r)^2 * sigma on (a, b) x S^n.

Four families are supported. Three have closed forms (sin, sinh, identity);
the anti-de-Sitter Schwarzschild factor is defined by the first order ODE

    lambda'^2 = 1 + lambda^2 - m * lambda^(1 - n)

and is tabulated once at construction. The radial coordinate of that model
is shifted so that the horizon (where lambda' = 0) sits at r = 0.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicHermiteSpline
from scipy.optimize import brentq

from .errors import ConvergenceError, DomainError

TABLE_TOL = 1e-9


class Kind(str, enum.Enum):
    SPHERICAL_CAP = "SphericalCap"
    HYPERBOLIC = "Hyperbolic"
    EUCLIDEAN = "Euclidean"
    ADS_SCHWARZSCHILD = "AdSSchwarzschild"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        for kind in cls:
            if kind.value.lower() == str(value).strip().lower():
                return kind
        raise ValueError(f"unknown ambient kind {value!r}")


@dataclass(frozen=True, eq=False)
class _RadialTable:
    """Uniform samples of lambda(r) with exact slopes lambda'(r)."""

    r: np.ndarray
    lam: np.ndarray
    slope: np.ndarray
    spline: CubicHermiteSpline
    max_midpoint_error: float


@dataclass(frozen=True, eq=False)
class WarpModel:
    """Immutable description of one warped product ambient space.

    Attributes
    ----------
    kind : Kind
        Which family lambda belongs to.
    n : int
        Hypersurface dimension; the ambient space has dimension n + 1.
    m : float
        Mass parameter (AdS-Schwarzschild only, 0 otherwise).
    domain : (float, float)
        Open interval (a, b) of admissible radii.
    horizon_lambda : float
        lambda(a), i.e. lambda_0 for AdS-Schwarzschild and 0 for the others.
    """

    kind: Kind
    n: int
    m: float = 0.0
    domain: tuple = (0.0, math.inf)
    horizon_lambda: float = 0.0
    table: Optional[_RadialTable] = field(default=None, repr=False)

    @property
    def a(self):
        return self.domain[0]

    @property
    def b(self):
        return self.domain[1]

    @property
    def lambda_second_nonnegative(self):
        """True for the families with lambda'' >= 0 on the whole domain."""
        return self.kind in (Kind.HYPERBOLIC, Kind.EUCLIDEAN, Kind.ADS_SCHWARZSCHILD)

    def check_domain(self, r):
        r = np.asarray(r, dtype=float)
        a, b = self.domain
        bad = ~((r > a) & (r < b))
        if np.any(bad):
            flat = np.atleast_1d(r)
            node = int(np.flatnonzero(np.atleast_1d(bad))[0])
            raise DomainError(
                f"radius {flat[node]!r} at node {node} outside ({a}, {b}) "
                f"for {self.kind.value}",
                node=node,
                value=float(flat[node]),
            )
        return r

    def eval(self, r, check=True):
        """Return (lambda, lambda', lambda'', lambda''') at radius r."""
        if check:
            r = self.check_domain(r)
        else:
            r = np.asarray(r, dtype=float)
        kind = self.kind
        if kind is Kind.SPHERICAL_CAP:
            s, c = np.sin(r), np.cos(r)
            return s, c, -s, -c
        if kind is Kind.EUCLIDEAN:
            one = np.ones_like(r)
            zero = np.zeros_like(r)
            return r.copy(), one, zero, zero
        if kind is Kind.HYPERBOLIC or self.table is None:
            s, c = np.sinh(r), np.cosh(r)
            return s, c, s.copy(), c.copy()
        return self._eval_ads(r)

    def _eval_ads(self, r):
        n, m, lam0 = self.n, self.m, self.horizon_lambda
        lam = np.maximum(self.table.spline(r), lam0)
        x = lam - lam0
        dlam = np.sqrt(x * _h_regular(x, n, m, lam0))
        d2lam = lam + 0.5 * (n - 1) * m * lam ** (-n)
        d3lam = dlam * (1.0 - 0.5 * n * (n - 1) * m * lam ** (-n - 1))
        return lam, dlam, d2lam, d3lam

    def lam(self, r):
        return self.eval(r)[0]

    def weighted_volume_primitive(self, s):
        """Integral of lambda' * lambda^n from a to s.

        lambda' lambda^n is the derivative of lambda^(n+1) / (n+1), so the
        primitive is closed form for every family.
        """
        lam = self.eval(s)[0]
        n1 = self.n + 1
        return (lam**n1 - self.horizon_lambda**n1) / n1

    def curvature_weight_primitive(self, s):
        """Integral of lambda' * lambda'' * lambda^(n-1) from a to s."""
        s = self.check_domain(s)
        kind = self.kind
        if kind is Kind.EUCLIDEAN:
            return np.zeros_like(s)
        base = self.weighted_volume_primitive(s)
        if kind is Kind.SPHERICAL_CAP:
            return -base
        if kind is Kind.HYPERBOLIC or self.table is None:
            return base
        # lambda'' = lambda + (n-1) m lambda^-n / 2 adds a logarithmic term
        lam = self.eval(s)[0]
        return base + 0.5 * (self.n - 1) * self.m * np.log(lam / self.horizon_lambda)


def eval(model, r):
    return model.eval(r)


def weighted_volume_primitive(model, s):
    return model.weighted_volume_primitive(s)


def curvature_weight_primitive(model, s):
    return model.curvature_weight_primitive(s)


def spherical_cap(n):
    return WarpModel(Kind.SPHERICAL_CAP, int(n), 0.0, (0.0, math.pi / 2))


def hyperbolic(n):
    return WarpModel(Kind.HYPERBOLIC, int(n), 0.0, (0.0, math.inf))


def euclidean(n):
    return WarpModel(Kind.EUCLIDEAN, int(n), 0.0, (0.0, math.inf))


def make_model(kind, n, m=0.0, r_max=6.0):
    kind = Kind.parse(kind)
    if n < 1:
        raise ValueError("dimension n must be >= 1")
    if kind is Kind.SPHERICAL_CAP:
        return spherical_cap(n)
    if kind is Kind.HYPERBOLIC:
        return hyperbolic(n)
    if kind is Kind.EUCLIDEAN:
        return euclidean(n)
    return build_ads_schwarzschild(n, m, r_max)


def horizon_lambda(n, m):
    """Positive root of 1 + l^2 - m l^(1-n) = 0."""
    if n < 2 or m <= 0:
        raise ValueError("horizon requires n >= 2 and m > 0")
    # l^(n-1) (1 + l^2) is increasing, so the root is unique
    g = lambda lam: lam ** (n - 1) * (1.0 + lam * lam) - m
    hi = 1.0
    while g(hi) < 0:
        hi *= 2.0
    try:
        root = brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise ConvergenceError(f"horizon root search failed: {exc}") from exc
    return root


def _h_regular(x, n, m, lam0):
    """(1 + lam^2 - m lam^(1-n)) / x at lam = lam0 + x, without cancellation."""
    x = np.asarray(x, dtype=float)
    c = m * lam0 ** (1 - n)
    safe = np.where(x > 0, x, 1.0)
    ratio = np.expm1((1 - n) * np.log1p(safe / lam0)) / safe
    ratio = np.where(x > 0, ratio, (1 - n) / lam0)
    return np.maximum(2.0 * lam0 + x - c * ratio, 0.0)


def build_ads_schwarzschild(n, m, r_max=6.0, spacing=1e-3):
    """Tabulate the AdS-Schwarzschild warping factor on (0, r_max).

    With lambda = lambda_0 + t^2 the defining ODE becomes
    dt/dr = sqrt(h(t^2)) / 2, h(x) = P(lambda_0 + x) / x, which is regular at
    the horizon, so the integration starts exactly at t(0) = 0. The table
    stores lambda itself (smooth even when m is tiny, unlike t).
    m = 0 returns the hyperbolic factor under the AdS label.
    """
    n = int(n)
    if m == 0:
        return WarpModel(Kind.ADS_SCHWARZSCHILD, n, 0.0, (0.0, math.inf))
    if n < 2 or m < 0 or r_max <= 0:
        raise ValueError("AdS-Schwarzschild needs n >= 2, m > 0, r_max > 0")
    lam0 = horizon_lambda(n, m)

    def rhs(_r, y):
        return 0.5 * np.sqrt(_h_regular(y[0] * y[0], n, m, lam0))

    # cover slightly beyond r_max so the spline is valid at the right end
    r_end = r_max * (1.0 + 1e-6) + spacing
    sol = solve_ivp(
        rhs, (0.0, r_end), [0.0], method="DOP853",
        rtol=1e-13, atol=1e-15, dense_output=True,
    )
    if not sol.success:
        raise ConvergenceError(f"AdS-Schwarzschild integration failed: {sol.message}")

    h = spacing
    for _ in range(8):
        count = int(math.ceil(r_end / h)) + 1
        r = np.linspace(0.0, r_end, count)
        t = sol.sol(r)[0]
        t[0] = 0.0
        x = t * t
        lam = lam0 + x
        slope = np.sqrt(x * _h_regular(x, n, m, lam0))
        spline = CubicHermiteSpline(r, lam, slope)
        mid = 0.5 * (r[1:] + r[:-1])
        ref = sol.sol(mid)[0]
        lam_ref = lam0 + ref * ref
        lam_fit = spline(mid)
        # first cell may hold a near-horizon boundary layer when m is tiny
        err = np.abs(lam_fit - lam_ref)[1:] / np.maximum(1.0, lam_ref[1:])
        worst = float(err.max()) if err.size else 0.0
        if worst <= TABLE_TOL:
            table = _RadialTable(r, lam, slope, spline, worst)
            return WarpModel(Kind.ADS_SCHWARZSCHILD, n, float(m), (0.0, float(r_max)), lam0, table)
        h *= 0.5
    raise ConvergenceError(
        f"table interpolation error {worst:.3e} exceeds {TABLE_TOL:.0e} after refinement"
    )
