"""Global functionals, integral identities and the geometric inequality audit.

All surface integrals use the graph area element d mu = v lambda^n d sigma;
volume integrals over Omega = {a <= s <= r(y)} reduce to integrals over S^n
of the radial primitives supplied by the warp module.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import MeanConvexityError, RangeError
from .geometry import curvature_field, horoconvexity_margin, is_hyperbolic
from .grid import sphere_area
from .warp import Kind


def _field(surface, cf):
    return curvature_field(surface) if cf is None else cf


def _dmu(surface, cf):
    return cf.v * cf.lam**surface.n


def area(surface, cf=None):
    cf = _field(surface, cf)
    return surface.grid.integrate(_dmu(surface, cf))


def weighted_volume(surface):
    """Integral of lambda' over the region between the inner end and the graph."""
    return surface.grid.integrate(surface.model.weighted_volume_primitive(surface.r))


def weighted_area(surface, cf=None):
    cf = _field(surface, cf)
    return surface.grid.integrate(cf.dlam * _dmu(surface, cf))


def mean_weighted(surface, cf=None):
    cf = _field(surface, cf)
    return surface.grid.integrate(cf.H * cf.dlam * _dmu(surface, cf))


def curvature_volume(surface):
    """2n times the integral of lambda' lambda'' / lambda over the enclosed region."""
    K = surface.model.curvature_weight_primitive(surface.r)
    return 2 * surface.n * surface.grid.integrate(K)


def Q_functional(surface, cf=None):
    return mean_weighted(surface, cf) - curvature_volume(surface)


def minkowski_residual(surface, cf=None):
    """Integral of (n lambda' - H u); zero on every closed hypersurface."""
    cf = _field(surface, cf)
    integrand = surface.n * cf.dlam - cf.H * cf.u
    return surface.grid.integrate(integrand * _dmu(surface, cf))


def _ricci_radial_coefficient(cf):
    return cf.d2lam / cf.lam + (1.0 - cf.dlam**2) / cf.lam**2


def sigma2_identity_residual(surface, cf=None):
    """LHS - RHS of the sigma_2 Minkowski-type identity.

    LHS = int (n-1) H lambda' - 2 sigma_2 u,
    RHS = -(n-1) int c lambda |grad r|^2 <d_r, nu>,
    with c = lambda''/lambda + (1 - lambda'^2)/lambda^2, |grad r|^2 = 1 - 1/v^2
    and <d_r, nu> = 1/v.
    """
    cf = _field(surface, cf)
    n = surface.n
    dmu = _dmu(surface, cf)
    lhs = surface.grid.integrate(((n - 1) * cf.H * cf.dlam - 2.0 * cf.sigma2 * cf.u) * dmu)
    grad_r2 = 1.0 - 1.0 / cf.v**2
    c = _ricci_radial_coefficient(cf)
    rhs = -(n - 1) * surface.grid.integrate(c * cf.lam * grad_r2 / cf.v * dmu)
    return lhs - rhs


def minkowski2_gap(surface, cf=None):
    """int 2 sigma_2 u - int (n-1) H lambda'; nonnegative when the radial coefficient is."""
    cf = _field(surface, cf)
    n = surface.n
    integrand = 2.0 * cf.sigma2 * cf.u - (n - 1) * cf.H * cf.dlam
    return surface.grid.integrate(integrand * _dmu(surface, cf))


def heintze_karcher_deficit(surface, cf=None):
    """int (n lambda' / H - u) d mu, defined for mean-convex surfaces."""
    cf = _field(surface, cf)
    if np.any(cf.H <= 0):
        node = int(np.flatnonzero(cf.H <= 0)[0])
        raise MeanConvexityError(f"H = {cf.H[node]:.3e} <= 0 at node {node}")
    integrand = surface.n * cf.dlam / cf.H - cf.u
    return surface.grid.integrate(integrand * _dmu(surface, cf))


# --- slices -----------------------------------------------------------------


def slice_values(model, s):
    """Analytic (area, weighted volume, Q) of the slice r = s."""
    s = np.asarray(s, dtype=float)
    n = model.n
    omega = sphere_area(n)
    lam, dlam = model.eval(s)[:2]
    A = omega * lam**n
    W = omega * model.weighted_volume_primitive(s)
    Q = n * omega * dlam**2 * lam ** (n - 1) - 2 * n * omega * model.curvature_weight_primitive(s)
    return A, W, Q


@dataclass(frozen=True, eq=False)
class SliceProfile:
    """Slice functionals on a radius ladder, with monotone inverses.

    xi1 = Q o A^-1 and xi0 = Q o W^-1.
    """

    model: object
    n: int
    s: np.ndarray
    A: np.ndarray
    W: np.ndarray
    Q: np.ndarray
    q_monotone: bool

    def _invert(self, values, target, column):
        if not values[0] <= target <= values[-1]:
            raise RangeError(
                f"{column} value {target!r} outside tabulated range "
                f"[{values[0]!r}, {values[-1]!r}]"
            )
        j = int(np.searchsorted(values, target))
        if j < len(values) and values[j] == target:
            return float(self.s[j])
        lo, hi = self.s[j - 1], self.s[j]
        index = {"A": 0, "W": 1}[column]
        f = lambda s: float(slice_values(self.model, s)[index]) - target
        return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=200)

    def radius_for_area(self, value):
        return self._invert(self.A, float(value), "A")

    def radius_for_weighted_volume(self, value):
        return self._invert(self.W, float(value), "W")

    def xi1(self, area_value):
        return float(slice_values(self.model, self.radius_for_area(area_value))[2])

    def xi0(self, wvol_value):
        return float(slice_values(self.model, self.radius_for_weighted_volume(wvol_value))[2])


def default_ladder(model, count=400, s_max=4.0):
    a, b = model.domain
    hi = min(b, s_max)
    margin = 1e-6 * (hi - a)
    return np.linspace(a + margin, hi - margin, count)


def build_slice_profile(model, samples=None):
    """Tabulate A, W, Q on a strictly increasing ladder of radii."""
    s = default_ladder(model) if samples is None else np.asarray(samples, dtype=float)
    if np.any(np.diff(s) <= 0):
        raise ValueError("slice ladder must be strictly increasing")
    A, W, Q = slice_values(model, s)
    if np.any(np.diff(A) <= 0) or np.any(np.diff(W) <= 0):
        raise RangeError("slice area or weighted volume not strictly increasing on the ladder")
    q_monotone = bool(np.all(np.diff(Q) >= -1e-12 * np.abs(Q[1:])))
    return SliceProfile(model, model.n, s, A, W, Q, q_monotone)


def xi1(profile, area_value):
    return profile.xi1(area_value)


def xi0(profile, wvol_value):
    return profile.xi0(wvol_value)


# --- inequality audit -------------------------------------------------------


@dataclass
class InequalityRecord:
    name: str
    lhs: float
    rhs: float
    gap: float
    slack: float
    applicable: bool
    hypothesis_notes: str = ""
    info_only: bool = False

    @property
    def holds(self):
        return self.gap >= -self.slack

    def as_dict(self):
        out = asdict(self)
        out["holds"] = self.holds
        return out


def default_slack(surface, lhs):
    return max(1e-9, 10.0 * surface.grid.dtheta**2 * abs(lhs))


def inequality_report(surface, profile, cf=None):
    """Evaluate every comparison inequality on one surface.

    Records carry raw gaps (lhs - rhs) and the discretisation slack separately.
    """
    cf = _field(surface, cf)
    if np.any(cf.H <= 0):
        node = int(np.flatnonzero(cf.H <= 0)[0])
        raise MeanConvexityError(f"surface is not mean-convex (H <= 0 at node {node})")
    model = surface.model
    n = surface.n
    omega = sphere_area(n)
    hyp = is_hyperbolic(model)
    ads_family = hyp or model.kind is Kind.ADS_SCHWARZSCHILD
    family_note = "" if ads_family else f"stated for hyperbolic/AdS-Schwarzschild only, ambient is {model.kind.value}"

    A = area(surface, cf)
    W = weighted_volume(surface)
    Q = Q_functional(surface, cf)
    HL = mean_weighted(surface, cf)
    WA = weighted_area(surface, cf)

    records = []

    def add(name, lhs, rhs, applicable, notes="", info_only=False):
        records.append(
            InequalityRecord(name, float(lhs), float(rhs), float(lhs - rhs),
                             default_slack(surface, lhs), bool(applicable), notes, info_only)
        )

    add("xi1-area", Q, profile.xi1(A), ads_family, family_note)
    add("xi0-weighted-volume", Q, profile.xi0(W), ads_family, family_note)

    lhs3 = HL - n * (n + 1) * W
    if hyp:
        rhs3 = n * omega ** (2 / (n + 1)) * ((n + 1) * W) ** ((n - 1) / (n + 1))
        add("hyperbolic-weighted-isoperimetric", lhs3, rhs3, True)
        margin = horoconvexity_margin(cf)
        V = (n + 1) * W
        rhs4 = math.sqrt(V**2 + omega ** (2 / (n + 1)) * V ** (2 * n / (n + 1)))
        horo = margin >= 0
        add("horo-convex-minkowski", WA, rhs4, horo,
            "" if horo else f"not horo-convex (min kappa - 1 = {margin:.3e})")
    if ads_family:
        boundary = omega * model.horizon_lambda**n
        expo = (n - 1) / n
        rhs5 = n * omega ** (1 / n) * (A**expo - boundary**expo)
        name = "BHW-2" if hyp else "BHW-1"
        add(name, lhs3, rhs5, True, "comparison only", info_only=True)
    return records
