"""Pointwise geometry of star-shaped, rotationally symmetric graphs r(theta).

For an axisymmetric function on S^n the covariant Hessian is diagonal in an
orthonormal frame, with entry phi'' along the meridian and cot(theta) phi' in
the n - 1 parallel directions. Inserting this into the graph formula for the
Weingarten map gives the two principal curvatures

    kappa_1 = (lambda' - phi'' / v^2) / (lambda v)       (meridian)
    kappa_2 = (lambda' - cot(theta) phi') / (lambda v)   (multiplicity n - 1)

with phi' = r' / lambda, v = sqrt(1 + phi'^2) and u = lambda / v.
See docs/math_notes.md for the derivation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import comb

import numpy as np

from .errors import ConeViolation, DomainError, SizeError
from .grid import Grid
from .warp import Kind, WarpModel

SLICE_SNAP = 1e-14


@dataclass(frozen=True, eq=False)
class GraphSurface:
    """Radial graph {(r(theta), theta)} over the cell-centred grid."""

    r: np.ndarray
    model: WarpModel
    grid: Grid
    time: float = 0.0

    def __post_init__(self):
        r = np.array(self.r, dtype=float)
        if r.shape != (self.grid.N,):
            raise SizeError(f"expected {self.grid.N} radii, got shape {r.shape}")
        if self.grid.n != self.model.n:
            raise ValueError(
                f"grid dimension {self.grid.n} does not match model dimension {self.model.n}"
            )
        if not np.all(np.isfinite(r)):
            raise DomainError("non-finite radius", node=int(np.flatnonzero(~np.isfinite(r))[0]))
        self.model.check_domain(r)
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @property
    def n(self):
        return self.model.n

    def with_radii(self, r, time=None):
        return GraphSurface(r, self.model, self.grid, self.time if time is None else time)

    @property
    def osc(self):
        return float(self.r.max() - self.r.min())

    @property
    def is_slice(self):
        r = self.r
        return float(np.max(np.abs(r - r[0]))) <= SLICE_SNAP


@dataclass(frozen=True, eq=False)
class CurvatureField:
    """Per-node kinematic and curvature data of a GraphSurface."""

    lam: np.ndarray
    dlam: np.ndarray
    d2lam: np.ndarray
    v: np.ndarray
    u: np.ndarray
    phi1: np.ndarray
    phi2: np.ndarray
    kappa1: np.ndarray
    kappa2: np.ndarray
    n: int
    sigma: np.ndarray = field(repr=False)  # shape (n + 1, N), sigma_0..sigma_n

    @property
    def H(self):
        return self.sigma[1]

    @property
    def sigma2(self):
        if self.n < 2:
            return np.zeros_like(self.kappa1)
        return self.sigma[2]

    @property
    def Hk(self):
        norm = np.array([comb(self.n, j) for j in range(self.n + 1)], dtype=float)
        return self.sigma / norm[:, None]

    @property
    def kappa_min(self):
        if self.n == 1:
            return self.kappa1.min()
        return min(self.kappa1.min(), self.kappa2.min())

    @property
    def A_norm(self):
        return np.sqrt(self.kappa1**2 + (self.n - 1) * self.kappa2**2)

    def F(self, k):
        return speed_function_axisymmetric(self.kappa1, self.kappa2, self.n, k)


def kinematics(surface):
    """(v, u, phi') of the graph; phi' = r'/lambda is the theta-slope of phi."""
    lam = surface.model.eval(surface.r)[0]
    return _kinematics(surface, lam)[:3]


def _kinematics(surface, lam):
    grid = surface.grid
    if surface.is_slice:
        zero = np.zeros_like(lam)
        return np.ones_like(lam), lam.copy(), zero, zero.copy(), zero.copy()
    dr = grid.d1(surface.r)
    phi1 = dr / lam
    v = np.sqrt(1.0 + phi1 * phi1)
    return v, lam / v, phi1, dr, grid.d2(surface.r)


def curvature_field(surface):
    r = surface.r
    n = surface.n
    lam, dlam, d2lam, _ = surface.model.eval(r)
    v, u, phi1, dr, ddr = _kinematics(surface, lam)
    phi2 = ddr / lam - dlam * dr * dr / (lam * lam)
    lv = lam * v
    kappa1 = (dlam - phi2 / (v * v)) / lv
    if n >= 2:
        kappa2 = (dlam - surface.grid.cot * phi1) / lv
    else:
        kappa2 = np.full_like(kappa1, np.nan)
    sigma = sigma_all_axisymmetric(kappa1, kappa2, n)
    return CurvatureField(lam, dlam, d2lam, v, u, phi1, phi2, kappa1, kappa2, n, sigma)


def principal_curvatures(surface):
    cf = curvature_field(surface)
    return cf.kappa1, cf.kappa2


def mean_curvature(cf):
    return cf.H


def sigma2_field(cf):
    return cf.sigma2


# --- symmetric functions of an explicit n-tuple -----------------------------


def _elementary(kappas):
    kappas = np.asarray(kappas, dtype=float)
    n = kappas.shape[-1]
    e = np.zeros(kappas.shape[:-1] + (n + 1,))
    e[..., 0] = 1.0
    for i in range(n):
        ki = kappas[..., i]
        for j in range(i + 1, 0, -1):
            e[..., j] += ki * e[..., j - 1]
    return e


def sigma_k(kappas, k):
    """k-th elementary symmetric polynomial of the last axis of kappas."""
    n = np.shape(kappas)[-1]
    if not 0 <= k <= n:
        raise IndexError(f"k={k} outside 0..{n}")
    return _elementary(kappas)[..., k]


def H_k(kappas, k):
    n = np.shape(kappas)[-1]
    return sigma_k(kappas, k) / comb(n, k)


def cone_check(kappas, k):
    """True iff sigma_j(kappas) > 0 for j = 1..k (membership of Gamma_k)."""
    e = _elementary(kappas)
    return np.all(e[..., 1:k + 1] > 0, axis=-1)


def speed_function_F(kappas, k):
    """F = n H_k / H_{k-1}; raises ConeViolation outside Gamma_k."""
    kappas = np.asarray(kappas, dtype=float)
    n = kappas.shape[-1]
    if not 1 <= k <= n:
        raise IndexError(f"k={k} outside 1..{n}")
    if not np.all(cone_check(kappas, k)):
        raise ConeViolation(f"curvatures {kappas} outside Gamma_{k}", kappa=kappas)
    e = _elementary(kappas)
    return n * (e[..., k] / comb(n, k)) / (e[..., k - 1] / comb(n, k - 1))


# --- axisymmetric versions (kappa_2 has multiplicity n - 1) -----------------


def _binom(a, b):
    return comb(a, b) if 0 <= b <= a else 0


def sigma_all_axisymmetric(kappa1, kappa2, n):
    """sigma_0..sigma_n for the tuple (kappa1, kappa2 x (n-1)), stacked on axis 0."""
    kappa1 = np.asarray(kappa1, dtype=float)
    out = np.empty((n + 1,) + kappa1.shape)
    out[0] = 1.0
    if n == 1:
        out[1] = kappa1
        return out
    kappa2 = np.asarray(kappa2, dtype=float)
    power = np.ones_like(kappa2)  # kappa2^(j-1)
    for j in range(1, n + 1):
        out[j] = (_binom(n - 1, j) * kappa2 + _binom(n - 1, j - 1) * kappa1) * power
        power = power * kappa2
    return out


def cone_check_axisymmetric(kappa1, kappa2, n, k):
    sig = sigma_all_axisymmetric(kappa1, kappa2, n)
    return np.all(sig[1:k + 1] > 0, axis=0)


def _quotient_constant(n, k):
    return n * comb(n, k - 1) / comb(n, k)


def speed_function_axisymmetric(kappa1, kappa2, n, k, sigma=None):
    """n H_k / H_{k-1} per node; NaN where the node is outside Gamma_k."""
    if not 1 <= k <= n:
        raise IndexError(f"k={k} outside 1..{n}")
    if sigma is None:
        sigma = sigma_all_axisymmetric(kappa1, kappa2, n)
    inside = np.all(sigma[1:k + 1] > 0, axis=0)
    with np.errstate(divide="ignore", invalid="ignore"):
        F = _quotient_constant(n, k) * sigma[k] / sigma[k - 1]
    return np.where(inside, F, np.nan)


def dF_dkappa1(kappa1, kappa2, n, k, sigma=None):
    """Partial derivative of F = n H_k / H_{k-1} in the meridian curvature."""
    if sigma is None:
        sigma = sigma_all_axisymmetric(kappa1, kappa2, n)
    if n == 1:
        return np.ones_like(np.asarray(kappa1, dtype=float))
    # sigma_j of the remaining n - 1 equal entries kappa2
    rest = lambda j: _binom(n - 1, j) * kappa2**j if j >= 0 else 0.0
    num = rest(k - 1) * sigma[k - 1] - sigma[k] * rest(k - 2)
    return _quotient_constant(n, k) * num / sigma[k - 1] ** 2


def require_cone(cf, k):
    """Raise ConeViolation naming the first node outside Gamma_k."""
    inside = np.all(cf.sigma[1:k + 1] > 0, axis=0)
    if not np.all(inside):
        node = int(np.flatnonzero(~inside)[0])
        kappa = (float(cf.kappa1[node]), float(cf.kappa2[node]))
        raise ConeViolation(
            f"node {node}: curvatures {kappa} outside Gamma_{k}", node=node, kappa=kappa
        )


def horoconvexity_margin(cf):
    """min(kappa) - 1 over all nodes and directions; >= 0 means horo-convex."""
    return float(cf.kappa_min - 1.0)


def is_hyperbolic(model):
    return model.kind is Kind.HYPERBOLIC or (
        model.kind is Kind.ADS_SCHWARZSCHILD and model.m == 0
    )
