"""Cell-centred polar-angle grid for rotationally symmetric functions on S^n.

Nodes sit at theta_i = (i + 1/2) * dtheta, so the poles are never nodes.
Ghost values are filled by reflection across theta = 0 and theta = pi:
even reflection for scalars (r, phi, curvatures) and odd reflection for
theta-derivatives of scalars. For n = 1 the base is the whole circle and the
grid is periodic on [0, 2 pi).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SizeError


def sphere_area(n):
    """|S^n| = 2 pi^((n+1)/2) / Gamma((n+1)/2)."""
    return 2.0 * math.pi ** ((n + 1) / 2) / math.gamma((n + 1) / 2)


@dataclass(frozen=True, eq=False)
class Grid:
    N: int
    n: int
    theta: np.ndarray = field(init=False, repr=False)
    dtheta: float = field(init=False)
    quad_weights: np.ndarray = field(init=False, repr=False)
    cot: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.N < 16:
            raise SizeError(f"grid needs at least 16 cells, got {self.N}")
        if self.n < 1:
            raise ValueError("sphere dimension n must be >= 1")
        if self.n == 1:
            dtheta = 2.0 * math.pi / self.N
        else:
            dtheta = math.pi / self.N
        theta = (np.arange(self.N) + 0.5) * dtheta
        if self.n == 1:
            weights = np.full(self.N, dtheta)
            cot = np.zeros(self.N)
        else:
            weights = sphere_area(self.n - 1) * np.sin(theta) ** (self.n - 1) * dtheta
            cot = np.cos(theta) / np.sin(theta)
        for name, value in (("theta", theta), ("dtheta", dtheta),
                            ("quad_weights", weights), ("cot", cot)):
            if isinstance(value, np.ndarray):
                value.setflags(write=False)
            object.__setattr__(self, name, value)

    @property
    def periodic(self):
        return self.n == 1

    def _check(self, f):
        f = np.asarray(f, dtype=float)
        if f.shape != (self.N,):
            raise SizeError(f"expected {self.N} node values, got shape {f.shape}")
        return f

    def _neighbours(self, f, parity):
        if self.periodic:
            return np.roll(f, 1), np.roll(f, -1)
        left = np.empty_like(f)
        right = np.empty_like(f)
        left[1:] = f[:-1]
        right[:-1] = f[1:]
        left[0] = parity * f[0]
        right[-1] = parity * f[-1]
        return left, right

    def d1(self, f, parity=1):
        """Centred first derivative in theta.

        parity=+1 treats f as even about both poles (scalars), parity=-1 as
        odd (e.g. a theta-derivative of a scalar).
        """
        f = self._check(f)
        left, right = self._neighbours(f, parity)
        return (right - left) / (2.0 * self.dtheta)

    def d2(self, f, parity=1):
        f = self._check(f)
        left, right = self._neighbours(f, parity)
        return (right - 2.0 * f + left) / self.dtheta**2

    def integrate(self, f):
        """Midpoint rule for the integral of an axisymmetric function over S^n."""
        f = self._check(f)
        return float(np.dot(self.quad_weights, f))

    @property
    def total_measure(self):
        return float(self.quad_weights.sum())


def d1(grid, f, parity=1):
    return grid.d1(f, parity)


def d2(grid, f, parity=1):
    return grid.d2(f, parity)


def integrate(grid, f):
    return grid.integrate(f)
