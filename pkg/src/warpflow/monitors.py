"""Verdicts on flow traces: monotonicity, barriers, convergence, refinement order."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from . import quantities as qty

DIRECTIONS = ("nondecreasing", "nonincreasing")


@dataclass(frozen=True)
class Verdict:
    key: str
    direction: str
    passed: bool
    worst: float  # largest increment against the direction (0 if none)
    index: int  # record index where the worst violation ends, -1 if none
    slack: float

    def as_dict(self):
        return asdict(self)


def _series(trace, key):
    if len(trace) and hasattr(trace[0], key):
        return np.array([getattr(rec, key) for rec in trace], dtype=float)
    return np.asarray(trace, dtype=float)


def audit_monotone(trace, key, direction, slack):
    """Check consecutive increments of trace[key] against a direction.

    ``trace`` is a list of DiagnosticsRecord or a plain sequence of numbers.
    """
    if direction not in DIRECTIONS:
        raise ValueError(f"direction must be one of {DIRECTIONS}, got {direction!r}")
    values = _series(trace, key)
    if values.size < 2:
        return Verdict(key, direction, True, 0.0, -1, float(slack))
    inc = np.diff(values)
    against = -inc if direction == "nondecreasing" else inc
    j = int(np.argmax(against))
    worst = float(against[j])
    if worst <= 0:
        return Verdict(key, direction, True, 0.0, -1, float(slack))
    return Verdict(key, direction, worst <= slack, worst, j + 1, float(slack))


def monotone_slack(trace, key, rel=1e-6):
    """Default slack rel * max |value| over the series."""
    values = _series(trace, key)
    return rel * float(np.max(np.abs(values))) if values.size else rel


def audit_barriers(trace, slack=1e-10):
    """min r nondecreasing and max r nonincreasing along the trace."""
    return [
        audit_monotone(trace, "r_min", "nondecreasing", slack),
        audit_monotone(trace, "r_max", "nonincreasing", slack),
    ]


@dataclass(frozen=True)
class ConvergenceCertificate:
    s_star: float
    osc: float
    area_residual: float
    weighted_volume_residual: float
    Q_residual: float
    osc_tol: float
    functional_tol: float

    @property
    def certified(self):
        res = max(self.area_residual, self.weighted_volume_residual, self.Q_residual)
        return bool(self.osc < self.osc_tol and res < self.functional_tol)

    def as_dict(self):
        out = asdict(self)
        out["certified"] = self.certified
        return out


def certify_convergence(trace, surface_final, profile=None, osc_tol=1e-6, functional_tol=1e-4):
    """Compare the final surface with the slice through its mean radius.

    Residuals are relative: |functional(final) - slice value| / |slice value|.
    """
    s_star = float(np.mean(surface_final.r))
    model = profile.model if profile is not None else surface_final.model
    A, W, Q = (float(x) for x in qty.slice_values(model, s_star))
    rel = lambda got, ref: abs(got - ref) / max(abs(ref), 1e-300)
    return ConvergenceCertificate(
        s_star=s_star,
        osc=surface_final.osc,
        area_residual=rel(qty.area(surface_final), A),
        weighted_volume_residual=rel(qty.weighted_volume(surface_final), W),
        Q_residual=rel(qty.Q_functional(surface_final), Q),
        osc_tol=osc_tol,
        functional_tol=functional_tol,
    )


def refinement_order(v_n, v_2n, v_4n):
    """Observed order log2(|v_N - v_2N| / |v_2N - v_4N|)."""
    num = abs(v_n - v_2n)
    den = abs(v_2n - v_4n)
    if den == 0:
        return math.inf if num > 0 else math.nan
    if num == 0:
        return -math.inf
    return math.log2(num / den)


def monitor_bounds(trace):
    """Sup/inf of the a-priori monitors over a trace, relative to t = 0 (logged only)."""
    first = trace[0]
    out = {}
    for key in ("F_max", "grad_max", "A_norm_max"):
        sup = max(getattr(rec, key) for rec in trace)
        init = getattr(first, key)
        out[key] = {"initial": init, "sup": sup, "ratio": sup / init if init else math.inf}
    out["F_min"] = {"initial": first.F_min, "inf": min(rec.F_min for rec in trace)}
    out["kappa_min"] = {"initial": first.kappa_min, "inf": min(rec.kappa_min for rec in trace)}
    return out
