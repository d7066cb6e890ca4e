"""Compiled time loop for the scalar graph flow.

Node-by-node mirror of the numpy reference path in flow._terms and
warp.WarpModel.eval; used inside the time loop, where array-call overhead
would otherwise dominate. Tests compare the two paths.
"""

from __future__ import annotations

import math
from math import comb

import numpy as np
from numba import njit

from .warp import Kind

KIND_SPHERE, KIND_HYPERBOLIC, KIND_EUCLIDEAN, KIND_TABLE = 0, 1, 2, 3

# status codes returned by advance()
CHUNK_DONE, CONVERGED, REACHED_T_END = 0, 1, 2
DOMAIN_FAIL, CONE_FAIL, CONVEXITY_FAIL, NONFINITE_FAIL = 10, 11, 12, 13


def binomial_table(n):
    """C(n-1, j) stored at index j + 1 for j = -1..n, zero outside range."""
    out = np.zeros(n + 2)
    for j in range(0, n):
        out[j + 1] = comb(n - 1, j)
    return out


def model_params(model):
    """Flatten a WarpModel into scalars and arrays the kernel understands."""
    if model.kind is Kind.SPHERICAL_CAP:
        code = KIND_SPHERE
    elif model.kind is Kind.EUCLIDEAN:
        code = KIND_EUCLIDEAN
    elif model.kind is Kind.HYPERBOLIC or model.table is None:
        code = KIND_HYPERBOLIC
    else:
        code = KIND_TABLE
    if code == KIND_TABLE:
        tab = model.table
        h = float(tab.r[1] - tab.r[0])
        lam = np.ascontiguousarray(tab.lam)
        slope = np.ascontiguousarray(tab.slope)
    else:
        h = 1.0
        lam = np.zeros(2)
        slope = np.zeros(2)
    return (code, float(model.a), float(model.b), h, lam, slope,
            float(model.m), float(model.horizon_lambda))


@njit(cache=True)
def warp_eval(kind, x, h, tlam, tslope, n, m, lam0):
    """(lambda, lambda') at one radius."""
    if kind == KIND_SPHERE:
        return math.sin(x), math.cos(x)
    if kind == KIND_HYPERBOLIC:
        # one expm1 instead of sinh and cosh; accurate for small x as well
        em1 = math.expm1(x)
        sh = 0.5 * (em1 + em1 / (1.0 + em1))
        return sh, sh + 1.0 / (1.0 + em1)
    if kind == KIND_EUCLIDEAN:
        return x, 1.0
    # cubic Hermite interpolation on the uniform table
    count = tlam.shape[0]
    j = int(x / h)
    if j > count - 2:
        j = count - 2
    if j < 0:
        j = 0
    s = (x - j * h) / h
    s2 = s * s
    s3 = s2 * s
    h00 = 2.0 * s3 - 3.0 * s2 + 1.0
    h10 = s3 - 2.0 * s2 + s
    h01 = -2.0 * s3 + 3.0 * s2
    h11 = s3 - s2
    lam = h00 * tlam[j] + h10 * h * tslope[j] + h01 * tlam[j + 1] + h11 * h * tslope[j + 1]
    if lam < lam0:
        lam = lam0
    xx = lam - lam0
    c = m * lam0 ** (1 - n)
    if xx > 0.0:
        ratio = math.expm1((1 - n) * math.log1p(xx / lam0)) / xx
    else:
        ratio = (1 - n) / lam0
    hreg = 2.0 * lam0 + xx - c * ratio
    if hreg < 0.0:
        hreg = 0.0
    return lam, math.sqrt(xx * hreg)


@njit(cache=True)
def flow_terms(r, kind, a, b, h, tlam, tslope, m, lam0, cot, dtheta, n, k, qconst,
               binom, periodic, rhs, speed, v_out, F_out, k1_out, k2_out, D_out):
    """Fill the output arrays for radii r.

    Returns (status, node) with status 0 on success, DOMAIN_FAIL or CONE_FAIL.
    """
    N = r.shape[0]
    r0 = r[0]
    is_slice = True
    for i in range(N):
        x = r[i]
        if not (x > a and x < b):
            return DOMAIN_FAIL, i
        if abs(x - r0) > 1e-14:
            is_slice = False
    inv2h = 0.5 / dtheta
    invh2 = 1.0 / (dtheta * dtheta)
    for i in range(N):
        li, dli = warp_eval(kind, r[i], h, tlam, tslope, n, m, lam0)
        if is_slice:
            dr = 0.0
            ddr = 0.0
        else:
            if periodic:
                left = r[i - 1] if i > 0 else r[N - 1]
                right = r[i + 1] if i < N - 1 else r[0]
            else:
                left = r[i - 1] if i > 0 else r[0]
                right = r[i + 1] if i < N - 1 else r[N - 1]
            dr = (right - left) * inv2h
            ddr = (right - 2.0 * r[i] + left) * invh2
        phi1 = dr / li
        v2 = 1.0 + phi1 * phi1
        v = math.sqrt(v2)
        phi2 = ddr / li - dli * dr * dr / (li * li)
        lv = li * v
        k1 = (dli - phi2 / v2) / lv
        if n == 1:
            k2 = np.nan
            if not k1 > 0.0:
                return CONE_FAIL, i
            sk = k1
            skm1 = 1.0
            Fk1 = 1.0
        else:
            k2 = (dli - cot[i] * phi1) / lv
            # sigma_j = (C(n-1,j) k2 + C(n-1,j-1) k1) k2^(j-1) for j = 1..k
            power = 1.0
            skm1 = 1.0
            sk = 1.0
            for j in range(1, k + 1):
                sj = (binom[j + 1] * k2 + binom[j] * k1) * power
                if not sj > 0.0:
                    return CONE_FAIL, i
                skm1 = sk
                sk = sj
                power *= k2
            # dF/dk1 with rho_j = C(n-1,j) k2^j
            rho_km1 = binom[k] * k2 ** (k - 1)
            rho_km2 = binom[k - 1] * k2 ** (k - 2) if k >= 2 else 0.0
            Fk1 = qconst * (rho_km1 * skm1 - sk * rho_km2) / (skm1 * skm1)
        F = qconst * sk / skm1
        if is_slice:
            s = 0.0
        else:
            s = n / F - li / (v * dli)
        speed[i] = s
        rhs[i] = s * v
        v_out[i] = v
        F_out[i] = F
        k1_out[i] = k1
        k2_out[i] = k2
        D_out[i] = n * Fk1 / (li * li * v2 * F * F)
    return 0, -1


@njit(cache=True)
def advance(r, t, nmax, t_end, cfl, speed_tol, osc_tol, stop_on_convergence,
            check_convex, kind, a, b, h, tlam, tslope, m, lam0, cot, dtheta, n, k,
            qconst, binom, periodic, main, scratch, stages, fail_r):
    """Advance r in place by at most nmax RK4 steps.

    main/scratch are (7, N) work arrays holding rhs, speed, v, F, kappa1,
    kappa2, D. Returns (status, node, steps, t, converged). On failure the
    offending radii are copied into fail_r.
    """
    N = r.shape[0]
    status, node = flow_terms(r, kind, a, b, h, tlam, tslope, m, lam0, cot, dtheta, n, k,
                              qconst, binom, periodic, main[0], main[1], main[2],
                              main[3], main[4], main[5], main[6])
    if status != 0:
        fail_r[:] = r
        return status, node, 0, t, False
    steps = 0
    tmp = np.empty(N)
    while True:
        spd = 0.0
        rmin = r[0]
        rmax = r[0]
        dmax = 0.0
        for i in range(N):
            s = abs(main[1, i])
            if s > spd:
                spd = s
            if r[i] < rmin:
                rmin = r[i]
            if r[i] > rmax:
                rmax = r[i]
            if main[6, i] > dmax:
                dmax = main[6, i]
        converged = spd < speed_tol and (rmax - rmin) < osc_tol
        if converged and stop_on_convergence:
            return CONVERGED, -1, steps, t, True
        if t >= t_end * (1.0 - 1e-15):
            return REACHED_T_END, -1, steps, t, converged
        if steps >= nmax:
            return CHUNK_DONE, -1, steps, t, converged
        dt = cfl * dtheta * dtheta / dmax
        if dt > t_end - t:
            dt = t_end - t
        # classical RK4; stage slopes in stages[0..3]
        stages[0, :] = main[0]
        for stage in range(1, 4):
            c = 0.5 * dt if stage < 3 else dt
            for i in range(N):
                tmp[i] = r[i] + c * stages[stage - 1, i]
            status, node = flow_terms(tmp, kind, a, b, h, tlam, tslope, m, lam0, cot, dtheta,
                                      n, k, qconst, binom, periodic, stages[stage],
                                      scratch[1], scratch[2], scratch[3], scratch[4],
                                      scratch[5], scratch[6])
            if status != 0:
                fail_r[:] = tmp
                return status, node, steps, t, False
        w = dt / 6.0
        for i in range(N):
            x = r[i] + w * (stages[0, i] + 2.0 * stages[1, i] + 2.0 * stages[2, i] + stages[3, i])
            if not math.isfinite(x):
                fail_r[:] = r
                fail_r[i] = x
                return NONFINITE_FAIL, i, steps, t, False
            tmp[i] = x
        status, node = flow_terms(tmp, kind, a, b, h, tlam, tslope, m, lam0, cot, dtheta, n, k,
                                  qconst, binom, periodic, main[0], main[1], main[2],
                                  main[3], main[4], main[5], main[6])
        if status != 0:
            fail_r[:] = tmp
            return status, node, steps, t, False
        r[:] = tmp
        t += dt
        steps += 1
        if check_convex:
            for i in range(N):
                kmin = main[4, i]
                if n >= 2 and main[5, i] < kmin:
                    kmin = main[5, i]
                if not kmin > 0.0:
                    fail_r[:] = r
                    return CONVEXITY_FAIL, i, steps, t, False
        for i in range(N):
            if not math.isfinite(main[1, i]):
                fail_r[:] = r
                return NONFINITE_FAIL, i, steps, t, False
