"""Jitted numerical kernels: polynomial/rational evaluation, adaptive Gauss-Kronrod
quadrature, monotone bisection, slow-divergence-integral evaluation/inversion and the
embedded 5(4) Runge-Kutta orbit integrator with section-event detection.

All kernels operate on ascending coefficient arrays of rational functions so a single
compilation serves every system. Status codes instead of exceptions; Python wrappers
translate them.
"""

from __future__ import annotations

import numpy as np
from numba import njit

# ---------------------------------------------------------------------------
# Status codes shared with the Python layer.
OK = 0
SUBDIV_CAP = 1
NONFINITE = 2
NO_BRACKET = 3
TOL_NOT_MET = 4

_EPS = np.finfo(np.float64).eps

# 15-point Kronrod nodes with embedded 7-point Gauss weights (zeros at the
# Kronrod-only nodes). Standard QUADPACK constants.
_GK_NODES = np.array(
    [
        0.991455371120813,
        0.949107912342759,
        0.864864423359769,
        0.741531185599394,
        0.586087235467691,
        0.405845151377397,
        0.207784955007898,
        0.000000000000000,
    ]
)
_GK_WK = np.array(
    [
        0.022935322010529,
        0.063092092629979,
        0.104790010322250,
        0.140653259715525,
        0.169004726639267,
        0.190350578064785,
        0.204432940075298,
        0.209482141084728,
    ]
)
_GK_WG = np.array(
    [
        0.0,
        0.129484966168870,
        0.0,
        0.279705391489277,
        0.0,
        0.381830050505119,
        0.0,
        0.417959183673469,
    ]
)


@njit(cache=True, nogil=True)
def poly_val(c, x):
    acc = 0.0
    for i in range(len(c) - 1, -1, -1):
        acc = acc * x + c[i]
    return acc


@njit(cache=True, nogil=True)
def rat_val(num, den, x):
    return poly_val(num, x) / poly_val(den, x)


@njit(cache=True, nogil=True)
def integrand_val(inum, iden, x):
    # Continuous extension: the integrand vanishes at the contact point.
    if x == 0.0:
        return 0.0
    return poly_val(inum, x) / poly_val(iden, x)


@njit(cache=True, nogil=True)
def _gk_panel(inum, iden, a, b):
    half = 0.5 * (b - a)
    mid = 0.5 * (a + b)
    sk = 0.0
    sg = 0.0
    for i in range(8):
        xi = _GK_NODES[i]
        if xi == 0.0:
            fv = integrand_val(inum, iden, mid)
            sk += _GK_WK[i] * fv
            sg += _GK_WG[i] * fv
        else:
            f1 = integrand_val(inum, iden, mid - half * xi)
            f2 = integrand_val(inum, iden, mid + half * xi)
            sk += _GK_WK[i] * (f1 + f2)
            sg += _GK_WG[i] * (f1 + f2)
    return sk * half, abs(sk - sg) * abs(half)


@njit(cache=True, nogil=True)
def adaptive_quad(inum, iden, a, b, epsabs, epsrel, max_subdiv):
    """Adaptive G7/K15 with depth-first interval subdivision.

    Returns (value, error_estimate, subdivisions, status). Requires a <= b.
    """
    if a == b:
        return 0.0, 0.0, 0, OK
    whole, werr = _gk_panel(inum, iden, a, b)
    if not np.isfinite(whole):
        return whole, werr, 0, NONFINITE
    tol = max(epsabs, epsrel * abs(whole))
    if werr <= tol:
        return whole, werr, 0, OK

    stack_a = np.empty(256)
    stack_b = np.empty(256)
    top = 0
    stack_a[0] = a
    stack_b[0] = b
    total = 0.0
    total_err = 0.0
    nsub = 0
    width_total = b - a
    status = OK
    while top >= 0:
        pa = stack_a[top]
        pb = stack_b[top]
        top -= 1
        val, err = _gk_panel(inum, iden, pa, pb)
        if not np.isfinite(val):
            return val, err, nsub, NONFINITE
        local_tol = tol * (pb - pa) / width_total
        if err <= local_tol or (pb - pa) < 64.0 * _EPS * max(abs(pa), abs(pb), 1.0):
            total += val
            total_err += err
            continue
        nsub += 1
        if nsub > max_subdiv or top >= 253:
            status = SUBDIV_CAP
            total += val
            total_err += err
            continue
        pm = 0.5 * (pa + pb)
        top += 1
        stack_a[top] = pa
        stack_b[top] = pm
        top += 1
        stack_a[top] = pm
        stack_b[top] = pb
    return total, total_err, nsub, status


@njit(cache=True, nogil=True)
def bisect_rational(num, den, lo, hi, target, res_tol):
    """Solve rational(x) = target for x in [lo, hi], rational monotone there.

    Bisection, stopping on |residual| <= res_tol or interval exhaustion.
    Returns (x, residual, status).
    """
    flo = rat_val(num, den, lo) - target
    fhi = rat_val(num, den, hi) - target
    if abs(flo) <= res_tol:
        return lo, flo, OK
    if abs(fhi) <= res_tol:
        return hi, fhi, OK
    if flo * fhi > 0.0:
        return np.nan, np.nan, NO_BRACKET
    for _ in range(500):
        mid = 0.5 * (lo + hi)
        fm = rat_val(num, den, mid) - target
        if abs(fm) <= res_tol:
            return mid, fm, OK
        if (fm > 0.0) == (flo > 0.0):
            lo = mid
            flo = fm
        else:
            hi = mid
        if hi - lo <= 4.0 * _EPS * max(abs(lo), abs(hi)):
            return mid, fm, OK
    mid = 0.5 * (lo + hi)
    return mid, rat_val(num, den, mid) - target, TOL_NOT_MET


@njit(cache=True, nogil=True)
def branch_root(fnum, fden, s, branch_end):
    """x on the branch between 0 and branch_end with f(x) = s.

    branch_end > 0 selects the attracting branch (omega root), < 0 the
    repelling one (alpha root). Returns (x, status).
    """
    res_tol = 1e-14 * max(1.0, abs(s))
    if branch_end > 0.0:
        x, _, status = bisect_rational(fnum, fden, 0.0, branch_end, s, res_tol)
    else:
        x, _, status = bisect_rational(fnum, fden, branch_end, 0.0, s, res_tol)
    return x, status


@njit(cache=True, nogil=True)
def itilde(inum, iden, fnum, fden, s, branch_end, epsabs, epsrel, max_subdiv):
    """Slow divergence integral at height s along one branch.

    branch_end > 0: attracting side, returns the negative integral I-.
    branch_end < 0: repelling side, returns the positive integral I+.
    Returns (value, status).
    """
    root, status = branch_root(fnum, fden, s, branch_end)
    if status != OK:
        return np.nan, status
    if branch_end > 0.0:
        val, _, _, qstatus = adaptive_quad(inum, iden, 0.0, root, epsabs, epsrel, max_subdiv)
    else:
        val, _, _, qstatus = adaptive_quad(inum, iden, root, 0.0, epsabs, epsrel, max_subdiv)
    return val, qstatus


@njit(cache=True, nogil=True)
def invert_itilde(inum, iden, fnum, fden, branch_end, target, h_hi,
                  solve_tol, epsabs, epsrel, max_subdiv):
    """Solve itilde(h) = target for h in (0, h_hi] by bisection on the height.

    The integral is strictly monotone in h (decreasing on the attracting side,
    increasing on the repelling side). Returns (h, residual, status).
    """
    increasing = branch_end < 0.0
    lo = 0.0
    hi = h_hi
    # value at lo is exactly 0 (contact point)
    flo = -target
    fhi_val, status = itilde(inum, iden, fnum, fden, hi, branch_end, epsabs, epsrel, max_subdiv)
    if status != OK:
        return np.nan, np.nan, status
    fhi = fhi_val - target
    if abs(fhi) <= solve_tol:
        return hi, fhi, OK
    if abs(flo) <= solve_tol:
        return lo, flo, OK
    if flo * fhi > 0.0:
        return np.nan, np.nan, NO_BRACKET
    fm = fhi
    mid = hi
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        val, status = itilde(inum, iden, fnum, fden, mid, branch_end, epsabs, epsrel, max_subdiv)
        if status != OK:
            return np.nan, np.nan, status
        fm = val - target
        if abs(fm) <= solve_tol:
            return mid, fm, OK
        if (fm > 0.0) == (flo > 0.0):
            lo = mid
            flo = fm
        else:
            hi = mid
        if hi - lo <= 2.0 * _EPS * max(abs(hi), 1e-300):
            break
    if abs(fm) <= 100.0 * solve_tol:
        return mid, fm, OK
    return mid, fm, TOL_NOT_MET


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4) with section-crossing event detection.

_C2, _C3, _C4, _C5 = 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0
_A21 = 1.0 / 5.0
_A31, _A32 = 3.0 / 40.0, 9.0 / 40.0
_A41, _A42, _A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
_A51, _A52, _A53, _A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
_A61, _A62, _A63, _A64, _A65 = (
    9017.0 / 3168.0,
    -355.0 / 33.0,
    46732.0 / 5247.0,
    49.0 / 176.0,
    -5103.0 / 18656.0,
)
_B1, _B3, _B4, _B5, _B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
# 5th-order minus embedded 4th-order weights (local error coefficients)
_E1, _E3, _E4, _E5, _E6, _E7 = (
    71.0 / 57600.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
)

CROSSED = 0
ESCAPED_RIGHT = 1
ESCAPED_DOWN = 2
BUDGET_EXHAUSTED = 3
STIFF = 4
TURNED_BACK = 5
STATIONARY = 6

_STAT_TOL = 1e-11


@njit(cache=True, nogil=True, inline="always")
def _rhs(fnum, fden, pnum, pden, eps_p, lam, x, y):
    dx = y - rat_val(fnum, fden, x)
    dy = eps_p * (lam - rat_val(pnum, pden, x))
    return dx, dy


@njit(cache=True, nogil=True)
def _rk5_step(fnum, fden, pnum, pden, eps_p, lam, x, y, k1x, k1y, h):
    """One Dormand-Prince 5th-order step of size h from (x, y) with k1 given.

    Returns (x5, y5, k7x, k7y, errx, erry).
    """
    k2x, k2y = _rhs(fnum, fden, pnum, pden, eps_p, lam,
                    x + h * _A21 * k1x, y + h * _A21 * k1y)
    k3x, k3y = _rhs(fnum, fden, pnum, pden, eps_p, lam,
                    x + h * (_A31 * k1x + _A32 * k2x),
                    y + h * (_A31 * k1y + _A32 * k2y))
    k4x, k4y = _rhs(fnum, fden, pnum, pden, eps_p, lam,
                    x + h * (_A41 * k1x + _A42 * k2x + _A43 * k3x),
                    y + h * (_A41 * k1y + _A42 * k2y + _A43 * k3y))
    k5x, k5y = _rhs(fnum, fden, pnum, pden, eps_p, lam,
                    x + h * (_A51 * k1x + _A52 * k2x + _A53 * k3x + _A54 * k4x),
                    y + h * (_A51 * k1y + _A52 * k2y + _A53 * k3y + _A54 * k4y))
    k6x, k6y = _rhs(fnum, fden, pnum, pden, eps_p, lam,
                    x + h * (_A61 * k1x + _A62 * k2x + _A63 * k3x + _A64 * k4x + _A65 * k5x),
                    y + h * (_A61 * k1y + _A62 * k2y + _A63 * k3y + _A64 * k4y + _A65 * k5y))
    x5 = x + h * (_B1 * k1x + _B3 * k3x + _B4 * k4x + _B5 * k5x + _B6 * k6x)
    y5 = y + h * (_B1 * k1y + _B3 * k3y + _B4 * k4y + _B5 * k5y + _B6 * k6y)
    k7x, k7y = _rhs(fnum, fden, pnum, pden, eps_p, lam, x5, y5)
    errx = h * (_E1 * k1x + _E3 * k3x + _E4 * k4x + _E5 * k5x + _E6 * k6x + _E7 * k7x)
    erry = h * (_E1 * k1y + _E3 * k3y + _E4 * k4y + _E5 * k5y + _E6 * k6y + _E7 * k7y)
    return x5, y5, k7x, k7y, errx, erry


@njit(cache=True, nogil=True)
def integrate_orbit(fnum, fden, pnum, pden, eps_p, lam, x0, y0,
                    x_exit, x_right, y_floor, abs_tol, rel_tol, max_step, max_time):
    """Integrate dx/dt = y - f(x), dy/dt = eps*(lam - p(x)) from (x0, y0).

    Stops at the first of: leftward crossing of the exit section x = x_exit
    (the crossing time is refined by bisection in t), x > x_right, y < y_floor,
    a rightward re-crossing of the contact line x = 0 (the orbit peeled off the
    repelling branch back toward the attracting side: it will never reach the
    exit section), near-zero velocity (captured by a stable equilibrium, which
    exists on the attracting branch when lam > 0), t > max_time, or step-size
    underflow.

    Returns (code, s_plus, t_event, steps, last_x, last_y).
    """
    t = 0.0
    x = x0
    y = y0
    h = max_step * 1e-3
    k1x, k1y = _rhs(fnum, fden, pnum, pden, eps_p, lam, x, y)
    steps = 0
    while True:
        if t >= max_time:
            return BUDGET_EXHAUSTED, np.nan, t, steps, x, y
        if h > max_step:
            h = max_step
        if h > max_time - t:
            h = max_time - t
        x5, y5, k7x, k7y, errx, erry = _rk5_step(
            fnum, fden, pnum, pden, eps_p, lam, x, y, k1x, k1y, h)
        if not (np.isfinite(x5) and np.isfinite(y5)):
            return STIFF, np.nan, t, steps, x, y
        sx = abs_tol + rel_tol * max(abs(x), abs(x5))
        sy = abs_tol + rel_tol * max(abs(y), abs(y5))
        err = np.sqrt(0.5 * ((errx / sx) ** 2 + (erry / sy) ** 2))
        if err > 1.0:
            # rejected step
            if h <= 16.0 * _EPS * max(abs(t), 1.0):
                return STIFF, np.nan, t, steps, x, y
            fac = 0.9 * err ** -0.2
            if fac < 0.2:
                fac = 0.2
            h *= fac
            continue
        steps += 1
        if x > x_exit >= x5:
            # leftward crossing of the exit section within this step:
            # bisection in time, re-stepping from the accepted step's start.
            lo = 0.0
            hi = h
            xm, ym = x5, y5
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                xm, ym, _, _, _, _ = _rk5_step(
                    fnum, fden, pnum, pden, eps_p, lam, x, y, k1x, k1y, mid)
                g = xm - x_exit
                if abs(g) <= 1e-11 and hi - lo <= 1e-12:
                    break
                if g > 0.0:
                    lo = mid
                else:
                    hi = mid
                if hi - lo <= 4.0 * _EPS * max(t, 1.0):
                    break
            return CROSSED, ym, t + 0.5 * (lo + hi), steps, xm, ym
        if x5 > x_right:
            return ESCAPED_RIGHT, np.nan, t + h, steps, x5, y5
        if y5 < y_floor:
            return ESCAPED_DOWN, np.nan, t + h, steps, x5, y5
        if x < 0.0 <= x5:
            return TURNED_BACK, np.nan, t + h, steps, x5, y5
        if abs(k7x) <= _STAT_TOL * (1.0 + abs(y5)) and \
                abs(k7y) <= eps_p * _STAT_TOL * (1.0 + abs(lam)):
            return STATIONARY, np.nan, t + h, steps, x5, y5
        t += h
        x, y = x5, y5
        k1x, k1y = k7x, k7y
        if err == 0.0:
            fac = 5.0
        else:
            fac = 0.9 * err ** -0.2
            if fac > 5.0:
                fac = 5.0
            elif fac < 0.2:
                fac = 0.2
        h *= fac
