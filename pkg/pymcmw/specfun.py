"""
Special-function kernel: log-gamma, digamma, log-beta and the regularized incomplete beta ratio with its inverse.

The incomplete beta ratio is evaluated by the continued fraction (modified Lentz), using the symmetry
I_y(a, b) = 1 - I_{1-y}(b, a) on the side where the fraction converges fast. The prefactor
y^a (1-y)^b / B(a, b) is assembled in log space so shapes around 0.09 do not underflow.
"""
import logging
import math

import numpy as np
from scipy import special

from pymcmw.utilities import DomainError, NonConvergenceError

log = logging.getLogger('specfun')

LN2 = math.log(2.0)

CF_MAX_ITER = 2000
CF_EPS = 1e-16
CF_TINY = 1e-300

INV_MAX_ITER = 300


def _check_positive(name, value):
    if not (math.isfinite(value) and value > 0):
        raise DomainError("%s must be a positive finite number, got %r" % (name, value))


def ln_gamma(x):
    """
    ln Gamma(x) for x > 0
    """
    _check_positive("x", x)
    return float(special.gammaln(x))


def digamma(x):
    """
    psi(x) = d/dx ln Gamma(x) for x > 0
    """
    _check_positive("x", x)
    return float(special.psi(x))


def ln_beta(a, b):
    _check_positive("a", a)
    _check_positive("b", b)
    return float(special.betaln(a, b))


def log1mexp(t):
    """
    ln(1 - exp(-t)) for t >= 0, accurate at both ends; accepts arrays
    """
    t = np.asarray(t, dtype=float)
    with np.errstate(divide='ignore', invalid='ignore'):
        out = np.where(t <= LN2, np.log(-np.expm1(-t)), np.log1p(-np.exp(-t)))
    return out if out.ndim else float(out)


def _beta_cf(y, a, b):
    qab = a + b
    qap = a + 1.0
    qam = a - 1.0
    c = 1.0
    d = 1.0 - qab * y / qap
    if abs(d) < CF_TINY:
        d = CF_TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * y / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < CF_TINY:
            d = CF_TINY
        c = 1.0 + aa / c
        if abs(c) < CF_TINY:
            c = CF_TINY
        d = 1.0 / d
        h *= d * c

        aa = -(a + m) * (qab + m) * y / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < CF_TINY:
            d = CF_TINY
        c = 1.0 + aa / c
        if abs(c) < CF_TINY:
            c = CF_TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_EPS:
            return h

    raise NonConvergenceError("Incomplete beta continued fraction did not converge for a=%s, b=%s, y=%s"
                              % (a, b, y))


def _inc_beta_pair(y, a, b):
    """
    Returns (I_y(a, b), 1 - I_y(a, b)); the member computed directly carries full relative accuracy
    """
    if y <= 0.0:
        return 0.0, 1.0
    if y >= 1.0:
        return 1.0, 0.0

    log_front = a * math.log(y) + b * math.log1p(-y) - special.betaln(a, b)
    if y < (a + 1.0) / (a + b + 2.0):
        lower = math.exp(log_front) * _beta_cf(y, a, b) / a
        return lower, 1.0 - lower
    upper = math.exp(log_front) * _beta_cf(1.0 - y, b, a) / b
    return 1.0 - upper, upper


def _check_beta_args(y, a, b, name="y"):
    if not (0.0 <= y <= 1.0):
        raise DomainError("%s must lie in [0, 1], got %r" % (name, y))
    _check_positive("a", a)
    _check_positive("b", b)


def reg_inc_beta(y, a, b):
    """
    Regularized incomplete beta ratio I_y(a, b)

    :type y: float
    :type a: float
    :type b: float
    :rtype: float
    """
    _check_beta_args(y, a, b)
    return min(1.0, max(0.0, _inc_beta_pair(y, a, b)[0]))


def _density(y, a, b, lnb):
    if y <= 0.0 or y >= 1.0:
        return float("nan")
    try:
        return math.exp((a - 1.0) * math.log(y) + (b - 1.0) * math.log1p(-y) - lnb)
    except OverflowError:
        return float("inf")


def _solve_lower(u, a, b):
    """y with I_y(a, b) = u for 0 < u <= 1/2: bracketed Newton with bisection fallback"""
    lnb = special.betaln(a, b)
    lo, hi = 0.0, 1.0

    # small-y asymptote I_y ~ y^a / (a B(a, b))
    guess = math.exp(min(0.0, (math.log(u) + math.log(a) + lnb) / a))
    y = guess if 0.0 < guess < 1.0 else 0.5

    dx_old = hi - lo
    for _ in range(INV_MAX_ITER):
        f = _inc_beta_pair(y, a, b)[0] - u
        if f == 0.0 or abs(f) <= 1e-14 * u:
            return y
        if f < 0:
            lo = y
        else:
            hi = y
        if hi - lo <= 4 * np.finfo(float).eps * hi:
            return y

        dens = _density(y, a, b, lnb)
        newton_ok = math.isfinite(dens) and dens > 0
        if newton_ok:
            y_new = y - f / dens
            newton_ok = lo < y_new < hi and abs(2.0 * f) <= abs(dx_old * dens)

        if not newton_ok:
            if lo == 0.0:
                y_new = hi / 100.0
            elif hi > 1e3 * lo:
                y_new = math.sqrt(lo * hi)
            else:
                y_new = 0.5 * (lo + hi)

        dx_old = abs(y_new - y)
        if dx_old <= 1e-16 * y:
            return y_new
        y = y_new

    log.warning("Inverse incomplete beta hit %s iterations at u=%s, a=%s, b=%s", INV_MAX_ITER, u, a, b)
    return y


def inv_reg_inc_beta_pair(u, a, b):
    """
    Returns (y, 1 - y) with I_y(a, b) = u; the smaller member is solved for directly
    """
    _check_beta_args(u, a, b, name="u")
    if u == 0.0:
        return 0.0, 1.0
    if u == 1.0:
        return 1.0, 0.0
    if u <= 0.5:
        y = _solve_lower(u, a, b)
        return y, 1.0 - y
    z = _solve_lower(1.0 - u, b, a)
    return 1.0 - z, z


def inv_reg_inc_beta(u, a, b):
    """
    Inverse of the regularized incomplete beta ratio in its first argument

    :rtype: float
    """
    return inv_reg_inc_beta_pair(u, a, b)[0]
