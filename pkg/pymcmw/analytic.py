"""
Series expansions and analytic summaries of the McMW distribution.

Every series summary is cross-checked against adaptive quadrature, and quadrature is the value reported
when a series fails to converge. The moment and MGF series expand (1 - G^c)^(b-1) over j, G^(c(a+j)-1) over m
and exp(-(m+1) gamma x^beta) over s, leaving the rate (m+1)*alpha on the linear term::

    mu'_k = c/B(a,b) sum_{j,m,s} (-1)^(j+m+s) C(b-1,j) C(c(a+j)-1,m) ((m+1) gamma)^s / s!
            * [alpha Gamma(k+beta s+1) / ((m+1) alpha)^(k+beta s+1)
               + gamma beta Gamma(k+beta(s+1)) / ((m+1) alpha)^(k+beta(s+1))]

The closed form with rate m*(alpha+1) and weight (m*(gamma+1))^s is kept as ``form='printed'``
for comparison only.
"""
import logging
import math
import warnings
from collections import namedtuple

import numpy as np
from scipy import integrate, special

from pymcmw import dist, specfun
from pymcmw.utilities import DomainError, ExistenceError, QuadratureError

log = logging.getLogger('analytic')

SPLIT_LEVELS = (0.5, 0.9, 0.99, 1.0 - 1e-8)
QUAD_EPSABS = 1e-10
QUAD_EPSREL = 1e-10
QUAD_LIMIT = 200

SeriesValue = namedtuple("SeriesValue", ("value", "converged", "terms", "method", "note"))


class SeriesControl(object):
    """
    Truncation caps and tail threshold for the nested series
    """
    MAX_J = 200
    MAX_M = 200
    MAX_S = 300
    TOL = 1e-12
    PATIENCE = 20
    MAX_CANCELLATION = 1e6

    def __init__(self, max_j=MAX_J, max_m=MAX_M, max_s=MAX_S, tol=TOL, patience=PATIENCE,
                 max_cancellation=MAX_CANCELLATION):
        for name, value in (("max_j", max_j), ("max_m", max_m), ("max_s", max_s), ("patience", patience)):
            if int(value) != value or value < 1:
                raise ValueError("%s has to be a positive integer, got %r" % (name, value))
        if not tol > 0:
            raise ValueError("tol has to be positive, got %r" % tol)
        self.max_j = int(max_j)
        self.max_m = int(max_m)
        self.max_s = int(max_s)
        self.tol = float(tol)
        self.patience = int(patience)
        self.max_cancellation = float(max_cancellation)

    def __repr__(self):
        return "SeriesControl(%s)" % self.__dict__


class MomentSet(object):
    """
    First four raw moments with mean, variance, skewness and (non-excess) kurtosis
    """

    def __init__(self, raw_moments):
        m1, m2, m3, m4 = [float(x) for x in raw_moments]
        self.raw_moments = (m1, m2, m3, m4)
        self.mean = m1
        self.variance = max(m2 - m1 ** 2, 0.0)
        mu3 = m3 - 3 * m1 * m2 + 2 * m1 ** 3
        mu4 = m4 - 4 * m1 * m3 + 6 * m1 ** 2 * m2 - 3 * m1 ** 4
        if self.variance > 0:
            self.skewness = mu3 / self.variance ** 1.5
            self.kurtosis = mu4 / self.variance ** 2
        else:
            self.skewness = float("nan")
            self.kurtosis = float("nan")

    def as_dict(self):
        return {
            "raw_moments": list(self.raw_moments),
            "mean": self.mean,
            "variance": self.variance,
            "skewness": self.skewness,
            "kurtosis": self.kurtosis,
        }

    def __repr__(self):
        return "MomentSet(%s)" % self.as_dict()


class _PartialSum(object):
    def __init__(self, ctl):
        self.ctl = ctl
        self.total = 0.0
        self.max_abs = 0.0
        self.quiet = 0
        self.terms = 0

    def add(self, term):
        """Adds a term, returns True once `patience` consecutive terms were negligible"""
        self.total += term
        self.terms += 1
        self.max_abs = max(self.max_abs, abs(term))
        if abs(term) <= self.ctl.tol * self.max_abs:
            self.quiet += 1
        else:
            self.quiet = 0
        return self.quiet >= self.ctl.patience

    def cancelled(self):
        return self.max_abs > self.ctl.max_cancellation * abs(self.total)


def _alt_binomials(r, cap):
    """
    Yields (j, (-1)^j C(r, j)) for j < cap; the product form stops at an exact zero when r is a nonneg integer
    """
    term = 1.0
    for j in range(cap):
        yield j, term
        if term == 0.0:
            return
        term *= (j - r) / (j + 1.0)


def expansion_coefficients(p, ctl=None):
    """
    Mixture weights q_j = (-1)^j C(b-1, j) / (B(a,b) (a+j)); finite (b terms) for integer b

    :rtype: SeriesValue
    """
    ctl = ctl or SeriesControl()
    inv_beta = math.exp(-specfun.ln_beta(p.a, p.b))
    acc = _PartialSum(ctl)
    coefficients = []
    converged = False
    for j, weight in _alt_binomials(p.b - 1.0, ctl.max_j):
        if weight == 0.0:
            converged = True
            break
        q = weight * inv_beta / (p.a + j)
        coefficients.append(q)
        if acc.add(q):
            converged = True
            break

    if not converged:
        log.warning("Expansion coefficients not converged after %s terms for b=%s", len(coefficients), p.b)
    return SeriesValue(np.array(coefficients), converged, len(coefficients), "series", "")


def cdf_via_expansion(p, x, ctl=None):
    """
    F(x) = sum_j q_j G(x)^(c(a+j))

    :rtype: SeriesValue
    """
    ctl = ctl or SeriesControl()
    if x < 0:
        raise DomainError("x must be nonnegative, got %r" % x)
    if x == 0:
        return SeriesValue(0.0, True, 0, "series", "")
    log_g = specfun.log1mexp(p.alpha * x + p.gamma * x ** p.beta)
    return _mixture_sum(p, ctl, lambda j: math.exp(p.c * (p.a + j) * log_g))


def pdf_via_expansion(p, x, ctl=None):
    """
    f(x) = sum_j q_j c(a+j) G(x)^(c(a+j)-1) g(x), g the parent density

    :rtype: SeriesValue
    """
    ctl = ctl or SeriesControl()
    if not x > 0:
        raise DomainError("Density is defined for x > 0 only, got %r" % x)
    h = p.alpha * x + p.gamma * x ** p.beta
    log_g = specfun.log1mexp(h)
    log_parent = math.log(p.alpha + p.gamma * p.beta * x ** (p.beta - 1.0)) - h
    return _mixture_sum(p, ctl,
                        lambda j: p.c * (p.a + j) * math.exp((p.c * (p.a + j) - 1.0) * log_g + log_parent))


def _mixture_sum(p, ctl, component):
    inv_beta = math.exp(-specfun.ln_beta(p.a, p.b))
    acc = _PartialSum(ctl)
    converged = False
    for j, weight in _alt_binomials(p.b - 1.0, ctl.max_j):
        if weight == 0.0:
            converged = True
            break
        if acc.add(weight * inv_beta / (p.a + j) * component(j)):
            converged = True
            break
    return SeriesValue(acc.total, converged, acc.terms, "series", "")


def _inner_integral(p, k, s, rate, log_s_weight):
    """
    ((m+1) gamma)^s / s! * int x^(k + beta s) (alpha + gamma beta x^(beta-1)) e^(-rate x) dx
    """
    first = p.alpha * math.exp(log_s_weight + special.gammaln(k + p.beta * s + 1.0)
                               - (k + p.beta * s + 1.0) * math.log(rate))
    if p.gamma == 0:
        return first
    second = p.gamma * p.beta * math.exp(log_s_weight + special.gammaln(k + p.beta * (s + 1.0))
                                         - (k + p.beta * (s + 1.0)) * math.log(rate))
    return first + second


def _series_sum(p, k, t, ctl, printed=False):
    """
    Triple series for E[X^k e^(tX)]; returns (value, converged, terms, note)
    """
    if p.alpha <= 0:
        return float("nan"), False, 0, "series needs alpha > 0"
    if p.gamma > 0 and p.beta > 1 and not printed:
        return float("nan"), False, 0, "power series in gamma x^beta diverges for beta > 1"
    if p.gamma > 0 and p.beta == 1 and not printed and p.gamma >= p.alpha - t:
        return float("nan"), False, 0, "power series in gamma x diverges for gamma >= alpha - t"

    coeff = p.c * math.exp(-specfun.ln_beta(p.a, p.b))
    outer = _PartialSum(ctl)
    total_terms = 0
    outer_done = False
    for j, wj in _alt_binomials(p.b - 1.0, ctl.max_j):
        if wj == 0.0:
            outer_done = True
            break
        middle = _PartialSum(ctl)
        middle_done = False
        for m, wm in _alt_binomials(p.c * (p.a + j) - 1.0, ctl.max_m):
            if wm == 0.0:
                middle_done = True
                break
            if printed:
                rate = m * (p.alpha + 1.0) - t
                base = m * (p.gamma + 1.0)
            else:
                rate = (m + 1.0) * p.alpha - t
                base = (m + 1.0) * p.gamma
            if rate <= 0:
                # printed form at m = 0: the rate vanishes, the term is dropped
                continue

            inner = _PartialSum(ctl)
            inner_done = False
            for s in range(ctl.max_s):
                if p.gamma == 0 or base == 0:
                    if s > 0:
                        inner_done = True
                        break
                    log_w = 0.0
                else:
                    log_w = s * math.log(base) - special.gammaln(s + 1.0)
                term = (-1.0) ** s * _inner_integral(p, k, s, rate, log_w)
                if not math.isfinite(term):
                    return float("nan"), False, total_terms, "non-finite term at j=%s m=%s s=%s" % (j, m, s)
                if inner.add(term):
                    inner_done = True
                    break
            total_terms += inner.terms
            if not inner_done or inner.cancelled():
                return inner.total, False, total_terms, "s-series stopped at j=%s m=%s" % (j, m)

            if middle.add(wm * inner.total):
                middle_done = True
                break
        if not middle_done or middle.cancelled():
            return middle.total, False, total_terms, "m-series stopped at j=%s" % j

        if outer.add(wj * middle.total):
            outer_done = True
            break
    if not outer_done or outer.cancelled():
        return coeff * outer.total, False, total_terms, "j-series stopped"
    return coeff * outer.total, True, total_terms, ""


def _split_points(p):
    points = [0.0]
    for level in SPLIT_LEVELS:
        try:
            q = dist.quantile(p, level)
        except (ArithmeticError, RuntimeError, ValueError):
            log.debug("No split point at level %s for %r", level, p)
            continue
        if math.isfinite(q) and q > points[-1]:
            points.append(q)
    points.append(math.inf)
    return points


def integrate_density(p, integrand, what="integral"):
    """
    Adaptive quadrature of integrand(x) over (0, inf), split at the quantiles of p

    :type integrand: callable
    """
    value, error = 0.0, 0.0
    issues = []
    points = _split_points(p)
    for lo, hi in zip(points[:-1], points[1:]):
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", integrate.IntegrationWarning)
            part, part_err = integrate.quad(integrand, lo, hi, epsabs=QUAD_EPSABS, epsrel=QUAD_EPSREL,
                                            limit=QUAD_LIMIT)
        value += part
        error += part_err
        issues.extend(str(item.message) for item in caught)

    if not math.isfinite(value):
        raise QuadratureError("Quadrature of %s is not finite" % what, value, error)
    if issues:
        if error > 1e-6 * max(1.0, abs(value)):
            raise QuadratureError("Quadrature of %s failed, error estimate %.3g: %s"
                                  % (what, error, issues[0].splitlines()[0]), value, error)
        log.debug("Quadrature of %s warned but error estimate is %.3g", what, error)
    return value


def _pdf_scalar(p):
    def density(x):
        if x <= 0:
            return 0.0
        return math.exp(dist.log_pdf(p, x))

    return density


def quadrature_moment(p, k=1, weight=None):
    """
    int_0^inf x^k f(x) dx, or int weight(x) f(x) dx when a weight hook is given
    """
    density = _pdf_scalar(p)
    if weight is None:
        if int(k) != k or k < 0:
            raise DomainError("Moment order has to be a nonnegative integer, got %r" % k)
        return integrate_density(p, lambda x: x ** k * density(x), "x^%s f(x)" % k)
    return integrate_density(p, lambda x: weight(x) * density(x), "weighted density")


def raw_moment(p, k, ctl=None, form="corrected"):
    """
    k-th raw moment by the triple series, falling back to quadrature when the series is unavailable
    or does not converge. ``form='printed'`` uses rate m*(alpha+1) and weight (m*(gamma+1))^s instead
    and never falls back.

    :rtype: SeriesValue
    """
    ctl = ctl or SeriesControl()
    if int(k) != k or k < 1:
        raise DomainError("Moment order has to be a positive integer, got %r" % k)
    if form not in ("corrected", "printed"):
        raise ValueError("Unknown series form %r" % form)

    value, converged, terms, note = _series_sum(p, k, 0.0, ctl, printed=(form == "printed"))
    if form == "printed":
        return SeriesValue(value, converged, terms, "series-printed", note)
    if converged:
        return SeriesValue(value, True, terms, "series", note)

    log.info("Moment k=%s via quadrature: %s", k, note)
    return SeriesValue(quadrature_moment(p, k), False, terms, "quadrature", note)


def mgf_exists(p, t):
    """
    E[e^(tX)] is finite iff t is below the tail rate b*alpha (b*(alpha+gamma) at beta = 1),
    always when beta > 1 and gamma > 0
    """
    if t <= 0:
        return True
    if p.gamma > 0 and p.beta > 1:
        return True
    rate = p.b * (p.alpha + (p.gamma if p.beta == 1 else 0.0))
    return t < rate


def mgf(p, t, ctl=None):
    """
    Moment generating function; series for t < alpha, quadrature of e^(tx) f(x) otherwise

    :rtype: SeriesValue
    """
    ctl = ctl or SeriesControl()
    if t == 0:
        return SeriesValue(1.0, True, 0, "exact", "")
    if not mgf_exists(p, t):
        raise ExistenceError("MGF does not exist at t=%s for %r" % (t, p))

    note = "t >= alpha"
    terms = 0
    if p.alpha > 0 and t < p.alpha:
        value, converged, terms, note = _series_sum(p, 0, t, ctl)
        if converged:
            return SeriesValue(value, True, terms, "series", note)

    log.info("MGF at t=%s via quadrature: %s", t, note)
    density_log = lambda x: dist.log_pdf(p, x) if x > 0 else -math.inf
    value = integrate_density(p, lambda x: math.exp(t * x + density_log(x)), "e^(tx) f(x)")
    return SeriesValue(value, False, terms, "quadrature", note)


def moment_set(p, ctl=None):
    """
    Mean, variance, skewness and kurtosis from quadrature raw moments

    :rtype: MomentSet
    """
    del ctl  # quadrature is authoritative here
    return MomentSet([quadrature_moment(p, k) for k in (1, 2, 3, 4)])


def _check_order(n, r):
    if int(n) != n or n < 1:
        raise DomainError("Sample size has to be a positive integer, got %r" % n)
    if int(r) != r or not 1 <= r <= n:
        raise DomainError("Order index has to be in [1, %s], got %r" % (n, r))


def _order_weight(p, n, r, x):
    """F^(r-1) (1-F)^(n-r) / B(r, n-r+1)"""
    log_w = -specfun.ln_beta(r, n - r + 1)
    if r > 1:
        f = dist.cdf(p, x)
        if f == 0.0:
            return 0.0
        log_w += (r - 1) * math.log(f)
    if n > r:
        s = dist.survival(p, x)
        if s == 0.0:
            return 0.0
        log_w += (n - r) * math.log(s)
    return math.exp(log_w)


def order_statistic_pdf(p, n, r, x):
    """
    Density of the r-th smallest of n i.i.d. draws
    """
    _check_order(n, r)
    if not x > 0:
        raise DomainError("Density is defined for x > 0 only, got %r" % x)
    return _order_weight(p, n, r, x) * dist.pdf(p, x)


def order_statistic_pdf_expanded(p, n, r, x):
    """
    Binomial form: 1/B(r, n-r+1) sum_j (-1)^j C(n-r, j) F^(r+j-1) f
    """
    _check_order(n, r)
    if not x > 0:
        raise DomainError("Density is defined for x > 0 only, got %r" % x)
    f_cdf = dist.cdf(p, x)
    total = 0.0
    for j in range(n - r + 1):
        total += (-1) ** j * special.binom(n - r, j) * f_cdf ** (r + j - 1)
    return total * math.exp(-specfun.ln_beta(r, n - r + 1)) * dist.pdf(p, x)


def order_statistic_moment(p, n, r, k):
    """
    E[X_{r:n}^k] by quadrature of x^k f_{r:n}(x)
    """
    _check_order(n, r)
    return quadrature_moment(p, weight=lambda x: x ** k * _order_weight(p, n, r, x))


def order_statistic_moment_set(p, n, r):
    """
    :rtype: MomentSet
    """
    return MomentSet([order_statistic_moment(p, n, r, k) for k in (1, 2, 3, 4)])
