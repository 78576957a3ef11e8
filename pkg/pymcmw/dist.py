"""
The McDonald modified Weibull (McMW) distribution: parameters, density, cdf, survival, hazards, quantile,
sampling and the named submodels.

Parent (modified Weibull) quantities used throughout::

    H(x) = alpha*x + gamma*x**beta         cumulative hazard of the parent
    G(x) = 1 - exp(-H(x))                  parent cdf
    F(x) = I_{G(x)^c}(a, b)                McMW cdf
"""
import logging
import math
from collections import namedtuple
from enum import Enum, unique

import numpy as np

from pymcmw import specfun
from pymcmw.utilities import DomainError, NonConvergenceError, ParameterError, elementwise

log = logging.getLogger('dist')

PARAM_NAMES = ("alpha", "gamma", "beta", "a", "b", "c")


class McMWParams(namedtuple("McMWParams", PARAM_NAMES)):
    """
    Immutable six-parameter vector (alpha, gamma, beta, a, b, c); build it with :meth:`validate`
    """
    __slots__ = ()

    @classmethod
    def validate(cls, alpha, gamma, beta, a, b, c):
        values = dict(zip(PARAM_NAMES, (alpha, gamma, beta, a, b, c)))
        violations = []
        for name in PARAM_NAMES:
            try:
                values[name] = float(values[name])
            except (TypeError, ValueError):
                violations.append("%s must be a real number, got %r" % (name, values[name]))
                continue
            if not math.isfinite(values[name]):
                violations.append("%s must be finite, got %r" % (name, values[name]))

        if not violations:
            for name in ("alpha", "gamma"):
                if values[name] < 0:
                    violations.append("%s must be nonnegative, got %s" % (name, values[name]))
            if values["alpha"] + values["gamma"] <= 0 and values["alpha"] >= 0 and values["gamma"] >= 0:
                violations.append("alpha + gamma must be positive")
            for name in ("beta", "a", "b", "c"):
                if values[name] <= 0:
                    violations.append("%s must be positive, got %s" % (name, values[name]))

        if violations:
            raise ParameterError(violations)
        return cls(**values)

    def replace(self, **kwargs):
        merged = self._asdict()
        merged.update(kwargs)
        return McMWParams.validate(**merged)

    def as_array(self):
        return np.array(self, dtype=float)


class MWParams(namedtuple("MWParams", ("alpha", "gamma", "beta"))):
    """Modified Weibull parent parameters (the a = b = c = 1 member of the family)"""
    __slots__ = ()

    def to_mcmw(self):
        return McMWParams.validate(self.alpha, self.gamma, self.beta, 1.0, 1.0, 1.0)


@unique
class Submodel(Enum):
    MCMW = "McMW"
    BMW = "BMW"
    KMW = "KMW"
    MCW = "McW"
    MCLFR = "McLFR"
    MCR = "McR"
    MCE = "McE"
    BR = "BR"
    BLFR = "BLFR"
    MW = "MW"
    WEIBULL = "Weibull"
    RAYLEIGH = "Rayleigh"
    EXPONENTIAL = "Exponential"
    LFR = "LFR"

    @classmethod
    def parse(cls, name):
        if isinstance(name, Submodel):
            return name
        for item in cls:
            if item.value.lower() == str(name).strip().lower() or item.name.lower() == str(name).strip().lower():
                return item
        raise ValueError("Unknown model %r, expected one of: %s" % (name, ", ".join(x.value for x in cls)))

    @property
    def fixed(self):
        """
        :rtype: dict[str,float]
        """
        return SUBMODEL_FIXED[self]

    @property
    def free_names(self):
        return tuple(name for name in PARAM_NAMES if name not in self.fixed)

    @property
    def k(self):
        return len(self.free_names)

    def fixed_mask(self):
        return tuple(name in self.fixed for name in PARAM_NAMES)

    def nests(self, other):
        """True when every parameter point of ``other`` is also a point of this model"""
        return all(name in other.fixed and other.fixed[name] == value for name, value in self.fixed.items())


_ONES = {"a": 1.0, "b": 1.0, "c": 1.0}

# KMW pins only a; McE pins beta to 1 where it has no effect
SUBMODEL_FIXED = {
    Submodel.MCMW: {},
    Submodel.BMW: {"c": 1.0},
    Submodel.KMW: {"a": 1.0},
    Submodel.MCW: {"alpha": 0.0},
    Submodel.MCLFR: {"beta": 2.0},
    Submodel.MCR: {"alpha": 0.0, "beta": 2.0},
    Submodel.MCE: {"gamma": 0.0, "beta": 1.0},
    Submodel.BR: {"alpha": 0.0, "beta": 2.0, "c": 1.0},
    Submodel.BLFR: {"beta": 2.0, "c": 1.0},
    Submodel.MW: dict(_ONES),
    Submodel.WEIBULL: dict(_ONES, alpha=0.0),
    Submodel.RAYLEIGH: dict(_ONES, alpha=0.0, beta=2.0),
    Submodel.EXPONENTIAL: dict(_ONES, gamma=0.0, beta=1.0),
    Submodel.LFR: dict(_ONES, beta=2.0),
}


def validate(alpha, gamma, beta, a, b, c):
    return McMWParams.validate(alpha, gamma, beta, a, b, c)


def submodel(name, *free, **named):
    """
    Full parameter vector of a named submodel from its free parameters, given positionally in
    (alpha, gamma, beta, a, b, c) order or by keyword

    :rtype: McMWParams
    """
    model = Submodel.parse(name)
    free_names = model.free_names
    if len(free) > len(free_names):
        raise ValueError("%s takes %d free parameters %s, got %d"
                         % (model.value, len(free_names), free_names, len(free)))
    values = dict(zip(free_names, free))
    for key, value in named.items():
        if key in model.fixed:
            raise ValueError("%s pins %s=%s, it cannot be set" % (model.value, key, model.fixed[key]))
        if key not in free_names:
            raise ValueError("Unknown parameter %r" % key)
        values[key] = value
    missing = [name for name in free_names if name not in values]
    if missing:
        raise ValueError("%s is missing free parameters: %s" % (model.value, ", ".join(missing)))
    values.update(model.fixed)
    return McMWParams.validate(**values)


def _cum_hazard(p, x):
    return p.alpha * x + p.gamma * np.power(x, p.beta)


def _log_parts(p, x):
    """
    Returns (H, ln G, ln(1 - G^c)) for x > 0
    """
    h = _cum_hazard(p, x)
    log_g = specfun.log1mexp(h)
    # G rounds to 1 past H ~ 745, where 1 - G^c ~ c*exp(-H)
    log_gc_comp = np.where(log_g == 0.0, math.log(p.c) - h, specfun.log1mexp(-p.c * log_g))
    if np.ndim(log_gc_comp) == 0:
        log_gc_comp = float(log_gc_comp)
    return h, log_g, log_gc_comp


def _check_positive_x(x):
    x = np.asarray(x, dtype=float)
    if np.any(~(x > 0)) or np.any(~np.isfinite(x)):
        raise DomainError("Density is defined for finite x > 0 only")
    return x


def _check_nonneg_x(x):
    if not (x >= 0) or math.isnan(x):
        raise DomainError("x must be nonnegative, got %r" % x)


def base_cdf(p, x):
    """Parent modified Weibull cdf G(x) = 1 - exp(-alpha x - gamma x^beta)"""
    _check_nonneg_x(x)
    if x == 0:
        return 0.0
    return float(-math.expm1(-_cum_hazard(p, x)))


def log_pdf(p, x):
    """
    ln f(x); accepts scalars or arrays, gives -inf where the density underflows to zero
    """
    arr = _check_positive_x(x)
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        h, log_g, log_gc_comp = _log_parts(p, arr)
        log_h0 = np.log(p.alpha + p.gamma * p.beta * np.power(arr, p.beta - 1.0))
        out = math.log(p.c) - specfun.ln_beta(p.a, p.b) + log_h0 - h
        if p.a * p.c != 1.0:
            out = out + (p.a * p.c - 1.0) * log_g
        if p.b != 1.0:
            out = out + (p.b - 1.0) * log_gc_comp
    out = np.where(np.isnan(out), -np.inf, out)
    return out if np.ndim(x) else float(out)


def pdf(p, x):
    return np.exp(log_pdf(p, x)) if np.ndim(x) else math.exp(log_pdf(p, x))


SMALL_LOG_Y = -700.0


def _log_lower_tail(p, log_y):
    """ln I_y(a, b) by the small-y asymptote y^a / (a B(a, b)), for y below e^SMALL_LOG_Y"""
    return p.a * log_y - math.log(p.a) - specfun.ln_beta(p.a, p.b)


def _beta_tails(p, x):
    """
    (F, 1 - F) at x > 0; the ratio is evaluated on whichever of G^c, 1 - G^c is below 1/2
    """
    _, log_g, _ = _log_parts(p, x)
    log_y = p.c * log_g
    if log_y < SMALL_LOG_Y:
        lower = math.exp(_log_lower_tail(p, log_y))
        return lower, 1.0 - lower
    if log_y < -specfun.LN2:
        lower = specfun.reg_inc_beta(math.exp(log_y), p.a, p.b)
        return lower, 1.0 - lower
    upper = specfun.reg_inc_beta(-math.expm1(log_y), p.b, p.a)
    return 1.0 - upper, upper


@elementwise
def cdf(p, x):
    """McMW cdf I_{G(x)^c}(a, b)"""
    _check_nonneg_x(x)
    if x == 0:
        return 0.0
    if math.isinf(x):
        return 1.0
    return _beta_tails(p, x)[0]


@elementwise
def survival(p, x):
    """1 - F(x), as I_{1 - G(x)^c}(b, a) in the right tail so it keeps relative accuracy there"""
    _check_nonneg_x(x)
    if x == 0:
        return 1.0
    if math.isinf(x):
        return 0.0
    return _beta_tails(p, x)[1]


def _log_survival(p, x):
    if x == 0:
        return 0.0
    _, log_g, log_gc_comp = _log_parts(p, x)
    if p.c * log_g < -specfun.LN2:
        return math.log1p(-specfun.reg_inc_beta(math.exp(p.c * log_g), p.a, p.b))
    comp = math.exp(log_gc_comp)
    if comp > 1e-280:
        s = specfun.reg_inc_beta(comp, p.b, p.a)
        if s > 0.0:
            return math.log(s)
    # I_w(b, a) ~ w^b / (b B(a, b)) as w -> 0
    return p.b * log_gc_comp - math.log(p.b) - specfun.ln_beta(p.a, p.b)


@elementwise
def cumulative_hazard(p, x):
    """-ln(1 - F(x))"""
    _check_nonneg_x(x)
    return -_log_survival(p, x)


@elementwise
def hazard(p, x):
    """
    f(x) / (1 - F(x)); gives inf when even the log survival underflows
    """
    lp = log_pdf(p, x)
    ls = _log_survival(p, x)
    if not math.isfinite(ls):
        log.debug("Survival underflow at x=%s, hazard reported as inf", x)
        return math.inf
    return math.exp(lp - ls)


@elementwise
def reversed_hazard(p, x):
    lp = log_pdf(p, x)
    f = cdf(p, x)
    if f == 0.0:
        raise DomainError("Reversed hazard needs F(x) > 0, cdf underflows at x=%s" % x)
    return math.exp(lp - math.log(f))


QUANTILE_MAX_ITER = 200


def _solve_cum_hazard(p, target):
    """x > 0 with alpha*x + gamma*x^beta = target, Newton in log x inside an analytic bracket"""
    if p.gamma == 0:
        return target / p.alpha

    upper, lower = [], []
    with np.errstate(over='ignore'):
        if p.alpha > 0:
            upper.append(target / p.alpha)
            lower.append(target / (2.0 * p.alpha))
        upper.append(float(np.power(target / p.gamma, 1.0 / p.beta)))
        lower.append(float(np.power(target / (2.0 * p.gamma), 1.0 / p.beta)))
    hi, lo = min(upper), min(lower)

    if not (math.isfinite(hi) and hi > 0):
        hi = 1.0
        while _cum_hazard(p, hi) < target:
            hi *= 2.0
        lo = 0.0

    x = hi if lo <= 0 else math.sqrt(lo * hi)
    for _ in range(QUANTILE_MAX_ITER):
        h = _cum_hazard(p, x)
        diff = h - target
        if diff == 0 or abs(diff) <= 1e-15 * target:
            return x
        if diff < 0:
            lo = x
        else:
            hi = x
        slope = x * (p.alpha + p.gamma * p.beta * x ** (p.beta - 1.0)) / h
        x_new = x * math.exp(-(math.log(h) - math.log(target)) / slope)
        if not (lo < x_new < hi):
            x_new = math.sqrt(lo * hi) if lo > 0 else 0.5 * hi
        if abs(x_new - x) <= 1e-15 * x:
            return x_new
        x = x_new

    raise NonConvergenceError("Quantile root finder did not converge for target %s with %r" % (target, p))


@elementwise
def quantile(p, u):
    """
    x_q with F(x_q) = u, solving alpha*x + gamma*x^beta = -ln(1 - Q(u)^(1/c)), Q the inverse beta ratio
    """
    if not (0.0 < u < 1.0):
        raise DomainError("Quantile level must lie in (0, 1), got %r" % u)
    # v = ln G(x_q) = ln(Q^(1/c)), target H(x_q) = -ln(1 - e^v)
    log_y = (math.log(u) + math.log(p.a) + specfun.ln_beta(p.a, p.b)) / p.a
    if log_y < SMALL_LOG_Y:
        v = log_y / p.c
    else:
        y, y_comp = specfun.inv_reg_inc_beta_pair(u, p.a, p.b)
        if y_comp == 0.0:
            raise NonConvergenceError("Quantile level %s is indistinguishable from 1 for %r" % (u, p))
        if y == 0.0:
            v = log_y / p.c
        else:
            v = (math.log(y) if y <= 0.5 else math.log1p(-y_comp)) / p.c
    target = -specfun.log1mexp(-v)
    if target <= 0.0:
        log.debug("Quantile level %s lies below the smallest positive float, returning 0", u)
        return 0.0
    return _solve_cum_hazard(p, target)


def sample(p, n, rng_seed=None):
    """
    n i.i.d. draws by inverse transform; deterministic for a given seed

    :rtype: numpy.ndarray
    """
    if int(n) != n or n < 1:
        raise ValueError("Sample size has to be a positive integer, got %r" % n)
    rng = np.random.default_rng(rng_seed)
    u = rng.random(int(n))
    u[u == 0.0] = np.finfo(float).tiny
    return np.asarray(quantile(p, u), dtype=float)


def hazard_shape(p, grid, rtol=1e-9):
    """
    Classifies the hazard over a grid: constant, increasing, decreasing, bathtub, unimodal or other

    :rtype: str
    """
    values = np.asarray(hazard(p, np.asarray(grid, dtype=float)))
    values = values[np.isfinite(values)]
    if len(values) < 2:
        return "other"
    scale = max(np.max(np.abs(values)), 1e-300)
    steps = np.diff(values)
    signs = np.where(np.abs(steps) <= rtol * scale, 0, np.sign(steps))
    signs = signs[signs != 0]
    if len(signs) == 0:
        return "constant"
    changes = np.count_nonzero(np.diff(signs))
    if changes == 0:
        return "increasing" if signs[0] > 0 else "decreasing"
    if changes == 1:
        return "bathtub" if signs[0] < 0 else "unimodal"
    return "other"
