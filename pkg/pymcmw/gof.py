import logging
import math

import numpy as np

from pymcmw import dist
from pymcmw.dist import Submodel
from pymcmw.fit import fit_mle
from pymcmw.utilities import DomainError, NonConvergenceError

log = logging.getLogger('gof')


class ModelComparison(object):
    """
    One row of the comparison table

    :type fit: pymcmw.fit.FitResult
    """

    def __init__(self, model_name, k, neg2_loglik, aic, aicc, ks, fit=None, error=None):
        self.model_name = model_name
        self.k = k
        self.neg2_loglik = neg2_loglik
        self.aic = aic
        self.aicc = aicc
        self.ks = ks
        self.fit = fit
        self.error = error

    @classmethod
    def from_fit(cls, result, d):
        """
        :type result: FitResult
        """
        loglik = result.loglik
        try:
            corrected = aicc(result.k, loglik, d.n)
        except DomainError as exc:
            log.warning("AICC undefined for %s: %s", result.model.value, exc)
            corrected = float("nan")
        return cls(result.model.value, result.k, -2.0 * loglik, aic(result.k, loglik), corrected,
                   ks_statistic(result.params, d), fit=result)

    @classmethod
    def failed(cls, model, error):
        nan = float("nan")
        return cls(model.value, model.k, nan, nan, nan, nan, error=error)

    def as_dict(self):
        return {
            "model": self.model_name,
            "k": self.k,
            "neg2_loglik": self.neg2_loglik,
            "aic": self.aic,
            "aicc": self.aicc,
            "ks": self.ks,
            "converged": self.fit.converged if self.fit else False,
            "error": self.error,
        }

    def __repr__(self):
        return "ModelComparison(%s)" % self.as_dict()


def ks_statistic(p, d):
    """
    One-sample Kolmogorov-Smirnov distance sup |F_n - F|; tied values are one jump of the empirical cdf

    :type d: pymcmw.fit.Dataset
    """
    values, counts = np.unique(d.values, return_counts=True)
    fitted = np.asarray(dist.cdf(p, values), dtype=float)
    after = np.cumsum(counts) / float(d.n)
    before = after - counts / float(d.n)
    stat = max(np.max(after - fitted), np.max(fitted - before))
    return float(min(1.0, max(0.0, stat)))


def aic(k, loglik):
    return 2.0 * k - 2.0 * loglik


def aicc(k, loglik, n):
    """AIC + 2k(k+1)/(n-k-1), defined for n > k+1"""
    if not n > k + 1:
        raise DomainError("AICC needs n > k + 1, got n=%s, k=%s" % (n, k))
    return aic(k, loglik) + 2.0 * k * (k + 1.0) / (n - k - 1.0)


def compare(d, models, opts=None):
    """
    Fits every model, smallest first, lifting each optimum into the richer models that nest it,
    and returns rows sorted by AIC; failed fits are kept as rows at the end

    :type d: pymcmw.fit.Dataset
    :rtype: list[ModelComparison]
    """
    parsed = sorted((Submodel.parse(model) for model in models), key=lambda model: model.k)
    rows = []
    done = []
    for model in parsed:
        warm = [result for result in done if model.nests(result.model)]
        try:
            result = fit_mle(d, model, opts, warm_starts=warm or None)
        except (NonConvergenceError, ValueError, ArithmeticError) as exc:
            log.warning("Fit of %s failed: %s", model.value, exc)
            rows.append(ModelComparison.failed(model, str(exc)))
            continue
        done.append(result)
        rows.append(ModelComparison.from_fit(result, d))

    return sorted(rows, key=lambda row: (row.error is not None, row.aic if math.isfinite(row.aic) else math.inf))
