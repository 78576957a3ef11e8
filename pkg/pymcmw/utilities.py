"""
This module offers shared plumbing: exception types, element-wise evaluation and text parsing
"""

import functools
import logging

import numpy as np

log = logging.getLogger(__name__)


class DomainError(ValueError):
    """Argument outside the domain of an operation"""


class ParameterError(ValueError):
    """
    Parameter vector violates the family constraints

    :type violations: list[str]
    """

    def __init__(self, violations):
        self.violations = list(violations)
        super(ParameterError, self).__init__("; ".join(self.violations))


class ExistenceError(ValueError):
    """Requested quantity does not exist (e.g. MGF beyond the tail rate)"""


class NonConvergenceError(RuntimeError):
    def __init__(self, message, diagnostics=None):
        super(NonConvergenceError, self).__init__(message)
        self.diagnostics = diagnostics or []


class QuadratureError(RuntimeError):
    def __init__(self, message, value=None, error=None):
        super(QuadratureError, self).__init__(message)
        self.value = value
        self.error = error


class SingularInformationError(RuntimeError):
    def __init__(self, message, condition=None):
        super(SingularInformationError, self).__init__(message)
        self.condition = condition


def elementwise(fn):
    """
    Lets a scalar function ``fn(p, x, ...)`` accept array-like ``x``, returning an array of the same shape
    """

    @functools.wraps(fn)
    def wrapper(p, x, *args, **kwargs):
        if np.ndim(x) == 0:
            return fn(p, float(x), *args, **kwargs)
        arr = np.asarray(x, dtype=float)
        out = np.empty(arr.shape)
        for idx, val in np.ndenumerate(arr):
            out[idx] = fn(p, float(val), *args, **kwargs)
        return out

    return wrapper


def parse_floats(text, sep=","):
    """Parse "1,2.5,3" into a list of floats"""
    values = []
    for chunk in text.split(sep):
        chunk = chunk.strip()
        if not chunk:
            continue
        try:
            values.append(float(chunk))
        except ValueError:
            raise ValueError("Not a number: %r" % chunk)
    return values


def parse_grid(text):
    """
    Parse "MIN:MAX:N" into a numpy grid

    :rtype: numpy.ndarray
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("Grid has to be MIN:MAX:N, got %r" % text)
    lo, hi, points = float(parts[0]), float(parts[1]), int(parts[2])
    if not lo < hi:
        raise ValueError("Grid min has to be less than max: %s >= %s" % (lo, hi))
    if points < 2:
        raise ValueError("Grid needs at least 2 points, got %s" % points)
    return np.linspace(lo, hi, points)
