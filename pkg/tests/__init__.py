import logging
import sys

import numpy as np

from pymcmw import datasets
from pymcmw.dist import McMWParams, submodel
from pymcmw.fit import Dataset

logging.basicConfig(level=logging.DEBUG if 'pydevd' in sys.modules else logging.INFO)

log = logging.getLogger('test')

PUBLISHED_MCMW = McMWParams.validate(0.599, 1.209, 1.063, 0.091, 0.090, 9.169)
PUBLISHED_MW = submodel("MW", 0.043, 0.492, 0.619)
EXPONENTIAL_1 = submodel("Exponential", 1.0)

# randomized box of the series and normalization checks
BOX = {
    "alpha": (0.2, 3.0),
    "gamma": (0.2, 3.0),
    "beta": (0.5, 3.0),
    "a": (0.5, 4.0),
    "b": (0.5, 4.0),
    "c": (0.5, 4.0),
}


def failure_times():
    """
    :rtype: Dataset
    """
    return Dataset(datasets.FAILURE_TIMES, label=datasets.FAILURE_TIMES_LABEL)


def random_params(rng, box=None):
    """
    :type rng: numpy.random.Generator
    :rtype: McMWParams
    """
    box = box or BOX
    return McMWParams.validate(*[rng.uniform(*box[name]) for name in ("alpha", "gamma", "beta", "a", "b", "c")])


def series_friendly_params(rng):
    """
    Parameters inside BOX where the moment series is a finite sum in j and m (integer b and c*a)
    and the s-series decays fast (beta < 1, small gamma / alpha^beta)
    """
    c = float(rng.choice([1.0, 2.0]))
    a = float(rng.integers(1, 5)) / c
    b = float(rng.integers(1, 5))
    return McMWParams.validate(rng.uniform(1.0, 3.0), rng.uniform(0.2, 0.5), rng.uniform(0.5, 0.9), a, b, c)


def integer_b_params(rng, b=2.0):
    p = random_params(rng)
    return p.replace(b=b)


def rng_for(seed):
    return np.random.default_rng(seed)
