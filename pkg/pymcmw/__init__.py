import logging

from pymcmw.dist import MWParams, McMWParams, Submodel, submodel, validate
from pymcmw.fit import Dataset, FitOptions, FitResult, fit_mle
from pymcmw.gof import ModelComparison, compare

log = logging.getLogger('pymcmw')

__all__ = [
    "McMWParams", "MWParams", "Submodel", "submodel", "validate",
    "Dataset", "FitOptions", "FitResult", "fit_mle",
    "ModelComparison", "compare",
]
