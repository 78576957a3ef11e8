import math
import unittest

import numpy as np
from scipy import integrate, special

from pymcmw import specfun
from pymcmw.utilities import DomainError
from tests import rng_for


class LogGammaTest(unittest.TestCase):
    def test_known_values(self):
        self.assertEqual(0.0, specfun.ln_gamma(1.0))
        self.assertAlmostEqual(0.5723649429247001, specfun.ln_gamma(0.5), places=13)
        self.assertAlmostEqual(math.lgamma(10.3), specfun.ln_gamma(10.3), delta=1e-13 * abs(math.lgamma(10.3)))

    def test_range(self):
        for x in (1e-6, 1e-3, 0.7, 3.5, 123.4, 1e6):
            expected = special.gammaln(x)
            self.assertLessEqual(abs(specfun.ln_gamma(x) - expected), 1e-13 * max(1.0, abs(expected)))

    def test_domain(self):
        self.assertRaises(DomainError, specfun.ln_gamma, 0.0)
        self.assertRaises(DomainError, specfun.ln_gamma, -1.5)
        self.assertRaises(DomainError, specfun.ln_gamma, float("nan"))


class DigammaTest(unittest.TestCase):
    def test_known_values(self):
        self.assertAlmostEqual(-0.5772156649015329, specfun.digamma(1.0), places=10)
        self.assertAlmostEqual(0.42278433509846713, specfun.digamma(2.0), places=10)

    def test_recurrence(self):
        for x in (0.01, 0.7, 3.3, 42.0):
            self.assertAlmostEqual(specfun.digamma(x) + 1.0 / x, specfun.digamma(x + 1.0), places=10)

    def test_finite_difference_of_log_gamma(self):
        h = 1e-6
        for x in np.linspace(0.1, 100, 37):
            numeric = (specfun.ln_gamma(x + h) - specfun.ln_gamma(x - h)) / (2 * h)
            self.assertLess(abs(numeric - specfun.digamma(x)), 1e-6, x)

    def test_domain(self):
        self.assertRaises(DomainError, specfun.digamma, 0.0)


class LogBetaTest(unittest.TestCase):
    def test_values(self):
        self.assertAlmostEqual(0.0, specfun.ln_beta(1, 1), places=14)
        self.assertAlmostEqual(math.log(1.0 / 12), specfun.ln_beta(2, 3), places=10)
        expected = specfun.ln_gamma(0.091) + specfun.ln_gamma(0.090) - specfun.ln_gamma(0.181)
        self.assertAlmostEqual(expected, specfun.ln_beta(0.091, 0.090), places=12)

    def test_domain(self):
        self.assertRaises(DomainError, specfun.ln_beta, 0, 1)
        self.assertRaises(DomainError, specfun.ln_beta, 1, -2)


class Log1mexpTest(unittest.TestCase):
    def test_both_branches(self):
        for t in (1e-12, 0.1, 0.69, 0.7, 5.0, 50.0):
            expected = math.log(-math.expm1(-t)) if t < 1 else math.log1p(-math.exp(-t))
            self.assertAlmostEqual(expected, specfun.log1mexp(t), delta=1e-12 * abs(expected))

    def test_array(self):
        out = specfun.log1mexp(np.array([0.5, 2.0]))
        self.assertEqual((2,), out.shape)


class IncompleteBetaTest(unittest.TestCase):
    def test_trivial(self):
        self.assertEqual(0.0, specfun.reg_inc_beta(0.0, 2.0, 3.0))
        self.assertEqual(1.0, specfun.reg_inc_beta(1.0, 2.0, 3.0))
        self.assertAlmostEqual(0.5, specfun.reg_inc_beta(0.5, 1.0, 1.0), places=14)

    def test_quadrature_oracle(self):
        a, b = 2.5, 1.7
        integral, _ = integrate.quad(lambda w: w ** (a - 1) * (1 - w) ** (b - 1), 0, 0.3, epsabs=1e-14, epsrel=1e-13)
        self.assertAlmostEqual(integral / math.exp(specfun.ln_beta(a, b)), specfun.reg_inc_beta(0.3, a, b), delta=1e-12)

    def test_against_scipy(self):
        rng = rng_for(1)
        for _ in range(200):
            a, b = np.exp(rng.uniform(math.log(0.05), math.log(50), 2))
            y = rng.uniform()
            self.assertAlmostEqual(special.betainc(a, b, y), specfun.reg_inc_beta(y, a, b), delta=1e-12)

    def test_small_shapes(self):
        for y in (1e-300, 1e-40, 1e-5, 0.3, 0.999999):
            self.assertAlmostEqual(special.betainc(0.091, 0.090, y), specfun.reg_inc_beta(y, 0.091, 0.090),
                                   delta=1e-12)

    def test_symmetry(self):
        rng = rng_for(2)
        for _ in range(200):
            a, b = np.exp(rng.uniform(math.log(0.05), math.log(50), 2))
            y = rng.uniform()
            self.assertAlmostEqual(1.0, specfun.reg_inc_beta(y, a, b) + specfun.reg_inc_beta(1 - y, b, a), delta=1e-12)

    def test_monotone(self):
        rng = rng_for(3)
        grid = np.linspace(0, 1, 401)
        for _ in range(10):
            a, b = np.exp(rng.uniform(math.log(0.05), math.log(50), 2))
            values = [specfun.reg_inc_beta(y, a, b) for y in grid]
            self.assertGreaterEqual(np.min(np.diff(values)), -1e-14, (a, b))

    def test_domain(self):
        self.assertRaises(DomainError, specfun.reg_inc_beta, -0.1, 1, 1)
        self.assertRaises(DomainError, specfun.reg_inc_beta, 1.1, 1, 1)
        self.assertRaises(DomainError, specfun.reg_inc_beta, 0.5, 0, 1)


class InverseIncompleteBetaTest(unittest.TestCase):
    def test_endpoints(self):
        self.assertEqual(0.0, specfun.inv_reg_inc_beta(0.0, 2.0, 3.0))
        self.assertEqual(1.0, specfun.inv_reg_inc_beta(1.0, 2.0, 3.0))
        self.assertAlmostEqual(0.5, specfun.inv_reg_inc_beta(0.5, 1.0, 1.0), places=12)

    def test_round_trip_small_shapes(self):
        y = specfun.inv_reg_inc_beta(0.37, 0.091, 0.090)
        self.assertAlmostEqual(0.37, specfun.reg_inc_beta(y, 0.091, 0.090), delta=1e-10)

    def test_round_trip_grid(self):
        rng = rng_for(4)
        levels = (1e-6, 1e-3, 0.1, 0.37, 0.5, 0.9, 0.999, 1 - 1e-6)
        for _ in range(20):
            a, b = rng.uniform(0.7, 5.0, 2)
            for u in levels:
                y = specfun.inv_reg_inc_beta(u, a, b)
                self.assertAlmostEqual(u, specfun.reg_inc_beta(y, a, b), delta=1e-10, msg=(u, a, b))

    def test_pair_keeps_complement(self):
        y, y_comp = specfun.inv_reg_inc_beta_pair(1 - 1e-9, 2.0, 3.0)
        self.assertGreater(y_comp, 0.0)
        self.assertAlmostEqual(1e-9, specfun.reg_inc_beta(y_comp, 3.0, 2.0), delta=1e-15)

    def test_against_scipy(self):
        for u, a, b in ((0.2, 2.0, 3.0), (0.8, 0.5, 0.5), (0.01, 7.0, 1.5)):
            self.assertAlmostEqual(special.betaincinv(a, b, u), specfun.inv_reg_inc_beta(u, a, b), delta=1e-10)

    def test_domain(self):
        self.assertRaises(DomainError, specfun.inv_reg_inc_beta, 1.5, 1, 1)
