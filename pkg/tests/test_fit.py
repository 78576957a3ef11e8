import math
import unittest

import numpy as np

from pymcmw import datasets, dist, fit
from pymcmw.dist import Submodel
from pymcmw.fit import Dataset, FitOptions
from pymcmw.utilities import DomainError, NonConvergenceError, SingularInformationError
from tests import EXPONENTIAL_1, PUBLISHED_MCMW, PUBLISHED_MW, log, random_params, rng_for, failure_times


class DatasetTest(unittest.TestCase):
    def test_sorted_and_original(self):
        d = Dataset([3.0, 1.0, 2.0], label="three")
        self.assertEqual([1.0, 2.0, 3.0], list(d.values))
        self.assertEqual([3.0, 1.0, 2.0], list(d.original))
        self.assertEqual(3, d.n)
        self.assertEqual(2.0, d.summary()["median"])

    def test_rejects(self):
        self.assertRaises(DomainError, Dataset, [])
        self.assertRaises(DomainError, Dataset, [1.0, -1.0])
        self.assertRaises(DomainError, Dataset, [1.0, 0.0])
        self.assertRaises(DomainError, Dataset, [1.0, float("nan")])


class FitOptionsTest(unittest.TestCase):
    def test_replace(self):
        opts = FitOptions().replace(starts=3)
        self.assertEqual(3, opts.starts)
        self.assertEqual(FitOptions.LEVEL, opts.level)

    def test_invalid(self):
        self.assertRaises(ValueError, FitOptions, starts=0)
        self.assertRaises(ValueError, FitOptions, level=1.0)
        self.assertRaises(ValueError, FitOptions, workers=0)


class LikelihoodTest(unittest.TestCase):
    def test_published_values(self):
        d = failure_times()
        self.assertAlmostEqual(102.320, fit.neg_log_likelihood(PUBLISHED_MW, d), delta=0.01)
        self.assertAlmostEqual(98.404, fit.neg_log_likelihood(PUBLISHED_MCMW, d), delta=0.05)

    def test_single_observation(self):
        self.assertAlmostEqual(1.0, fit.neg_log_likelihood(EXPONENTIAL_1, Dataset([1.0])), places=12)

    def test_matches_density(self):
        rng = rng_for(30)
        d = failure_times()
        for _ in range(10):
            p = random_params(rng)
            expected = -float(np.sum(dist.log_pdf(p, d.values)))
            self.assertAlmostEqual(expected, fit.neg_log_likelihood(p, d), delta=1e-10 * max(1.0, abs(expected)))

    def test_invalid_is_infinite(self):
        d = failure_times()
        self.assertEqual(math.inf, fit.neg_log_likelihood((1.0, 1.0, -1.0, 1.0, 1.0, 1.0), d))
        self.assertEqual(math.inf, fit.neg_log_likelihood((0.0, 0.0, 1.0, 1.0, 1.0, 1.0), d))
        self.assertEqual(math.inf, fit.neg_log_likelihood((1.0, 1.0, 1.0, 1.0, float("nan"), 1.0), d))


class ScoreTest(unittest.TestCase):
    def _check_finite_differences(self, p, d, free):
        analytic_score = fit.score(p, d)
        vec = np.asarray(p, dtype=float)
        for idx in free:
            h = 1e-6 * max(1.0, vec[idx])
            up, down = vec.copy(), vec.copy()
            up[idx] += h
            down[idx] -= h
            numeric = -(fit.neg_log_likelihood(up, d) - fit.neg_log_likelihood(down, d)) / (2 * h)
            self.assertAlmostEqual(numeric, analytic_score[idx],
                                   delta=1e-6 * max(1.0, abs(numeric)), msg=(p, dist.PARAM_NAMES[idx]))

    def test_against_finite_differences(self):
        rng = rng_for(31)
        d = failure_times()
        for _ in range(20):
            self._check_finite_differences(random_params(rng), d, range(6))

    def test_submodels_against_finite_differences(self):
        rng = rng_for(32)
        d = failure_times()
        mw_free = fit._free_index(Submodel.MW.fixed_mask())
        weibull_free = fit._free_index(Submodel.WEIBULL.fixed_mask())
        for _ in range(20):
            p = random_params(rng)
            self._check_finite_differences(p.replace(a=1.0, b=1.0, c=1.0), d, mw_free)
            self._check_finite_differences(dist.submodel("Weibull", p.gamma, p.beta), d, weibull_free)

    def test_exponential(self):
        d = Dataset([0.5, 1.0, 2.5])
        # dl/dalpha = n/alpha - sum x
        self.assertAlmostEqual(3.0 - 4.0, fit.score(EXPONENTIAL_1, d)[0], places=10)

    def test_invalid(self):
        self.assertTrue(np.all(np.isnan(fit.score((0.0, 0.0, 1.0, 1.0, 1.0, 1.0), failure_times()))))


class InformationTest(unittest.TestCase):
    def test_symmetric(self):
        info = fit.observed_information(PUBLISHED_MW, failure_times(), Submodel.MW.fixed_mask())
        self.assertEqual((3, 3), info.shape)
        self.assertTrue(np.allclose(info, info.T))
        raw = fit.observed_information(PUBLISHED_MW, failure_times(), Submodel.MW.fixed_mask(), symmetrize=False)
        self.assertTrue(np.allclose(raw, info, rtol=1e-3, atol=1e-3))

    def test_full_dimension(self):
        self.assertEqual((6, 6), fit.observed_information(PUBLISHED_MCMW, failure_times()).shape)

    def test_exponential(self):
        d = Dataset([0.5, 1.0, 2.5, 0.7])
        info = fit.observed_information(EXPONENTIAL_1, d, Submodel.EXPONENTIAL.fixed_mask())
        self.assertAlmostEqual(4.0, info[0, 0], delta=1e-6)


class CovarianceTest(unittest.TestCase):
    def test_identity(self):
        cov, ses, cis = fit.covariance_and_ci(np.eye(2), [0.0, 0.0])
        self.assertTrue(np.allclose(np.eye(2), cov))
        self.assertEqual([1.0, 1.0], ses)
        self.assertAlmostEqual(-1.959963985, cis[0][0], places=8)
        self.assertAlmostEqual(1.959963985, cis[0][1], places=8)

    def test_level(self):
        _, _, cis = fit.covariance_and_ci([[4.0]], [1.0], level=0.9)
        self.assertAlmostEqual(1.0 + 1.644853627 * 0.5, cis[0][1], places=8)
        self.assertRaises(DomainError, fit.covariance_and_ci, [[1.0]], [1.0], level=1.5)

    def test_singular(self):
        with self.assertRaises(SingularInformationError) as ctx:
            fit.covariance_and_ci([[1.0, 1.0], [1.0, 1.0]], [1.0, 1.0])
        self.assertIsNotNone(ctx.exception.condition)

    def test_negative_variance(self):
        _, ses, cis = fit.covariance_and_ci(np.diag([1.0, -1.0]), [0.0, 0.0], names=["x", "y"])
        self.assertEqual(1.0, ses[0])
        self.assertIsNone(ses[1])
        self.assertIsNone(cis[1])


class FitMleTest(unittest.TestCase):
    def test_too_few_observations(self):
        self.assertRaises(NonConvergenceError, fit.fit_mle, Dataset([1.0, 2.0]), Submodel.MCMW)

    def test_exponential_closed_form(self):
        sample = dist.sample(dist.submodel("Exponential", 2.0), 400, rng_seed=5)
        d = Dataset(sample)
        result = fit.fit_mle(d, "Exponential", FitOptions(starts=3))
        alpha = 1.0 / np.mean(sample)
        self.assertTrue(result.converged)
        self.assertAlmostEqual(alpha, result.params.alpha, delta=1e-5 * alpha)
        self.assertEqual(0.0, result.params.gamma)
        self.assertAlmostEqual(d.n / result.params.alpha ** 2, result.information[0, 0], delta=1e-4 * d.n)
        self.assertAlmostEqual(result.params.alpha / math.sqrt(d.n), result.std_errors["alpha"], delta=1e-6)

    def test_mw_builtin(self):
        result = fit.fit_mle(failure_times(), Submodel.MW, FitOptions(starts=8))
        log.info("MW fit: %r %s", result, result.params)
        self.assertTrue(result.converged)
        self.assertLessEqual(result.neg_loglik, 102.33)
        self.assertGreater(result.neg_loglik, 102.27)
        self.assertLess(result.score_norm, 1e-3)
        reference = datasets.REFERENCE_FITS["MW"]["params"]
        for name, value in reference.items():
            self.assertAlmostEqual(value, getattr(result.params, name), delta=0.05, msg=name)
        self.assertEqual(1.0, result.params.c)
        self.assertEqual(["alpha", "gamma", "beta"], sorted(result.std_errors, key=dist.PARAM_NAMES.index))

    def test_mcmw_builtin(self):
        result = fit.fit_mle(failure_times(), Submodel.MCMW)
        log.info("McMW fit: %r %s", result, result.params)
        self.assertTrue(result.converged)
        self.assertLess(result.score_norm, 1e-3)
        self.assertIsNone(result.diagnostics[result.start_index]["boundary"])
        for name in Submodel.MCMW.free_names:
            self.assertLess(abs(math.log(getattr(result.params, name))), fit.RUNAWAY_LOG, name)
        self.assertLessEqual(result.neg_loglik, 98.45)
        mw = fit.neg_log_likelihood(PUBLISHED_MW, failure_times())
        self.assertLess(result.neg_loglik, mw)

    def test_simulated_recovery(self):
        truth = dist.submodel("MW", 1.0, 1.0, 2.0)
        d = Dataset(dist.sample(truth, 5000, rng_seed=7))
        result = fit.fit_mle(d, Submodel.MW, FitOptions(starts=5))
        self.assertTrue(result.converged)
        for name in ("alpha", "gamma", "beta"):
            self.assertAlmostEqual(getattr(truth, name), getattr(result.params, name), delta=0.15, msg=name)
            lo, hi = result.conf_intervals[name]
            self.assertLess(lo, getattr(result.params, name))
            self.assertGreater(hi, getattr(result.params, name))

    def test_starts_never_get_worse(self):
        result = fit.fit_mle(failure_times(), Submodel.WEIBULL, FitOptions(starts=6), warm_starts=[])
        self.assertEqual(6, len(result.diagnostics))
        for record in result.diagnostics:
            if record["initial_nll"] is not None and math.isfinite(record["nll"]):
                self.assertLessEqual(record["nll"], record["initial_nll"] + 1e-9)
        self.assertTrue(result.converged)
        best = min(r["nll"] for r in result.diagnostics if r["converged"])
        self.assertEqual(best, result.neg_loglik)
        self.assertEqual(best, result.diagnostics[result.start_index]["nll"])

    def test_deterministic(self):
        opts = FitOptions(starts=4, seed=11)
        first = fit.fit_mle(failure_times(), Submodel.WEIBULL, opts)
        second = fit.fit_mle(failure_times(), Submodel.WEIBULL, opts.replace(workers=3))
        self.assertEqual(tuple(first.params), tuple(second.params))
        self.assertEqual(first.start_index, second.start_index)

    def test_warm_start_nests(self):
        d = failure_times()
        weibull = fit.fit_mle(d, Submodel.WEIBULL, FitOptions(starts=4))
        mw = fit.fit_mle(d, Submodel.MW, FitOptions(starts=4), warm_starts=[weibull])
        self.assertEqual("warm Weibull", mw.diagnostics[0]["origin"])
        self.assertLessEqual(mw.neg_loglik, weibull.neg_loglik + 1e-9)

    def test_as_dict(self):
        result = fit.fit_mle(failure_times(), Submodel.WEIBULL, FitOptions(starts=2), warm_starts=[])
        data = result.as_dict()
        self.assertEqual("Weibull", data["model"])
        self.assertEqual(2, data["k"])
        self.assertEqual(["gamma", "beta"], data["free"])
        self.assertEqual(2, len(data["starts"]))

    def test_profile_summary(self):
        result = fit.fit_mle(failure_times(), Submodel.MW, FitOptions(starts=3))
        reference = datasets.REFERENCE_FITS["MW"]
        rows = fit.profile_summary(result, {name: {"estimate": reference["params"][name], "se": reference["se"][name]}
                                            for name in reference["params"]})
        self.assertEqual(["alpha", "gamma", "beta"], [row["name"] for row in rows])
        self.assertEqual(0.043, rows[0]["ref_estimate"])
        self.assertIsNone(rows[0]["ref_ci"])


class WinnerTest(unittest.TestCase):
    @staticmethod
    def _record(index, nll, converged, boundary=None):
        return {"index": index, "nll": nll, "converged": converged, "boundary": boundary}

    def test_converged_beats_lower_unconverged(self):
        outcomes = [(self._record(0, 94.49, True), "interior"),
                    (self._record(1, 91.93, False, boundary="a"), "runaway"),
                    (self._record(2, 93.0, False), "stalled")]
        record, params = fit._pick_winner(outcomes)
        self.assertEqual(0, record["index"])
        self.assertEqual("interior", params)

    def test_interior_before_runaway(self):
        outcomes = [(self._record(0, 91.93, False, boundary="a"), "runaway"),
                    (self._record(1, 95.0, False), "stalled"),
                    (self._record(2, math.inf, False), None)]
        self.assertEqual(1, fit._pick_winner(outcomes)[0]["index"])

    def test_ties_and_failures(self):
        outcomes = [(self._record(0, 1.0, True), "first"), (self._record(1, 1.0, True), "second")]
        self.assertEqual("first", fit._pick_winner(outcomes)[1])
        self.assertIsNone(fit._pick_winner([(self._record(0, math.inf, False), None)]))

    def test_runaway_detection(self):
        obj = fit._Objective(Submodel.MCMW, failure_times())
        self.assertEqual("a", fit._runaway(obj, PUBLISHED_MCMW.replace(a=7.2e12)))
        self.assertEqual("c", fit._runaway(obj, PUBLISHED_MCMW.replace(c=1e-13)))
        self.assertIsNone(fit._runaway(obj, PUBLISHED_MCMW))


class CoverageTest(unittest.TestCase):
    def test_exponential_wald_coverage(self):
        truth = dist.submodel("Exponential", 1.5)
        opts = FitOptions(starts=1)
        covered = 0
        reps = 500
        for rep in range(reps):
            d = Dataset(dist.sample(truth, 200, rng_seed=1000 + rep))
            lo, hi = fit.fit_mle(d, Submodel.EXPONENTIAL, opts, warm_starts=[]).conf_intervals["alpha"]
            covered += lo <= truth.alpha <= hi
        log.info("Wald coverage %s/%s", covered, reps)
        self.assertGreaterEqual(covered, 0.90 * reps)
        self.assertLessEqual(covered, 0.99 * reps)
