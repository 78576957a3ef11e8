"""
Maximum-likelihood estimation for the McMW family and its submodels.

Fits run in log-parameter space over the free parameters of a submodel: every start gets a Nelder-Mead pass,
a BFGS pass with the analytic score, and a Newton polish on the observed information. The best converged start
wins, ties broken by start index, so results are deterministic for a given seed. Starts that run off to the
log clamp are kept in the diagnostics as boundary runaways and rank after every interior start.
"""
import logging
import math
import queue
import threading
import warnings

import numpy as np
from scipy import optimize, special, stats

from pymcmw import dist
from pymcmw.dist import PARAM_NAMES, McMWParams, Submodel
from pymcmw.utilities import DomainError, NonConvergenceError, SingularInformationError

log = logging.getLogger('fit')

LOG_BOUND = 30.0
# a free value past e^(+-RUNAWAY_LOG) has run off towards the clamp
RUNAWAY_LOG = 27.0
INFO_STEP = 1e-5
MAX_CONDITION = 1e14
# converged fits never carry a score max-norm above this, whatever n is
MAX_SCORE_NORM = 1e-3
SHAPE_PROBES = ((0.5, 0.5, 2.0), (0.2, 0.2, 5.0), (0.1, 0.1, 10.0))
NESTED_SEED_MODELS = (Submodel.MW, Submodel.WEIBULL, Submodel.LFR, Submodel.RAYLEIGH, Submodel.EXPONENTIAL)


class Dataset(object):
    """
    Positive failure times, kept sorted ascending; the order of ingestion is in ``original``

    :type values: numpy.ndarray
    :type original: numpy.ndarray
    """

    def __init__(self, values, label=None):
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size == 0:
            raise DomainError("Dataset is empty")
        bad = arr[~np.isfinite(arr) | ~(arr > 0)]
        if bad.size:
            raise DomainError("Failure times must be positive and finite, got %r" % float(bad[0]))
        self.original = arr.copy()
        self.values = np.sort(arr)
        self.label = label

    @property
    def n(self):
        return len(self.values)

    def summary(self):
        return {
            "n": self.n,
            "min": float(self.values[0]),
            "max": float(self.values[-1]),
            "mean": float(np.mean(self.values)),
            "median": float(np.median(self.values)),
            "std": float(np.std(self.values, ddof=1)) if self.n > 1 else 0.0,
        }

    def __repr__(self):
        return "Dataset(n=%s, label=%r)" % (self.n, self.label)


class FitOptions(object):
    STARTS = 20
    SEED = 0
    LEVEL = 0.95
    MAXITER_SIMPLEX = 4000
    FTOL = 1e-10
    SCORE_TOL_PER_OBS = 1e-4
    NEWTON_STEPS = 30
    WORKERS = 1

    def __init__(self, starts=STARTS, seed=SEED, level=LEVEL, maxiter_simplex=MAXITER_SIMPLEX, ftol=FTOL,
                 score_tol_per_obs=SCORE_TOL_PER_OBS, newton_steps=NEWTON_STEPS, workers=WORKERS):
        if int(starts) != starts or starts < 1:
            raise ValueError("starts has to be a positive integer, got %r" % starts)
        if not 0 < level < 1:
            raise ValueError("level has to lie in (0, 1), got %r" % level)
        if int(workers) != workers or workers < 1:
            raise ValueError("workers has to be a positive integer, got %r" % workers)
        self.starts = int(starts)
        self.seed = seed
        self.level = float(level)
        self.maxiter_simplex = int(maxiter_simplex)
        self.ftol = float(ftol)
        self.score_tol_per_obs = float(score_tol_per_obs)
        self.newton_steps = int(newton_steps)
        self.workers = int(workers)

    def score_tolerance(self, n):
        return min(self.score_tol_per_obs * n, MAX_SCORE_NORM)

    def replace(self, **kwargs):
        merged = dict(self.__dict__)
        merged.update(kwargs)
        return FitOptions(**merged)

    def __repr__(self):
        return "FitOptions(%s)" % self.__dict__


class FitResult(object):
    """
    :type model: Submodel
    :type params: McMWParams
    :type cov: numpy.ndarray
    :type information: numpy.ndarray
    :type std_errors: dict[str,float]
    :type conf_intervals: dict[str,tuple]
    :type diagnostics: list[dict]
    """

    def __init__(self, model, params, neg_loglik, n):
        self.model = model
        self.params = params
        self.neg_loglik = neg_loglik
        self.n = n
        self.converged = False
        self.iterations = 0
        self.score_norm = float("nan")
        self.start_index = None
        self.information = None
        self.cov = None
        self.std_errors = {}
        self.conf_intervals = {}
        self.level = None
        self.diagnostics = []
        self.warnings = []

    @property
    def loglik(self):
        return -self.neg_loglik

    @property
    def k(self):
        return self.model.k

    @property
    def free_names(self):
        return self.model.free_names

    @property
    def fixed_mask(self):
        return self.model.fixed_mask()

    def estimates(self):
        return np.array([getattr(self.params, name) for name in self.free_names])

    def as_dict(self):
        return {
            "model": self.model.value,
            "n": self.n,
            "k": self.k,
            "params": self.params._asdict(),
            "free": list(self.free_names),
            "neg_loglik": self.neg_loglik,
            "converged": self.converged,
            "iterations": self.iterations,
            "score_norm": self.score_norm,
            "start_index": self.start_index,
            "std_errors": self.std_errors,
            "level": self.level,
            "conf_intervals": {name: (list(ci) if ci else None) for name, ci in self.conf_intervals.items()},
            "cov": self.cov.tolist() if self.cov is not None else None,
            "warnings": list(self.warnings),
            "starts": self.diagnostics,
        }

    def __repr__(self):
        return "FitResult(%s, -loglik=%.6f, converged=%s)" % (self.model.value, self.neg_loglik, self.converged)


def _as_vector(p):
    return np.asarray(p, dtype=float)


def _interior(vec):
    alpha, gamma, beta, a, b, c = vec
    return (np.all(np.isfinite(vec)) and alpha >= 0 and gamma >= 0 and alpha + gamma > 0
            and beta > 0 and a > 0 and b > 0 and c > 0)


def neg_log_likelihood(p, d):
    """
    -l(p; d) in the expanded form: n ln c + n ln Gamma(a+b) - n ln Gamma(a) - n ln Gamma(b) + sum ln h0 - sum H
    + (ac-1) sum ln G + (b-1) sum ln(1 - G^c); +inf where any term is undefined

    :type d: Dataset
    """
    vec = _as_vector(p)
    if not _interior(vec):
        return math.inf
    alpha, gamma, beta, a, b, c = vec
    x = d.values
    n = d.n
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        h, log_g, log_comp = dist._log_parts(McMWParams(*vec), x)
        loglik = (n * math.log(c) + n * special.gammaln(a + b) - n * special.gammaln(a) - n * special.gammaln(b)
                  + np.sum(np.log(alpha + gamma * beta * np.power(x, beta - 1.0))) - np.sum(h)
                  + (a * c - 1.0) * np.sum(log_g) + (b - 1.0) * np.sum(log_comp))
    if not math.isfinite(loglik):
        return math.inf
    return -float(loglik)


def score(p, d):
    """
    Analytic gradient of l (not -l) in (alpha, gamma, beta, a, b, c) order.
    With D = -1 + (ac-1) S/G - c(b-1) G^(c-1) S/(1-G^c), S = exp(-H):

        dl/dtheta = sum h0_theta / h0 + sum H_theta * D    for theta in (alpha, gamma, beta)
        dl/da = n psi(a+b) - n psi(a) + c sum ln G
        dl/db = n psi(a+b) - n psi(b) + sum ln(1 - G^c)
        dl/dc = n/c + a sum ln G - (b-1) sum G^c ln G / (1 - G^c)

    :rtype: numpy.ndarray
    """
    vec = _as_vector(p)
    if not _interior(vec):
        return np.full(6, np.nan)
    alpha, gamma, beta, a, b, c = vec
    x = d.values
    n = d.n
    with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
        h, log_g, log_comp = dist._log_parts(McMWParams(*vec), x)
        log_x = np.log(x)
        x_beta = np.power(x, beta)
        x_beta1 = np.power(x, beta - 1.0)
        h0 = alpha + gamma * beta * x_beta1

        survival_over_g = np.exp(-h - log_g)
        tail_ratio = np.exp((c - 1.0) * log_g - h - log_comp)
        common = -1.0 + (a * c - 1.0) * survival_over_g - c * (b - 1.0) * tail_ratio

        d_alpha = np.sum(1.0 / h0) + np.sum(x * common)
        d_gamma = np.sum(beta * x_beta1 / h0) + np.sum(x_beta * common)
        d_beta = (np.sum(gamma * x_beta1 * (1.0 + beta * log_x) / h0)
                  + np.sum(gamma * x_beta * log_x * common))

        psi_ab = special.psi(a + b)
        d_a = n * psi_ab - n * special.psi(a) + c * np.sum(log_g)
        d_b = n * psi_ab - n * special.psi(b) + np.sum(log_comp)
        d_c = n / c + a * np.sum(log_g) - (b - 1.0) * np.sum(np.exp(c * log_g - log_comp) * log_g)

    return np.array([d_alpha, d_gamma, d_beta, d_a, d_b, d_c], dtype=float)


def _free_index(fixed_mask):
    if fixed_mask is None:
        return list(range(len(PARAM_NAMES)))
    return [i for i, pinned in enumerate(fixed_mask) if not pinned]


def observed_information(p, d, fixed_mask=None, symmetrize=True):
    """
    Negative Hessian of l by central differences of the analytic score, step 1e-5*max(1, |theta|);
    rows and columns of pinned parameters are dropped

    :rtype: numpy.ndarray
    """
    vec = _as_vector(p)
    free = _free_index(fixed_mask)
    info = np.empty((len(free), len(free)))
    for col, idx in enumerate(free):
        step = INFO_STEP * max(1.0, abs(vec[idx]))
        upper, lower = vec.copy(), vec.copy()
        upper[idx] += step
        lower[idx] -= step
        # one-sided next to the boundary
        if lower[idx] < 0 or (lower[idx] == 0 and PARAM_NAMES[idx] not in ("alpha", "gamma")):
            lower[idx] = vec[idx]
        width = upper[idx] - lower[idx]
        info[:, col] = -(score(upper, d)[free] - score(lower, d)[free]) / width

    bad = np.argwhere(~np.isfinite(info))
    if bad.size:
        row, col = bad[0]
        raise DomainError("Observed information is not finite at (%s, %s)"
                          % (PARAM_NAMES[free[row]], PARAM_NAMES[free[col]]))

    if not symmetrize:
        return info
    scale = np.max(np.abs(info))
    if scale > 0:
        log.debug("Information asymmetry: %.3g", np.max(np.abs(info - info.T)) / scale)
    return 0.5 * (info + info.T)


def covariance_and_ci(info, estimates, level=0.95, names=None):
    """
    Inverts the information and builds Wald intervals estimate +- z*se

    :return: (cov, std_errors, conf_intervals); entries are None where the variance came out negative
    """
    if not 0 < level < 1:
        raise DomainError("Confidence level has to lie in (0, 1), got %r" % level)
    info = np.atleast_2d(np.asarray(info, dtype=float))
    estimates = np.atleast_1d(np.asarray(estimates, dtype=float))
    names = names or ["p%d" % i for i in range(len(estimates))]

    condition = np.linalg.cond(info) if np.all(np.isfinite(info)) else math.inf
    if not condition < MAX_CONDITION:
        raise SingularInformationError("Information matrix is singular, condition number %.3g" % condition,
                                       condition)
    cov = np.linalg.inv(info)
    cov = 0.5 * (cov + cov.T)

    z = stats.norm.ppf(0.5 + level / 2.0)
    std_errors, intervals = [], []
    for name, estimate, variance in zip(names, estimates, np.diag(cov)):
        if variance < 0:
            log.warning("Negative variance %.3g for %s, interval suppressed", variance, name)
            std_errors.append(None)
            intervals.append(None)
            continue
        se = math.sqrt(variance)
        std_errors.append(se)
        intervals.append((estimate - z * se, estimate + z * se))
    return cov, std_errors, intervals


class _Objective(object):
    def __init__(self, model, dataset):
        self.model = model
        self.dataset = dataset
        self.free = [PARAM_NAMES.index(name) for name in model.free_names]
        self.base = np.array([model.fixed.get(name, np.nan) for name in PARAM_NAMES])

    def params(self, values):
        full = self.base.copy()
        full[self.free] = values
        return McMWParams(*full)

    def from_log(self, z):
        return self.params(np.exp(np.clip(z, -LOG_BOUND, LOG_BOUND)))

    def value(self, z):
        return neg_log_likelihood(self.from_log(z), self.dataset)

    def gradient(self, z):
        p = self.from_log(z)
        grad = -score(p, self.dataset)[self.free] * _as_vector(p)[self.free]
        return np.where(np.isfinite(grad), grad, 0.0)

    def score_norm(self, p):
        s = score(p, self.dataset)[self.free]
        return float(np.max(np.abs(s))) if np.all(np.isfinite(s)) else math.inf


def _newton_polish(obj, p, nll, opts):
    """Newton steps on the observed information, halved until -l decreases and the point stays interior"""
    target = min(1e-6 * obj.dataset.n, 0.05 * MAX_SCORE_NORM)
    steps = 0
    for _ in range(opts.newton_steps):
        s = score(p, obj.dataset)[obj.free]
        if not np.all(np.isfinite(s)) or np.max(np.abs(s)) < target:
            break
        try:
            info = observed_information(p, obj.dataset, obj.model.fixed_mask())
            direction = np.linalg.solve(info, s)
        except (np.linalg.LinAlgError, DomainError):
            break
        if not np.dot(s, direction) > 0:
            break

        current = _as_vector(p)[obj.free]
        improved = False
        factor = 1.0
        for _ in range(40):
            candidate = current + factor * direction
            if np.all(candidate > 0):
                trial = obj.params(candidate)
                trial_nll = neg_log_likelihood(trial, obj.dataset)
                if trial_nll <= nll:
                    p, nll, improved = trial, trial_nll, True
                    break
            factor *= 0.5
        if not improved:
            break
        steps += 1
    return p, nll, steps


def _run_start(obj, index, origin, z0, opts):
    """One local optimization; never raises, failures land in the diagnostics"""
    record = {"index": index, "origin": origin, "start": obj.from_log(z0)._asdict(), "initial_nll": None,
              "nll": math.inf, "score_norm": math.inf, "converged": False, "boundary": None,
              "iterations": 0, "message": ""}
    try:
        record["initial_nll"] = obj.value(z0)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            simplex = optimize.minimize(obj.value, z0, method="Nelder-Mead",
                                        options={"maxiter": opts.maxiter_simplex, "maxfev": 2 * opts.maxiter_simplex,
                                                 "xatol": 1e-10, "fatol": opts.ftol, "adaptive": len(z0) > 2})
            best_z, best_nll = simplex.x, simplex.fun
            iterations = simplex.nit

            quasi = optimize.minimize(obj.value, best_z, jac=obj.gradient, method="BFGS",
                                      options={"gtol": 1e-9, "maxiter": 1000})
            iterations += quasi.nit
            if math.isfinite(quasi.fun) and quasi.fun <= best_nll:
                best_z, best_nll = quasi.x, quasi.fun

        p = obj.from_log(best_z)
        best_nll = obj.value(best_z)
        if not math.isfinite(best_nll):
            record["message"] = "no finite likelihood reached"
            return record, None

        p, best_nll, newton = _newton_polish(obj, p, best_nll, opts)
        norm = obj.score_norm(p)
        runaway = _runaway(obj, p)
        record.update(nll=best_nll, score_norm=norm, iterations=iterations + newton, boundary=runaway,
                      converged=runaway is None and norm < opts.score_tolerance(obj.dataset.n),
                      message=quasi.message if isinstance(quasi.message, str) else str(quasi.message))
        if runaway:
            record["message"] = "boundary runaway in %s" % runaway
        log.debug("Start %s (%s): -loglik %.6f -> %.6f, |score| %.3g", index, origin, record["initial_nll"],
                  best_nll, norm)
        return record, p
    except (ArithmeticError, ValueError, RuntimeError, np.linalg.LinAlgError) as exc:
        record["message"] = "%s: %s" % (exc.__class__.__name__, exc)
        log.debug("Start %s (%s) failed: %s", index, origin, exc)
        return record, None


def _runaway(obj, p):
    """Name of the first free parameter pushed to the log clamp, or None"""
    for name in obj.model.free_names:
        if abs(math.log(getattr(p, name))) >= RUNAWAY_LOG:
            return name
    return None


def _pick_winner(outcomes):
    """
    Best finished start: converged before unconverged, interior before boundary runaways, then lowest -l,
    ties to the lower index

    :return: (record, params) or None when every start failed
    """
    finished = [(record, p) for record, p in outcomes if p is not None]
    if not finished:
        return None
    return min(finished, key=lambda item: (not item[0]["converged"], bool(item[0]["boundary"]), item[0]["nll"],
                                           item[0]["index"]))


def _run_all(tasks, workers):
    results = [None] * len(tasks)
    if workers <= 1 or len(tasks) <= 1:
        for idx, task in enumerate(tasks):
            results[idx] = task()
        return results

    pending = queue.Queue()
    for idx in range(len(tasks)):
        pending.put(idx)

    def worker():
        while True:
            try:
                idx = pending.get_nowait()
            except queue.Empty:
                return
            results[idx] = tasks[idx]()

    threads = [threading.Thread(target=worker, name="fit-start-%d" % num) for num in range(min(workers, len(tasks)))]
    for thr in threads:
        thr.daemon = True
        thr.start()
    for thr in threads:
        thr.join()
    return results


def _lift(obj, params):
    """Free values of ``obj.model`` taken from a full vector; zeros are nudged off the boundary"""
    values = _as_vector(params)[obj.free]
    return np.where(values > 0, values, 1e-4)


def _seeds(obj, d, opts, warm_starts):
    seeds = []
    for warm in warm_starts:
        params = warm.params if isinstance(warm, FitResult) else warm
        seeds.append(("warm %s" % (warm.model.value if isinstance(warm, FitResult) else "start"), _lift(obj, params)))

    mean = float(np.mean(d.values))
    rate = 1.0 / mean
    both = "alpha" in obj.model.free_names and "gamma" in obj.model.free_names
    moments = {"alpha": rate * (0.5 if both else 1.0), "gamma": rate * (0.5 if both else 1.0), "beta": 1.0,
               "a": 1.0, "b": 1.0, "c": 1.0}
    moment_seed = np.array([moments[name] for name in obj.model.free_names])
    seeds.append(("moments", moment_seed))

    base = seeds[0][1] if warm_starts else moment_seed
    shape_free = [name for name in ("a", "b", "c") if name in obj.model.free_names]
    if shape_free:
        for probe in SHAPE_PROBES:
            values = dict(zip(obj.model.free_names, base))
            values.update((name, val) for name, val in zip(("a", "b", "c"), probe) if name in shape_free)
            seeds.append(("probe a=%s b=%s c=%s" % probe, np.array([values[name] for name in obj.model.free_names])))

    rng = np.random.default_rng(opts.seed)
    while len(seeds) < opts.starts:
        seeds.append(("random", np.exp(rng.uniform(math.log(1e-2), math.log(10.0), len(obj.free)))))
    return seeds[:opts.starts]


def _nested_seed(model, d, opts):
    for candidate in NESTED_SEED_MODELS:
        if candidate is not model and model.nests(candidate):
            log.debug("Seeding %s from a %s fit", model.value, candidate.value)
            try:
                return [fit_mle(d, candidate, opts.replace(starts=max(1, opts.starts // 4)), information=False)]
            except NonConvergenceError as exc:
                log.debug("Nested %s fit failed: %s", candidate.value, exc)
            return []
    return []


def fit_mle(d, model=Submodel.MCMW, opts=None, warm_starts=None, information=True):
    """
    Multi-start maximum-likelihood fit of a submodel.

    Starts, in order: warm starts (lifted optima of nested models; a nested fit is run when none are given),
    a moment seed, shape probes for (a, b, c) and log-uniform draws over [1e-2, 10] from ``opts.seed``.

    :type d: Dataset
    :type model: Submodel|str
    :type opts: FitOptions
    :rtype: FitResult
    """
    model = Submodel.parse(model)
    opts = opts or FitOptions()
    if d.n < model.k:
        raise NonConvergenceError("%s has %d free parameters but only %d observations" % (model.value, model.k, d.n),
                                  [{"message": "n < k"}])

    obj = _Objective(model, d)
    if warm_starts is None:
        warm_starts = _nested_seed(model, d, opts)
    seeds = _seeds(obj, d, opts, warm_starts)

    tasks = [(lambda idx=idx, origin=origin, start=start:
              _run_start(obj, idx, origin, np.log(start), opts)) for idx, (origin, start) in enumerate(seeds)]
    outcomes = _run_all(tasks, opts.workers)
    diagnostics = [record for record, _ in outcomes]

    winner = _pick_winner(outcomes)
    if winner is None:
        raise NonConvergenceError("All %d starts failed for %s" % (len(seeds), model.value), diagnostics)
    best_nll, best_idx, best_p = winner[0]["nll"], winner[0]["index"], winner[1]
    runaways = [record["index"] for record in diagnostics if record["boundary"]]
    if runaways:
        log.info("Starts %s of %s ran off to the parameter boundary", runaways, model.value)

    result = FitResult(model, best_p, best_nll, d.n)
    result.start_index = best_idx
    result.diagnostics = diagnostics
    result.iterations = diagnostics[best_idx]["iterations"]
    result.score_norm = diagnostics[best_idx]["score_norm"]
    result.converged = diagnostics[best_idx]["converged"]
    if not result.converged:
        result.warnings.append("score max-norm %.3g above tolerance" % result.score_norm)
        log.warning("Best %s start did not converge: |score| = %.3g", model.value, result.score_norm)

    if information:
        _attach_inference(result, d, opts.level)
    log.info("Fitted %s on n=%d: -loglik=%.6f from start %d (%s)", model.value, d.n, best_nll, best_idx,
             diagnostics[best_idx]["origin"])
    return result


def _attach_inference(result, d, level):
    result.level = level
    names = list(result.free_names)
    try:
        result.information = observed_information(result.params, d, result.fixed_mask)
        cov, ses, cis = covariance_and_ci(result.information, result.estimates(), level, names)
    except (SingularInformationError, DomainError) as exc:
        result.warnings.append(str(exc))
        log.warning("No covariance for %s: %s", result.model.value, exc)
        result.std_errors = dict.fromkeys(names)
        result.conf_intervals = dict.fromkeys(names)
        return
    result.cov = cov
    result.std_errors = dict(zip(names, ses))
    result.conf_intervals = dict(zip(names, cis))


def profile_summary(result, reference=None):
    """
    Per-parameter rows of estimate, standard error and interval, with optional reference values
    given as {name: {"estimate": .., "se": .., "ci": (lo, hi)}}

    :type result: FitResult
    :rtype: list[dict]
    """
    reference = reference or {}
    rows = []
    for name in result.free_names:
        ref = reference.get(name, {})
        rows.append({
            "name": name,
            "estimate": getattr(result.params, name),
            "se": result.std_errors.get(name),
            "ci": result.conf_intervals.get(name),
            "ref_estimate": ref.get("estimate"),
            "ref_se": ref.get("se"),
            "ref_ci": ref.get("ci"),
        })
    return rows
