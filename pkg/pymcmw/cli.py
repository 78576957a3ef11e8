"""
Command-line surface: ``mcmw fit|compare|eval|sample|gof|plotdata|paper-repro``;
``reproduce`` is an alias of ``paper-repro``

Exit codes: 0 success, 1 usage/parse/parameter errors, 2 numerical non-convergence or failed gates, 3 I/O errors.
"""
import argparse
import io
import json
import logging
import math
import os
import sys

import numpy as np

from pymcmw import analytic, datasets, dist, fit, gof
from pymcmw.dist import PARAM_NAMES, Submodel
from pymcmw.utilities import (DomainError, NonConvergenceError, ParameterError, QuadratureError, parse_floats,
                              parse_grid)

log = logging.getLogger('cli')

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NUMERIC = 2
EXIT_IO = 3

COMMANDS = ("fit", "compare", "eval", "sample", "gof", "plotdata", "paper-repro")
ALIASES = {"reproduce": "paper-repro"}
FORMATS = ("json", "table")
DEFAULT_GRID = "0.01:16:500"
EVAL_GRID = "0.5:5:10"
EVAL_QUANTILES = (0.25, 0.5, 0.75)
REPRO_MODELS = (Submodel.WEIBULL, Submodel.MW, Submodel.MCMW)


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


class RunConfig(object):
    """
    Validated command line

    :type models: list[Submodel]
    :type params: list[pymcmw.dist.McMWParams]
    """

    def __init__(self, command, data_path=None, builtin=False, models=None, params=None, grid=None, n=None,
                 seed=0, starts=fit.FitOptions.STARTS, level=fit.FitOptions.LEVEL, fmt="table", out=None,
                 workers=1, verbose=False):
        if command not in COMMANDS:
            raise UsageError("Unknown command %r" % command)
        if fmt not in FORMATS:
            raise UsageError("Unknown format %r" % fmt)
        if data_path and builtin:
            raise UsageError("Use either --data or --builtin, not both")
        self.command = command
        self.data_path = data_path
        self.builtin = builtin
        self.models = models or []
        self.params = params or []
        self.grid = grid
        self.n = n
        self.seed = seed
        self.starts = starts
        self.level = level
        self.fmt = fmt
        self.out = out
        self.workers = workers
        self.verbose = verbose

        has_data = bool(data_path) or builtin
        if command in ("fit", "compare") and not has_data:
            raise UsageError("%s needs --data PATH or --builtin" % command)
        if command == "gof" and not has_data:
            raise UsageError("gof needs --data PATH or --builtin")
        if command in ("eval", "sample") and not self.params:
            raise UsageError("%s needs --params" % command)
        if command == "sample" and len(self.params) != 1:
            raise UsageError("sample takes exactly one --params")
        if command == "plotdata" and not (self.params or has_data):
            raise UsageError("plotdata needs --params or a dataset to fit")
        if command == "compare" and len(self.models) < 2:
            raise UsageError("compare needs at least two models")
        if command == "fit" and len(self.models) > 1:
            raise UsageError("fit takes a single model")

    @property
    def has_data(self):
        return bool(self.data_path) or self.builtin

    def fit_options(self):
        return fit.FitOptions(starts=self.starts, seed=self.seed, level=self.level, workers=self.workers)

    @classmethod
    def from_args(cls, args):
        models = []
        for chunk in args.model or []:
            models.extend(Submodel.parse(name) for name in chunk.split(",") if name.strip())
        params = [parse_params(text, models[0] if len(models) == 1 else None) for text in args.params or []]
        return cls(
            command=ALIASES.get(args.command, args.command),
            data_path=args.data,
            builtin=args.builtin,
            models=models,
            params=params,
            grid=parse_grid(args.grid) if args.grid else None,
            n=args.n,
            seed=args.seed,
            starts=args.starts,
            level=args.level,
            fmt=args.format,
            out=args.out,
            workers=args.workers,
            verbose=args.verbose,
        )


def parse_params(text, model=None):
    """
    Six values in (alpha, gamma, beta, a, b, c) order, or the free parameters of ``model``

    :rtype: pymcmw.dist.McMWParams
    """
    values = parse_floats(text)
    if len(values) == len(PARAM_NAMES):
        return dist.validate(*values)
    if model is not None:
        return dist.submodel(model, *values)
    raise UsageError("--params needs 6 values (alpha,gamma,beta,a,b,c) or the free parameters of one --model, "
                     "got %r" % text)


def ingest(path=None, builtin=False):
    """
    Reads failure times: one value per line or comma-separated, '#' starts a comment

    :rtype: pymcmw.fit.Dataset
    """
    if builtin:
        label, values = datasets.builtin()
        return fit.Dataset(values, label=label)

    values = []
    with io.open(path, encoding="utf-8") as fhd:
        for lineno, line in enumerate(fhd, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            try:
                chunk = parse_floats(line)
            except ValueError as exc:
                raise ValueError("%s, line %d: %s" % (path, lineno, exc))
            for value in chunk:
                if not value > 0:
                    raise DomainError("%s, line %d: nonpositive value %r" % (path, lineno, value))
            values.extend(chunk)

    if not values:
        raise ValueError("%s: no values found" % path)
    return fit.Dataset(values, label=os.path.basename(path))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(key): _jsonable(value) for key, value in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(value) for value in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, Submodel):
        return obj.value
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def _fmt(value):
    if value is None:
        return "-"
    if isinstance(value, (float, np.floating)):
        return "%.6g" % value
    return str(value)


def _table(header, rows):
    cells = [[_fmt(x) for x in header]] + [[_fmt(x) for x in row] for row in rows]
    widths = [max(len(row[col]) for row in cells) for col in range(len(header))]
    lines = ["  ".join(cell.rjust(width) for cell, width in zip(row, widths)) for row in cells]
    lines.insert(1, "  ".join("-" * width for width in widths))
    return "\n".join(lines)


def _emit(cfg, report, text):
    """Writes the JSON report or the text table to --out or stdout"""
    content = json.dumps(_jsonable(report), indent=2, sort_keys=True) if cfg.fmt == "json" else text
    if cfg.out and cfg.command != "plotdata":
        with io.open(cfg.out, "w", encoding="utf-8") as fhd:
            fhd.write(content + "\n")
        log.info("Report written to %s", cfg.out)
    else:
        sys.stdout.write(content + "\n")


def _fit_text(result, d):
    lines = ["%s fit on %s (n=%d)" % (result.model.value, d.label, d.n),
             "-loglik: %s  converged: %s  |score|: %s  start: %s" % (_fmt(result.neg_loglik), result.converged,
                                                                     _fmt(result.score_norm), result.start_index)]
    rows = []
    for row in fit.profile_summary(result):
        lo, hi = row["ci"] if row["ci"] else (None, None)
        rows.append((row["name"], row["estimate"], row["se"], lo, hi))
    lines.append(_table(("param", "estimate", "se", "ci_lo", "ci_hi"), rows))
    if result.cov is not None:
        lines.append("covariance:")
        lines.append(_table(("",) + tuple(result.free_names),
                            [(name,) + tuple(row) for name, row in zip(result.free_names, result.cov)]))
    lines.extend("warning: %s" % text for text in result.warnings)
    return "\n".join(lines)


def cmd_fit(cfg):
    d = ingest(cfg.data_path, cfg.builtin)
    model = cfg.models[0] if cfg.models else Submodel.MCMW
    result = fit.fit_mle(d, model, cfg.fit_options())
    report = result.as_dict()
    report["dataset"] = d.summary()
    _emit(cfg, report, _fit_text(result, d))
    return EXIT_OK if result.converged else EXIT_NUMERIC


def _comparison_text(rows, d):
    table = _table(("model", "k", "K-S", "-2loglik", "AIC", "AICC"),
                   [(row.model_name, row.k, row.ks, row.neg2_loglik, row.aic, row.aicc) for row in rows])
    notes = ["%s: %s" % (row.model_name, row.error) for row in rows if row.error]
    notes += ["%s: not converged" % row.model_name for row in rows if row.fit and not row.fit.converged]
    return "\n".join(["Comparison on %s (n=%d)" % (d.label, d.n), table] + notes)


def cmd_compare(cfg):
    d = ingest(cfg.data_path, cfg.builtin)
    rows = gof.compare(d, cfg.models, cfg.fit_options())
    report = {"dataset": d.summary(), "rows": [row.as_dict() for row in rows],
              "fits": [row.fit.as_dict() for row in rows if row.fit]}
    _emit(cfg, report, _comparison_text(rows, d))
    return EXIT_OK if any(row.error is None for row in rows) else EXIT_NUMERIC


def _evaluate(p, grid):
    points = []
    for x in grid:
        point = {"x": float(x), "cdf": dist.cdf(p, x), "survival": dist.survival(p, x)}
        if x > 0:
            point.update(pdf=dist.pdf(p, x), hazard=dist.hazard(p, x))
            point["reversed_hazard"] = dist.reversed_hazard(p, x) if point["cdf"] > 0 else None
        points.append(point)

    report = {"params": p._asdict(), "points": points,
              "quantiles": {str(u): dist.quantile(p, u) for u in EVAL_QUANTILES}}
    try:
        report["moments"] = analytic.moment_set(p).as_dict()
    except QuadratureError as exc:
        log.warning("Moments unavailable: %s", exc)
        report["moments"] = None
    positive = grid[grid > 0]
    report["hazard_shape"] = dist.hazard_shape(p, positive) if len(positive) > 1 else None
    return report


def cmd_eval(cfg):
    grid = cfg.grid if cfg.grid is not None else parse_grid(EVAL_GRID)
    if np.any(grid < 0):
        raise DomainError("Evaluation grid has to be nonnegative")
    reports = [_evaluate(p, grid) for p in cfg.params]

    chunks = []
    for report in reports:
        chunks.append("params: %s" % ", ".join("%s=%s" % (k, _fmt(v)) for k, v in report["params"].items()))
        chunks.append(_table(("x", "pdf", "cdf", "survival", "hazard", "rev_hazard"),
                             [(pt["x"], pt.get("pdf"), pt["cdf"], pt["survival"], pt.get("hazard"),
                               pt.get("reversed_hazard")) for pt in report["points"]]))
        chunks.append("quantiles: %s" % ", ".join("%s -> %s" % (u, _fmt(q)) for u, q in report["quantiles"].items()))
        if report["moments"]:
            chunks.append("moments: %s" % ", ".join("%s=%s" % (k, _fmt(report["moments"][k]))
                                                    for k in ("mean", "variance", "skewness", "kurtosis")))
        chunks.append("hazard shape: %s" % report["hazard_shape"])
    _emit(cfg, {"evaluations": reports}, "\n".join(chunks))
    return EXIT_OK


def cmd_sample(cfg):
    if cfg.n is None:
        raise UsageError("sample needs --n")
    values = dist.sample(cfg.params[0], cfg.n, cfg.seed)
    _emit(cfg, {"params": cfg.params[0]._asdict(), "seed": cfg.seed, "values": values},
          "\n".join(repr(float(x)) for x in values))
    return EXIT_OK


def cmd_gof(cfg):
    d = ingest(cfg.data_path, cfg.builtin)
    if not cfg.params:
        rows = gof.compare(d, cfg.models or [Submodel.MCMW], cfg.fit_options())
        _emit(cfg, {"dataset": d.summary(), "rows": [row.as_dict() for row in rows]}, _comparison_text(rows, d))
        return EXIT_OK if any(row.error is None for row in rows) else EXIT_NUMERIC

    k = cfg.models[0].k if len(cfg.models) == 1 else len(PARAM_NAMES)
    rows = []
    for idx, p in enumerate(cfg.params):
        loglik = -fit.neg_log_likelihood(p, d)
        try:
            corrected = gof.aicc(k, loglik, d.n)
        except DomainError:
            corrected = float("nan")
        rows.append(gof.ModelComparison("params#%d" % (idx + 1), k, -2.0 * loglik, gof.aic(k, loglik), corrected,
                                        gof.ks_statistic(p, d)))
    _emit(cfg, {"dataset": d.summary(), "rows": [row.as_dict() for row in rows]}, _comparison_text(rows, d))
    return EXIT_OK


def _curves(cfg, d):
    """Labelled parameter sets to draw: explicit --params plus fits of --model on the data"""
    curves = [("p%d" % (idx + 1), p) for idx, p in enumerate(cfg.params)]
    if d is not None:
        for model in cfg.models or [Submodel.MW, Submodel.MCMW]:
            result = fit.fit_mle(d, model, cfg.fit_options(), information=False)
            curves.append((model.value, result.params))
    return curves


def write_plotdata(path, grid, curves, d=None):
    """
    Writes x with pdf, cdf and hazard per curve; with a dataset also ``<stem>_ecdf.csv`` holding the
    empirical cdf steps i/n at the sorted data

    :return: list of written paths
    """
    if grid[0] <= 0:
        raise DomainError("Plot grid has to start above 0, got %s" % grid[0])
    columns, header = [grid], ["x"]
    for label, p in curves:
        columns.append(dist.pdf(p, grid))
        header.append("pdf_%s" % label)
    for label, p in curves:
        columns.append(dist.cdf(p, grid))
        header.append("cdf_%s" % label)
    for label, p in curves:
        columns.append(dist.hazard(p, grid))
        header.append("hazard_%s" % label)
    np.savetxt(path, np.column_stack(columns), delimiter=",", header=",".join(header), comments="", fmt="%.10g")
    written = [path]

    if d is not None:
        stem, ext = os.path.splitext(path)
        ecdf_path = "%s_ecdf%s" % (stem, ext or ".csv")
        steps = np.arange(1, d.n + 1) / float(d.n)
        fitted = [dist.cdf(p, d.values) for _, p in curves]
        np.savetxt(ecdf_path, np.column_stack([d.values, steps] + fitted), delimiter=",",
                   header=",".join(["x", "ecdf"] + ["cdf_%s" % label for label, _ in curves]), comments="",
                   fmt="%.10g")
        written.append(ecdf_path)
    log.info("Plot data written: %s", ", ".join(written))
    return written


def cmd_plotdata(cfg):
    grid = cfg.grid if cfg.grid is not None else parse_grid(DEFAULT_GRID)
    d = ingest(cfg.data_path, cfg.builtin) if cfg.has_data else None
    curves = _curves(cfg, d)
    written = write_plotdata(cfg.out or "mcmw_plot.csv", grid, curves, d)
    if cfg.fmt == "json":
        sys.stdout.write(json.dumps({"files": written, "curves": [label for label, _ in curves]}) + "\n")
    else:
        sys.stdout.write("\n".join(written) + "\n")
    return EXIT_OK


class Gate(object):
    """
    One reproduction check; informational gates (``primary=False``) are reported but never fail the run
    """

    def __init__(self, name, passed, computed, reference, detail="", primary=True):
        self.name = name
        self.passed = bool(passed)
        self.computed = computed
        self.reference = reference
        self.detail = detail
        self.primary = primary

    @property
    def verdict(self):
        if not self.primary:
            return "INFO"
        return "PASS" if self.passed else "FAIL"

    def as_dict(self):
        return {"name": self.name, "passed": self.passed, "computed": self.computed, "reference": self.reference,
                "detail": self.detail, "primary": self.primary}


def repro_gates(fits, rows, n):
    """
    Reproduction checks against the published failure-time application

    :type fits: dict[Submodel,pymcmw.fit.FitResult]
    :rtype: list[Gate]
    """
    ref_mw, ref_mc = datasets.REFERENCE_FITS["MW"], datasets.REFERENCE_FITS["McMW"]
    mw, mc = fits[Submodel.MW], fits[Submodel.MCMW]
    by_name = dict((row.model_name, row) for row in rows)
    gates = [Gate("MW -loglik in [102.27, 102.37]", 102.27 <= mw.neg_loglik <= 102.37, mw.neg_loglik,
                  ref_mw["neg_loglik"])]

    off = max(abs(getattr(mw.params, name) - value) for name, value in ref_mw["params"].items())
    gates.append(Gate("MW estimates within 0.05", off <= 0.05, off, 0.05, "published beta and gamma swapped back"))

    best = mc.diagnostics[mc.start_index]
    gates.append(Gate("McMW -loglik <= 98.45", mc.neg_loglik <= 98.45, mc.neg_loglik, ref_mc["neg_loglik"],
                      "best start %d (%s) of %d" % (mc.start_index, best["origin"], len(mc.diagnostics))))

    for label, k, ref in (("McMW", 6, ref_mc), ("MW", 3, ref_mw)):
        value = gof.aic(k, -ref["neg_loglik"])
        gates.append(Gate("%s AIC from published loglik" % label, abs(value - ref["aic"]) <= 0.002, value,
                          ref["aic"]))
        value = gof.aicc(k, -ref["neg_loglik"], n)
        gates.append(Gate("%s AICC from published loglik" % label, abs(value - ref["aicc"]) <= 0.002, value,
                          ref["aicc"]))

    row_mw, row_mc = by_name["MW"], by_name["McMW"]
    gates.append(Gate("AIC(McMW) < AIC(MW)", row_mc.aic < row_mw.aic, row_mc.aic, row_mw.aic))
    gates.append(Gate("AICC(McMW) < AICC(MW)", row_mc.aicc < row_mw.aicc, row_mc.aicc, row_mw.aicc))
    gates.append(Gate("K-S(McMW) < K-S(MW)", row_mc.ks < row_mw.ks, row_mc.ks, row_mw.ks))
    # 0.118 is not reached at the published McMW estimates under either labelling
    gates.append(Gate("McMW K-S 0.118 +- 0.005", abs(row_mc.ks - ref_mc["ks"]) <= 0.005, row_mc.ks, ref_mc["ks"],
                      primary=False))
    gates.append(Gate("MW K-S 0.128 +- 0.005", abs(row_mw.ks - ref_mw["ks"]) <= 0.005, row_mw.ks, ref_mw["ks"]))
    for label, result in (("MW", mw), ("McMW", mc)):
        gates.append(Gate("%s score max-norm < 1e-3" % label, result.score_norm < 1e-3, result.score_norm, 1e-3))
    return gates


def _reference_profile():
    ref = datasets.REFERENCE_FITS["McMW"]
    return dict((name, {"estimate": ref["params"][name], "se": ref["se"][name], "ci": ref["ci"][name]})
                for name in ref["params"])


def cmd_reproduce(cfg):
    label, values = datasets.builtin()
    d = fit.Dataset(values, label=label)
    opts = cfg.fit_options()

    fits = {}
    for model in REPRO_MODELS:
        warm = [result for result in fits.values() if model.nests(result.model)]
        fits[model] = fit.fit_mle(d, model, opts, warm_starts=warm or None)
    rows = sorted((gof.ModelComparison.from_fit(fits[model], d) for model in REPRO_MODELS), key=lambda row: row.aic)
    gates = repro_gates(fits, rows, d.n)
    profile = fit.profile_summary(fits[Submodel.MCMW], _reference_profile())

    written = []
    if cfg.out:
        stem = os.path.splitext(cfg.out)[0]
        written = write_plotdata(stem + "_plot.csv", parse_grid(DEFAULT_GRID),
                                 [(model.value, fits[model].params) for model in REPRO_MODELS], d)

    passed = all(gate.passed for gate in gates if gate.primary)
    report = {
        "dataset": d.summary(),
        "fits": dict((model.value, result.as_dict()) for model, result in fits.items()),
        "comparison": [row.as_dict() for row in rows],
        "gates": [gate.as_dict() for gate in gates],
        "mcmw_profile": profile,
        "published_variances": datasets.REFERENCE_FITS["McMW"]["variance"],
        "plot_files": written,
        "passed": passed,
    }

    lines = [_comparison_text(rows, d), "",
             _table(("gate", "computed", "published", "result"),
                    [(g.name, g.computed, g.reference, g.verdict + (" (%s)" % g.detail if g.detail else ""))
                     for g in gates]),
             "", "McMW estimates beside the published ones (informational):",
             _table(("param", "estimate", "se", "ci", "published", "published se", "published ci"),
                    [(row["name"], row["estimate"], row["se"],
                      "[%s, %s]" % tuple(_fmt(x) for x in row["ci"]) if row["ci"] else None,
                      row["ref_estimate"], row["ref_se"],
                      "[%s, %s]" % tuple(_fmt(x) for x in row["ref_ci"]) if row["ref_ci"] else None)
                     for row in profile]),
             "", "ALL GATES PASSED" if passed else "SOME GATES FAILED"]
    _emit(cfg, report, "\n".join(lines))
    return EXIT_OK if passed else EXIT_NUMERIC


HANDLERS = {
    "fit": cmd_fit,
    "compare": cmd_compare,
    "eval": cmd_eval,
    "sample": cmd_sample,
    "gof": cmd_gof,
    "plotdata": cmd_plotdata,
    "paper-repro": cmd_reproduce,
}


def build_parser():
    common = _Parser(add_help=False)
    source = common.add_mutually_exclusive_group()
    source.add_argument("--data", metavar="PATH", help="failure times, one per line or comma-separated")
    source.add_argument("--builtin", action="store_true", help="use the builtin 50-component dataset")
    common.add_argument("--model", action="append", metavar="NAME[,NAME...]",
                        help="model name(s): %s" % ", ".join(item.value for item in Submodel))
    common.add_argument("--params", action="append", metavar="a,g,b,A,B,C",
                        help="parameter vector, repeatable")
    common.add_argument("--grid", metavar="MIN:MAX:N")
    common.add_argument("--n", type=int, metavar="COUNT")
    common.add_argument("--seed", type=int, default=fit.FitOptions.SEED)
    common.add_argument("--starts", type=int, default=fit.FitOptions.STARTS)
    common.add_argument("--workers", type=int, default=fit.FitOptions.WORKERS)
    common.add_argument("--level", type=float, default=fit.FitOptions.LEVEL)
    common.add_argument("--format", choices=FORMATS, default="table")
    common.add_argument("--out", metavar="PATH")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = _Parser(prog="mcmw", description="McDonald modified Weibull distribution toolkit")
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name in COMMANDS:
        aliases = [alias for alias, target in ALIASES.items() if target == name]
        commands.add_parser(name, parents=[common], aliases=aliases)
    return parser


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        if not args.command:
            raise UsageError("a command is required: %s" % ", ".join(COMMANDS))
        logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                            format="%(levelname)s %(name)s: %(message)s")
        cfg = RunConfig.from_args(args)
        return HANDLERS[cfg.command](cfg)
    except (IOError, OSError) as exc:
        log.error("I/O error: %s", exc)
        return EXIT_IO
    except UsageError as exc:
        log.error("Usage: %s", exc)
        return EXIT_USAGE
    except (ParameterError, DomainError) as exc:
        log.error("%s", exc)
        return EXIT_USAGE
    except NonConvergenceError as exc:
        log.error("Did not converge: %s", exc)
        return EXIT_NUMERIC
    except QuadratureError as exc:
        log.error("Quadrature failed: %s", exc)
        return EXIT_NUMERIC
    except ValueError as exc:
        log.error("%s", exc)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
