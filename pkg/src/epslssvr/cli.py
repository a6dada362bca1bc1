"""Command-line driver.

Subcommands: ``fit``, ``posterior``, ``gap-sweep``, ``predict`` and
``sinc-demo``. Exit statuses are stable: 0 success, 2 I/O failure,
3 invalid argument, 4 numerical failure. On failure one JSON line
``{"error": <category>, "message": ...}`` is written to stderr.
"""

import argparse
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import bayes, data, equivalence, lssvr
from .errors import EpsLssvrError, InvalidArgumentError, SingularSystemError
from .kernel import KernelConfig

EXIT_OK = 0
EXIT_IO = 2
EXIT_INVALID = 3
EXIT_NUMERICAL = 4


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage, which is reserved for I/O
    def error(self, message):
        raise InvalidArgumentError(f"{self.prog}: {message}")


def fmt(v):
    return equivalence.fmt17(v)


def write_atomic(path, text):
    path = os.fspath(path)
    folder = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=folder, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def _emit(args, text):
    """Send a document to ``--out`` or stdout; returns the stream for the summary."""
    if args.out:
        write_atomic(args.out, text)
        return sys.stdout
    sys.stdout.write(text)
    return sys.stderr


def _summary(stream, **items):
    for key, value in items.items():
        stream.write(f"{key}={fmt(value) if isinstance(value, float) else value}\n")


def _kernel(args, default_c2):
    if args.c is not None:
        return KernelConfig(args.c)
    if args.c2 is not None:
        return KernelConfig.from_c2(args.c2)
    return KernelConfig.from_c2(default_c2)


def _lssvr_config(args):
    gamma = 0.5 if args.gamma is None else args.gamma
    return lssvr.LssvrConfig(gamma, _kernel(args, 1.0))


def _eps_config(args, default_eps=1e-4, default_gamma=0.5, default_c2=1.0):
    return bayes.EpsLssvrConfig(
        default_eps if args.epsilon is None else args.epsilon,
        default_gamma if args.gamma is None else args.gamma,
        _kernel(args, default_c2),
        1.0 if args.sigma2 is None else args.sigma2,
    )


def _sinc_spec(values):
    n, lo, hi = values
    if float(n) != int(float(n)):
        raise InvalidArgumentError(f"--sinc N must be an integer, got {n!r}")
    return int(float(n)), float(lo), float(hi)


def _dataset(args):
    if args.data is not None:
        ds = data.load_csv(args.data, args.target, has_header=not args.no_header)
    elif args.sinc is not None:
        n, lo, hi = _sinc_spec(args.sinc)
        ds = data.gen_sinc(n, lo, hi, args.seed)
    else:
        raise InvalidArgumentError("one of --data or --sinc is required")
    if args.standardize:
        ds, _ = data.standardize(ds, strict=False)
    return ds


def _require_json(args):
    if args.format not in (None, "json"):
        raise InvalidArgumentError(f"{args.command} writes JSON only; --format {args.format} is not supported")


def cmd_fit(args):
    _require_json(args)
    cfg = _lssvr_config(args)
    ds = _dataset(args)
    model = lssvr.fit(ds, cfg)
    diag = equivalence.kkt_check(model)
    stream = _emit(args, lssvr.dumps_model(model))
    _summary(stream, n=ds.n, d=ds.d, b=model.b, alpha_norm=float(np.linalg.norm(model.alpha)),
             kkt_sum_alpha=diag.sum_alpha, kkt_complementarity=diag.complementarity,
             kkt_residual=diag.residual)
    return EXIT_OK


def cmd_posterior(args):
    _require_json(args)
    cfg = _eps_config(args)
    ds = _dataset(args)
    post = bayes.posterior(ds, cfg)
    text = bayes.dumps_posterior(post, include_covariance=not args.no_covariance)
    stream = _emit(args, text)
    items = dict(n=ds.n, epsilon=cfg.epsilon, map_b=float(post.mean[0]),
                 mean_norm=float(np.linalg.norm(post.mean)))
    if not args.no_covariance:
        items["bias_variance"] = float(post.covariance[0, 0])
    _summary(stream, **items)
    return EXIT_OK


def cmd_gap_sweep(args):
    cfg = _lssvr_config(args)
    exponents = equivalence.DEFAULT_EXPONENTS if args.exponents is None else args.exponents
    ds = _dataset(args)
    eval_inputs = None
    if args.eval_data is not None:
        eval_inputs = data.load_csv(args.eval_data, args.target, has_header=not args.no_header).inputs
        if eval_inputs.shape[1] != ds.d:
            raise InvalidArgumentError(f"evaluation data has D={eval_inputs.shape[1]}, training data D={ds.d}")
    report = equivalence.sweep(ds, cfg, exponents, eval_inputs)
    text = report.to_json() if args.format == "json" else report.to_csv()
    stream = _emit(args, text)
    if args.figure:
        from . import plotting

        plotting.plot_gap_sweep(report, args.figure)
    _summary(stream, rows=len(report.records), b_ls=report.b_ls,
             final_gap_norm=report.records[-1].gap_norm, final_arse=report.records[-1].arse)
    return EXIT_OK


def _load_fitted(path):
    with open(path, encoding="utf-8") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidArgumentError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(doc, dict):
        raise InvalidArgumentError(f"{path}: expected a JSON object")
    if "epsilon" in doc:
        return bayes.posterior_from_dict(doc)
    return lssvr.model_from_dict(doc)


def cmd_predict(args):
    if args.model is None or args.inputs is None:
        raise InvalidArgumentError("predict needs --model and --inputs")
    fitted = _load_fitted(args.model)
    _, X = data.read_matrix(args.inputs, has_header=not args.no_header)
    d = fitted.train_inputs.shape[1]
    if X.shape[1] != d:
        raise InvalidArgumentError(f"model expects {d} input columns, got {X.shape[1]}")
    if isinstance(fitted, lssvr.LssvrModel):
        columns = {"prediction": lssvr.predict_many(fitted, X)}
    else:
        t = bayes.predictive_table(fitted, X)
        columns = {"mean": t.mean, "var_full": t.variance_full, "var_paper": t.variance_paper}
    _emit(args, _table(columns, args.format))
    return EXIT_OK


def _table(columns, fmt_name):
    if fmt_name == "json":
        keys = list(columns)
        rows = [dict(zip(keys, (float(v) for v in vals))) for vals in zip(*columns.values())]
        return json.dumps(rows, indent=2) + "\n"
    buf = io.StringIO()
    buf.write(",".join(columns) + "\n")
    for vals in zip(*columns.values()):
        buf.write(",".join(fmt(v) for v in vals) + "\n")
    return buf.getvalue()


def sinc_demo(n=1200, lo=-2 * math.pi, hi=2 * math.pi, seed=0, gamma=1.0, c=1.0,
              epsilon=1e-4, grid_lo=-3 * math.pi, grid_hi=3 * math.pi, grid_points=601):
    """Fit the epsilon-LS-SVR to noiseless sinc samples and predict on a wider grid.

    Returns a dict of columns ``x, true, mean, var_full, var_paper``.
    """
    cfg = bayes.EpsLssvrConfig(epsilon, gamma, KernelConfig(c))
    ds = data.gen_sinc(n, lo, hi, seed)
    post = bayes.posterior(ds, cfg)
    X = data.grid(grid_lo, grid_hi, grid_points)
    t = bayes.predictive_table(post, X)
    return {
        "x": X[:, 0],
        "true": data.sinc(X[:, 0]),
        "mean": t.mean,
        "var_full": t.variance_full,
        "var_paper": t.variance_paper,
    }


def cmd_sinc_demo(args):
    if args.data is not None:
        raise InvalidArgumentError("sinc-demo generates its own data; --data is not accepted")
    n, lo, hi = (1200, -2 * math.pi, 2 * math.pi) if args.sinc is None else _sinc_spec(args.sinc)
    cfg = _eps_config(args, default_eps=1e-4, default_gamma=1.0, default_c2=1.0)
    if cfg.sigma2 != 1.0:
        raise InvalidArgumentError("sinc-demo runs with unit noise variance")
    glo, ghi = args.grid_range
    cols = sinc_demo(n, lo, hi, args.seed, cfg.gamma, cfg.kernel.c, cfg.epsilon, glo, ghi, args.grid_points)
    stream = _emit(args, _table(cols, args.format))
    if args.figure:
        from . import plotting

        plotting.plot_sinc_demo(cols["x"], cols["true"], cols["mean"], cols["var_full"], (lo, hi), args.figure)
    inside = (cols["x"] >= lo) & (cols["x"] <= hi)
    _summary(stream,
             max_abs_error_inside=float(np.max(np.abs(cols["mean"] - cols["true"])[inside])),
             mean_var_full_inside=float(np.mean(cols["var_full"][inside])),
             mean_var_full_outside=float(np.mean(cols["var_full"][~inside])) if np.any(~inside) else float("nan"))
    return EXIT_OK


def _common(p):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--data", metavar="PATH", help="training CSV file")
    src.add_argument("--sinc", nargs=3, metavar=("N", "LO", "HI"),
                     help="generate N sinc samples uniformly on [LO, HI]")
    p.add_argument("--target", default="-1", metavar="NAME|IDX",
                   help="target column name or index (default: last column)")
    p.add_argument("--no-header", action="store_true", help="CSV files have no header row")
    p.add_argument("--standardize", action="store_true", help="z-score input features before fitting")
    p.add_argument("--gamma", type=float, help="regularization parameter")
    width = p.add_mutually_exclusive_group()
    width.add_argument("--c", type=float, help="RBF width c (kernel uses c^2)")
    width.add_argument("--c2", type=float, help="RBF width given as c^2")
    p.add_argument("--epsilon", type=float, help="bias prior precision")
    p.add_argument("--sigma2", type=float, help="observation noise variance (default 1)")
    p.add_argument("--seed", type=int, default=0, help="seed for generated data")
    p.add_argument("--out", metavar="PATH", help="output file (default: stdout)")
    p.add_argument("--format", choices=("csv", "json"), help="output format")


def build_parser():
    parser = _Parser(prog="epslssvr", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit an LS-SVR and write the model as JSON")
    _common(p)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("posterior", help="compute the epsilon-LS-SVR posterior and write it as JSON")
    _common(p)
    p.add_argument("--no-covariance", action="store_true", help="omit the covariance matrix")
    p.set_defaults(func=cmd_posterior)

    p = sub.add_parser("gap-sweep", help="parameter gap and ARSE over a log-spaced epsilon grid")
    _common(p)
    p.add_argument("--exponents", nargs="+", type=float, metavar="T",
                   help="values of -log10(eps); 'inf' means eps = 0 (default: 0, 0.5, ..., 5)")
    p.add_argument("--eval-data", metavar="PATH", help="CSV whose inputs are used to compare predictions")
    p.add_argument("--figure", metavar="PATH", help="also render the sweep to an image file")
    p.set_defaults(func=cmd_gap_sweep)

    p = sub.add_parser("predict", help="predict with a saved model or posterior")
    _common(p)
    p.add_argument("--model", metavar="PATH", help="model or posterior JSON")
    p.add_argument("--inputs", metavar="PATH", help="CSV of input rows (all columns are inputs)")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("sinc-demo", help="Bayesian predictions for the sinc function")
    _common(p)
    p.add_argument("--grid-points", type=int, default=601)
    p.add_argument("--grid-range", nargs=2, type=float, default=(-3 * math.pi, 3 * math.pi),
                   metavar=("LO", "HI"))
    p.add_argument("--figure", metavar="PATH", help="also render the predictions to an image file")
    p.set_defaults(func=cmd_sinc_demo)
    return parser


def _fail(category, message, status):
    sys.stderr.write(json.dumps({"error": category, "message": str(message)}) + "\n")
    return status


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except SingularSystemError as exc:
        return _fail(exc.category, exc, EXIT_NUMERICAL)
    except np.linalg.LinAlgError as exc:
        return _fail("numerical", exc, EXIT_NUMERICAL)
    except EpsLssvrError as exc:
        return _fail(exc.category, exc, EXIT_INVALID)
    except OSError as exc:
        return _fail("io", exc, EXIT_IO)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
