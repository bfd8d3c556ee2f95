"""Command-line interface: ``affine-shape <verb> ...``.

Exit codes: 0 success, 1 validation failure, 2 degenerate data, 64 usage,
65 data error, 70 internal fit failure.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .algebra import MatrixF
from .densities import (
    EllipticalShapeModel,
    Truncation,
    log_density_central,
    log_density_gaussian,
    log_density_general,
)
from .errors import AffineShapeError, ConvergenceError, DimensionError
from .generators import GaussianGenerator, KotzGenerator, MatrixTGenerator
from .inference import FitOptions, ShapeSample, fit_mle, lrt_equal_means
from .io import (
    ConfigurationFile,
    DataFormatError,
    LandmarkFile,
    ParseError,
    configurations_from_landmarks,
    read_any,
)
from .mc_validation import RngSpec, SUITES, run_suite, sample_matrix_elliptical
from .shape import ConfigurationCoordinates, helmert_submatrix

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_DEGENERATE = 2
EXIT_USAGE = 64
EXIT_DATA = 65
EXIT_FIT = 70


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="random seed (default 0)")
    p.add_argument("--out", default=d(None), help="output path (default: standard output)")
    p.add_argument("--tol", type=float, default=d(1e-10), help="series tolerance (default 1e-10)")
    p.add_argument("--max-shell", type=int, default=d(20),
                   help="largest series shell for general densities (default 20)")
    p.add_argument("--restarts", type=int, default=d(5), help="Nelder-Mead restarts (default 5)")
    p.add_argument("--format", choices=("json", "csv"), default=d("json"))


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="affine-shape",
                     description="Affine shape densities, fitting and testing for landmark data.")
    parser.add_argument("--version", action="version", version=__version__)
    _global_flags(parser, suppress=False)
    common = argparse.ArgumentParser(add_help=False)
    _global_flags(common, suppress=True)
    sub = parser.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("config", parents=[common], help="configuration coordinates per specimen")
    p.add_argument("input")
    p.add_argument("--theta", help="K x K x beta JSON matrix (default identity)")

    p = sub.add_parser("fit", parents=[common], help="maximum-likelihood fit of one group")
    p.add_argument("input")
    p.add_argument("--group", help="group label override")

    p = sub.add_parser("test", parents=[common], help="likelihood-ratio test of equal mean shape")
    p.add_argument("input_a")
    p.add_argument("input_b")

    p = sub.add_parser("density", parents=[common], help="evaluate affine shape densities")
    p.add_argument("input", nargs="?", help="configuration or landmark file")
    p.add_argument("--v", help="inline V as a JSON q x K (x beta) array")
    p.add_argument("--grid", help="lo:hi:n grid of real V values (beta = K = q = 1)")
    p.add_argument("--model", choices=("central", "gaussian", "general"), default="central")
    p.add_argument("--beta", type=int)
    p.add_argument("--N", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--mu", help="reduced (N-1) x K mean: JSON array or file")
    p.add_argument("--mu-landmarks", help="landmark-level N x K mean: JSON array or file")
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--sigma", help="(N-1) x (N-1) scale matrix: JSON array or file")
    p.add_argument("--theta", help="K x K matrix: JSON array or file")
    p.add_argument("--generator", choices=("gaussian", "kotz", "t"), default="gaussian")
    p.add_argument("--shape", type=int, default=2, help="Kotz shape")
    p.add_argument("--rate", type=float, default=0.5, help="Kotz rate")
    p.add_argument("--nu", type=float, default=3.0, help="t degrees of freedom")
    p.add_argument("--max-t", type=int, default=40, help="outer series budget (default 40)")
    p.add_argument("--max-r", type=int, default=40, help="noncentral series budget (default 40)")

    p = sub.add_parser("simulate", parents=[common], help="synthetic landmark data")
    p.add_argument("--beta", type=int, default=2)
    p.add_argument("--N", type=int, default=13)
    p.add_argument("--K", type=int, default=1)
    p.add_argument("--n", type=int, default=14)
    p.add_argument("--sigma2", type=float, default=0.02)
    p.add_argument("--mu-landmarks", help="landmark-level N x K mean: JSON array or file")
    p.add_argument("--shift", type=float, default=0.0,
                   help="displace the last landmark's first component (H1 data)")
    p.add_argument("--generator", choices=("gaussian", "t"), default="gaussian")
    p.add_argument("--nu", type=float, default=3.0)
    p.add_argument("--group", default="simulated")

    p = sub.add_parser("validate", parents=[common], help="run Monte Carlo validation suites")
    p.add_argument("suite", help="one of: " + ", ".join(SUITES))
    p.add_argument("--budget", type=float, default=1.0, help="sample-size multiplier (default 1)")
    p.add_argument("--negative-control", action="store_true",
                   help="run the deliberately wrong variants (they must fail)")
    return parser


# ---------------------------------------------------------------------------
# helpers

def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _dump(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serialisable: {type(o).__name__}")


def _json_arg(text: str):
    """Inline JSON, or the path of a JSON file."""
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        pass
    path = Path(text)
    if not path.is_file():
        raise UsageError(f"{text!r} is neither inline JSON nor a readable file")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def _matrix_arg(text: str | None, beta: int, shape: tuple) -> MatrixF | None:
    if text is None:
        return None
    a = np.asarray(_json_arg(text), dtype=float)
    if a.ndim == len(shape) and beta == 1:
        a = a[..., None]
    if a.ndim == 1 and len(shape) == 2 and shape[1] == 1 and a.size == shape[0] * beta:
        a = a.reshape(shape[0], 1, beta)
    if a.shape != (*shape, beta):
        raise DimensionError(f"expected a {shape} matrix over beta={beta}, got array of shape {a.shape}")
    return MatrixF(a, beta)


def _configurations(path: str, group: str | None = None) -> ConfigurationFile:
    data = read_any(path, group)
    if isinstance(data, LandmarkFile):
        data = configurations_from_landmarks(data)
    return data


def _sample(cf: ConfigurationFile) -> ShapeSample:
    if len(cf.specimens) < 2:
        raise DimensionError(f"group {cf.group!r} needs at least 2 nondegenerate specimens, "
                             f"has {len(cf.specimens)}")
    return ShapeSample(cf.group or "group", tuple(c for _, c in cf.specimens),
                       tuple(sid for sid, _ in cf.specimens))


def _fit_dict(fit, opts: FitOptions) -> dict:
    d = fit.to_dict()
    diag = dict(d["diagnostics"])
    trace = diag.pop("best_trace", [])
    diag["trace_length"] = len(trace)
    d["diagnostics"] = diag
    d["seed"] = opts.seed
    d["restarts"] = opts.restarts
    return d


# ---------------------------------------------------------------------------
# verbs

def cmd_config(args) -> int:
    lf = read_any(args.input)
    if not isinstance(lf, LandmarkFile):
        raise DataFormatError("config expects a landmark file")
    theta = _matrix_arg(args.theta, lf.beta, (lf.K, lf.K))
    cf = configurations_from_landmarks(lf, theta)
    cf.specimens.sort(key=lambda t: t[0])
    for sid in cf.degenerate:
        print(f"warning: specimen {sid!r} is degenerate (singular leading block)", file=sys.stderr)
    _emit(_dump(cf.to_json_obj()), args.out)
    if lf.specimens and not cf.specimens:
        return EXIT_DEGENERATE
    return EXIT_OK


def cmd_fit(args) -> int:
    cf = _configurations(args.input, args.group)
    sample = _sample(cf)
    opts = FitOptions(restarts=args.restarts, seed=args.seed)
    try:
        fit = fit_mle(sample, opts)
    except (ConvergenceError, FloatingPointError) as exc:
        print(f"error: fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    d = _fit_dict(fit, opts)
    d["group"] = sample.label
    d["n_specimens"] = len(sample)
    _emit(_dump(d), args.out)
    return EXIT_OK


def cmd_test(args) -> int:
    a = _sample(_configurations(args.input_a))
    b = _sample(_configurations(args.input_b))
    opts = FitOptions(restarts=args.restarts, seed=args.seed)
    try:
        res = lrt_equal_means(a, b, opts)
    except ConvergenceError as exc:
        print(f"error: fit failed: {exc}", file=sys.stderr)
        return EXIT_FIT
    d = res.to_dict()
    d.update({"group_a": a.label, "group_b": b.label, "n_a": len(a), "n_b": len(b),
              "seed": opts.seed, "restarts": opts.restarts,
              "fit_h1": [_fit_dict(f, opts) for f in res.fit_h1],
              "fit_h0": [_fit_dict(f, opts) for f in res.fit_h0]})
    print(f"-2 log Lambda = {res.statistic:.4f}  df = {res.df}  p = {res.p_value:.4g}"
          f"  ({a.label}: n={len(a)}, {b.label}: n={len(b)})")
    if args.out:
        Path(args.out).write_text(_dump(d))
    return EXIT_OK


def _density_points(args):
    """``[(id, V or None, error)]`` plus ``(beta, N, K)``."""
    if args.grid:
        try:
            lo, hi, n = args.grid.split(":")
            xs = np.linspace(float(lo), float(hi), int(n))
        except ValueError as exc:
            raise UsageError("--grid must be lo:hi:n") from exc
        beta, N, K = args.beta or 1, args.N or 3, args.K or 1
        if (beta, N - K - 1, K) != (1, 1, 1):
            raise UsageError("--grid is defined for beta = K = q = 1")
        return [(f"{x:.12g}", MatrixF(np.array([[[x]]]), 1)) for x in xs], (beta, N, K)
    if args.v:
        beta, K = args.beta or 1, args.K or 1
        a = np.asarray(_json_arg(args.v), dtype=float)
        if a.ndim == 0:
            a = a.reshape(1, 1, 1)
        elif a.ndim == 2 and beta == 1:
            a = a[..., None]
        elif a.ndim == 1:
            a = a.reshape(-1, K, beta)
        if a.ndim != 3 or a.shape[1:] != (K, beta):
            raise DimensionError(f"inline V must be q x {K} over beta={beta}")
        N = a.shape[0] + K + 1
        if args.N and args.N != N:
            raise DimensionError(f"inline V implies N = {N}, --N says {args.N}")
        return [("v", MatrixF(a, beta))], (beta, N, K)
    if not args.input:
        raise UsageError("density needs an input file, --v or --grid")
    cf = _configurations(args.input)
    return sorted((sid, c.V) for sid, c in cf.specimens), (cf.beta, cf.N, cf.K)


def _density_evaluator(args, beta: int, N: int, K: int):
    n1 = N - 1
    if args.sigma:
        Sigma = _matrix_arg(args.sigma, beta, (n1, n1))
    else:
        Sigma = MatrixF.identity(n1, beta) * args.sigma2
    if args.model == "central":
        return lambda V: log_density_central(V, Sigma)
    Theta = _matrix_arg(args.theta, beta, (K, K)) or MatrixF.identity(K, beta)
    if args.mu_landmarks:
        muX = _matrix_arg(args.mu_landmarks, beta, (N, K))
        mu = MatrixF.from_real(helmert_submatrix(N), beta) @ muX
    else:
        mu = _matrix_arg(args.mu, beta, (n1, K)) or MatrixF.zeros(n1, K, beta)
    if args.model == "gaussian":
        return lambda V: log_density_gaussian(V, mu, Sigma, Theta)
    D = beta * K * n1
    gen = {"gaussian": lambda: GaussianGenerator(beta, D),
           "kotz": lambda: KotzGenerator(beta, D, args.shape, args.rate),
           "t": lambda: MatrixTGenerator(beta, D, args.nu)}[args.generator]()
    model = EllipticalShapeModel(N, K, beta, mu, Sigma, Theta, gen)
    trunc = Truncation(args.max_t, args.max_r, args.max_shell, args.tol)
    return lambda V: log_density_general(V, model, trunc)


def cmd_density(args) -> int:
    points, (beta, N, K) = _density_points(args)
    logf = _density_evaluator(args, beta, N, K)
    rows = []
    for pid, V in points:
        try:
            lv = logf(ConfigurationCoordinates(V))
            rows.append({"id": pid, "density": math.exp(lv), "log_density": lv, "status": "ok"})
        except (AffineShapeError, ValueError, ArithmeticError) as exc:
            rows.append({"id": pid, "density": None, "log_density": None,
                         "status": f"error: {exc}"})
    if args.format == "csv":
        lines = ["id,density,log_density,status"]
        for r in rows:
            d = "" if r["density"] is None else repr(r["density"])
            ld = "" if r["log_density"] is None else repr(r["log_density"])
            status = r["status"].replace(",", ";")
            lines.append(f"{r['id']},{d},{ld},{status}")
        _emit("\n".join(lines) + "\n", args.out)
    else:
        _emit(_dump({"model": args.model, "beta": beta, "N": N, "K": K, "points": rows}), args.out)
    return EXIT_OK


def default_mean(beta: int, N: int, K: int) -> np.ndarray:
    """Deterministic landmark-level mean: an ellipse in the plane for ``beta = 2, K = 1``."""
    th = 2.0 * np.pi * np.arange(N) / N
    mu = np.zeros((N, K, beta))
    for k in range(K):
        for c in range(beta):
            j = k * beta + c
            mu[:, k, c] = np.cos(th * (1 + j % 2) + j * np.pi / (beta * K + 1)) * (1.0 - 0.4 * (j % 2))
    if (beta, K) == (2, 1):
        mu[:, 0, 0] = np.cos(th)
        mu[:, 0, 1] = 0.6 * np.sin(th) + 0.1 * np.cos(2.0 * th)
    return mu


def cmd_simulate(args) -> int:
    beta, N, K = args.beta, args.N, args.K
    if beta not in (1, 2, 4):
        raise UsageError("--beta must be 1, 2 or 4")
    if N < K + 2 or K < 1:
        raise UsageError("need K >= 1 and N >= K + 2")
    if args.n < 0 or not args.sigma2 > 0:
        raise UsageError("--n must be >= 0 and --sigma2 > 0")
    if args.mu_landmarks:
        muX = _matrix_arg(args.mu_landmarks, beta, (N, K))
    else:
        muX = MatrixF(default_mean(beta, N, K), beta)
    if args.shift:
        d = muX.data.copy()
        d[-1, 0, 0] += args.shift
        muX = MatrixF(d, beta)
    gen = GaussianGenerator(beta, beta * N * K) if args.generator == "gaussian" else \
        MatrixTGenerator(beta, beta * N * K, args.nu)
    Sigma = MatrixF.identity(N, beta) * args.sigma2
    Theta = MatrixF.identity(K, beta)
    rng = RngSpec(args.seed).generator()
    if args.n:
        X = sample_matrix_elliptical(muX, Sigma, Theta, gen, rng, size=args.n)
        specs = [(f"{args.group}-{i + 1:03d}", MatrixF(X[i], beta)) for i in range(args.n)]
    else:
        specs = []
    lf = LandmarkFile(beta, N, K, specs, args.group)
    if args.format == "csv":
        _emit(lf.to_csv(), args.out)
    else:
        _emit(_dump(lf.to_json_obj()), args.out)
    return EXIT_OK


def cmd_validate(args) -> int:
    if args.suite not in SUITES:
        raise UsageError(f"unknown suite {args.suite!r}; choose from {', '.join(SUITES)}")
    if not args.budget > 0:
        raise UsageError("--budget must be positive")
    results = run_suite(args.suite, budget=args.budget, seed=args.seed,
                        negative_control=args.negative_control)
    lines = []
    failed = 0
    for name, rec, ok in results:
        rec = dict(rec)
        rec["name"] = name
        rec["passed"] = ok
        lines.append(json.dumps(rec, sort_keys=True, default=_json_default))
        failed += not ok
    _emit("\n".join(lines) + ("\n" if lines else ""), args.out)
    print(f"{'check':<40} {'result':>8}", file=sys.stderr)
    for name, rec, ok in results:
        z = rec.get("z_score")
        detail = f"z={z:+.2f}" if z is not None else ""
        print(f"{name:<40} {'pass' if ok else 'FAIL':>8} {detail}", file=sys.stderr)
    return EXIT_VALIDATION if failed else EXIT_OK


VERBS = {"config": cmd_config, "fit": cmd_fit, "test": cmd_test, "density": cmd_density,
         "simulate": cmd_simulate, "validate": cmd_validate}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return VERBS[args.verb](args)
    except (UsageError, ParseError) as exc:
        print(f"affine-shape {args.verb}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (DataFormatError, DimensionError) as exc:
        print(f"affine-shape {args.verb}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except AffineShapeError as exc:
        print(f"affine-shape {args.verb}: data error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
