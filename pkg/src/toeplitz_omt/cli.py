"""Command-line front end.

Every command prints a JSON (or one-line text) summary on stdout and writes
files only where ``--output`` points. Failures print an error object on
stderr and exit with 2 (usage or input), 3 (numerical failure) or
4 (infeasible problem).

Defaults of the global flags can be changed in a JSON config file, read
from ``$TOEPLITZ_OMT_CONFIG`` or else ``~/.config/toeplitz-omt/config.json``.
Flags given on the command line take precedence.
"""
from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import demos, io
from .clustering import (
    COMPARISON_METRICS,
    DEFAULT_RESTARTS,
    barycenter_tk,
    kmeans,
    kmeans_comparison,
)
from .errors import ConvergenceError, InfeasibleError, SolverError, ToeplitzOMTError, ValidationError
from .paths import CovariancePath, track
from .sos import sos_lower_bound
from .spectral import FrequencyGrid, ToeplitzCov
from .transport import DEFAULT_GRID, DEFAULT_KAPPA, CostSpec, compute_T, compute_T_kappa

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL, EXIT_INFEASIBLE = 0, 2, 3, 4
CONFIG_ENV = "TOEPLITZ_OMT_CONFIG"
DEFAULT_CONFIG_PATH = os.path.join("~", ".config", "toeplitz-omt", "config.json")
COST_CHOICES = ("chordal_pow", "abs_angle_pow", "fixed_plus_chordal")

# global defaults; a config file may override any of these keys
GLOBAL_DEFAULTS = {
    "grid_size": None,
    "cost": "chordal_pow",
    "cost_p": 2.0,
    "kappa": None,
    "feas_tol": None,
    "seed": 0,
    "format": "json",
}
_CONFIG_TYPES = {"grid_size": int, "cost": str, "cost_p": (int, float), "kappa": (int, float),
                 "feas_tol": (int, float), "seed": int, "format": str}


class UsageError(ValidationError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# --- config ------------------------------------------------------------------------


def config_path() -> str:
    return os.path.expanduser(os.environ.get(CONFIG_ENV) or DEFAULT_CONFIG_PATH)


def load_config(path=None) -> dict:
    """Global defaults merged with the config file, if one exists."""
    cfg = dict(GLOBAL_DEFAULTS)
    explicit = path is not None or bool(os.environ.get(CONFIG_ENV))
    path = path or config_path()
    if not os.path.exists(path):
        if explicit:
            raise UsageError(f"config file {path} does not exist")
        return cfg
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path}: invalid JSON: {exc.msg}") from exc
    if not isinstance(data, dict):
        raise UsageError(f"config file {path}: top level must be an object")
    unknown = sorted(set(data) - set(GLOBAL_DEFAULTS))
    if unknown:
        raise UsageError(f"config file {path}: unknown keys {unknown}")
    for key, v in data.items():
        want = _CONFIG_TYPES[key]
        if v is None and key in ("grid_size", "kappa", "feas_tol"):
            continue
        if isinstance(v, bool) or not isinstance(v, want):
            raise UsageError(f"config file {path}: {key} has the wrong type ({type(v).__name__})")
    cfg.update(data)
    return cfg


# --- parser --------------------------------------------------------------------------


def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _global_options(g, d, top):
    """Global flags; subcommands repeat them so they may follow the command name."""

    def add(*names, default, help, **kw):
        if top:
            g.add_argument(*names, default=default, help=help, **kw)
        else:
            # keep the value parsed before the command unless given again
            g.add_argument(*names, default=argparse.SUPPRESS,
                           help=f"{help} (default: {default})", **kw)

    add("--grid-size", "-N", type=int, default=d["grid_size"],
        help=f"frequency grid size; None means {DEFAULT_GRID}, demos use their own")
    add("--cost", choices=COST_CHOICES, default=d["cost"], help="ground cost kind")
    add("--cost-p", type=float, default=d["cost_p"], help="exponent of chordal_pow and abs_angle_pow")
    add("--kappa", type=float, default=d["kappa"],
        help=f"mass penalty; None selects T for distance/interpolate "
             f"and {DEFAULT_KAPPA} for barycenter/kmeans")
    add("--feas-tol", type=float, default=d["feas_tol"],
        help="moment tolerance per row; None means 1e-7*||R||_F, 0 exact")
    add("--seed", type=int, default=d["seed"], help="random seed")
    add("--output", "-o", default=None,
        help="output file (directory for demo); nothing is written without it")
    add("--format", choices=("json", "text"), default=d["format"], help="stdout summary format")


def build_parser(defaults=None) -> argparse.ArgumentParser:
    d = dict(GLOBAL_DEFAULTS if defaults is None else defaults)
    fmt = argparse.ArgumentDefaultsHelpFormatter
    p = _Parser(prog="toeplitz-omt", formatter_class=fmt,
                description="Transport distances, paths and clusters of Toeplitz covariances.",
                epilog=f"Config file: ${CONFIG_ENV} or {DEFAULT_CONFIG_PATH}. "
                       "Exit codes: 0 success, 2 usage, 3 numerical failure, 4 infeasible.")
    _global_options(p.add_argument_group("global options"), d, top=True)

    sub = p.add_subparsers(dest="command", metavar="COMMAND", required=True)

    def command(name, help):
        sp = sub.add_parser(name, formatter_class=fmt, help=help, description=help)
        _global_options(sp.add_argument_group("global options"), d, top=False)
        return sp

    s = command("distance", help="T or T_kappa between two covariances")
    s.add_argument("R0", help="Toeplitz JSON file")
    s.add_argument("R1", help="Toeplitz JSON file")

    s = command("interpolate", help="covariance path between two covariances")
    s.add_argument("R0", help="Toeplitz JSON file")
    s.add_argument("R1", help="Toeplitz JSON file")
    s.add_argument("--taus", type=_floats, default=None,
                   help="comma-separated tau values; overrides --n-tau/--tau-max")
    s.add_argument("--n-tau", type=int, default=41, help="number of tau values")
    s.add_argument("--tau-max", type=float, default=1.0, help="last tau (>1 extrapolates)")
    s.add_argument("--n-theta", type=int, default=512, help="frequencies in the spectrum CSV")
    s.add_argument("--spectrum-csv", default=None,
                   help="also write correlograms in long format (tau, theta, value)")

    s = command("track", help="fit a transport path to estimates")
    s.add_argument("estimates", nargs="+", help="Toeplitz or Hermitian JSON files in time order")
    s.add_argument("--taus", type=_floats, default=None,
                   help="estimate times; None spaces them evenly on [0, 1]")
    s.add_argument("--lam", type=float, default=None, help="data weight; None means 1/(2 n^2)")
    s.add_argument("--n-tau", type=int, default=41, help="tau values of the returned path")

    s = command("barycenter", help="T_kappa barycenter")
    s.add_argument("inputs", nargs="+", help="Toeplitz JSON files")

    s = command("kmeans", help="K-means clustering")
    s.add_argument("inputs", nargs="+", help="Toeplitz JSON files")
    s.add_argument("-K", type=int, required=True, help="number of clusters")
    s.add_argument("--metric", choices=("tk",) + COMPARISON_METRICS, default="tk",
                   help="distance and barycenter")
    s.add_argument("--restarts", type=int, default=DEFAULT_RESTARTS, help="random restarts")
    s.add_argument("--max-iter", type=int, default=50, help="iterations per restart")
    s.add_argument("--normalize", action="store_true", help="scale inputs to unit diagonal")

    s = command("sos", help="SOS lower bound on T")
    s.add_argument("R0", help="Toeplitz JSON file")
    s.add_argument("R1", help="Toeplitz JSON file")
    s.add_argument("-m", type=int, default=None, help="relaxation degree; None means n + 2")

    s = command("demo", help="reproducible experiments")
    s.add_argument("name", choices=demos.DEMOS)
    s.add_argument("--runs", type=int, default=20, help="seeds of cluster-synthetic")
    s.add_argument("--trials", type=int, default=100, help="trials of contractivity")
    return p


# --- helpers -------------------------------------------------------------------------


def _positive(name, v, allow_none=True, allow_zero=False):
    if v is None:
        if allow_none:
            return
        raise UsageError(f"{name} is required")
    if not np.isfinite(v) or v < 0 or (v == 0 and not allow_zero):
        raise UsageError(f"{name} must be {'nonnegative' if allow_zero else 'positive'}, got {v}")


def validate(args):
    """Check every value before any computation starts."""
    if args.cost not in COST_CHOICES:
        raise UsageError(f"--cost must be one of {COST_CHOICES}, got {args.cost!r}")
    if args.format not in ("json", "text"):
        raise UsageError(f"--format must be json or text, got {args.format!r}")
    _positive("--grid-size", args.grid_size)
    if args.grid_size is not None and args.grid_size < 2:
        raise UsageError(f"--grid-size must be at least 2, got {args.grid_size}")
    _positive("--cost-p", args.cost_p, allow_none=False)
    _positive("--kappa", args.kappa)
    _positive("--feas-tol", args.feas_tol, allow_zero=True)
    if args.seed < 0:
        raise UsageError(f"--seed must be nonnegative, got {args.seed}")
    c = args.command
    if c == "interpolate":
        if args.taus is None:
            if args.n_tau < 1:
                raise UsageError(f"--n-tau must be at least 1, got {args.n_tau}")
        elif not args.taus:
            raise UsageError("--taus is empty")
        if args.n_theta < 1:
            raise UsageError(f"--n-theta must be at least 1, got {args.n_theta}")
    if c == "track":
        if args.taus is not None and len(args.taus) != len(args.estimates):
            raise UsageError(f"{len(args.taus)} taus for {len(args.estimates)} estimates")
        _positive("--lam", args.lam)
        if args.n_tau < 1:
            raise UsageError(f"--n-tau must be at least 1, got {args.n_tau}")
    if c == "kmeans":
        if not 1 <= args.K <= len(args.inputs):
            raise UsageError(f"-K must be between 1 and {len(args.inputs)}, got {args.K}")
        if args.restarts < 1 or args.max_iter < 1:
            raise UsageError("--restarts and --max-iter must be at least 1")
    if c == "sos" and args.m is not None and args.m < 2:
        raise UsageError(f"-m must be at least 2, got {args.m}")
    if c == "demo" and (args.runs < 1 or args.trials < 1):
        raise UsageError("--runs and --trials must be at least 1")
    for name in ("R0", "R1"):
        if hasattr(args, name):
            _exists(getattr(args, name))
    for name in ("estimates", "inputs"):
        for f in getattr(args, name, ()):
            _exists(f)


def _exists(path):
    if not os.path.isfile(path):
        raise UsageError(f"input file {path} does not exist")


def _cost(args) -> CostSpec:
    return CostSpec(args.cost, args.cost_p)


def _grid(args) -> FrequencyGrid:
    return FrequencyGrid(args.grid_size or DEFAULT_GRID)


def _read_cov(path):
    """Toeplitz JSON (``lags``) or Hermitian JSON (``entries``)."""
    try:
        with open(path) as fh:
            keys = json.load(fh).keys()
    except (json.JSONDecodeError, AttributeError, UnicodeDecodeError):
        keys = ()
    return io.read_hermitian(path) if "entries" in keys else io.read_toeplitz(path)


def _same_n(Rs):
    ns = {R.n if isinstance(R, ToeplitzCov) else np.asarray(R).shape[0] for R in Rs}
    if len(ns) > 1:
        raise UsageError(f"inputs have different dimensions {sorted(ns)}")


def _cov_dict(R):
    return {"n": R.n, "lags": [[float(z.real), float(z.imag)] for z in R.lags]}


# --- commands ------------------------------------------------------------------------


def cmd_distance(args):
    R0, R1 = io.read_toeplitz(args.R0), io.read_toeplitz(args.R1)
    _same_n([R0, R1])
    if args.kappa is None:
        res = compute_T(R0, R1, _grid(args), _cost(args), feas_tol=args.feas_tol)
    else:
        res = compute_T_kappa(R0, R1, _grid(args), _cost(args), args.kappa, feas_tol=args.feas_tol)
    if args.output:
        io.write_distance(args.output, res)
    return {"command": "distance", "value": res.value, "kappa": res.kappa,
            "grid_size": res.plan.grid.N, "status": res.report.status}


def cmd_interpolate(args):
    R0, R1 = io.read_toeplitz(args.R0), io.read_toeplitz(args.R1)
    _same_n([R0, R1])
    taus = args.taus if args.taus is not None else np.linspace(0.0, args.tau_max, args.n_tau).tolist()
    if args.kappa is None:
        res = compute_T(R0, R1, _grid(args), _cost(args), feas_tol=args.feas_tol)
        path = CovariancePath.evaluate(res.plan, R0.n, taus)
    else:
        res = compute_T_kappa(R0, R1, _grid(args), _cost(args), args.kappa, feas_tol=args.feas_tol)
        path = CovariancePath.evaluate(res.plan, R0.n, taus, res.psi0, res.psi1)
    if args.output:
        path.write_json(args.output)
    if args.spectrum_csv:
        th = -np.pi + 2 * np.pi * np.arange(args.n_theta) / args.n_theta
        path.write_csv(args.spectrum_csv, th)
    return {"command": "interpolate", "value": res.value, "kappa": res.kappa, "taus": path.tau_grid,
            "diagonal": [float(R.r0) for R in path.matrices]}


def cmd_track(args):
    Rs = [_read_cov(f) for f in args.estimates]
    _same_n(Rs)
    k = len(Rs)
    ts = args.taus if args.taus is not None else ([0.0] if k == 1 else np.linspace(0, 1, k).tolist())
    out_taus = np.linspace(min(ts), max(ts), args.n_tau).tolist()
    res = track(list(zip(ts, Rs)), _grid(args), _cost(args), lam=args.lam, taus=out_taus)
    if args.output:
        res.path.write_json(args.output)
    return {"command": "track", "objective": res.objective, "status": res.report.status,
            "taus": res.path.tau_grid,
            "diagonal": [float(R.r0) for R in res.path.matrices]}


def cmd_barycenter(args):
    Rs = [io.read_toeplitz(f) for f in args.inputs]
    _same_n(Rs)
    kappa = DEFAULT_KAPPA if args.kappa is None else args.kappa
    res = barycenter_tk(Rs, _grid(args), _cost(args), kappa, feas_tol=args.feas_tol)
    if args.output:
        io.write_toeplitz(args.output, res.R)
    return {"command": "barycenter", "objective": res.objective, "kappa": kappa,
            "barycenter": _cov_dict(res.R), "status": res.report.status}


def cmd_kmeans(args):
    Rs = [io.read_toeplitz(f) for f in args.inputs]
    _same_n(Rs)
    if args.metric == "tk":
        kappa = DEFAULT_KAPPA if args.kappa is None else args.kappa
        model = kmeans(Rs, args.K, _grid(args), _cost(args), kappa, init_seed=args.seed,
                       max_iter=args.max_iter, n_restarts=args.restarts, normalize=args.normalize,
                       feas_tol=args.feas_tol)
    else:
        model = kmeans_comparison(Rs, args.K, args.metric, init_seed=args.seed,
                                  max_iter=args.max_iter, n_restarts=args.restarts,
                                  normalize=args.normalize)
    d = model.to_dict()
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(d, fh, indent=1)
            fh.write("\n")
    return {"command": "kmeans", "metric": model.metric, "assignments": d["assignments"],
            "total_cost": model.total_cost, "history": d["history"]}


def cmd_sos(args):
    R0, R1 = io.read_toeplitz(args.R0), io.read_toeplitz(args.R1)
    _same_n([R0, R1])
    m = R0.n + 2 if args.m is None else args.m
    if m < R0.n:
        raise UsageError(f"-m must be at least n = {R0.n}, got {m}")
    cert = sos_lower_bound(R0, R1, m)
    if args.output:
        with open(args.output, "w") as fh:
            json.dump(cert.to_dict(), fh)
            fh.write("\n")
    return {"command": "sos", "m": m, "value": cert.value, "status": cert.report.status}


def cmd_demo(args):
    name = args.name
    kw = {"outdir": args.output}
    if args.grid_size is not None:
        kw["grid_size"] = args.grid_size
    if name in ("ar-track", "contractivity"):
        kw["seed"] = args.seed
    if name == "cluster-synthetic":
        kw["seeds"] = range(args.seed, args.seed + args.runs)
    if name == "contractivity":
        kw["trials"] = args.trials
    if name in ("cluster-synthetic", "contractivity") and args.kappa is not None:
        kw["kappa"] = args.kappa
    summary = demos.RUNNERS[name](**kw)
    return {"command": "demo", "demo": name, "passed": summary["passed"], "checks": summary["checks"]}


COMMANDS = {
    "distance": cmd_distance,
    "interpolate": cmd_interpolate,
    "track": cmd_track,
    "barycenter": cmd_barycenter,
    "kmeans": cmd_kmeans,
    "sos": cmd_sos,
    "demo": cmd_demo,
}


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, InfeasibleError):
        return EXIT_INFEASIBLE
    if isinstance(exc, (SolverError, ConvergenceError, np.linalg.LinAlgError)):
        return EXIT_NUMERICAL
    return EXIT_USAGE


def _emit(result, fmt, stream):
    if fmt == "text":
        keys = [k for k in ("value", "objective", "total_cost", "passed") if k in result]
        stream.write(" ".join(f"{k}={result[k]}" for k in ["command"] + keys) + "\n")
    else:
        json.dump(result, stream, default=float)
        stream.write("\n")


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    fmt = "json"
    try:
        cfg = load_config()
        fmt = cfg["format"]
        args = build_parser(cfg).parse_args(argv)
        fmt = args.format
        validate(args)
        result = COMMANDS[args.command](args)
    except SystemExit as exc:
        # --help and --version
        return int(exc.code or 0)
    except (ToeplitzOMTError, OSError, np.linalg.LinAlgError) as exc:
        code = exit_code(exc)
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        report = getattr(exc, "report", None)
        if report is not None:
            err["report"] = report.to_dict()
        json.dump(err, sys.stderr)
        sys.stderr.write("\n")
        return code
    _emit(result, fmt, sys.stdout)
    return EXIT_OK
