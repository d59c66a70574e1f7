"""Command-line front end.

Every subcommand resolves one configuration from three layers (built-in
defaults, an optional JSON file given with ``--config``, then explicit flags),
runs, and writes a JSON report that embeds the resolved configuration, so that
``--config report.json`` reproduces the run.  Tables and profiles are written
as plain CSV.

Exit codes: 0 success, 1 a verification check failed, 2 bad configuration,
3 parameters outside the regime of the requested computation, 4 the solver did
not converge (partial artifacts are still written).
"""
from __future__ import annotations

import argparse
import copy
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

from . import __version__
from . import closed_form as cf
from .core import StatePair, default_grid, hardy_constant, make_grid, make_params
from .errors import (
    AllStartsFailed,
    ConfigError,
    HardyNehariError,
    OutOfRegime,
    ParameterError,
)
from .functional import energy, nehari_residuals
from .minimize import Classification, SolveOptions, default_starts, minimize_nehari, minimize_quotient, scan
from .verify import SUITES, all_passed, run_suite

log = logging.getLogger("hardy_nehari")

WORKERS_ENV = "HARDY_NEHARI_WORKERS"
COMMANDS = ("constants", "exact", "solve", "scan", "mp-level", "verify")

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG, EXIT_REGIME, EXIT_NOT_CONVERGED = 0, 1, 2, 3, 4

DEFAULTS = {
    "params": {"N": 4, "lambda1": 0.5, "lambda2": 0.5, "alpha": None, "beta": None, "nu": 0.0},
    "grid": {"L": None, "n": None},
    "solver": SolveOptions().as_dict(),
    "solve": {"mode": "nehari", "theta": None},
    "scan": {"nu_list": [], "mode": "nehari"},
    "verify": {"suite": "identities"},
    "output": {"report": None, "table": None, "profile": None, "profile_stride": 1},
    "workers": None,
}


# -- configuration -------------------------------------------------------------------

def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected a list of numbers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON configuration file; flags override its values")
    g = common.add_argument_group("parameters")
    g.add_argument("--N", type=int)
    g.add_argument("--lambda1", type=float)
    g.add_argument("--lambda2", type=float)
    g.add_argument("--alpha", type=float, help="default 2*/2")
    g.add_argument("--beta", type=float, help="default 2*/2")
    g.add_argument("--nu", type=float)
    g = common.add_argument_group("grid")
    g.add_argument("--L", type=float, help="half width in s = ln r (default: sized from the decay rate)")
    g.add_argument("--n", type=int, help="number of grid points (odd)")
    g = common.add_argument_group("solver")
    g.add_argument("--max-iters", type=int)
    g.add_argument("--grad-tol", type=float)
    g.add_argument("--initial-step", type=float)
    g.add_argument("--separations", type=_floats, help="multistart separations, e.g. '4,8'")
    g.add_argument("--dichotomy-threshold", type=float)
    g.add_argument("--no-recenter", action="store_true", default=None)
    g = common.add_argument_group("output")
    g.add_argument("--report", help="JSON report path (default: stdout)")
    g.add_argument("--table", help="CSV table path")
    g.add_argument("--profile", help="CSV profile path (s, w1, w2)")
    g.add_argument("--profile-stride", type=int)
    g.add_argument("--workers", type=int, help=f"worker processes (env {WORKERS_ENV}, default: CPU count)")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="hardy-nehari",
        description="Ground states of the doubly critical coupled system with Hardy potentials.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("constants", parents=[common], help="thresholds, Sobolev constants and levels")
    p = sub.add_parser("exact", parents=[common], help="closed-form synchronized ground state")
    p.add_argument("--theta", type=float, help="angle on the degenerate family (N=4, nu=1/2)")
    p = sub.add_parser("solve", parents=[common], help="minimise the energy on a Nehari set")
    p.add_argument("--mode", choices=("nehari", "quotient"))
    p = sub.add_parser("scan", parents=[common], help="solve over a list of couplings")
    p.add_argument("--nu-list", type=_floats)
    p.add_argument("--mode", choices=("nehari", "quotient"))
    sub.add_parser("mp-level", parents=[common], help="mountain-pass rectangle level")
    p = sub.add_parser("verify", parents=[common], help="run a verification suite")
    p.add_argument("--suite", choices=SUITES + ("all",))
    return parser


def _merge(base: dict, update: dict, path: str = "") -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        if key not in base:
            raise ConfigError(f"unknown configuration key {path + key!r}")
        if isinstance(base[key], dict):
            if not isinstance(value, dict):
                raise ConfigError(f"{path + key!r} must be an object")
            out[key] = _merge(base[key], value, f"{path}{key}.")
        else:
            out[key] = value
    return out


def load_config(path: str) -> dict:
    try:
        data = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read configuration {path!r}: {exc}") from exc
    if not isinstance(data, dict):
        raise ConfigError("configuration must be a JSON object")
    if "config" in data and "tool" in data:     # a previous report
        data = data["config"]
    data = {k: v for k, v in data.items() if k != "command"}
    return data


def resolve_config(args: argparse.Namespace) -> dict:
    cfg = copy.deepcopy(DEFAULTS)
    if args.config:
        cfg = _merge(cfg, load_config(args.config))
    flags = {
        "params": {k: getattr(args, k) for k in ("N", "lambda1", "lambda2", "alpha", "beta", "nu")},
        "grid": {"L": args.L, "n": args.n},
        "solver": {"max_iters": args.max_iters, "grad_tol": args.grad_tol,
                   "initial_step": args.initial_step, "separations": args.separations,
                   "dichotomy_threshold": args.dichotomy_threshold,
                   "recenter": None if args.no_recenter is None else False},
        "output": {"report": args.report, "table": args.table, "profile": args.profile,
                   "profile_stride": args.profile_stride},
        "workers": args.workers,
    }
    if args.command == "solve":
        flags["solve"] = {"mode": args.mode}
    if args.command == "exact":
        flags["solve"] = {"theta": args.theta}
    if args.command == "scan":
        flags["scan"] = {"nu_list": args.nu_list, "mode": args.mode}
    if args.command == "verify":
        flags["verify"] = {"suite": args.suite}
    for section, values in flags.items():
        if isinstance(values, dict):
            cfg[section].update({k: v for k, v in values.items() if v is not None})
        elif values is not None:
            cfg[section] = values
    return cfg


def _params(cfg: dict):
    p = cfg["params"]
    N = p["N"]
    if isinstance(N, bool) or not isinstance(N, int) or N < 3:
        raise ConfigError(f"N must be an integer >= 3, got {N!r}")
    try:
        half = N / (N - 2)
        alpha = half if p["alpha"] is None else p["alpha"]
        beta = half if p["beta"] is None else p["beta"]
        return make_params(N, p["lambda1"], p["lambda2"], alpha, beta, p["nu"])
    except OutOfRegime:
        raise
    except (ParameterError, TypeError, ZeroDivisionError, ValueError) as exc:
        raise ConfigError(f"invalid parameters: {exc}") from exc


def _grid(cfg: dict, params, extent: float = 0.0):
    g = cfg["grid"]
    if g["L"] is None and g["n"] is None:
        return default_grid(params, extent=extent)
    if g["L"] is None or g["n"] is None:
        raise ConfigError("give both L and n, or neither")
    try:
        return make_grid(g["L"], g["n"])
    except HardyNehariError as exc:
        raise ConfigError(str(exc)) from exc


def _options(cfg: dict) -> SolveOptions:
    try:
        return SolveOptions(**cfg["solver"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid solver options: {exc}") from exc


def _workers(cfg: dict) -> int:
    if cfg["workers"] is not None:
        return max(1, int(cfg["workers"]))
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from exc
    return os.cpu_count() or 1


# -- output helpers -------------------------------------------------------------------

def _clean(x):
    """JSON-safe copy: non-finite floats become null."""
    if isinstance(x, float) and not math.isfinite(x):
        return None
    if isinstance(x, dict):
        return {k: _clean(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_clean(v) for v in x]
    return x


def write_table(path: str, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def write_profile(path: str, pair: StatePair, stride: int = 1) -> None:
    a, b = pair.arrays()
    s = pair.grid.s
    idx = range(0, pair.grid.n, max(1, int(stride)))
    write_table(path, ["s", "w1", "w2"], [[float(s[i]), float(a[i]), float(b[i])] for i in idx])


# -- commands -----------------------------------------------------------------------------

def cmd_constants(cfg: dict) -> tuple[dict, list]:
    p = _params(cfg)
    N = p.N
    M1, M2 = cf.levels(p)
    rows = [
        ("Lambda_N", hardy_constant(N)),
        ("critical_exponent", p.crit),
        ("S", cf.sobolev_constant(N)),
        ("S_lambda1", cf.s_lambda(N, p.lambda1)),
        ("S_lambda2", cf.s_lambda(N, p.lambda2)),
        ("M1", M1),
        ("M2", M2),
        ("nu0", cf.nu0(N, p.lambda1, p.lambda2)),
    ]
    if N == 4:
        rows.append(("nu1", cf.nu1(p.lambda1, p.lambda2)))
    table = [[k, v] for k, v in rows]
    return {"params": p.as_dict(), "constants": dict(rows)}, (["quantity", "value"], table)


def cmd_exact(cfg: dict) -> tuple[dict, tuple | None, StatePair]:
    p = _params(cfg)
    grid = _grid(cfg, p)
    pair = cf.synchronized_pair(p, grid, theta=cfg["solve"]["theta"])
    e = energy(p, pair)
    a, b = pair.arrays()
    result = {"params": p.as_dict(), "grid": grid.as_dict(), "energy": e.total,
              "nehari_residuals": list(nehari_residuals(p, pair)),
              "amplitude1": float(max(a)), "amplitude2": float(max(b))}
    if p.N >= 5:
        roots = cf.solve_kl(p.N, p.nu)
        result["kl_roots"] = [{"k": r.k, "l": r.l, "residual": r.residual} for r in roots]
    return result, None, pair


def cmd_solve(cfg: dict):
    p = _params(cfg)
    opts = _options(cfg)
    mode = cfg["solve"]["mode"]
    M1, M2 = cf.levels(p)
    if mode == "quotient":
        grid = _grid(cfg, p)
        rep = minimize_quotient(p, default_starts(p, grid, ())[0][1], opts)
    else:
        if p.nu == 0:
            raise OutOfRegime("the two-constraint Nehari set needs nu != 0")
        grid = _grid(cfg, p, extent=max(opts.separations, default=0.0) / 2)
        rep = minimize_nehari(p, opts, grid)
    result = {"params": p.as_dict(), "grid": grid.as_dict(), "mode": mode,
              "report": rep.summary(), "runs": rep.runs, "levels": {"M1": M1, "M2": M2},
              "history": rep.history}
    ok = rep.converged or rep.classification is Classification.DICHOTOMIZING
    return result, rep.state, ok


def cmd_scan(cfg: dict):
    p = _params(cfg)
    opts = _options(cfg)
    nus = cfg["scan"]["nu_list"]
    if not nus:
        raise ConfigError("scan needs a nonempty nu list (--nu-list)")
    mode = cfg["scan"]["mode"]
    grid = _grid(cfg, p, extent=max(opts.separations, default=0.0) / 2)
    reports = scan(p, nus, opts, grid, mode=mode, workers=_workers(cfg))
    rows = []
    quantities = ("energy", "grad_norm", "iterations", "converged", "classification",
                  "nehari_residual_1", "nehari_residual_2", "separation")
    summaries = [r.summary() for r in reports]
    for s in summaries:
        for q in quantities:
            rows.append([s["nu"], q, s[q]])
    ok = all(r.converged or r.classification is Classification.DICHOTOMIZING for r in reports)
    result = {"params": p.as_dict(), "grid": grid.as_dict(), "mode": mode, "entries": summaries}
    return result, (["nu", "quantity", "value"], rows), ok


def cmd_mp_level(cfg: dict):
    p = _params(cfg)
    grid = _grid(cfg, p)
    mp = cf.mountain_pass(p, grid)
    M1, M2 = cf.levels(p)
    rows = [["level", mp.level], ["t", mp.t], ["s", mp.s], ["t1", mp.t1], ["d0", mp.d0],
            ["M1_plus_M2", M1 + M2]]
    result = {"params": p.as_dict(), "grid": grid.as_dict(), **{k: v for k, v in rows}}
    return result, (["quantity", "value"], rows)


def cmd_verify(cfg: dict):
    suite = cfg["verify"]["suite"]
    params = None
    if cfg["params"] != DEFAULTS["params"]:
        params = _params(cfg)
    results = run_suite(suite, params, _options(cfg), workers=_workers(cfg))
    rows = [[r.name, r.claimed, r.computed, r.error, r.tolerance, r.relation, r.passed,
             r.informational] for r in results]
    header = ["name", "claimed", "computed", "error", "tolerance", "relation", "passed", "informational"]
    return {"suite": suite, "checks": [r.as_dict() for r in results]}, (header, rows), all_passed(results)


def execute(cfg: dict, command: str) -> tuple[int, dict]:
    """Run ``command`` and write its artifacts; returns (exit code, report)."""
    t0 = time.perf_counter()
    out = cfg["output"]
    table = profile = None
    code = EXIT_OK
    if command == "constants":
        result, table = cmd_constants(cfg)
    elif command == "exact":
        result, table, profile = cmd_exact(cfg)
    elif command == "solve":
        result, profile, ok = cmd_solve(cfg)
        code = EXIT_OK if ok else EXIT_NOT_CONVERGED
    elif command == "scan":
        result, table, ok = cmd_scan(cfg)
        code = EXIT_OK if ok else EXIT_NOT_CONVERGED
    elif command == "mp-level":
        result, table = cmd_mp_level(cfg)
    elif command == "verify":
        result, table, ok = cmd_verify(cfg)
        code = EXIT_OK if ok else EXIT_CHECK_FAILED
    else:
        raise ConfigError(f"unknown command {command!r}")
    report = {"tool": "hardy-nehari", "version": __version__, "command": command,
              "config": cfg, "result": result, "exit_code": code,
              "wall_time": time.perf_counter() - t0}
    if table is not None and out["table"]:
        write_table(out["table"], *table)
    if profile is not None and out["profile"]:
        write_profile(out["profile"], profile, out["profile_stride"])
    return code, _clean(report)


def _emit(report: dict, path: str | None) -> None:
    text = json.dumps(report, indent=2)
    if path:
        Path(path).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        code, report = execute(cfg, args.command)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OutOfRegime as exc:
        print(f"outside the regime of this computation: {exc}", file=sys.stderr)
        return EXIT_REGIME
    except AllStartsFailed as exc:
        print(f"solver failed: {exc}", file=sys.stderr)
        for f in exc.failures:
            print(f"  {f}", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    except ParameterError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    _emit(report, cfg["output"]["report"])
    return code


if __name__ == "__main__":
    raise SystemExit(main())
