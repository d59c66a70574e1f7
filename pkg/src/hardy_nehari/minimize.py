"""Constrained energy minimisation on the Nehari sets.

Both drivers run projected gradient descent: a step along the steepest
descent direction of J measured in the energy norm |.|_lam1 x |.|_lam2
(see :func:`functional.riesz`), a clamp onto the nonnegative cone, then a
rescaling back onto the constraint set.  Because the rescaling makes the
objective 0-homogeneous and J is stationary in the scaling directions on the
constraint set, the L2 gradient of J is also the gradient of the composed
objective, which the Armijo test uses.
"""
from __future__ import annotations

import enum
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import closed_form
from .core import EFGrid, StatePair, SystemParams, default_grid
from .errors import AllStartsFailed, GridMismatch, HardyNehariError, ProjectionError
from .functional import (_breakdown, _grad_arrays, energy_change, neg_laplacian, residuals_from,
                         riesz)
from .nehari import project_pair, project_single

log = logging.getLogger(__name__)

SEMITRIVIAL_RATIO = 1e-6


class Classification(str, enum.Enum):
    COUPLED = "coupled"
    SEMITRIVIAL_FIRST = "semitrivial_first"    # (u, 0)
    SEMITRIVIAL_SECOND = "semitrivial_second"  # (0, v)
    DICHOTOMIZING = "dichotomizing"


@dataclass(frozen=True)
class SolveOptions:
    max_iters: int = 4000
    grad_tol: float = 1e-8
    initial_step: float = 1.0
    backtrack: float = 0.5
    sufficient_decrease: float = 1e-4
    max_backtracks: int = 50
    step_rule: str = "bb"                      # "bb" (Barzilai-Borwein trial) or "growth"
    step_growth: float = 2.0                   # growth rule: trial = growth * last accepted
    max_step: float = 1e4
    recenter: bool = True
    separations: tuple[float, ...] = (4.0,)
    dichotomy_threshold: float | None = None   # default 0.6 L
    stall_window: int = 50
    stall_tol: float = 1e-12

    def __post_init__(self):
        if not self.grad_tol > 0:
            raise ValueError("grad_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        if self.step_rule not in ("bb", "growth"):
            raise ValueError(f"unknown step rule {self.step_rule!r}")
        if not 0 < self.backtrack < 1:
            raise ValueError("backtrack factor must lie in (0, 1)")
        object.__setattr__(self, "separations", tuple(float(d) for d in self.separations))

    def as_dict(self) -> dict:
        return {"max_iters": self.max_iters, "grad_tol": self.grad_tol,
                "initial_step": self.initial_step, "backtrack": self.backtrack,
                "sufficient_decrease": self.sufficient_decrease,
                "max_backtracks": self.max_backtracks,
                "step_rule": self.step_rule, "step_growth": self.step_growth, "max_step": self.max_step, "recenter": self.recenter,
                "separations": list(self.separations),
                "dichotomy_threshold": self.dichotomy_threshold,
                "stall_window": self.stall_window, "stall_tol": self.stall_tol}


@dataclass
class SolveReport:
    state: StatePair | None
    energy: float
    classification: Classification | None
    nehari_residuals: tuple[float, float]
    grad_norm: float
    iterations: int
    converged: bool
    start: str = ""
    stalled: bool = False
    separation: float = 0.0
    theta: float | None = None
    history: list[float] = field(default_factory=list, repr=False)
    runs: list[dict] = field(default_factory=list, repr=False)
    error: str | None = None
    nu: float | None = None

    def summary(self) -> dict:
        return {
            "nu": self.nu,
            "energy": self.energy,
            "classification": None if self.classification is None else self.classification.value,
            "nehari_residual_1": self.nehari_residuals[0],
            "nehari_residual_2": self.nehari_residuals[1],
            "grad_norm": self.grad_norm,
            "iterations": self.iterations,
            "converged": self.converged,
            "stalled": self.stalled,
            "start": self.start,
            "separation": self.separation,
            "theta": self.theta,
            "error": self.error,
        }


# -- helpers -------------------------------------------------------------------

def _recenter_shift(w1: np.ndarray, w2: np.ndarray, center: int, midpoint: bool) -> int:
    if midpoint:
        target = (int(np.argmax(w1)) + int(np.argmax(w2))) // 2
    else:
        target = int(np.argmax(w1 * w1 + w2 * w2))
    return center - target


def _shift(w: np.ndarray, k: int) -> np.ndarray:
    if k == 0:
        return w
    out = np.zeros_like(w)
    if k > 0:
        out[k:] = w[:-k]
    else:
        out[:k] = w[-k:]
    return out


def _separation(grid: EFGrid, w1: np.ndarray, w2: np.ndarray) -> float:
    return abs(int(np.argmax(w1)) - int(np.argmax(w2))) * grid.h


def _classify_norms(n1: float, n2: float) -> Classification:
    a, b = math.sqrt(max(n1, 0.0)), math.sqrt(max(n2, 0.0))
    if a < SEMITRIVIAL_RATIO * b:
        return Classification.SEMITRIVIAL_SECOND
    if b < SEMITRIVIAL_RATIO * a:
        return Classification.SEMITRIVIAL_FIRST
    return Classification.COUPLED


def is_degenerate_family(params: SystemParams) -> bool:
    """N=4, lambda1=lambda2, alpha=beta=2, nu=1/2: a circle of minimisers."""
    return (params.N == 4 and params.lambda1 == params.lambda2
            and params.alpha == 2.0 and params.beta == 2.0 and params.nu == 0.5)


def _bb_step(params: SystemParams, h: float, cur, prev) -> float | None:
    """Barzilai-Borwein length <s, M s> / <s, dg> in the energy metric M."""
    num = den = 0.0
    for i, mu in ((0, params.mu1), (1, params.mu2)):
        ds = cur[i] - prev[i]
        num += float(np.dot(ds, neg_laplacian(ds, h) + mu * mu * ds))
        den += float(np.dot(ds, cur[i + 2] - prev[i + 2]))
    num *= params.omega
    if not (num > 0 and den > 0):
        return None
    return num / den


# -- the descent loop ------------------------------------------------------------

Projector = Callable[[np.ndarray, np.ndarray], tuple[np.ndarray, np.ndarray]]


def _descend(params: SystemParams, grid: EFGrid, w1: np.ndarray, w2: np.ndarray,
             project: Projector, options: SolveOptions, label: str,
             watch_dichotomy: bool) -> SolveReport:
    h = grid.h
    threshold = options.dichotomy_threshold or 0.6 * grid.L
    midpoint = params.nu < 0
    allow_stall = is_degenerate_family(params)

    w1, w2 = project(w1, w2)
    e = _breakdown(params, h, w1, w2)
    phi = e.total
    history = [phi]
    converged = stalled = dichotomy = False
    gn = math.inf
    it = 0
    next_tau = options.initial_step
    prev = None
    for it in range(1, options.max_iters + 1):
        g1, g2 = _grad_arrays(params, h, w1, w2)
        d1, d2 = riesz(params, grid, g1, g2)
        slope = h * float(np.dot(g1, d1) + np.dot(g2, d2))
        gn = math.sqrt(max(slope, 0.0) / (e.norm1_sq + e.norm2_sq))
        if gn < options.grad_tol:
            converged = True
            it -= 1
            break
        tau = next_tau
        if options.step_rule == "bb" and prev is not None:
            bb = _bb_step(params, h, (w1, w2, g1, g2), prev)
            if bb is not None:
                tau = min(max(bb, 1e-6 * options.initial_step), options.max_step)
        prev = (w1, w2, g1, g2)
        accepted = False
        for _ in range(options.max_backtracks):
            y1 = np.maximum(w1 - tau * d1, 0.0)
            y2 = np.maximum(w2 - tau * d2, 0.0)
            try:
                n1, n2 = project(y1, y2)
            except (ProjectionError, FloatingPointError, ValueError):
                tau *= options.backtrack
                continue
            change = energy_change(params, h, w1, w2, n1, n2)
            predicted = h * float(np.dot(g1, y1 - w1) + np.dot(g2, y2 - w2))
            if change <= options.sufficient_decrease * predicted:
                accepted = True
                break
            tau *= options.backtrack
        if not accepted:
            log.debug("%s: line search failed at iteration %d (grad %.3e)", label, it, gn)
            stalled = True
            # on the degenerate circle u and v become proportional and the
            # pair projection turns singular, so no step can be taken
            converged = allow_stall
            break
        next_tau = min(tau * options.step_growth, options.max_step)
        w1, w2 = n1, n2
        e = _breakdown(params, h, w1, w2)
        # the history accumulates the accurate differences, so it is monotone
        phi += change
        history.append(phi)
        if options.recenter:
            k = _recenter_shift(w1, w2, grid.center, midpoint)
            if k:
                w1, w2 = _shift(w1, k), _shift(w2, k)
                prev = tuple(_shift(a, k) for a in prev)
        if watch_dichotomy and _separation(grid, w1, w2) > threshold and history[-1] < history[-2]:
            dichotomy = True
            break
        W = options.stall_window
        if allow_stall and len(history) > W and \
                history[-W - 1] - history[-1] <= options.stall_tol * abs(history[-1]):
            stalled = converged = True
            break

    state = StatePair.from_arrays(grid, w1, w2)
    e = _breakdown(params, h, w1, w2)
    cls = Classification.DICHOTOMIZING if dichotomy else _classify_norms(e.norm1_sq, e.norm2_sq)
    theta = None
    if allow_stall:
        theta = math.atan2(math.sqrt(e.norm1_sq), math.sqrt(e.norm2_sq))
    return SolveReport(
        state=state, energy=e.total, classification=cls,
        nehari_residuals=residuals_from(params, e), grad_norm=gn, iterations=it,
        converged=converged, start=label, stalled=stalled,
        separation=_separation(grid, w1, w2), theta=theta, history=history, nu=params.nu)


# -- public drivers --------------------------------------------------------------

def _single_projector(params: SystemParams, grid: EFGrid) -> Projector:
    def project(a, b):
        t, _ = project_single(params, StatePair.from_arrays(grid, a, b))
        return t * a, t * b
    return project


def _pair_projector(params: SystemParams, grid: EFGrid) -> Projector:
    def project(a, b):
        sc = project_pair(params, StatePair.from_arrays(grid, a, b))
        return sc.t * a, sc.s * b
    return project


def minimize_quotient(params: SystemParams, init: StatePair,
                      options: SolveOptions = SolveOptions()) -> SolveReport:
    """Minimise max_t J(t u, t v); the converged energy is the one-constraint level."""
    grid = init.grid
    a, b = init.arrays()
    if not (np.any(a[1:-1]) or np.any(b[1:-1])):
        raise ValueError("initial state must be nonzero")
    return _descend(params, grid, np.array(a), np.array(b), _single_projector(params, grid),
                    options, "quotient", watch_dichotomy=False)


def default_starts(params: SystemParams, grid: EFGrid,
                   separations: Sequence[float]) -> list[tuple[str, StatePair]]:
    """Synchronized bubbles plus bubble pairs separated by each distance."""
    N = params.N
    starts = [("synchronized", StatePair.from_arrays(
        grid, closed_form.bubble_ef(N, params.lambda1, grid.s),
        closed_form.bubble_ef(N, params.lambda2, grid.s)))]
    for d in separations:
        starts.append((f"separated d={d:g}", StatePair.from_arrays(
            grid, closed_form.bubble_ef(N, params.lambda1, grid.s, -d / 2),
            closed_form.bubble_ef(N, params.lambda2, grid.s, d / 2))))
    return starts


def minimize_nehari(params: SystemParams, options: SolveOptions = SolveOptions(),
                    grid: EFGrid | None = None,
                    starts: Sequence[tuple[str, StatePair]] | None = None) -> SolveReport:
    """Multistart minimisation of J over the two-constraint Nehari set."""
    if params.nu == 0:
        raise ValueError("minimize_nehari needs nu != 0")
    if grid is None:
        extent = max(options.separations, default=0.0) / 2
        grid = default_grid(params, extent=extent)
    if starts is None:
        starts = default_starts(params, grid, options.separations)
    project = _pair_projector(params, grid)
    reports: list[SolveReport] = []
    failures: list[str] = []
    runs: list[dict] = []
    for label, pair in starts:
        if not pair.grid.same_as(grid):
            raise GridMismatch(f"start {label!r} is on a different grid")
        a, b = pair.arrays()
        try:
            rep = _descend(params, grid, np.array(a), np.array(b), project, options, label,
                           watch_dichotomy=True)
        except HardyNehariError as exc:
            failures.append(f"{label}: {type(exc).__name__}: {exc}")
            runs.append({"start": label, "error": f"{type(exc).__name__}: {exc}"})
            continue
        reports.append(rep)
        runs.append({"start": label, "energy": rep.energy, "converged": rep.converged,
                     "classification": rep.classification.value, "iterations": rep.iterations,
                     "separation": rep.separation, "grad_norm": rep.grad_norm})
    if not reports:
        raise AllStartsFailed("every start failed to project", failures)
    usable = [r for r in reports
              if r.converged or r.classification is Classification.DICHOTOMIZING]
    best = min(usable or reports, key=lambda r: r.energy)
    best.runs = runs
    return best


def _scan_one(args) -> SolveReport:
    params, nu, options, grid, mode = args
    p = params.with_nu(nu)
    try:
        if mode == "quotient":
            g = grid or default_grid(p)
            init = default_starts(p, g, ())[0][1]
            return minimize_quotient(p, init, options)
        return minimize_nehari(p, options, grid)
    except (HardyNehariError, ValueError) as exc:
        return SolveReport(None, math.nan, None, (math.nan, math.nan), math.nan, 0, False,
                           error=f"{type(exc).__name__}: {exc}", nu=nu)


def scan(params: SystemParams, nu_list: Sequence[float], options: SolveOptions = SolveOptions(),
         grid: EFGrid | None = None, mode: str = "nehari", workers: int = 1) -> list[SolveReport]:
    """Independent solves for each coupling value, returned in input order."""
    nu_list = [float(nu) for nu in nu_list]
    if not nu_list:
        raise ValueError("nu_list must not be empty")
    if mode not in ("nehari", "quotient"):
        raise ValueError(f"unknown mode {mode!r}")
    if grid is None:
        extent = max(options.separations, default=0.0) / 2
        grid = default_grid(params, extent=extent)
    jobs = [(params, nu, options, grid, mode) for nu in nu_list]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_scan_one, jobs))
    return [_scan_one(j) for j in jobs]
