"""Quantitative statements about the system turned into pass/fail checks.

Each :class:`CheckResult` compares a computed number with a claimed one.  A
check with ``relation="eq"`` passes when the two agree within ``tolerance``
(relative, or absolute when the claim is 0); ``"lt"`` and ``"gt"`` encode strict
orderings and ignore the tolerance.  Informational checks are reported but
never fail a suite.
"""
from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from . import closed_form as cf
from .core import (
    DEFAULT_SPACING,
    Profile,
    SystemParams,
    check_hardy,
    critical_exponent,
    default_grid,
    grid_for_decay,
    hardy_constant,
    make_params,
    sphere_area,
)
from .errors import PreconditionError
from .functional import dirichlet_norm_sq, energy, nehari_residuals, sobolev_quotient
from .minimize import (
    Classification,
    SolveOptions,
    SolveReport,
    default_starts,
    minimize_nehari,
    minimize_quotient,
    scan,
)

IDENTITY_TOL = 1e-6
INSTANTON_TOL = 1e-7
SOLVER_TOL = 1e-4
LIMIT_TOL = 1e-3
SEMITRIVIAL_TOL = 1e-5


@dataclass
class CheckResult:
    name: str
    claimed: float
    provenance: str
    computed: float
    tolerance: float
    passed: bool
    runtime: float
    relation: str = "eq"
    informational: bool = False
    detail: dict = field(default_factory=dict)

    @property
    def error(self) -> float:
        """|computed - claimed|, relative unless the claim is 0."""
        diff = abs(self.computed - self.claimed)
        return diff if self.claimed == 0 else diff / abs(self.claimed)

    def as_dict(self) -> dict:
        return {"name": self.name, "claimed": self.claimed, "provenance": self.provenance,
                "computed": self.computed, "tolerance": self.tolerance, "relation": self.relation,
                "error": self.error, "passed": self.passed, "informational": self.informational,
                "runtime": self.runtime, "detail": self.detail}


def _result(name, claimed, provenance, computed, tolerance, t0, relation="eq",
            informational=False, **detail) -> CheckResult:
    claimed, computed = float(claimed), float(computed)
    if relation == "eq":
        diff = abs(computed - claimed)
        passed = diff <= tolerance * (abs(claimed) if claimed != 0 else 1.0)
    elif relation == "lt":
        passed = computed < claimed
    elif relation == "gt":
        passed = computed > claimed
    else:
        raise ValueError(f"unknown relation {relation!r}")
    return CheckResult(name, claimed, provenance, computed, tolerance, bool(passed),
                       time.perf_counter() - t0, relation, informational, detail)


def all_passed(results: Iterable[CheckResult]) -> bool:
    return all(r.passed or r.informational for r in results)


# -- identities ------------------------------------------------------------

def _bubble_energy(N: int, lam: float, spacing: float) -> tuple[float, float]:
    """(N * I_lam(z), quotient of z) on a grid of the given spacing."""
    mu = math.sqrt(hardy_constant(N) - lam)
    grid = grid_for_decay(mu, spacing=spacing)
    w = cf.bubble_ef(N, lam, grid.s)
    w[0] = w[-1] = 0.0
    omega, pc = sphere_area(N), critical_exponent(N)
    norm = omega * dirichlet_norm_sq(w, grid.h, mu)
    crit = omega * grid.h * float(np.sum(w ** pc))
    energy = 0.5 * norm - crit / pc
    return N * energy, sobolev_quotient(N, lam, Profile(grid, w))


def instanton_ratio(spacing: float = DEFAULT_SPACING, eps: float = 1.0) -> float:
    """int |grad U|^2 / int U^4 for the four-dimensional instanton."""
    grid = grid_for_decay(1.0, spacing=spacing)
    r = np.exp(grid.s)
    w = r * cf.instanton(r, eps)
    w[0] = w[-1] = 0.0
    return dirichlet_norm_sq(w, grid.h, 1.0) / (grid.h * float(np.sum(w ** 4)))


def check_identities(N_list: Sequence[int] = (3, 4, 5), lam_list: Sequence[float] | None = None,
                     spacing: float = DEFAULT_SPACING) -> list[CheckResult]:
    """Bubble energy and quotient identities, plus the instanton ratio for N = 4.

    ``lam_list`` gives one lambda per entry of ``N_list``; by default half of
    the Hardy constant is used.
    """
    if lam_list is None:
        lam_list = [hardy_constant(N) / 2 for N in N_list]
    if len(lam_list) != len(N_list):
        raise ValueError("N_list and lam_list must have equal length")
    out = []
    for N, lam in zip(N_list, lam_list):
        check_hardy(N, lam, allow_zero=True)
        t0 = time.perf_counter()
        S = cf.s_lambda(N, lam)
        level, quotient = _bubble_energy(N, lam, spacing)
        tag = f"N={N}, lambda={lam:g}"
        out.append(_result(f"bubble energy ({tag})", S ** (N / 2),
                           "N times the energy of the bubble equals S(lambda)^(N/2)",
                           level, IDENTITY_TOL, t0, spacing=spacing))
        t0 = time.perf_counter()
        out.append(_result(f"bubble quotient ({tag})", S,
                           "the bubble attains the Hardy-Sobolev constant S(lambda)",
                           quotient, IDENTITY_TOL, t0, spacing=spacing))
    if 4 in N_list:
        t0 = time.perf_counter()
        out.append(_result("instanton ratio (N=4)", 1.0,
                           "the instanton solves -Delta U = U^3, so |grad U|^2 and U^4 integrate equally",
                           instanton_ratio(spacing), INSTANTON_TOL, t0, spacing=spacing))
    return out


# -- thresholds --------------------------------------------------------------

def check_thresholds(params: SystemParams, options: SolveOptions = SolveOptions(),
                     above: float = 1.0, small_nu: float = 0.01,
                     negative_nu: float = -1.0) -> list[CheckResult]:
    """Classification and energy ordering on both sides of the coupling thresholds.

    ``params.nu`` is ignored; the checks run at nu0 + ``above`` (coupled state
    below both single levels), at ``small_nu`` with the one-constraint
    quotient (semitrivial minimiser, N=4 with alpha=beta=2 only), and at
    ``negative_nu`` (level not attained).
    """
    out: list[CheckResult] = []
    M1, M2 = cf.levels(params)
    m_low, m_sum = min(M1, M2), M1 + M2

    nu_hi = cf.nu0(params.N, params.lambda1, params.lambda2) + above
    t0 = time.perf_counter()
    rep = minimize_nehari(params.with_nu(nu_hi), options)
    out.append(_result(f"ground state below single levels (nu={nu_hi:g})", m_low,
                       "large coupling: the least energy lies below min(M1, M2)",
                       rep.energy, 0.0, t0, relation="lt", margin=m_low - rep.energy,
                       classification=rep.classification.value, converged=rep.converged))
    t0 = time.perf_counter()
    out.append(_result(f"ground state is coupled (nu={nu_hi:g})", 1.0,
                       "large coupling: both components are nontrivial",
                       float(rep.classification is Classification.COUPLED and rep.converged),
                       0.0, t0))

    if params.N == 4 and params.alpha == 2 and params.beta == 2:
        p = params.with_nu(small_nu)
        init = default_starts(p, default_grid(p), ())[0][1]
        t0 = time.perf_counter()
        rep = minimize_quotient(p, init, options)
        semi = rep.classification in (Classification.SEMITRIVIAL_FIRST,
                                      Classification.SEMITRIVIAL_SECOND)
        out.append(_result(f"quotient level equals min(M1, M2) (nu={small_nu:g})", m_low,
                           "small coupling: the one-constraint level is attained only by a semitrivial pair",
                           rep.energy, SEMITRIVIAL_TOL, t0,
                           classification=rep.classification.value))
        t0 = time.perf_counter()
        out.append(_result(f"quotient minimiser is semitrivial (nu={small_nu:g})", 1.0,
                           "small coupling: the one-constraint minimiser has a zero component",
                           float(semi and rep.converged), 0.0, t0))

    p = params.with_nu(negative_nu)
    neg_opts = options
    if options.dichotomy_threshold is None:
        neg_opts = SolveOptions(**{**options.as_dict(), "separations": (4.0,),
                                   "dichotomy_threshold": 8.0})
    t0 = time.perf_counter()
    rep = minimize_nehari(p, neg_opts)
    floor = min(rep.history) if rep.history else rep.energy
    out.append(_result(f"negative coupling stays above M1 + M2 (nu={negative_nu:g})",
                       m_sum * (1 - 1e-8),
                       "negative coupling: the least energy equals M1 + M2",
                       floor, 0.0, t0, relation="gt", final_energy=rep.energy))
    bad = [r for r in rep.runs
           if "energy" in r and r["converged"] and r["classification"] == "coupled"
           and r["energy"] < m_sum * (1 - SOLVER_TOL)]
    t0 = time.perf_counter()
    out.append(_result(f"negative coupling level not attained (nu={negative_nu:g})", 1.0,
                       "negative coupling: minimising sequences split into two distant bubbles",
                       float(rep.classification is Classification.DICHOTOMIZING and not bad),
                       0.0, t0, classification=rep.classification.value,
                       separation=rep.separation))
    return out


# -- symmetry diagnostic ----------------------------------------------------------

def check_symmetry_profile(report: SolveReport, tolerance: float = 1e-3) -> CheckResult:
    """Evenness defect and monotone decay of a recentred coupled profile.

    This is a diagnostic: radial symmetry in x says nothing about evenness in
    s = ln r, so the result is informational.
    """
    if report.state is None:
        raise PreconditionError("report has no state")
    if report.classification is not Classification.COUPLED:
        raise PreconditionError("symmetry check needs a coupled state")
    grid = report.state.grid
    w1, w2 = (np.asarray(a) for a in report.state.arrays())
    peak_index = int(np.argmax(w1 * w1 + w2 * w2))
    if abs(peak_index - grid.center) > 1:
        raise PreconditionError("state is not recentred (maximum not at s = 0)")
    t0 = time.perf_counter()
    defect = 0.0
    violations = 0
    for w in (w1, w2):
        peak = float(np.max(np.abs(w)))
        defect = max(defect, float(np.max(np.abs(w - w[::-1]))) / peak)
        k = int(np.argmax(w))
        slack = 1e-12 * peak
        violations += int(np.sum(np.diff(w[k:]) > slack) + np.sum(np.diff(w[:k + 1]) < -slack))
    res = _result("profile evenness defect", 0.0,
                  "diagnostic: evenness of the recentred profile in s",
                  defect, tolerance, t0, informational=True, monotonicity_violations=violations)
    return res


def synchronized_report(params: SystemParams, grid=None) -> SolveReport:
    """A :class:`SolveReport` wrapping the closed-form synchronized pair."""
    grid = grid or default_grid(params)
    pair = cf.synchronized_pair(params, grid)
    return SolveReport(state=pair, energy=energy(params, pair).total,
                       classification=Classification.COUPLED,
                       nehari_residuals=nehari_residuals(params, pair), grad_norm=0.0,
                       iterations=0, converged=True, start="closed form", nu=params.nu)


# -- limits ---------------------------------------------------------------------------

def check_limits(base: SystemParams, nu_list: Sequence[float],
                 options: SolveOptions = SolveOptions(), workers: int = 1) -> list[CheckResult]:
    """Small-coupling limits of the least energy and of the mountain-pass level."""
    nus = [float(nu) for nu in nu_list]
    if not nus or any(nu <= 0 for nu in nus) or any(a <= b for a, b in zip(nus, nus[1:])):
        raise PreconditionError("nu_list must be positive and strictly decreasing")
    out: list[CheckResult] = []
    M1, M2 = cf.levels(base)
    m_sum = M1 + M2

    reports = scan(base, nus, options, workers=workers)
    energies = [r.energy for r in reports]
    for r in reports:
        t0 = time.perf_counter()
        out.append(_result(f"least energy below M1 + M2 (nu={r.nu:g})", m_sum,
                           "positive coupling lowers the least energy below M1 + M2",
                           r.energy, 0.0, t0, relation="lt",
                           classification=None if r.classification is None else r.classification.value,
                           converged=r.converged, error=r.error))
    for prev, cur in zip(reports, reports[1:]):
        t0 = time.perf_counter()
        floor = prev.energy - LIMIT_TOL * abs(prev.energy)
        out.append(_result(f"least energy increases (nu {prev.nu:g} -> {cur.nu:g})", floor,
                           "the least energy increases to M1 + M2 as the coupling vanishes",
                           cur.energy, 0.0, t0, relation="gt", step=cur.energy - prev.energy))

    grid = default_grid(base)
    t0 = time.perf_counter()
    d0 = cf.mountain_pass_level(base.with_nu(0.0), grid)
    out.append(_result("mountain-pass level at nu=0", m_sum,
                       "without coupling the rectangle maximum is M1 + M2, reached at (1, 1)",
                       d0, 1e-8, t0))
    gaps = []
    for nu in nus:
        t0 = time.perf_counter()
        d = cf.mountain_pass_level(base.with_nu(nu), grid)
        gaps.append(d0 - d)
        out.append(_result(f"mountain-pass level below d0 (nu={nu:g})", d0,
                           "positive coupling lowers the rectangle maximum", d, 0.0, t0,
                           relation="lt", margin=d0 - d))
    for (nu_a, ga), (nu_b, gb) in zip(zip(nus, gaps), zip(nus[1:], gaps[1:])):
        t0 = time.perf_counter()
        out.append(_result(f"mountain-pass gap shrinks (nu {nu_a:g} -> {nu_b:g})", ga,
                           "the rectangle maximum tends to d0 as the coupling vanishes",
                           gb, 0.0, t0, relation="lt"))
    # the gap is first order in nu, so a fixed tolerance is only a diagnostic here
    t0 = time.perf_counter()
    out.append(_result(f"mountain-pass level near d0 (nu={nus[-1]:g})", d0,
                       "the rectangle maximum tends to d0 as the coupling vanishes",
                       d0 - gaps[-1], LIMIT_TOL, t0, informational=True,
                       gap_over_nu=gaps[-1] / d0 / nus[-1]))
    return out


# -- suites --------------------------------------------------------------------------

SUITES = ("identities", "thresholds", "limits")


def run_suite(name: str, params: SystemParams | None = None,
              options: SolveOptions = SolveOptions(), workers: int = 1) -> list[CheckResult]:
    """Run a named suite with its reference parameters unless ``params`` is given."""
    if name == "identities":
        res = check_identities((3, 4, 5), (0.1, 0.5, 1.0))
    elif name == "thresholds":
        params = params or make_params(4, 0.2, 0.5, 2, 2, 0.0)
        res = check_thresholds(params, options)
    elif name == "limits":
        params = params or make_params(4, 0.3, 0.6, 2, 2, 0.0)
        res = check_limits(params, (0.2, 0.1, 0.05), options, workers=workers)
    elif name == "all":
        res = [r for s in SUITES for r in run_suite(s, params, options, workers)]
    else:
        raise ValueError(f"unknown suite {name!r}; choose from {SUITES + ('all',)}")
    return sorted(res, key=lambda r: r.name)
