"""Scaling projections onto the Nehari sets.

``project_single`` rescales both components by one factor so that
J'(u, v)(u, v) = 0; ``project_pair_pos`` / ``project_pair_neg`` find separate
factors (t, s) with (t u, s v) satisfying both Nehari identities.

With A_i = |w_i|^2, B_i = omega int w_i+^2*, C = omega int w1+^a w2+^b the
two identities for (t u, s v) read

    t^2 A1 = t^2* B1 + nu a C t^a s^b,     s^2 A2 = s^2* B2 + nu b C t^a s^b.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import StatePair, SystemParams
from .errors import ConditionFailed, NoBracket, NotProjectable, Singular, ZeroDenominator
from .functional import EnergyBreakdown, energy

PROJECTION_TOL = 1e-10
_NEWTON_TOL = 1e-13


@dataclass(frozen=True)
class NehariScaling:
    t: float
    s: float
    residual: float

    def apply(self, pair: StatePair) -> StatePair:
        return pair.scaled(self.t, self.s)


@dataclass(frozen=True)
class _Coeffs:
    A1: float
    A2: float
    B1: float
    B2: float
    C: float

    @classmethod
    def of(cls, e: EnergyBreakdown) -> "_Coeffs":
        w = e.omega
        return cls(e.norm1_sq, e.norm2_sq, w * e.crit1, w * e.crit2, w * e.coupling)


def _relative_residuals(params: SystemParams, c: _Coeffs, t: float, s: float) -> tuple[float, float]:
    """Both Nehari identities at (t, s), each divided by its quadratic term."""
    pc, al, be, nu = params.crit, params.alpha, params.beta, params.nu
    cross = nu * c.C * t ** al * s ** be
    r1 = 1.0 - (t ** pc * c.B1 + al * cross) / (t * t * c.A1)
    r2 = 1.0 - (s ** pc * c.B2 + be * cross) / (s * s * c.A2)
    return r1, r2


def _require_nonzero(c: _Coeffs) -> None:
    if not (c.A1 > 0 and c.A2 > 0):
        raise NotProjectable("both components must be nonzero")
    if not (c.B1 > 0 and c.B2 > 0):
        raise NotProjectable("a component has no positive part")


def project_single(params: SystemParams, pair: StatePair) -> tuple[float, StatePair]:
    """Common factor t* placing (t* u, t* v) on the one-constraint Nehari set."""
    e = energy(params, pair)
    num = e.norm1_sq + e.norm2_sq
    F = e.omega * (e.crit1 + e.crit2 + params.crit * params.nu * e.coupling)
    if not num > 0:
        raise NotProjectable("cannot project the zero pair")
    if not F > 0:
        raise ZeroDenominator(f"int F = {F!r} <= 0; the ray never crosses the Nehari set")
    t = (num / F) ** (1.0 / (params.crit - 2.0))
    return t, pair.scaled(t)


def _is_cubic(params: SystemParams) -> bool:
    return params.N == 4 and params.alpha == 2.0 and params.beta == 2.0


def _linear_solve(params: SystemParams, c: _Coeffs) -> tuple[float, float]:
    """alpha = beta = 2, N = 4: the identities are linear in (t^2, s^2)."""
    g12 = 2.0 * params.nu * c.C
    det = c.B1 * c.B2 - g12 * g12
    if abs(det) <= 1e-13 * c.B1 * c.B2:
        raise Singular(f"det G = {det!r}: the 2x2 Nehari system is singular")
    T = (c.B2 * c.A1 - g12 * c.A2) / det
    S = (c.B1 * c.A2 - g12 * c.A1) / det
    if not (T > 0 and S > 0):
        raise NotProjectable(f"linear solve gave (t^2, s^2) = ({T}, {S})")
    return math.sqrt(T), math.sqrt(S)


def _newton_log(params: SystemParams, c: _Coeffs, t: float, s: float, max_iter: int = 100):
    """Damped Newton on (ln t, ln s); returns None when it stalls."""
    pc, al, be, nu = params.crit, params.alpha, params.beta, params.nu
    x = np.array([math.log(t), math.log(s)])

    def F(x):
        try:
            return np.array(_relative_residuals(params, c, math.exp(x[0]), math.exp(x[1])))
        except (OverflowError, ZeroDivisionError):
            return np.array([np.inf, np.inf])

    f = F(x)
    for _ in range(max_iter):
        if np.max(np.abs(f)) < _NEWTON_TOL:
            return math.exp(x[0]), math.exp(x[1])
        t, s = math.exp(x[0]), math.exp(x[1])
        q1 = nu * c.C * t ** (al - 2) * s ** be / c.A1
        q2 = nu * c.C * t ** al * s ** (be - 2) / c.A2
        p1 = t ** (pc - 2) * c.B1 / c.A1
        p2 = s ** (pc - 2) * c.B2 / c.A2
        jac = -np.array([[(pc - 2) * p1 + al * (al - 2) * q1, al * be * q1],
                         [al * be * q2, (pc - 2) * p2 + be * (be - 2) * q2]])
        try:
            step = np.linalg.solve(jac, f)
        except np.linalg.LinAlgError:
            return None
        damp = 1.0
        norm = np.max(np.abs(f))
        for _ in range(40):
            x_new = x - damp * step
            f_new = F(x_new)
            if np.all(np.isfinite(f_new)) and np.max(np.abs(f_new)) < norm:
                break
            damp *= 0.5
        else:
            return None
        x, f = x_new, f_new
    return None


def _bisect_pos(params: SystemParams, c: _Coeffs) -> tuple[float, float]:
    """nu > 0 fallback: eliminate s from the first identity, scan t in (0, t0)."""
    pc, al, be, nu = params.crit, params.alpha, params.beta, params.nu
    t0 = (c.A1 / c.B1) ** (1.0 / (pc - 2.0))

    def g(t):
        return ((c.A1 * t ** (2 - al) - c.B1 * t ** be) / (nu * al * c.C)) ** (1.0 / be)

    def phi(t):
        s = g(t)
        return c.A2 * s ** (2 - be) - c.B2 * s ** al - nu * be * c.C * t ** al

    # log-spaced from far below t0, plus points accumulating geometrically at t0
    ts = t0 * np.union1d(np.logspace(-8, 0, 4000)[:-1], 1.0 - np.logspace(-14, -0.5, 1000))
    vals = [phi(t) for t in ts]
    for i in range(len(ts) - 1):
        if np.isfinite(vals[i]) and np.isfinite(vals[i + 1]) and vals[i] * vals[i + 1] < 0:
            t = brentq(phi, ts[i], ts[i + 1], xtol=1e-300, rtol=1e-15, maxiter=500)
            return t, g(t)
    raise NotProjectable("no Nehari scaling found along the first identity")


def project_pair_pos(params: SystemParams, pair: StatePair) -> NehariScaling:
    if not params.nu > 0:
        raise ValueError("project_pair_pos needs nu > 0")
    c = _Coeffs.of(energy(params, pair))
    _require_nonzero(c)
    if _is_cubic(params):
        t, s = _linear_solve(params, c)
    else:
        pc = params.crit
        t0 = (c.A1 / c.B1) ** (1.0 / (pc - 2.0))
        s0 = (c.A2 / c.B2) ** (1.0 / (pc - 2.0))
        res = _newton_log(params, c, t0, s0)
        if res is None and c.C > 0:
            res = _bisect_pos(params, c)
        if res is None:
            raise NotProjectable("Newton iteration stalled")
        t, s = res
    return _finish(params, c, t, s)


def nonattainment_condition(params: SystemParams, pair: StatePair) -> bool:
    """(int u^2*)^a (int v^2*)^b > a^a b^b (|nu| int u^a v^b)^2*.

    Under this condition a pair can be scaled onto the Nehari set for nu < 0.
    """
    c = _Coeffs.of(energy(params, pair))
    if not (c.B1 > 0 and c.B2 > 0):
        return False
    return _condition_holds(params, c)


def _condition_holds(params: SystemParams, c: _Coeffs) -> bool:
    al, be = params.alpha, params.beta
    C = abs(params.nu) * c.C
    lhs = al * math.log(c.B1) + be * math.log(c.B2)
    if C == 0:
        return True
    rhs = al * math.log(al) + be * math.log(be) + params.crit * math.log(C)
    return lhs > rhs


def project_pair_neg(params: SystemParams, pair: StatePair, t_max_factor: float = 1e6) -> NehariScaling:
    if not params.nu < 0:
        raise ValueError("project_pair_neg needs nu < 0")
    c = _Coeffs.of(energy(params, pair))
    _require_nonzero(c)
    pc, al, be = params.crit, params.alpha, params.beta
    t0 = (c.A1 / c.B1) ** (1.0 / (pc - 2.0))
    if c.C == 0:
        return _finish(params, c, t0, (c.A2 / c.B2) ** (1.0 / (pc - 2.0)))
    if not _condition_holds(params, c):
        raise ConditionFailed("the pair is too strongly overlapping to be scaled onto the Nehari set")
    C = abs(params.nu) * c.C

    def X(t):
        return (c.B1 - c.A1 * t ** (2.0 - pc)) / (al * C)

    def f(t):
        x = X(t)
        return c.A2 * x ** ((2.0 - be) / be) + t ** (pc - 2.0) * (be * C - c.B2 * x ** (al / be))

    lo = t0 * (1.0 + 1e-9)
    for _ in range(20):
        if f(lo) > 0:
            break
        lo = t0 + (lo - t0) * 0.1
    else:
        raise NoBracket("f does not start positive just above t0")
    hi = 10.0 * t0
    while f(hi) >= 0:
        hi *= 10.0
        if hi > t_max_factor * t0:
            raise NoBracket(f"f keeps its sign up to {t_max_factor:g} t0")
    t = brentq(f, lo, hi, xtol=1e-300, rtol=1e-15, maxiter=1000)
    s = (t ** be * X(t)) ** (1.0 / be)
    return _finish(params, c, t, s)


def _finish(params: SystemParams, c: _Coeffs, t: float, s: float) -> NehariScaling:
    r = max(abs(x) for x in _relative_residuals(params, c, t, s))
    if not (t > 0 and s > 0 and math.isfinite(r)):
        raise NotProjectable(f"invalid scaling ({t}, {s})")
    if r > PROJECTION_TOL:
        polished = _newton_log(params, c, t, s, max_iter=20)
        if polished is not None:
            t, s = polished
            r = max(abs(x) for x in _relative_residuals(params, c, t, s))
    if r > PROJECTION_TOL:
        raise NotProjectable(f"projection residual {r:.3e} above tolerance")
    return NehariScaling(float(t), float(s), float(r))


def project_pair(params: SystemParams, pair: StatePair) -> NehariScaling:
    """Dispatch on the sign of nu (nu = 0 gives the decoupled scalings)."""
    if params.nu > 0:
        return project_pair_pos(params, pair)
    if params.nu < 0:
        return project_pair_neg(params, pair)
    c = _Coeffs.of(energy(params, pair))
    _require_nonzero(c)
    e = params.crit - 2.0
    return _finish(params, c, (c.A1 / c.B1) ** (1 / e), (c.A2 / c.B2) ** (1 / e))
