"""Exact solutions, constants and the small algebraic systems solved by hand.

These are the oracles the numerical solvers are checked against.

Bubble amplitude
----------------
The positive solutions of ``-Delta u - lam u/|x|^2 = u^{2*-1}`` are

    z(x) = A / (|x|^a (1 + |x|^{2 - 4a/(N-2)})^{(N-2)/2}),   a = (N-2)/2 - sqrt(Lambda_N - lam).

With the amplitude written as ``A = N (N-2-2a)^2 / (N-2)`` (no outer power) the
function does not solve the equation; the correct amplitude is that quantity
raised to ``(N-2)/4`` (for N=4, lam=0 this is the instanton coefficient 2*sqrt(2)).
:func:`bubble_amplitude` returns the corrected value and
:func:`printed_amplitude` the uncorrected one, kept for reference only.
"""
from __future__ import annotations

import functools
import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import (
    EFGrid,
    Profile,
    StatePair,
    SystemParams,
    check_hardy,
    critical_exponent,
    hardy_constant,
    integrate,
    make_grid,
    sphere_area,
)
from .errors import HardyOutOfRange, NoRoot, OutOfRegime
from . import functional


def a_lambda(N: int, lam: float) -> float:
    """Singularity exponent a = (N-2)/2 - sqrt(Lambda_N - lam)."""
    check_hardy(N, lam, allow_zero=True)
    return (N - 2) / 2.0 - math.sqrt(hardy_constant(N) - lam)


def bubble_amplitude(N: int, lam: float) -> float:
    a = a_lambda(N, lam)
    return (N * (N - 2 - 2 * a) ** 2 / (N - 2)) ** ((N - 2) / 4.0)


def printed_amplitude(N: int, lam: float) -> float:
    """The amplitude without the (N-2)/4 power; does not yield a solution for N != 6."""
    a = a_lambda(N, lam)
    return N * (N - 2 - 2 * a) ** 2 / (N - 2)


@dataclass(frozen=True)
class BubbleSpec:
    """Which bubble: component index and dilation (centre_s = ln mu_scale)."""

    component: int = 1
    center_s: float = 0.0

    def __post_init__(self):
        if self.component not in (1, 2):
            raise ValueError(f"component must be 1 or 2, got {self.component!r}")

    @classmethod
    def from_scale(cls, mu_scale: float, component: int = 1) -> "BubbleSpec":
        if not mu_scale > 0:
            raise ValueError(f"mu_scale must be positive, got {mu_scale!r}")
        return cls(component, math.log(mu_scale))

    @property
    def mu_scale(self) -> float:
        return math.exp(self.center_s)


def bubble_ef(N: int, lam: float, s, center: float = 0.0) -> np.ndarray:
    """w(s) = A (2 cosh(2 mu (s - c)/(N-2)))^{-(N-2)/2}."""
    mu = math.sqrt(hardy_constant(N) - lam)
    q = (N - 2) / 2.0
    x = (2.0 * mu / (N - 2)) * (np.asarray(s, dtype=float) - center)
    # log-domain evaluation avoids cosh overflow far out
    log_2cosh = np.abs(x) + np.log1p(np.exp(-2.0 * np.abs(x)))
    return bubble_amplitude(N, lam) * np.exp(-q * log_2cosh)


def bubble_ef_derivative(N: int, lam: float, s, center: float = 0.0) -> np.ndarray:
    mu = math.sqrt(hardy_constant(N) - lam)
    kappa = 2.0 * mu / (N - 2)
    x = kappa * (np.asarray(s, dtype=float) - center)
    return -(N - 2) / 2.0 * kappa * np.tanh(x) * bubble_ef(N, lam, s, center)


def bubble_ef_profile(N: int, lam: float, spec: BubbleSpec, grid: EFGrid) -> Profile:
    check_hardy(N, lam, allow_zero=True)
    return Profile(grid, bubble_ef(N, lam, grid.s, spec.center_s))


def bubble_radial(N: int, lam: float, r, mu_scale: float = 1.0) -> np.ndarray:
    """z_mu(r) in the original radial variable (used to cross-check the transform)."""
    a = a_lambda(N, lam)
    x = np.asarray(r, dtype=float) / mu_scale
    z1 = bubble_amplitude(N, lam) / (x ** a * (1.0 + x ** (2.0 - 4.0 * a / (N - 2))) ** ((N - 2) / 2.0))
    return mu_scale ** (-(N - 2) / 2.0) * z1


def instanton(r, eps: float = 1.0) -> np.ndarray:
    """Aubin-Talenti instanton in R^4 centred at the origin: 2 sqrt(2) eps / (eps^2 + r^2)."""
    r = np.asarray(r, dtype=float)
    return 2.0 * math.sqrt(2.0) * eps / (eps * eps + r * r)


# -- constants --------------------------------------------------------------

def _bubble_quotient_exact(N: int, lam: float, grid: EFGrid) -> float:
    """Quotient of the bubble with the analytic derivative and Simpson quadrature."""
    mu2 = hardy_constant(N) - lam
    w = bubble_ef(N, lam, grid.s)
    dw = bubble_ef_derivative(N, lam, grid.s)
    omega = sphere_area(N)
    pc = critical_exponent(N)
    num = omega * integrate(grid, dw * dw + mu2 * w * w)
    den = (omega * integrate(grid, w ** pc)) ** (2.0 / pc)
    return num / den


def _fine_grid(N: int, lam: float, n: int) -> EFGrid:
    mu = math.sqrt(hardy_constant(N) - lam)
    return make_grid(40.0 / mu, n)


@functools.lru_cache(maxsize=None)
def sobolev_constant(N: int, n: int = 40001) -> float:
    """Sharp Sobolev constant S from the Rayleigh quotient of the lam=0 bubble."""
    if int(N) != N or N < 3:
        raise OutOfRegime(f"N must be an integer >= 3, got {N!r}")
    return _bubble_quotient_exact(int(N), 0.0, _fine_grid(int(N), 0.0, n))


def s_lambda(N: int, lam: float) -> float:
    """S(lam) = (1 - lam/Lambda_N)^{(N-1)/N} S."""
    check_hardy(N, lam, allow_zero=True)
    return (1.0 - lam / hardy_constant(N)) ** ((N - 1) / N) * sobolev_constant(N)


def single_level(N: int, lam: float) -> float:
    """M = S(lam)^{N/2} / N, the energy of a single bubble."""
    return s_lambda(N, lam) ** (N / 2.0) / N


def levels(params: SystemParams) -> tuple[float, float]:
    return single_level(params.N, params.lambda1), single_level(params.N, params.lambda2)


def nu0(N: int, lam1: float, lam2: float) -> float:
    """Coupling threshold above which a ground state below min(M1, M2) exists."""
    check_hardy(N, lam1)
    check_hardy(N, lam2)
    Lam = hardy_constant(N)
    pc = critical_exponent(N)
    r = max((Lam - lam1) / (Lam - lam2), (Lam - lam2) / (Lam - lam1))
    return ((1.0 + r) ** (pc / 2.0) - 2.0) / pc


def nu1(lam1: float, lam2: float) -> float:
    """Small-coupling threshold for N = 4, alpha = beta = 2."""
    check_hardy(4, lam1)
    check_hardy(4, lam2)
    a, b = 1.0 - lam1, 1.0 - lam2
    return 0.5 * min(a / b, b / a, (a * b) ** 0.75 / (a ** 1.5 + b ** 1.5))


# -- the (k, l) system of synchronized solutions -----------------------------

@dataclass(frozen=True)
class KLSolution:
    k: float
    l: float
    residual: float
    degenerate: bool = False


def kl_residuals(N: int, nu: float, k: float, l: float) -> tuple[float, float]:
    p = critical_exponent(N) / 2.0
    r1 = k ** (p - 1) + p * nu * k ** (p / 2 - 1) * l ** (p / 2) - 1.0
    r2 = p * nu * k ** (p / 2) * l ** (p / 2 - 1) + l ** (p - 1) - 1.0
    return r1, r2


def _kl_jacobian(p: float, nu: float, k: float, l: float) -> np.ndarray:
    return np.array([
        [(p - 1) * k ** (p - 2) + p * nu * (p / 2 - 1) * k ** (p / 2 - 2) * l ** (p / 2),
         p * nu * (p / 2) * k ** (p / 2 - 1) * l ** (p / 2 - 1)],
        [p * nu * (p / 2) * k ** (p / 2 - 1) * l ** (p / 2 - 1),
         p * nu * (p / 2 - 1) * k ** (p / 2) * l ** (p / 2 - 2) + (p - 1) * l ** (p - 2)],
    ])


def _l_branches(p: float, nu: float, k: float) -> list[float | None]:
    """Both solutions l of the second equation at fixed k (None where absent).

    For p < 2 the left side is convex in l with a single minimum at l*, so each
    side of l* is monotone and has at most one root.
    """
    def h(l):
        return p * nu * k ** (p / 2) * l ** (p / 2 - 1) + l ** (p - 1) - 1.0

    l_star = (p * nu * (1 - p / 2) / (p - 1)) ** (2.0 / p) * k
    if h(l_star) > 0:
        return [None, None]
    # the first term alone exceeds 1 below l_lo
    l_lo = (p * nu * k ** (p / 2)) ** (1.0 / (1.0 - p / 2)) * 0.5
    lower = brentq(h, l_lo, l_star, xtol=1e-300, rtol=1e-15, maxiter=500) if l_lo < l_star else None
    upper = brentq(h, l_star, 1.0, xtol=1e-300, rtol=1e-15, maxiter=500) if h(1.0) >= 0 else None
    return [lower, upper]


def _polish(N, nu, k, l, iters=8):
    p = critical_exponent(N) / 2.0
    for _ in range(iters):
        r = np.array(kl_residuals(N, nu, k, l))
        if np.max(np.abs(r)) < 1e-15:
            break
        step = np.linalg.solve(_kl_jacobian(p, nu, k, l), r)
        k_new, l_new = k - step[0], l - step[1]
        if k_new <= 0 or l_new <= 0:
            break
        k, l = k_new, l_new
    return k, l


def solve_kl(N: int, nu: float, mesh: int = 2000, k_min: float = 1e-6) -> list[KLSolution]:
    """All positive roots (k, l) of the synchronized-amplitude system, sorted by k.

    Sweeps k over a log-uniform mesh, solves the second equation for l on each
    monotone branch, brackets sign changes of the first equation and refines.
    """
    if int(N) != N or N < 5:
        raise OutOfRegime(f"the (k, l) system is used for N >= 5, got N={N!r}")
    if not nu > 0:
        raise OutOfRegime(f"need nu > 0, got {nu!r}")
    p = critical_exponent(N) / 2.0
    ks = np.logspace(math.log10(k_min), 0.0, mesh)

    def branch_residual(k, b):
        l = _l_branches(p, nu, k)[b]
        return None if l is None else kl_residuals(N, nu, k, l)[0]

    found: list[tuple[float, float]] = []
    for b in (0, 1):
        vals = [branch_residual(k, b) for k in ks]
        for i in range(mesh - 1):
            va, vb = vals[i], vals[i + 1]
            if va is None or vb is None:
                continue
            if va == 0.0:
                k_root = ks[i]
            elif va * vb < 0:
                k_root = brentq(lambda k: branch_residual(k, b), ks[i], ks[i + 1],
                                xtol=1e-14 * ks[i], rtol=1e-15, maxiter=500)
            else:
                continue
            l_root = _l_branches(p, nu, k_root)[b]
            found.append(_polish(N, nu, k_root, l_root))
    roots: list[KLSolution] = []
    for k, l in sorted(found):
        if any(abs(k - r.k) < 1e-10 and abs(l - r.l) < 1e-10 for r in roots):
            continue
        res = float(max(abs(x) for x in kl_residuals(N, nu, k, l)))
        jac = _kl_jacobian(p, nu, k, l)
        degenerate = abs(np.linalg.det(jac)) < 1e-8 * np.linalg.norm(jac) ** 2
        if degenerate:
            warnings.warn(f"(k, l) = ({k}, {l}) is a nearly degenerate root", RuntimeWarning)
        roots.append(KLSolution(float(k), float(l), res, bool(degenerate)))
    if not roots:
        raise NoRoot(f"no positive root found for N={N}, nu={nu}")
    return roots


def k0_selection(N: int, nu: float) -> KLSolution:
    """The root of minimal k."""
    return min(solve_kl(N, nu), key=lambda r: r.k)


def symmetric_kl(N: int, nu: float) -> float:
    """k = l = (1 + p nu)^{-1/(p-1)} always solves the system."""
    p = critical_exponent(N) / 2.0
    return (1.0 + p * nu) ** (-1.0 / (p - 1.0))


# -- synchronized closed-form pairs ------------------------------------------

def synchronized_pair(params: SystemParams, grid: EFGrid, theta: float | None = None,
                      center: float = 0.0) -> StatePair:
    """Closed-form synchronized ground state for lambda1 = lambda2.

    N=4, alpha=beta=2: both components (1+2nu)^{-1/2} w, or at nu=1/2 the family
    (sin(theta) w, cos(theta) w) for a caller-chosen theta.  N>=5,
    alpha=beta=2*/2, nu >= 2/N: (sqrt(k0) w, sqrt(l0) w).
    """
    N, nu = params.N, params.nu
    if params.lambda1 != params.lambda2:
        raise OutOfRegime("synchronized solutions need lambda1 == lambda2")
    p = params.crit / 2.0
    if abs(params.alpha - p) > 1e-12 or abs(params.beta - p) > 1e-12:
        raise OutOfRegime("synchronized solutions need alpha == beta == 2*/2")
    w = bubble_ef(N, params.lambda1, grid.s, center)
    if N == 4:
        if not nu > 0:
            raise OutOfRegime(f"need nu > 0, got {nu}")
        if nu == 0.5:
            if theta is None:
                raise OutOfRegime("nu = 1/2 admits a one-parameter family; pass theta")
            return StatePair.from_arrays(grid, math.sin(theta) * w, math.cos(theta) * w)
        c = (1.0 + 2.0 * nu) ** -0.5
        return StatePair.from_arrays(grid, c * w, c * w)
    if N >= 5:
        if nu < 2.0 / N:
            raise OutOfRegime(f"need nu >= 2/N = {2.0 / N}, got {nu}")
        root = k0_selection(N, nu)
        return StatePair.from_arrays(grid, math.sqrt(root.k) * w, math.sqrt(root.l) * w)
    raise OutOfRegime("no synchronized closed form for N = 3")


# -- mountain-pass rectangle --------------------------------------------------

@dataclass(frozen=True)
class MountainPass:
    level: float
    t: float
    s: float
    t1: float
    d0: float


def _rectangle_coefficients(params: SystemParams, grid: EFGrid):
    z1 = bubble_ef(params.N, params.lambda1, grid.s)
    z2 = bubble_ef(params.N, params.lambda2, grid.s)
    e = functional.energy(params, StatePair.from_arrays(grid, z1, z2))
    w = e.omega
    return e.norm1_sq, w * e.crit1, e.norm2_sq, w * e.crit2, w * e.coupling


def mountain_pass(params: SystemParams, grid: EFGrid, resolution: int = 401) -> MountainPass:
    """Maximum of the truncated energy over (t z1, s z2), (t, s) in [0, t1]^2."""
    if params.nu < 0:
        raise OutOfRegime("the rectangle level is defined for nu >= 0")
    A1, B1, A2, B2, K = _rectangle_coefficients(params, grid)
    pc, al, be, nu = params.crit, params.alpha, params.beta, params.nu

    def single(t, A, B):
        return 0.5 * A * t * t - B * t ** pc / pc

    m_low = min(single((A1 / B1) ** (1 / (pc - 2)), A1, B1),
                single((A2 / B2) ** (1 / (pc - 2)), A2, B2))
    t1 = 1.0
    for A, B in ((A1, B1), (A2, B2)):
        t_peak = (A / B) ** (1 / (pc - 2))
        hi = 2.0 * t_peak
        while single(hi, A, B) > m_low / 4:
            hi *= 2.0
        t1 = max(t1, brentq(lambda t: single(t, A, B) - m_low / 4, t_peak, hi, xtol=1e-14))

    def J(t, s):
        return single(t, A1, B1) + single(s, A2, B2) - nu * K * t ** al * s ** be

    ts = np.linspace(0.0, t1, resolution)
    T, S = np.meshgrid(ts, ts, indexing="ij")
    vals = J(T, S)
    i, j = np.unravel_index(int(np.argmax(vals)), vals.shape)
    t, s = ts[i], ts[j]
    best = float(vals[i, j])
    # Newton polish on the stationarity conditions
    if 0 < i < resolution - 1 and 0 < j < resolution - 1:
        x = np.array([t, s])
        for _ in range(30):
            tt, ss = x
            g = np.array([
                A1 * tt - B1 * tt ** (pc - 1) - nu * K * al * tt ** (al - 1) * ss ** be,
                A2 * ss - B2 * ss ** (pc - 1) - nu * K * be * tt ** al * ss ** (be - 1),
            ])
            H = np.array([
                [A1 - (pc - 1) * B1 * tt ** (pc - 2) - nu * K * al * (al - 1) * tt ** (al - 2) * ss ** be,
                 -nu * K * al * be * tt ** (al - 1) * ss ** (be - 1)],
                [-nu * K * al * be * tt ** (al - 1) * ss ** (be - 1),
                 A2 - (pc - 1) * B2 * ss ** (pc - 2) - nu * K * be * (be - 1) * tt ** al * ss ** (be - 2)],
            ])
            try:
                step = np.linalg.solve(H, g)
            except np.linalg.LinAlgError:
                break
            x = x - step
            if not (0 < x[0] < t1 and 0 < x[1] < t1):
                break
            if np.max(np.abs(step)) < 1e-15:
                break
        if 0 < x[0] < t1 and 0 < x[1] < t1 and J(*x) >= best:
            t, s, best = float(x[0]), float(x[1]), float(J(*x))
    d0 = (single((A1 / B1) ** (1 / (pc - 2)), A1, B1)
          + single((A2 / B2) ** (1 / (pc - 2)), A2, B2))
    return MountainPass(best, float(t), float(s), float(t1), d0)


def mountain_pass_level(params: SystemParams, grid: EFGrid, resolution: int = 401) -> float:
    return mountain_pass(params, grid, resolution).level
