"""Discrete energy functional, its exact gradient and the Nehari residuals.

Discretisation (Emden-Fowler variable, Dirichlet zero at both ends):

* ``int w'^2`` is ``h * sum w (-D4 w)`` with ``D4`` the five-point, fourth-order
  central difference second derivative (ghost values outside the grid are 0).
* every other integral is ``h * sum`` over interior nodes.

The energy is the truncated functional with positive parts in the
nonlinear terms,

    J = 1/2 (|w1|^2_1 + |w2|^2_2) - omega/2* int (w1+^2* + w2+^2*) - nu omega int w1+^a w2+^b,

and :func:`gradient` differentiates exactly this discrete expression, so finite
differences of :func:`energy` agree with it up to rounding.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_solve_banded, cholesky_banded

from .core import EFGrid, Profile, StatePair, SystemParams, check_hardy, hardy_constant, sphere_area, critical_exponent
from .errors import GridMismatch, ZeroProfile


def _pos_pow(w: np.ndarray, p: float) -> np.ndarray:
    return np.maximum(w, 0.0) ** p


def _interior(w: np.ndarray) -> np.ndarray:
    w = np.array(w, dtype=float)
    w[0] = w[-1] = 0.0
    return w


def neg_laplacian(w: np.ndarray, h: float) -> np.ndarray:
    """-w'' by the fourth-order five-point stencil, Dirichlet ends."""
    p = np.zeros(w.size + 4)
    p[2:-2] = w
    p[2] = p[-3] = 0.0
    out = (p[:-4] - 16.0 * p[1:-3] + 30.0 * p[2:-2] - 16.0 * p[3:-1] + p[4:]) / (12.0 * h * h)
    out[0] = out[-1] = 0.0
    return out


def dirichlet_norm_sq(w: np.ndarray, h: float, mu: float) -> float:
    """Discrete int (w'^2 + mu^2 w^2) ds (no sphere factor)."""
    w = _interior(w)
    return float(h * np.dot(w, neg_laplacian(w, h) + mu * mu * w))


@dataclass(frozen=True)
class EnergyBreakdown:
    """Components of J; ``crit*`` and ``coupling`` exclude the sphere factor."""

    norm1_sq: float
    norm2_sq: float
    crit1: float
    crit2: float
    coupling: float
    total: float
    omega: float

    def as_dict(self) -> dict:
        return {k: getattr(self, k) for k in
                ("norm1_sq", "norm2_sq", "crit1", "crit2", "coupling", "total")}


def _breakdown(params: SystemParams, h: float, w1: np.ndarray, w2: np.ndarray) -> EnergyBreakdown:
    omega = params.omega
    pc = params.crit
    a, b = _interior(w1), _interior(w2)
    n1 = omega * h * float(np.dot(a, neg_laplacian(a, h) + params.mu1 ** 2 * a))
    n2 = omega * h * float(np.dot(b, neg_laplacian(b, h) + params.mu2 ** 2 * b))
    c1 = h * float(np.sum(_pos_pow(a, pc)))
    c2 = h * float(np.sum(_pos_pow(b, pc)))
    cp = h * float(np.sum(_pos_pow(a, params.alpha) * _pos_pow(b, params.beta)))
    total = 0.5 * (n1 + n2) - omega / pc * (c1 + c2) - params.nu * omega * cp
    return EnergyBreakdown(n1, n2, c1, c2, cp, total, omega)


def _pow_change(x: np.ndarray, y: np.ndarray, p: float) -> np.ndarray:
    """y+^p - x+^p computed without cancellation when y is close to x."""
    both = (x > 0) & (np.abs(y - x) < 0.5 * x)
    out = _pos_pow(y, p) - _pos_pow(x, p)
    xb = x[both]
    out[both] = xb ** p * np.expm1(p * np.log1p((y[both] - xb) / xb))
    return out


def energy_change(params: SystemParams, h: float, x1: np.ndarray, x2: np.ndarray,
                  y1: np.ndarray, y2: np.ndarray) -> float:
    """J(y) - J(x) evaluated term by term from the differences.

    Subtracting two totals loses everything below ~eps * |J|; near a minimiser
    the decrease of a descent step is smaller than that, so the line search
    compares steps through this routine instead.
    """
    omega, pc, nu = params.omega, params.crit, params.nu
    al, be = params.alpha, params.beta
    a1, a2, b1, b2 = _interior(x1), _interior(x2), _interior(y1), _interior(y2)
    quad = 0.0
    for a, b, mu in ((a1, b1, params.mu1), (a2, b2, params.mu2)):
        quad += float(np.dot(b - a, neg_laplacian(a + b, h) + mu * mu * (a + b)))
    crit = float(np.sum(_pow_change(a1, b1, pc)) + np.sum(_pow_change(a2, b2, pc)))
    both = (np.abs(b1 - a1) < 0.5 * a1) & (np.abs(b2 - a2) < 0.5 * a2)
    cp = _pos_pow(b1, al) * _pos_pow(b2, be) - _pos_pow(a1, al) * _pos_pow(a2, be)
    u1, u2 = a1[both], a2[both]
    cp[both] = u1 ** al * u2 ** be * np.expm1(al * np.log1p((b1[both] - u1) / u1)
                                               + be * np.log1p((b2[both] - u2) / u2))
    return omega * h * (0.5 * quad - crit / pc - nu * float(np.sum(cp)))


def _check_pair(pair: StatePair, grid: EFGrid | None = None) -> None:
    if not pair.w1.grid.same_as(pair.w2.grid):
        raise GridMismatch("components live on different grids")
    if grid is not None and not pair.grid.same_as(grid):
        raise GridMismatch("state lives on a different grid")


def energy(params: SystemParams, pair: StatePair) -> EnergyBreakdown:
    _check_pair(pair)
    return _breakdown(params, pair.grid.h, *pair.arrays())


def _grad_arrays(params: SystemParams, h: float, w1: np.ndarray, w2: np.ndarray):
    omega, pc, nu = params.omega, params.crit, params.nu
    al, be = params.alpha, params.beta
    a, b = _interior(w1), _interior(w2)
    ap, bp = np.maximum(a, 0.0), np.maximum(b, 0.0)
    apa, bpb = ap ** al, bp ** be
    g1 = neg_laplacian(a, h) + params.mu1 ** 2 * a - ap ** (pc - 1) - nu * al * ap ** (al - 1) * bpb
    g2 = neg_laplacian(b, h) + params.mu2 ** 2 * b - bp ** (pc - 1) - nu * be * apa * bp ** (be - 1)
    g1 *= omega
    g2 *= omega
    g1[0] = g1[-1] = g2[0] = g2[-1] = 0.0
    return g1, g2


def gradient(params: SystemParams, pair: StatePair) -> StatePair:
    """L2 gradient field: dJ[d] = h * sum(g1 d1 + g2 d2)."""
    _check_pair(pair)
    g1, g2 = _grad_arrays(params, pair.grid.h, *pair.arrays())
    return StatePair.from_arrays(pair.grid, g1, g2)


def pairing(grid: EFGrid, f: StatePair, g: StatePair) -> float:
    """Discrete L2 pairing h * sum(f1 g1 + f2 g2) matching :func:`gradient`."""
    return grid.h * float(np.dot(f.w1.values, g.w1.values) + np.dot(f.w2.values, g.w2.values))


def nehari_residuals(params: SystemParams, pair: StatePair) -> tuple[float, float]:
    """(G1, G2): |u|^2 - int(u+^2* + nu a u+^a v+^b) and its partner."""
    e = energy(params, pair)
    return residuals_from(params, e)


def residuals_from(params: SystemParams, e: EnergyBreakdown) -> tuple[float, float]:
    w = e.omega
    g1 = e.norm1_sq - w * (e.crit1 + params.nu * params.alpha * e.coupling)
    g2 = e.norm2_sq - w * (e.crit2 + params.nu * params.beta * e.coupling)
    return g1, g2


def sobolev_quotient(N: int, lam: float, profile: Profile) -> float:
    """|u|^2_lam / |u|^2_{2*} evaluated in EF coordinates."""
    check_hardy(N, lam, allow_zero=True)
    w = _interior(profile.values)
    if not np.any(w):
        raise ZeroProfile("quotient of the zero profile is undefined")
    omega = sphere_area(N)
    pc = critical_exponent(N)
    mu = np.sqrt(hardy_constant(N) - lam)
    num = omega * dirichlet_norm_sq(w, profile.grid.h, mu)
    den = (omega * profile.grid.h * float(np.sum(np.abs(w) ** pc))) ** (2.0 / pc)
    return num / den


# -- Sobolev (energy-norm) metric -------------------------------------------

@functools.lru_cache(maxsize=64)
def _factor(n: int, h: float, mu_sq: float) -> np.ndarray:
    m = n - 2
    c = 1.0 / (12.0 * h * h)
    ab = np.zeros((3, m))
    ab[2, :] = 30.0 * c + mu_sq
    ab[1, 1:] = -16.0 * c
    ab[0, 2:] = c
    return cholesky_banded(ab, lower=False)


def riesz(params: SystemParams, grid: EFGrid, g1: np.ndarray, g2: np.ndarray):
    """Map an L2 gradient to the gradient in the energy inner product.

    Solves ``omega (-D4 + mu_i^2) d_i = g_i`` on the interior nodes, i.e. the
    steepest-descent direction measured in the norms |.|_lam1, |.|_lam2.
    """
    omega = params.omega
    out = []
    for g, mu in ((g1, params.mu1), (g2, params.mu2)):
        d = np.zeros_like(g)
        d[1:-1] = cho_solve_banded((_factor(grid.n, grid.h, mu * mu), False), g[1:-1] / omega)
        out.append(d)
    return out[0], out[1]
