"""Parameters, Emden-Fowler grids, quadrature and profile containers.

All numerics work in the Emden-Fowler variable ``s = ln r``: a radial function
on R^N is stored as ``w(s)`` with ``u(r) = r**(-(N-2)/2) * w(ln r)``.  In these
coordinates

    int |grad u|^2 - lam u^2/|x|^2 dx = omega * int (w'^2 + mu^2 w^2) ds,
    int |u|^a |v|^b dx                = omega * int |w1|^a |w2|^b ds   (a + b = 2*),

with ``mu^2 = (N-2)^2/4 - lam`` and ``omega`` the area of the unit sphere.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BadGrid,
    DimensionTooSmall,
    ExponentMismatch,
    GridMismatch,
    HardyOutOfRange,
    LengthMismatch,
)

EXPONENT_TOL = 1e-12
DEFAULT_HALF_WIDTH = 18.0
DEFAULT_POINTS = 4001
DEFAULT_SPACING = 2 * DEFAULT_HALF_WIDTH / (DEFAULT_POINTS - 1)
# e^{-mu L} at the boundary; 25 e-folds keeps boundary values ~1e-11 of the peak
DECAY_EFOLDS = 25.0


def hardy_constant(N: int) -> float:
    """Best Hardy constant (N-2)^2/4."""
    return (N - 2) ** 2 / 4.0


def critical_exponent(N: int) -> float:
    return 2.0 * N / (N - 2)


def _gamma_half(m2: int) -> float:
    """Gamma(m2/2) for a positive integer m2, in closed form."""
    if m2 % 2 == 0:
        return float(math.factorial(m2 // 2 - 1))
    m = (m2 - 1) // 2
    return math.factorial(2 * m) / (4 ** m * math.factorial(m)) * math.sqrt(math.pi)


def sphere_area(N: int) -> float:
    """Surface area of the unit (N-1)-sphere, 2 pi^{N/2} / Gamma(N/2)."""
    if int(N) != N or N < 3:
        raise DimensionTooSmall(f"N must be an integer >= 3, got {N!r}")
    N = int(N)
    return 2.0 * math.pi ** (N / 2) / _gamma_half(N)


@dataclass(frozen=True)
class SystemParams:
    """The tuple (N, lambda1, lambda2, alpha, beta, nu) of the coupled system."""

    N: int
    lambda1: float
    lambda2: float
    alpha: float
    beta: float
    nu: float

    @property
    def Lambda(self) -> float:
        return hardy_constant(self.N)

    @property
    def crit(self) -> float:
        """Critical Sobolev exponent 2* = 2N/(N-2)."""
        return critical_exponent(self.N)

    @property
    def mu1(self) -> float:
        return math.sqrt(self.Lambda - self.lambda1)

    @property
    def mu2(self) -> float:
        return math.sqrt(self.Lambda - self.lambda2)

    @property
    def omega(self) -> float:
        return sphere_area(self.N)

    def mu(self, component: int) -> float:
        return self.mu1 if component == 1 else self.mu2

    def lam(self, component: int) -> float:
        return self.lambda1 if component == 1 else self.lambda2

    def with_nu(self, nu: float) -> "SystemParams":
        return make_params(self.N, self.lambda1, self.lambda2, self.alpha, self.beta, nu)

    def swapped(self) -> "SystemParams":
        """Same system with the two components exchanged."""
        return make_params(self.N, self.lambda2, self.lambda1, self.beta, self.alpha, self.nu)

    def as_dict(self) -> dict:
        return {"N": self.N, "lambda1": self.lambda1, "lambda2": self.lambda2,
                "alpha": self.alpha, "beta": self.beta, "nu": self.nu}


def check_hardy(N: int, lam: float, allow_zero: bool = False) -> None:
    Lam = hardy_constant(N)
    lower_ok = lam >= 0 if allow_zero else lam > 0
    if not (math.isfinite(lam) and lower_ok and lam < Lam):
        interval = f"[0, {Lam})" if allow_zero else f"(0, {Lam})"
        raise HardyOutOfRange(f"lambda={lam!r} outside {interval} for N={N}")


def make_params(N, lambda1, lambda2, alpha, beta, nu) -> SystemParams:
    """Validate and build a :class:`SystemParams`."""
    if isinstance(N, bool) or int(N) != N or N < 3:
        raise DimensionTooSmall(f"N must be an integer >= 3, got {N!r}")
    N = int(N)
    lambda1, lambda2 = float(lambda1), float(lambda2)
    alpha, beta, nu = float(alpha), float(beta), float(nu)
    check_hardy(N, lambda1)
    check_hardy(N, lambda2)
    if not (alpha > 1 and beta > 1):
        raise ExponentMismatch(f"need alpha > 1 and beta > 1, got {alpha}, {beta}")
    if abs(alpha + beta - critical_exponent(N)) > EXPONENT_TOL:
        raise ExponentMismatch(
            f"alpha + beta = {alpha + beta!r} but 2* = {critical_exponent(N)!r} for N={N}")
    if not math.isfinite(nu):
        raise ValueError(f"nu must be finite, got {nu!r}")
    return SystemParams(N, lambda1, lambda2, alpha, beta, nu)


def symmetric_params(N: int, lam: float, nu: float, lambda2: float | None = None) -> SystemParams:
    """Params with alpha = beta = 2*/2 (the only choice that exists for every N)."""
    p = critical_exponent(N) / 2
    return make_params(N, lam, lam if lambda2 is None else lambda2, p, p, nu)


def _simpson_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, 2.0)
    w[1::2] = 4.0
    w[0] = w[-1] = 1.0
    return w * (h / 3.0)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class EFGrid:
    """Uniform symmetric grid on [-L, L] in s = ln r with Simpson weights."""

    s_min: float
    s_max: float
    n: int
    h: float
    s: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)

    @property
    def L(self) -> float:
        return self.s_max

    @property
    def center(self) -> int:
        return self.n // 2

    def key(self) -> tuple:
        return (self.s_min, self.s_max, self.n)

    def same_as(self, other: "EFGrid") -> bool:
        return self is other or self.key() == other.key()

    def __eq__(self, other) -> bool:
        return isinstance(other, EFGrid) and self.same_as(other)

    def __hash__(self) -> int:
        return hash(self.key())

    def as_dict(self) -> dict:
        return {"L": self.s_max, "n": self.n, "h": self.h}


def make_grid(L: float = DEFAULT_HALF_WIDTH, n: int = DEFAULT_POINTS) -> EFGrid:
    if isinstance(n, bool) or int(n) != n:
        raise BadGrid(f"n must be an integer, got {n!r}")
    n = int(n)
    if n < 3 or n % 2 == 0:
        raise BadGrid(f"n must be odd and >= 3, got {n}")
    if not (math.isfinite(L) and L > 0):
        raise BadGrid(f"half width must be positive, got {L!r}")
    L = float(L)
    h = 2 * L / (n - 1)
    s = np.linspace(-L, L, n)
    s[n // 2] = 0.0
    return EFGrid(-L, L, n, h, _frozen(s), _frozen(_simpson_weights(n, h)))


def default_grid(params: SystemParams, extent: float = 0.0,
                 spacing: float = DEFAULT_SPACING) -> EFGrid:
    """Smallest grid at the default spacing that resolves the slowest tail.

    The standard grid (L=18, n=4001) is kept whenever it already gives
    ``DECAY_EFOLDS`` e-folds of decay beyond ``extent`` (the farthest bubble
    centre the caller intends to place); otherwise L is widened.
    """
    return grid_for_decay(min(params.mu1, params.mu2), extent, spacing)


def grid_for_decay(mu_min: float, extent: float = 0.0,
                   spacing: float = DEFAULT_SPACING) -> EFGrid:
    """Grid at ``spacing`` wide enough for tails decaying like exp(-mu_min |s|)."""
    if not (mu_min > 0 and spacing > 0):
        raise BadGrid(f"need mu_min > 0 and spacing > 0, got {mu_min!r}, {spacing!r}")
    L = max(DEFAULT_HALF_WIDTH, extent + DECAY_EFOLDS / mu_min)
    half = math.ceil(L / spacing - 1e-9)
    return make_grid(half * spacing, 2 * half + 1)


def integrate(grid: EFGrid, samples) -> float:
    """Composite Simpson quadrature of ``samples`` over the grid."""
    samples = np.asarray(samples, dtype=float)
    if samples.shape != (grid.n,):
        raise LengthMismatch(f"expected {grid.n} samples, got shape {samples.shape}")
    return float(np.dot(grid.weights, samples))


@dataclass(frozen=True, eq=False)
class Profile:
    """Samples w(s) of a radial function u(r) = r^{-(N-2)/2} w(ln r)."""

    grid: EFGrid
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.grid.n,):
            raise LengthMismatch(f"expected {self.grid.n} values, got shape {vals.shape}")
        if not np.all(np.isfinite(vals)):
            raise ValueError("profile values must be finite")
        object.__setattr__(self, "values", _frozen(vals))

    def scaled(self, c: float) -> "Profile":
        return Profile(self.grid, c * self.values)

    def boundary_ratio(self) -> float:
        """max(|w(s_min)|, |w(s_max)|) / max|w| (0 for the zero profile)."""
        peak = float(np.max(np.abs(self.values)))
        if peak == 0.0:
            return 0.0
        return max(abs(self.values[0]), abs(self.values[-1])) / peak


@dataclass(frozen=True, eq=False)
class StatePair:
    """A pair (w1, w2) on a shared grid."""

    w1: Profile
    w2: Profile

    def __post_init__(self):
        if not self.w1.grid.same_as(self.w2.grid):
            raise GridMismatch("components live on different grids")

    @property
    def grid(self) -> EFGrid:
        return self.w1.grid

    @classmethod
    def from_arrays(cls, grid: EFGrid, a, b) -> "StatePair":
        return cls(Profile(grid, a), Profile(grid, b))

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        return self.w1.values, self.w2.values

    def scaled(self, t: float, s: float | None = None) -> "StatePair":
        return StatePair(self.w1.scaled(t), self.w2.scaled(t if s is None else s))

    def swapped(self) -> "StatePair":
        return StatePair(self.w2, self.w1)

    def boundary_ratio(self) -> float:
        return max(self.w1.boundary_ratio(), self.w2.boundary_ratio())
