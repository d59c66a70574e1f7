import numpy as np
import pytest

from hardy_nehari.core import make_grid, make_params, symmetric_params


@pytest.fixture
def p4():
    return symmetric_params(4, 0.5, 1.0)


@pytest.fixture
def small_grid():
    return make_grid(18.0, 2001)


def smooth_state(rng, grid, bumps=3):
    """Positive sum of sech bumps (exponential tails, like ground states)."""
    out = []
    for _ in range(2):
        w = np.zeros(grid.n)
        for _ in range(bumps):
            c = rng.uniform(-4, 4)
            width = rng.uniform(0.7, 3.0)
            amp = rng.uniform(0.1, 0.8)
            w += amp / np.cosh((grid.s - c) / width)
        out.append(w)
    return out


def relative_direction(rng, grid, state):
    """Directions d = w * m with m smooth and bounded, so w + eps d keeps its sign."""
    out = []
    for w in state:
        k, phase = rng.uniform(0.1, 1.0), rng.uniform(0, 2 * np.pi)
        m = np.sin(k * grid.s + phase) + rng.uniform(-1, 1) * np.exp(-(grid.s / 3) ** 2)
        out.append(w * m)
    return out


def asym_params():
    return make_params(4, 0.2, 0.5, 2, 2, 0.01)


def central_difference(fun, eps=1e-3):
    """Fourth-order central difference of a scalar function at 0."""
    return (8 * (fun(eps) - fun(-eps)) - (fun(2 * eps) - fun(-2 * eps))) / (12 * eps)
