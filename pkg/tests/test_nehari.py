import math

import numpy as np
import pytest

from hardy_nehari import closed_form as cf
from hardy_nehari.core import StatePair, default_grid, make_params, symmetric_params
from hardy_nehari.errors import ConditionFailed, NotProjectable, ZeroDenominator
from hardy_nehari.functional import energy, nehari_residuals
from hardy_nehari.nehari import (
    PROJECTION_TOL,
    nonattainment_condition,
    project_pair,
    project_pair_neg,
    project_pair_pos,
    project_single,
)

from conftest import smooth_state


def rel_residuals(params, pair):
    e = energy(params, pair)
    g1, g2 = nehari_residuals(params, pair)
    return abs(g1) / e.norm1_sq, abs(g2) / e.norm2_sq


def bubble_pair(params, grid, a=1.0, b=1.0, shift=0.0):
    z1 = cf.bubble_ef(params.N, params.lambda1, grid.s, -shift)
    z2 = cf.bubble_ef(params.N, params.lambda2, grid.s, shift)
    return StatePair.from_arrays(grid, a * z1, b * z2)


def test_project_single_bubble_is_fixed():
    p = symmetric_params(4, 0.5, 0.0)
    g = default_grid(p)
    z = cf.bubble_ef(4, 0.5, g.s)
    t, _ = project_single(p, StatePair.from_arrays(g, z, 0 * z))
    assert t == pytest.approx(1.0, abs=1e-8)


def test_project_single_doubled_bubble_halves():
    p = symmetric_params(4, 1e-12, 0.0)
    g = default_grid(p)
    z = cf.bubble_ef(4, 1e-12, g.s)
    t, _ = project_single(p, StatePair.from_arrays(g, 2 * z, 0 * z))
    assert t == pytest.approx(0.5, abs=1e-8)


def test_project_single_maximizes_ray(rng=np.random.default_rng(3)):
    p = make_params(5, 0.3, 0.7, 5 / 3, 5 / 3, 0.4)
    g = default_grid(p)
    pair = StatePair.from_arrays(g, *smooth_state(rng, g))
    t, _ = project_single(p, pair)
    E = lambda c: energy(p, pair.scaled(c)).total  # noqa: E731
    e_star = E(t)
    for c in t * np.array([0.5, 0.9, 0.99, 1.01, 1.1, 2.0]):
        assert E(c) < e_star
    res = nehari_residuals(p, pair.scaled(t))
    assert abs(sum(res)) < 1e-10 * energy(p, pair.scaled(t)).norm1_sq


def test_project_single_negative_denominator():
    p = symmetric_params(4, 0.5, -5.0)
    g = default_grid(p)
    z = cf.bubble_ef(4, 0.5, g.s)
    with pytest.raises(ZeroDenominator):
        project_single(p, StatePair.from_arrays(g, z, z))


@pytest.mark.parametrize("nu", [0.01, 0.3, 1.0, 4.0])
def test_linear_case_equal_components(nu):
    p = symmetric_params(4, 0.5, nu)
    g = default_grid(p)
    z = cf.bubble_ef(4, 0.5, g.s)
    sc = project_pair_pos(p, StatePair.from_arrays(g, z, z))
    assert sc.t == pytest.approx(1 / math.sqrt(1 + 2 * nu), rel=1e-9)
    assert sc.s == pytest.approx(1 / math.sqrt(1 + 2 * nu), rel=1e-9)


@pytest.mark.parametrize("params", [
    make_params(4, 0.2, 0.5, 2, 2, 0.3),
    make_params(4, 0.2, 0.5, 1.5, 2.5, 0.3),
    make_params(5, 0.3, 0.9, 5 / 3, 5 / 3, 0.2),
    make_params(5, 0.3, 0.9, 4 / 3, 2.0, 0.2),
    make_params(3, 0.1, 0.2, 3, 3, 0.5),
    make_params(4, 0.2, 0.5, 2, 2, -0.05),
    make_params(5, 0.3, 0.9, 5 / 3, 5 / 3, -0.05),
])
def test_projection_residual_and_idempotence(params):
    rng = np.random.default_rng(11)
    g = default_grid(params)
    for _ in range(5):
        pair = StatePair.from_arrays(g, *smooth_state(rng, g))
        try:
            sc = project_pair(params, pair)
        except ConditionFailed:
            continue
        proj = sc.apply(pair)
        assert max(rel_residuals(params, proj)) < PROJECTION_TOL
        again = project_pair(params, proj)
        assert again.t == pytest.approx(1.0, abs=1e-9)
        assert again.s == pytest.approx(1.0, abs=1e-9)


@pytest.mark.parametrize("nu", [0.3, -0.3])
def test_disjoint_supports_decouple(nu):
    p = make_params(4, 0.2, 0.5, 2, 2, nu)
    g = default_grid(p)
    a = np.where(g.s < -1, np.exp(-(g.s + 5) ** 2), 0.0)
    b = np.where(g.s > 1, 2 * np.exp(-(g.s - 5) ** 2), 0.0)
    pair = StatePair.from_arrays(g, a, b)
    e = energy(p, pair)
    sc = project_pair(p, pair)
    assert sc.t == pytest.approx(math.sqrt(e.norm1_sq / (e.omega * e.crit1)), rel=1e-12)
    assert sc.s == pytest.approx(math.sqrt(e.norm2_sq / (e.omega * e.crit2)), rel=1e-12)


def test_negative_far_apart_bubbles_near_identity():
    p = make_params(4, 0.5, 0.5, 2, 2, -1.0)
    g = default_grid(p, extent=20)
    sc = project_pair_neg(p, bubble_pair(p, g, shift=10.0))
    assert sc.t == pytest.approx(1.0, abs=1e-6)
    assert sc.s == pytest.approx(1.0, abs=1e-6)


def test_negative_overlap_condition_failed():
    p = symmetric_params(4, 0.5, -1.0)
    g = default_grid(p)
    pair = bubble_pair(p, g)
    assert not nonattainment_condition(p, pair)
    with pytest.raises(ConditionFailed):
        project_pair_neg(p, pair)


def test_negative_weak_coupling_condition_holds():
    p = symmetric_params(4, 0.5, -0.4)
    g = default_grid(p)
    pair = bubble_pair(p, g)
    assert nonattainment_condition(p, pair)
    sc = project_pair_neg(p, pair)
    # equal components, alpha = beta = 2: t^2 = 1 / (1 + 2 nu)
    assert sc.t == pytest.approx(1 / math.sqrt(1 - 0.8), rel=1e-9)


@pytest.mark.parametrize("nu", [0.2, -0.1])
def test_swap_equivariance(nu):
    p = make_params(5, 0.3, 0.9, 4 / 3, 2.0, nu)
    rng = np.random.default_rng(5)
    g = default_grid(p)
    pair = StatePair.from_arrays(g, *smooth_state(rng, g))
    a = project_pair(p, pair)
    b = project_pair(p.swapped(), pair.swapped())
    assert b.t == pytest.approx(a.s, rel=1e-9)
    assert b.s == pytest.approx(a.t, rel=1e-9)


def test_n5_scaled_bubbles():
    """Scaled copies of the synchronized pair project back to it."""
    p = symmetric_params(5, 1.0, 0.5)
    g = default_grid(p)
    sync = cf.synchronized_pair(p, g)
    sc = project_pair(p, sync.scaled(1.7, 0.6))
    assert sc.t == pytest.approx(1 / 1.7, rel=1e-8)
    assert sc.s == pytest.approx(1 / 0.6, rel=1e-8)


def test_zero_component_not_projectable():
    p = symmetric_params(4, 0.5, 0.3)
    g = default_grid(p)
    z = cf.bubble_ef(4, 0.5, g.s)
    with pytest.raises(NotProjectable):
        project_pair(p, StatePair.from_arrays(g, z, 0 * z))


def test_wrong_sign_entry_points():
    p = symmetric_params(4, 0.5, 0.3)
    g = default_grid(p)
    pair = bubble_pair(p, g)
    with pytest.raises(ValueError):
        project_pair_neg(p, pair)
    with pytest.raises(ValueError):
        project_pair_pos(p.with_nu(-0.3), pair)


def test_fallback_finds_root_just_below_t0():
    """Regression: a root within one log step of t0 = (A1/B1)^(1/(2*-2))."""
    from hardy_nehari.nehari import _Coeffs, _bisect_pos, _relative_residuals
    p = symmetric_params(5, 1.0, 0.4)
    c = _Coeffs(230.68166585071333, 143.52499547571864, 196.45926232339977,
                54.580320486678225, 64.90364459217702)
    t, s = _bisect_pos(p, c)
    assert t == pytest.approx(1.1255, rel=5e-3) and s == pytest.approx(0.051, rel=5e-2)
    assert max(map(abs, _relative_residuals(p, c, t, s))) < 1e-10
