import math

import numpy as np
import pytest

from hardy_nehari import closed_form as cf
from hardy_nehari.core import StatePair, default_grid, make_params, symmetric_params
from hardy_nehari.errors import AllStartsFailed, GridMismatch
from hardy_nehari.functional import energy, nehari_residuals
from hardy_nehari.minimize import (
    Classification,
    SolveOptions,
    default_starts,
    is_degenerate_family,
    minimize_nehari,
    minimize_quotient,
    scan,
)


def assert_monotone(history):
    h = np.asarray(history)
    assert np.all(np.diff(h) <= 0.0)


def test_options_validation():
    with pytest.raises(ValueError):
        SolveOptions(grad_tol=0)
    with pytest.raises(ValueError):
        SolveOptions(max_iters=0)
    with pytest.raises(ValueError):
        SolveOptions(step_rule="newton")
    with pytest.raises(ValueError):
        SolveOptions(backtrack=1.5)


def test_quotient_small_coupling_is_semitrivial():
    p = make_params(4, 0.2, 0.5, 2, 2, 0.01)
    g = default_grid(p)
    init = default_starts(p, g, ())[0][1]
    rep = minimize_quotient(p, init)
    assert rep.converged
    assert rep.classification is Classification.SEMITRIVIAL_SECOND
    assert rep.energy == pytest.approx(cf.single_level(4, 0.5), rel=1e-4)
    assert_monotone(rep.history)


def test_quotient_strong_coupling_beats_semitrivial():
    p = make_params(4, 0.2, 0.5, 2, 2, 0.0)
    nu0 = cf.nu0(4, 0.2, 0.5)
    q = p.with_nu(nu0 * 1.5)
    g = default_grid(q)
    rep = minimize_quotient(q, default_starts(q, g, ())[0][1])
    assert rep.converged and rep.classification is Classification.COUPLED
    assert rep.energy < cf.single_level(4, 0.5)


def test_exact_start_converges_immediately():
    p = symmetric_params(4, 0.5, 1.0)
    rep = minimize_nehari(p, SolveOptions(separations=()))
    assert rep.converged and rep.iterations <= 3
    assert rep.energy == pytest.approx(cf.s_lambda(4, 0.5) ** 2 / 6, rel=1e-8)
    assert rep.classification is Classification.COUPLED


def test_nehari_n5_synchronized():
    p = symmetric_params(5, 1.0, 0.5)
    rep = minimize_nehari(p)
    g = rep.state.grid
    e_exact = energy(p, cf.synchronized_pair(p, g)).total
    assert rep.converged
    assert rep.energy == pytest.approx(e_exact, rel=1e-4)


def test_converged_report_invariants():
    p = make_params(4, 0.2, 0.5, 2, 2, 2.19)
    rep = minimize_nehari(p)
    assert rep.converged and rep.grad_norm < SolveOptions().grad_tol
    e = energy(p, rep.state)
    assert rep.energy == pytest.approx(e.total, rel=1e-12)
    g1, g2 = nehari_residuals(p, rep.state)
    assert abs(g1) < 1e-8 * e.norm1_sq and abs(g2) < 1e-8 * e.norm2_sq
    a, b = rep.state.arrays()
    assert a.min() >= 0 and b.min() >= 0
    assert_monotone(rep.history)
    assert rep.energy < cf.single_level(4, 0.5)
    assert {r["start"] for r in rep.runs} == {"synchronized", "separated d=4"}
    s = rep.summary()
    assert s["classification"] == "coupled" and s["energy"] == rep.energy


def test_deterministic():
    p = make_params(4, 0.2, 0.5, 2, 2, 2.19)
    a = minimize_nehari(p)
    b = minimize_nehari(p)
    assert a.energy == b.energy and a.iterations == b.iterations
    np.testing.assert_array_equal(a.state.arrays()[0], b.state.arrays()[0])


def test_degenerate_family_reports_theta():
    p = symmetric_params(4, 0.5, 0.5)
    assert is_degenerate_family(p)
    assert not is_degenerate_family(p.with_nu(0.4))
    rep = minimize_nehari(p)
    assert rep.converged
    assert rep.energy == pytest.approx(cf.single_level(4, 0.5), rel=1e-6)
    assert rep.theta is not None and 0 <= rep.theta <= math.pi / 2


def test_negative_coupling_dichotomizes():
    p = symmetric_params(4, 0.5, -1.0)
    rep = minimize_nehari(p, SolveOptions(dichotomy_threshold=8.0))
    assert rep.classification is Classification.DICHOTOMIZING
    assert rep.separation > 8.0
    assert rep.energy > 2 * cf.single_level(4, 0.5)
    assert_monotone(rep.history)


def test_all_starts_failed():
    p = symmetric_params(4, 0.5, -1.0)
    g = default_grid(p)
    z = cf.bubble_ef(4, 0.5, g.s)
    with pytest.raises(AllStartsFailed) as info:
        minimize_nehari(p, grid=g, starts=[("overlap", StatePair.from_arrays(g, z, z))])
    assert info.value.failures and "ConditionFailed" in info.value.failures[0]


def test_start_grid_mismatch():
    p = symmetric_params(4, 0.5, 1.0)
    g = default_grid(p)
    other = default_grid(p, extent=10)
    with pytest.raises(GridMismatch):
        minimize_nehari(p, grid=g, starts=default_starts(p, other, ()))


def test_zero_coupling_rejected():
    with pytest.raises(ValueError):
        minimize_nehari(symmetric_params(4, 0.5, 0.0))


def test_scan_empty_list():
    with pytest.raises(ValueError):
        scan(symmetric_params(4, 0.5, 1.0), [])


def test_scan_single_matches_direct():
    p = make_params(4, 0.2, 0.5, 2, 2, 0.0)
    direct = minimize_nehari(p.with_nu(2.19))
    (rep,) = scan(p, [2.19])
    assert rep.energy == direct.energy and rep.nu == 2.19


def test_scan_parallel_matches_serial():
    p = make_params(4, 0.2, 0.5, 2, 2, 0.0)
    serial = scan(p, [1.0, 3.0], mode="quotient")
    parallel = scan(p, [1.0, 3.0], mode="quotient", workers=2)
    assert [r.energy for r in serial] == [r.energy for r in parallel]
    assert [r.nu for r in parallel] == [1.0, 3.0]


def test_scan_records_errors():
    p = make_params(4, 0.2, 0.5, 2, 2, 0.0)
    zero, ok = scan(p, [0.0, 2.19])
    assert "nu != 0" in zero.error and math.isnan(zero.energy) and zero.nu == 0.0
    assert ok.error is None and ok.converged
