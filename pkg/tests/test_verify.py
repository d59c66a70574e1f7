import math

import numpy as np
import pytest

from hardy_nehari import closed_form as cf
from hardy_nehari.core import StatePair, make_params, symmetric_params
from hardy_nehari.errors import PreconditionError
from hardy_nehari.minimize import Classification, SolveReport, minimize_nehari
from hardy_nehari.verify import (
    SUITES,
    CheckResult,
    _result,
    all_passed,
    check_identities,
    check_limits,
    check_symmetry_profile,
    check_thresholds,
    instanton_ratio,
    run_suite,
    synchronized_report,
)


def test_result_relations():
    assert _result("a", 1.0, "", 1.0 + 1e-9, 1e-8, 0.0).passed
    assert not _result("a", 1.0, "", 1.1, 1e-8, 0.0).passed
    assert _result("a", 1.0, "", 0.5, 0.0, 0.0, relation="lt").passed
    assert not _result("a", 1.0, "", 0.5, 0.0, 0.0, relation="gt").passed
    assert _result("a", 0.0, "", 1e-9, 1e-8, 0.0).passed
    with pytest.raises(ValueError):
        _result("a", 1.0, "", 1.0, 0.0, 0.0, relation="le")


def test_check_result_error_and_dict():
    r = CheckResult("x", 2.0, "p", 2.2, 0.2, True, 0.0)
    assert r.error == pytest.approx(0.1)
    d = r.as_dict()
    assert d["error"] == pytest.approx(0.1) and d["relation"] == "eq"


def test_all_passed_ignores_informational():
    ok = CheckResult("a", 1, "", 1, 0, True, 0)
    info = CheckResult("b", 1, "", 2, 0, False, 0, informational=True)
    bad = CheckResult("c", 1, "", 2, 0, False, 0)
    assert all_passed([ok, info]) and not all_passed([ok, bad])


def test_identities_pass_at_default_spacing():
    res = check_identities((3, 4, 5), (0.1, 0.5, 1.0))
    assert len(res) == 7 and all(r.passed for r in res)


@pytest.mark.parametrize("N, lam", [(3, 0.1), (4, 0.5), (5, 1.0)])
def test_identity_error_converges(N, lam):
    """Halving the spacing shrinks the identity errors by at least 4."""
    coarse = check_identities((N,), (lam,), spacing=0.1)
    fine = check_identities((N,), (lam,), spacing=0.05)
    for c, f in zip(coarse, fine):
        assert c.error >= 4 * f.error


def test_instanton_ratio_converges():
    e1 = abs(instanton_ratio(0.1) - 1)
    e2 = abs(instanton_ratio(0.05) - 1)
    assert e1 >= 4 * e2


def test_identities_length_mismatch():
    with pytest.raises(ValueError):
        check_identities((3, 4), (0.1,))


def test_thresholds_suite():
    res = check_thresholds(make_params(4, 0.2, 0.5, 2, 2, 0.0))
    assert len(res) == 6
    assert all(r.passed for r in res), [r.as_dict() for r in res if not r.passed]


def test_limits_suite():
    res = check_limits(make_params(4, 0.3, 0.6, 2, 2, 0.0), (0.2, 0.1, 0.05))
    assert all_passed(res)
    assert sum(r.informational for r in res) == 1


def test_limits_precondition():
    with pytest.raises(PreconditionError):
        check_limits(make_params(4, 0.3, 0.6, 2, 2, 0.0), (0.05, 0.1))


def test_symmetry_profile_on_exact_state():
    rep = synchronized_report(symmetric_params(4, 0.5, 1.0))
    r = check_symmetry_profile(rep)
    assert r.informational and r.computed < 1e-12
    assert r.detail["monotonicity_violations"] == 0


def test_symmetry_profile_on_solver_state():
    rep = minimize_nehari(make_params(4, 0.2, 0.5, 2, 2, 2.19))
    r = check_symmetry_profile(rep)
    assert r.informational and math.isfinite(r.computed)


def test_symmetry_profile_preconditions():
    with pytest.raises(PreconditionError):
        check_symmetry_profile(SolveReport(None, 0.0, None, (0, 0), 0.0, 0, False))
    rep = synchronized_report(symmetric_params(4, 0.5, 1.0))
    rep.classification = Classification.SEMITRIVIAL_FIRST
    with pytest.raises(PreconditionError):
        check_symmetry_profile(rep)
    rep = synchronized_report(symmetric_params(4, 0.5, 1.0))
    a, b = rep.state.arrays()
    rep.state = StatePair.from_arrays(rep.state.grid, np.roll(a, 400), np.roll(b, 400))
    with pytest.raises(PreconditionError):
        check_symmetry_profile(rep)


def test_run_suite_sorted_and_unknown():
    res = run_suite("identities")
    names = [r.name for r in res]
    assert names == sorted(names)
    with pytest.raises(ValueError):
        run_suite("bogus")
    assert SUITES == ("identities", "thresholds", "limits")


def test_synchronized_report_energy():
    p = symmetric_params(4, 0.5, 1.0)
    rep = synchronized_report(p)
    assert rep.energy == pytest.approx(cf.s_lambda(4, 0.5) ** 2 / 6, rel=1e-9)
