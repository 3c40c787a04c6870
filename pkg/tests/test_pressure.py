import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intervalthermo import maps
from intervalthermo.errors import BracketError, PreconditionError
from intervalthermo.hofbauer import BaseChoice, scheme_for_map
from intervalthermo.pressure import (CurveConfig, curve_from_values, curve_shape_check, derivative_analysis,
                                     detect_transitions, equilibrium_summary, maximizing_measure_probe,
                                     orbit_bound, pressure_curve, pressure_induced, pressure_periodic,
                                     smooth_interior)

LOG2, LOG4 = math.log(2), math.log(4)


def cheb(t):
    return (1 - t) * LOG2 if t >= -1 else -t * LOG4


@pytest.fixture(scope="module")
def cheb_curve():
    f = maps.chebyshev()
    return pressure_curve(f, np.linspace(-3, 2, 51), CurveConfig(depth=12))


@pytest.fixture(scope="module")
def tent_curve():
    return pressure_curve(maps.tent(), np.linspace(-2, 2, 41), CurveConfig(depth=14))


# -- periodic route -------------------------------------------------------------

def test_periodic_examples(tent, chebyshev):
    est = pressure_periodic(tent, 0.5, 12)
    assert est.value == pytest.approx(0.5 * LOG2, abs=1e-3)
    assert pressure_periodic(chebyshev, 0.0, 12).value == pytest.approx(LOG2, abs=1e-12)
    assert pressure_periodic(chebyshev, -2.0, 12).value == pytest.approx(2 * LOG4, abs=1e-3)


def test_periodic_error_bar_covers_truth(chebyshev):
    for t in (-0.5, 0.5, 1.5):
        est = pressure_periodic(chebyshev, t, 12)
        assert abs(est.value - cheb(t)) <= 2 * est.error + 1e-12


def test_periodic_needs_depth(tent):
    with pytest.raises(ValueError):
        pressure_periodic(tent, 0.0, 3)


# -- induced route --------------------------------------------------------------

def test_induced_doubling_examples(doubling):
    s = scheme_for_map(doubling, 30, base=BaseChoice(0, (0.0, 0.5), "given"))[0]
    assert pressure_induced(doubling, 1.0, s).value == pytest.approx(0.0, abs=1e-9)
    assert pressure_induced(doubling, 0.0, s).value == pytest.approx(LOG2, abs=1e-9)
    # without the geometric tail the truncation error is of order 2^-30
    assert pressure_induced(doubling, 0.0, s, extrapolate=False).value == pytest.approx(LOG2, abs=1e-7)


def test_induced_tent_agrees_with_periodic(tent, schemes):
    ind = pressure_induced(tent, 0.5, schemes["tent"])
    assert ind.value == pytest.approx(0.5 * LOG2, abs=2e-3)
    assert ind.value == pytest.approx(pressure_periodic(tent, 0.5, 12).value, abs=2e-3)
    lo, hi = ind.diagnostics["bracket"]
    assert lo <= ind.value <= hi


def test_induced_chebyshev_matches_closed_form(chebyshev, schemes):
    for t in (-0.9, -0.5, 0.0, 0.5, 1.0, 2.0):
        assert pressure_induced(chebyshev, t, schemes["chebyshev"]).value == pytest.approx(cheb(t), abs=1e-9)


def test_induced_flags_truncation(chebyshev, schemes):
    est = pressure_induced(chebyshev, 0.5, schemes["chebyshev"], extrapolate=False)
    assert "truncation-sensitive" in est.flags
    assert abs(est.value - cheb(0.5)) < 5e-3


def test_induced_rejects_foreign_scheme(tent, schemes):
    with pytest.raises(PreconditionError):
        pressure_induced(tent, 0.0, schemes["chebyshev"])


def test_bracket_error_on_pathological_root(monkeypatch, tent, schemes):
    import intervalthermo.pressure as P

    monkeypatch.setattr(P, "_root_function", lambda *a: (lambda q: 1.0))
    with pytest.raises(BracketError):
        pressure_induced(tent, 0.0, schemes["tent"])


@given(t=st.floats(-2, 2))
@settings(max_examples=25, deadline=None)
def test_cross_method_agreement_affine(t, schemes):
    for name in ("tent", "doubling"):
        s = schemes[name]
        f = s.fmap
        assert abs(pressure_periodic(f, t, 14).value - pressure_induced(f, t, s).value) <= 5e-3


@pytest.mark.parametrize("t", [-2.0, -1.8, -1.6, -0.5, -0.2, 0.0, 0.5, 1.0, 1.5, 2.0])
def test_cross_method_agreement_chebyshev(t, chebyshev, schemes):
    per = pressure_periodic(chebyshev, t, 14).value
    ind = max(pressure_induced(chebyshev, t, schemes["chebyshev"]).value, orbit_bound(chebyshev)(t))
    assert abs(per - ind) <= 5e-3


# -- curves ---------------------------------------------------------------------

def test_curve_examples(tent, chebyshev):
    c = pressure_curve(tent, [-2, -1, 0, 1, 2], CurveConfig(depth=12))
    assert np.allclose(c.p, np.array([3, 2, 1, 0, -1]) * LOG2, atol=1e-9)
    c = pressure_curve(chebyshev, [-2, -1, 0, 1], CurveConfig(depth=12))
    assert np.allclose(c.p, [2 * LOG4, LOG4, LOG2, 0.0], atol=1e-9)
    assert c.method[0] == "orbit" and c.method[2] == "induced"


def test_curve_rejects_bad_grid(tent):
    with pytest.raises(ValueError):
        pressure_curve(tent, [])
    with pytest.raises(ValueError):
        pressure_curve(tent, [0.0, 0.0, 1.0])


def test_curve_records_point_failures(monkeypatch, tent):
    import intervalthermo.pressure as P

    real = P._point

    def flaky(fmap, t, *a):
        if t == 0.0:
            raise RuntimeError("boom")
        return real(fmap, t, *a)

    monkeypatch.setattr(P, "_point", flaky)
    c = pressure_curve(tent, [-1.0, 0.0, 1.0], CurveConfig(depth=10))
    assert c.failed == [1]
    assert math.isnan(c.p[1]) and np.isfinite(c.p[[0, 2]]).all()


def test_free_energy_identity(cheb_curve, tent_curve):
    for c in (cheb_curve, tent_curve):
        assert np.allclose(c.entropy, c.p + c.t * c.lam, atol=1e-9)


def test_tent_derivatives(tent_curve):
    assert np.allclose(tent_curve.Dminus[1:], -LOG2, atol=1e-9)
    assert np.allclose(tent_curve.Dplus[:-1], -LOG2, atol=1e-9)


def test_chebyshev_derivatives(cheb_curve):
    t = cheb_curve.t
    i0 = int(np.argmin(np.abs(t)))
    assert cheb_curve.Dminus[i0] == pytest.approx(-LOG2, abs=1e-6)
    assert cheb_curve.lam[i0] == pytest.approx(LOG2, abs=1e-9)
    k = int(np.argmin(np.abs(t + 1)))
    assert cheb_curve.Dminus[k] == pytest.approx(-LOG4, abs=1e-6)
    assert cheb_curve.Dplus[k] == pytest.approx(-LOG2, abs=1e-6)


def test_derivative_analysis_needs_three_points():
    c = curve_from_values([0.0, 1.0, 2.0], [1.0, 0.0, -1.0])
    derivative_analysis(c)
    with pytest.raises(ValueError):
        derivative_analysis(curve_from_values([0.0, 1.0], [1.0, 0.0]))


def test_tent_transitions(tent_curve):
    rep = detect_transitions(tent_curve)
    assert rep.kinks == []
    assert rep.lambda_m == pytest.approx(LOG2, abs=1e-9)
    assert rep.lambda_M == pytest.approx(LOG2, abs=1e-9)
    assert rep.t_plus is None and "not attained on grid" in rep.t_plus_note
    assert rep.t_minus is None and "not attained on grid" in rep.t_minus_note


def test_chebyshev_transitions(cheb_curve):
    rep = detect_transitions(cheb_curve)
    assert len(rep.kinks) == 1
    assert rep.kinks[0]["t"] == pytest.approx(-1.0, abs=0.1)
    assert rep.kinks[0]["gap"] == pytest.approx(LOG2, abs=0.1)
    assert rep.lambda_M == pytest.approx(LOG4, abs=0.02)
    assert rep.lambda_m == pytest.approx(LOG2, abs=0.02)
    assert rep.t_minus == pytest.approx(-1.0, abs=0.05)
    assert rep.t_plus is None
    assert rep.acip == "yes"


def test_synthetic_acip_kink():
    t = np.linspace(-1, 3, 41)
    c = curve_from_values(t, np.maximum(0.0, 1 - t) * LOG2)
    rep = detect_transitions(c)
    assert [k["t"] for k in rep.kinks] == [pytest.approx(1.0)]
    assert rep.acip == "yes"
    assert rep.t_plus == pytest.approx(1.0, abs=1e-9)


def test_no_acip_without_slope_at_one():
    t = np.linspace(-1, 3, 41)
    c = curve_from_values(t, np.maximum(0.0, -t) * LOG2)
    assert detect_transitions(c).acip == "no"


def test_kink_threshold_suppresses(cheb_curve):
    assert detect_transitions(cheb_curve, kink_threshold=1.0).kinks == []


def test_transition_report_invariants(cheb_curve):
    rep = detect_transitions(cheb_curve)
    assert rep.t_minus <= 0.0
    for k in rep.kinks:
        assert abs(k["gap"]) > 3 * k["error"]


@pytest.mark.parametrize("name,lam,intercept", [("chebyshev", LOG4, 0.0), ("tent", LOG2, LOG2),
                                                 ("doubling", LOG2, LOG2)])
def test_maximizing_probe(name, lam, intercept):
    c = pressure_curve(maps.builtin(name), np.linspace(-4, -2, 5), CurveConfig(depth=10))
    probe = maximizing_measure_probe(c)
    assert probe["stable"]
    assert probe["lambda_M"] == pytest.approx(lam, abs=1e-6)
    assert probe["intercept"] == pytest.approx(intercept, abs=1e-6)


def test_probe_flags_unstable_slope():
    c = curve_from_values([0.0, 1.0, 2.0], [0.0, -1.0, -1.5])
    assert not maximizing_measure_probe(c)["stable"]


def test_shape_checks(cheb_curve, tent_curve):
    for c in (cheb_curve, tent_curve):
        shape = curve_shape_check(c)
        assert shape["convex"] and shape["decreasing"]
    bad = curve_from_values([0.0, 1.0, 2.0], [0.0, -1.0, -1.0 + 0.1])
    shape = curve_shape_check(bad)
    assert not shape["decreasing"]


def test_slope_bracket(cheb_curve):
    rep = detect_transitions(cheb_curve)
    t, p = cheb_curve.t, cheb_curve.p
    i, j = np.triu_indices(t.size, 1)
    slopes = (p[j] - p[i]) / (t[j] - t[i])
    assert np.all(slopes >= -rep.lambda_M - 1e-6)
    assert np.all(slopes <= -rep.lambda_m + 1e-6)


def test_variational_lower_bound(cheb_curve, schemes):
    """Dirac orbit measures and the uniform Bernoulli lift never beat p(t)."""
    ob = orbit_bound(maps.chebyshev())
    s = schemes["chebyshev"]
    logdf = s.fixed_point_log_dF()
    m = s.n_branches
    mean_tau = s.tau.mean()
    h_u = math.log(m) / mean_tau
    lam_u = logdf.mean() / mean_tau
    for t, p in zip(cheb_curve.t, cheb_curve.p):
        assert -t * ob.lam_min <= p + 1e-6
        assert -t * ob.lam_max <= p + 1e-6
        assert h_u - t * lam_u <= p + 1e-6


def test_derivative_identity(cheb_curve, tent_curve):
    for c in (cheb_curve, tent_curve):
        rep = detect_transitions(c)
        idx = smooth_interior(c, rep)
        assert idx.size > 10
        D = 0.5 * (c.Dminus[idx] + c.Dplus[idx])
        assert np.all(np.abs(D + c.lam[idx]) <= 1e-2)


def test_threads_do_not_change_results(chebyshev):
    grid = np.linspace(-2, 1, 7)
    a = pressure_curve(chebyshev, grid, CurveConfig(depth=10, threads=1))
    b = pressure_curve(chebyshev, grid, CurveConfig(depth=10, threads=3))
    assert np.array_equal(a.p, b.p) and a.flags == b.flags


# -- equilibrium states ---------------------------------------------------------

def test_equilibrium_examples(tent, doubling, chebyshev, schemes):
    e = equilibrium_summary(tent, 0.0, schemes["tent"])
    assert e.lam == pytest.approx(LOG2, abs=1e-6)
    assert e.entropy == pytest.approx(LOG2, abs=1e-4)
    assert e.positive_entropy
    e = equilibrium_summary(chebyshev, 1.0, schemes["chebyshev"])
    assert e.lam == pytest.approx(LOG2, abs=1e-9)
    assert e.entropy == pytest.approx(LOG2, abs=1e-3)
    assert e.residual <= 1e-3
    s = scheme_for_map(doubling, 40, base=BaseChoice(0, (0.0, 0.5), "given"))[0]
    e = equilibrium_summary(doubling, 0.7, s)
    assert e.lam == pytest.approx(LOG2, abs=1e-12)
    assert e.residual <= 1e-6
    assert len(e.cylinder_table) == 8
