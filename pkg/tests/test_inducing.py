import math

import numpy as np
import pytest

from intervalthermo import maps
from intervalthermo.errors import PreconditionError
from intervalthermo.hofbauer import BaseChoice, scheme_for_map
from intervalthermo.inducing import (InducedMeasure, abramov, estimate_distortion, full_interval_scheme,
                                     induced_potential, kac_check, project_measure, scheme_shift)

LOG2 = math.log(2)


@pytest.fixture(scope="module")
def dbl_half():
    f = maps.doubling()
    return scheme_for_map(f, 30, base=BaseChoice(0, (0.0, 0.5), "given"))[0]


def test_induced_log_deriv_is_tau_log2(dbl_half):
    pot = induced_potential(dbl_half.fmap, dbl_half, ("log_deriv",))
    assert np.allclose(pot.table, dbl_half.tau * LOG2)
    pot = induced_potential(dbl_half.fmap, dbl_half, ("constant", 0.3))
    assert np.allclose(pot.table, 0.3 * dbl_half.tau)


def test_chebyshev_fixed_branch_log2(chebyshev):
    scheme = scheme_for_map(chebyshev, 30)[0]
    pot = induced_potential(chebyshev, scheme, ("log_deriv",))
    i = int(np.flatnonzero(scheme.tau == 1)[0])
    assert pot.table[i] == pytest.approx(LOG2, abs=1e-12)
    # every multiplier of the Chebyshev first return is exactly 2^tau
    assert np.allclose(pot.table, scheme.tau * LOG2, atol=1e-9)


def test_trivial_scheme_projection_is_identity(tent):
    s = full_interval_scheme(tent)
    m = InducedMeasure(s, np.array([0.3, 0.7]))
    assert project_measure(m, [(0.0, 0.5), (0.5, 1.0)]) == pytest.approx([0.3, 0.7])
    assert abramov(m, 1.234) == pytest.approx(1.234)
    assert kac_check(s, m, tower_mass=1.0).holds


def test_doubling_projection_and_kac(dbl_half):
    m = InducedMeasure.lebesgue(dbl_half)
    masses = project_measure(m, [(0.0, 0.5), (0.5, 1.0)])
    assert masses == pytest.approx([0.5, 0.5], abs=1e-7)
    rep = kac_check(dbl_half, m, tower_mass=0.5)
    assert rep.holds and rep.mean_tau == pytest.approx(2.0, abs=1e-6)
    rep = kac_check(dbl_half, m)
    assert rep.tower_mass == pytest.approx(0.5, abs=1e-7)


def test_tent_kac(tent):
    s = scheme_for_map(tent, 30, base=BaseChoice(0, (0.0, 0.5), "given"))[0]
    assert kac_check(s, InducedMeasure.lebesgue(s), tower_mass=0.5).mean_tau == pytest.approx(2.0, abs=1e-6)


def test_abramov_doubling(dbl_half):
    m = InducedMeasure.lebesgue(dbl_half)
    lam_F = m.integral(dbl_half.tau * LOG2)
    assert lam_F == pytest.approx(2 * LOG2, abs=1e-6)
    assert abramov(m, lam_F) == pytest.approx(LOG2, abs=1e-7)
    assert abramov(m, m.entropy()) == pytest.approx(LOG2, abs=1e-6)


def test_union_targets(dbl_half):
    m = InducedMeasure.lebesgue(dbl_half)
    (u,) = project_measure(m, [[(0.0, 0.25), (0.75, 1.0)]])
    assert u == pytest.approx(0.5, abs=1e-7)


def test_projection_rejects_divergent_mean(dbl_half):
    m = InducedMeasure(dbl_half, np.ones(dbl_half.n_branches))
    object.__setattr__(m, "weights", np.full(dbl_half.n_branches, np.inf))
    with pytest.raises(PreconditionError):
        project_measure(m, [(0.0, 1.0)])


@pytest.mark.parametrize("name", ["tent", "doubling"])
def test_affine_distortion_is_one(name):
    f = maps.builtin(name)
    s = scheme_for_map(f, 20)[0]
    assert estimate_distortion(f, s).K == pytest.approx(1.0, abs=1e-9)


def test_chebyshev_distortion_stable(chebyshev):
    s = scheme_for_map(chebyshev, 30)[0]
    ks = [estimate_distortion(chebyshev, s, samples=n).K for n in (16, 64, 128)]
    assert all(1.0 < k < 10.0 for k in ks)
    # the empirical sup increases towards its limit
    assert ks[0] <= ks[1] <= ks[2]
    assert ks[2] == pytest.approx(ks[1], rel=0.02)


def test_scheme_shift_is_full(dbl_half):
    sh = scheme_shift(dbl_half)
    assert sh.is_full and sh.n_symbols == dbl_half.n_branches


def test_truncated_and_csv(tmp_path, dbl_half):
    s = dbl_half.truncated(5)
    assert s.n_branches == 5 and s.tau.max() == 5
    s.to_csv(tmp_path / "s.csv")
    assert (tmp_path / "s.csv").read_text().count("\n") == 8
