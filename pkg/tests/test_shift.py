import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intervalthermo.errors import PreconditionError, StructuralError
from intervalthermo.selftest import random_markov_shift
from intervalthermo.shift import (LocallyConstantPotential, ShiftSpace, bernoulli_potential,
                                  brute_force_partition_sum, cylinder_mass_decay_check, gibbs_bound_check,
                                  gibbs_measure, gurevich_pressure, partition_sum, perron_root,
                                  transfer_matrix_pressure)

GOLDEN = ShiftSpace([[1, 1], [1, 0]])
LOG_PHI = math.log((1 + math.sqrt(5)) / 2)


def test_partition_sum_examples():
    full = ShiftSpace.full(2)
    assert partition_sum(full, LocallyConstantPotential(np.zeros(2)), 4) == pytest.approx(8)
    c = 0.37
    for n in range(1, 7):
        z = partition_sum(full, LocallyConstantPotential(np.full(2, c)), n)
        assert z == pytest.approx(math.exp(c * n) * 2 ** (n - 1))
    assert partition_sum(GOLDEN, LocallyConstantPotential(np.zeros(2)), 3) == pytest.approx(3)


def test_partition_sum_empty_is_structural():
    # symbol 1 only returns to itself through 0, and loops of length 1 through 1 are forbidden
    with pytest.raises(StructuralError):
        partition_sum(GOLDEN, LocallyConstantPotential(np.zeros(2)), 1, base_symbol=1)


@given(st.integers(0, 2 ** 32 - 1), st.integers(1, 6))
@settings(max_examples=30, deadline=None)
def test_partition_sum_matches_enumeration(seed, n):
    shift, pot = random_markov_shift(np.random.default_rng(seed), max_symbols=4)
    for base in (0, None):
        try:
            z = partition_sum(shift, pot, n, base)
        except StructuralError:
            assert brute_force_partition_sum(shift, pot, n, base) == 0.0
            continue
        assert z == pytest.approx(brute_force_partition_sum(shift, pot, n, base), rel=1e-10)


def test_gurevich_examples():
    assert gurevich_pressure(ShiftSpace.full(2), LocallyConstantPotential(np.zeros(2))).value == pytest.approx(
        math.log(2), abs=1e-9)
    est = gurevich_pressure(ShiftSpace.full(2), bernoulli_potential([1 / 3, 2 / 3]))
    assert est.value == pytest.approx(0.0, abs=1e-12)
    est = gurevich_pressure(GOLDEN, LocallyConstantPotential(np.zeros(2)))
    assert est.converged and est.value == pytest.approx(LOG_PHI, abs=1e-10)


def test_gurevich_needs_mixing():
    with pytest.raises(PreconditionError):
        gurevich_pressure(ShiftSpace([[0, 1], [1, 0]]), LocallyConstantPotential(np.zeros(2)))


def test_transfer_matrix_examples():
    assert transfer_matrix_pressure(ShiftSpace.full(2), LocallyConstantPotential(np.zeros(2))) == pytest.approx(
        math.log(2), abs=1e-12)
    assert transfer_matrix_pressure(GOLDEN, LocallyConstantPotential(np.zeros(2))) == pytest.approx(LOG_PHI)
    assert transfer_matrix_pressure(ShiftSpace.full(2), bernoulli_potential([0.3, 0.5])) == pytest.approx(
        math.log(0.8))


def test_perron_root_rejects_reducible():
    with pytest.raises(StructuralError):
        perron_root(np.array([[1.0, 1.0], [0.0, 1.0]]))


@given(st.integers(0, 2 ** 32 - 1))
@settings(max_examples=25, deadline=None)
def test_gurevich_agrees_with_transfer_matrix(seed):
    shift, pot = random_markov_shift(np.random.default_rng(seed), max_depth=3 if seed % 3 == 0 else 2)
    assert gurevich_pressure(shift, pot).value == pytest.approx(transfer_matrix_pressure(shift, pot), abs=1e-9)


@given(st.integers(0, 2 ** 32 - 1), st.floats(-3, 3))
@settings(max_examples=25, deadline=None)
def test_pressure_shift_law(seed, c):
    shift, pot = random_markov_shift(np.random.default_rng(seed))
    p0 = gurevich_pressure(shift, pot).value
    assert gurevich_pressure(shift, pot.shifted(c)).value == pytest.approx(p0 + c, abs=1e-9)


def test_variation_of_tail():
    pot = LocallyConstantPotential(np.zeros(3), tail=(0.2, 0.5))
    assert pot.variation(1) == pytest.approx(0.2)
    assert pot.variation(3) == pytest.approx(0.05)
    assert pot.variation_sum(1) == pytest.approx(0.4)
    assert pot.summable


def test_bernoulli_gibbs_measures():
    m = gibbs_measure(ShiftSpace.full(2), LocallyConstantPotential(np.full(2, math.log(0.5))))
    assert m.C == 1.0
    assert m.mass((0, 1, 1)) == pytest.approx(0.125)
    m = gibbs_measure(ShiftSpace.full(3), bernoulli_potential([0.2, 0.3, 0.5]))
    assert m.mass((0, 2)) == pytest.approx(0.1)
    assert np.allclose(m.depth1_masses(), [0.2, 0.3, 0.5])


def test_gibbs_requires_normalised_potential():
    with pytest.raises(PreconditionError):
        gibbs_measure(ShiftSpace.full(2), LocallyConstantPotential(np.zeros(2)))


def _markov_chain_potential(rng, k):
    P = rng.random((k, k)) + 0.05
    P /= P.sum(axis=1, keepdims=True)
    return P, LocallyConstantPotential(np.log(P))


def test_depth2_gibbs_masses_match_markov_chain(rng):
    k = 3
    P, pot = _markov_chain_potential(rng, k)
    m = gibbs_measure(ShiftSpace.full(k), pot)
    w, v = np.linalg.eig(P.T)
    pi = np.abs(v[:, np.argmax(w.real)].real)
    pi /= pi.sum()
    for word in itertools.product(range(k), repeat=4):
        exact = pi[word[0]] * np.prod([P[a, b] for a, b in zip(word, word[1:])])
        assert m.mass(word) == pytest.approx(exact, rel=1e-12)


def test_depth2_measure_is_stationary(rng):
    _, pot = _markov_chain_potential(rng, 4)
    m = gibbs_measure(ShiftSpace.full(4), pot)
    for word in itertools.product(range(4), repeat=2):
        shifted = sum(m.mass((a,) + word) for a in range(4))
        assert shifted == pytest.approx(m.mass(word), rel=1e-12)


def test_gibbs_bound_exhaustive_depth2(rng):
    _, pot = _markov_chain_potential(rng, 3)
    m = gibbs_measure(ShiftSpace.full(3), pot)
    chk = gibbs_bound_check(m, 6)
    assert chk.holds
    assert chk.worst_log_ratio <= math.log(m.C) + 1e-12


def test_decay_examples():
    rep = cylinder_mass_decay_check(gibbs_measure(ShiftSpace.full(2), bernoulli_potential([0.5, 0.5])), 8)
    assert rep.holds and rep.lam == pytest.approx(math.log(2))
    assert rep.empirical_lam == pytest.approx(math.log(2))
    rep = cylinder_mass_decay_check(gibbs_measure(ShiftSpace.full(3), bernoulli_potential([0.2, 0.3, 0.5])), 5)
    assert rep.holds and rep.lam == pytest.approx(math.log(2))
    rep = cylinder_mass_decay_check(gibbs_measure(ShiftSpace.full(2), bernoulli_potential([0.9, 0.1])), 8)
    assert rep.holds and rep.lam == pytest.approx(-math.log(0.9))
