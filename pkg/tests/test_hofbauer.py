import numpy as np
import pytest

from intervalthermo import maps
from intervalthermo.errors import DomainError, PreconditionError, TruncationBoundary
from intervalthermo.hofbauer import (BaseChoice, build_tower, choose_base, first_return_scheme,
                                     random_lifted_points, scheme_for_map, semiconjugacy_residuals, step)


@pytest.mark.parametrize("name", ["tent", "chebyshev", "doubling"])
def test_full_branch_towers_have_one_domain(name):
    tower = build_tower(maps.builtin(name), 5)
    assert len(tower) == 1
    assert (tower.domains[0].lo, tower.domains[0].hi) == (0.0, 1.0)
    # (source, branch, target): one self-loop per branch
    assert tower.edges == [(0, 0, 0), (0, 1, 0)]


def test_quadratic_tower_levels_are_bfs_distances(q39):
    tower = build_tower(q39, 6)
    assert len(tower) > 1
    assert list(tower.levels) == list(tower.bfs_levels())
    assert max(tower.levels) <= 6
    assert any(tower.transitive)


def test_step_examples(tent, q39):
    y, d = step(build_tower(tent, 5), 0.3, 0)
    assert y == pytest.approx(0.6) and d == 0
    tower = build_tower(q39, 6)
    y, d = step(tower, 0.49, 0)
    assert tower.levels[d] == 1
    dom = tower.domains[d]
    assert dom.lo == pytest.approx(0.0) and dom.hi == pytest.approx(3.9 / 4)


def test_step_errors(q39):
    tower = build_tower(q39, 3)
    top = [i for i, l in enumerate(tower.levels) if l == 3]
    assert tower.dropped_edges
    src, j = tower.dropped_edges[0]
    d = tower.domains[src]
    br = q39.branches[j]
    x = 0.5 * (max(d.lo, br.left) + min(d.hi, br.right))
    with pytest.raises(TruncationBoundary):
        step(tower, x, src)
    assert top
    with pytest.raises(DomainError):
        step(tower, 1.5, 0)


def test_semiconjugacy(q39):
    tower = build_tower(q39, 10)
    xs, ids = random_lifted_points(tower, 2000, seed=3)
    res, skipped = semiconjugacy_residuals(tower, xs, ids)
    assert res.size + skipped == 2000
    assert res.max() <= 1e-12


def test_edge_list_export(tmp_path, q39):
    path = tmp_path / "edges.csv"
    rows = build_tower(q39, 4).to_edge_list(path)
    assert path.read_text().count("\n") >= 2
    assert rows


def test_doubling_first_return_to_left_half(doubling):
    scheme, _, _ = scheme_for_map(doubling, 30, base=BaseChoice(0, (0.0, 0.5), "given"))
    assert scheme.n_branches == 30
    first = np.argmin(scheme.tau)
    assert scheme.tau[first] == 1
    assert (scheme.left[first], scheme.right[first]) == (0.0, 0.25)
    assert scheme.escaped_mass == pytest.approx(2.0 ** -30, rel=1e-9)
    assert np.allclose(scheme.lengths, 2.0 ** -(scheme.tau + 1.0))


def test_tent_first_return_dyadic(tent):
    scheme, _, _ = scheme_for_map(tent, 20, base=BaseChoice(0, (0.0, 0.5), "given"))
    one = scheme.tau == 1
    assert one.sum() == 1
    assert (scheme.left[one][0], scheme.right[one][0]) == (0.0, 0.25)
    logs = np.log2(scheme.lengths)
    assert np.allclose(logs, np.round(logs))


def test_chebyshev_scheme_contains_fixed_point(chebyshev):
    scheme, tower, base = scheme_for_map(chebyshev, 30)
    assert base.X[0] < 0.75 < base.X[1]
    one = np.flatnonzero(scheme.tau == 1)
    assert any(scheme.left[i] <= 0.75 <= scheme.right[i] for i in one)
    assert scheme.validate() == []
    # counts: one branch with tau = 1, two for every tau >= 3
    counts = np.bincount(scheme.tau)
    assert counts[1] == 1 and counts[2] == 0
    assert all(c == 2 for c in counts[3:])


def test_scheme_branches_map_onto_base(q39):
    scheme, _, _ = scheme_for_map(q39, 12, R=8)
    assert scheme.n_branches > 0
    assert scheme.validate() == []
    assert 0.0 <= scheme.escaped_mass < 1.0


def test_base_must_lie_in_domain(q39):
    tower = build_tower(q39, 6)
    d = tower.domains[1]
    with pytest.raises(PreconditionError):
        first_return_scheme(tower, (1, (d.lo - 0.1, d.hi)), 5)


def test_choose_base_inside_transitive_part(q39):
    tower = build_tower(q39, 10)
    choice = choose_base(tower)
    assert tower.transitive[choice.domain_id]
    d = tower.domains[choice.domain_id]
    assert d.lo < choice.X[0] < choice.X[1] < d.hi
