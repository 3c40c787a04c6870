import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from intervalthermo import cylinders, maps
from intervalthermo.errors import AmbiguityError


def test_tent_P2_quarters(tent):
    part = cylinders.refine(tent, cylinders.initial_partition(tent, 1))
    assert len(part) == 4
    assert np.allclose(part.lengths, 0.25)


def test_chebyshev_P2_endpoints_map_to_half(chebyshev):
    part = cylinders.initial_partition(chebyshev, 2)
    assert len(part) == 4
    inner = np.array([part.left[1], part.left[3]])
    assert np.allclose(chebyshev(inner), 0.5, atol=1e-14)
    assert inner[0] == pytest.approx(math.sin(math.pi / 8) ** 2, abs=1e-14)


def test_doubling_depth10(doubling):
    part = cylinders.initial_partition(doubling, 10)
    assert len(part) == 2 ** 10
    assert np.allclose(part.lengths, 2.0 ** -10, rtol=0, atol=1e-15)


def test_cylinder_containing_examples(tent, doubling, chebyshev):
    assert cylinders.cylinder_containing(cylinders.initial_partition(tent, 2), 0.3).itinerary == (0, 1)
    whole = cylinders.cylinder_containing(cylinders.initial_partition(chebyshev, 0), 0.42)
    assert (whole.left, whole.right) == (0.0, 1.0)
    assert cylinders.cylinder_containing(cylinders.initial_partition(doubling, 3), 5 / 8).itinerary == (1, 0, 1)


@given(st.floats(0.0, 1.0), st.integers(1, 8))
@settings(max_examples=60, deadline=None)
def test_partition_tiles_interval_and_nests(x, n):
    f = maps.chebyshev()
    part = cylinders.initial_partition(f, n)
    assert part.left[0] == 0.0 and part.right[-1] == 1.0
    assert np.allclose(part.left[1:], part.right[:-1], atol=1e-15)
    cyl = cylinders.cylinder_containing(part, x)
    parent = cylinders.cylinder_containing(cylinders.initial_partition(f, n - 1), x)
    assert cyl.itinerary[:n - 1] == parent.itinerary
    assert parent.left - 1e-15 <= cyl.left and cyl.right <= parent.right + 1e-15


def test_images_are_consistent(chebyshev):
    part = cylinders.initial_partition(chebyshev, 6)
    live = ~part.frozen
    yl = chebyshev.compose(part.left[live], part.itinerary[live])
    yr = chebyshev.compose(part.right[live], part.itinerary[live])
    assert np.allclose(np.minimum(yl, yr), part.img_lo[live], atol=1e-9)
    assert np.allclose(np.maximum(yl, yr), part.img_hi[live], atol=1e-9)


def test_periodic_points_examples(tent, chebyshev, doubling):
    pts = cylinders.periodic_points(tent, 2)
    assert np.allclose([p for p, _ in pts], [0, 0.4, 2 / 3, 0.8], atol=1e-14)
    assert np.allclose([m for _, m in pts], 4.0)
    pts = cylinders.periodic_points(chebyshev, 1)
    assert np.allclose([p for p, _ in pts], [0, 0.75], atol=1e-14)
    assert np.allclose([m for _, m in pts], [4, 2])
    pts = cylinders.periodic_points(doubling, 3)
    xs = sorted(p for p, _ in pts)
    assert len(xs) == 8
    assert np.allclose(xs, [k / 7 for k in range(8)], atol=1e-14)
    assert np.allclose([m for _, m in pts], 8.0)


def test_periodic_count_chebyshev(chebyshev):
    for n in range(1, 11):
        assert len(cylinders.periodic_spectrum(chebyshev, n)) == 2 ** n


def test_ambiguity_error_for_wiggly_branch():
    # increasing, but crosses the diagonal many times on its single branch
    f = maps.from_expressions([(0, 1, "x + 0.01*sin(20*pi*x)")])
    with pytest.raises(AmbiguityError):
        cylinders.periodic_spectrum(f, 1)


def test_csv_export(tmp_path, tent):
    path = tmp_path / "p2.csv"
    cylinders.initial_partition(tent, 2).to_csv(path)
    rows = path.read_text().splitlines()
    assert rows[0] == "depth,itinerary,left,right"
    assert len(rows) == 5
