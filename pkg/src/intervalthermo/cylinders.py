"""Dynamical cylinder partitions ``P_n`` and periodic points.

A depth-``n`` cylinder is a maximal interval on which the itinerary
``(i_0, ..., i_{n-1})`` of branch indices is constant. ``f^n`` restricted to a
cylinder is monotone, so each cylinder carries its exact image interval and
orientation. Refinement splits a cylinder ``C`` by the branch domains met by
``f^n(C)``, pulling the splitting points back with bisection on the composite.
"""

from dataclasses import dataclass
import csv
import functools

import numpy as np

from .errors import AmbiguityError, DomainError, NumericError
from .maps import SKIP
from .numerics import bisect_monotone, bisect_sign_change

#: cylinders shorter than this are frozen (not split further)
MIN_LENGTH = 1e-13
#: endpoint tolerance for inverse images
ENDPOINT_TOL = 1e-14
#: duplicate periodic points closer than this are merged
DEDUP_TOL = 1e-12


@dataclass(frozen=True)
class Cylinder:
    itinerary: tuple
    left: float
    right: float
    image: tuple
    increasing: bool
    frozen: bool = False

    @property
    def depth(self):
        return len(self.itinerary)

    @property
    def length(self):
        return self.right - self.left

    def __contains__(self, x):
        return self.left <= x <= self.right


class Partition:
    """The depth-``n`` cylinder partition of a map, stored column-wise.

    Cylinders are ordered left to right. ``itinerary`` is an ``(m, n)`` uint8
    array; frozen cylinders are padded with :data:`~intervalthermo.maps.SKIP`
    beyond the depth at which they stopped splitting.
    """

    def __init__(self, fmap, depth, left, right, itinerary, img_lo, img_hi, increasing, frozen):
        order = np.argsort(left, kind="stable")
        self.fmap = fmap
        self.depth = int(depth)
        self.left = np.asarray(left, dtype=float)[order]
        self.right = np.asarray(right, dtype=float)[order]
        self.itinerary = np.asarray(itinerary, dtype=np.uint8).reshape(len(order), depth)[order]
        self.img_lo = np.asarray(img_lo, dtype=float)[order]
        self.img_hi = np.asarray(img_hi, dtype=float)[order]
        self.increasing = np.asarray(increasing, dtype=bool)[order]
        self.frozen = np.asarray(frozen, dtype=bool)[order]
        for arr in (self.left, self.right, self.itinerary, self.img_lo, self.img_hi,
                    self.increasing, self.frozen):
            arr.setflags(write=False)

    def __len__(self):
        return self.left.size

    def __getitem__(self, k):
        itin = tuple(int(s) for s in self.itinerary[k] if s != SKIP)
        return Cylinder(itin, float(self.left[k]), float(self.right[k]),
                        (float(self.img_lo[k]), float(self.img_hi[k])),
                        bool(self.increasing[k]), bool(self.frozen[k]))

    def __iter__(self):
        for k in range(len(self)):
            yield self[k]

    @property
    def cylinders(self):
        return list(self)

    @property
    def lengths(self):
        return self.right - self.left

    def total_length(self):
        return float(np.sum(self.lengths))

    def to_csv(self, path):
        """Write ``depth, itinerary, left, right`` rows."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["depth", "itinerary", "left", "right"])
            for cyl in self:
                w.writerow([cyl.depth, "".join(map(str, cyl.itinerary)) if self.fmap.n_branches <= 10
                            else ".".join(map(str, cyl.itinerary)), repr(cyl.left), repr(cyl.right)])


def _depth_zero(fmap):
    return Partition(fmap, 0, [0.0], [1.0], np.zeros((1, 0), dtype=np.uint8),
                     [0.0], [1.0], [True], [False])


def refine(fmap, partition):
    """Return ``P_{n+1}`` from ``P_n``.

    Each child is ``C ∩ (f^n|C)^{-1}(B_j)``; its image is ``f_j(f^n(C) ∩ B_j)``,
    evaluated on the interval endpoints so that nesting is exact.
    """
    if partition.fmap is not fmap:
        raise ValueError("partition belongs to a different map")
    n = partition.depth
    live = ~partition.frozen
    parts = {k: [] for k in ("left", "right", "itin", "lo", "hi", "inc", "frozen")}

    # frozen cylinders pass through unchanged
    if np.any(~live):
        idx = np.flatnonzero(~live)
        _append(parts, partition.left[idx], partition.right[idx],
                np.hstack([partition.itinerary[idx], np.full((idx.size, 1), SKIP, np.uint8)]),
                partition.img_lo[idx], partition.img_hi[idx], partition.increasing[idx],
                np.ones(idx.size, bool))

    pidx = np.flatnonzero(live)
    P_left, P_right = partition.left[pidx], partition.right[pidx]
    P_lo, P_hi = partition.img_lo[pidx], partition.img_hi[pidx]
    P_inc, P_itin = partition.increasing[pidx], partition.itinerary[pidx]

    for j, br in enumerate(fmap.branches):
        a = np.maximum(P_lo, br.left)
        b = np.minimum(P_hi, br.right)
        ok = b > a
        if not np.any(ok):
            continue
        a, b = a[ok], b[ok]
        cl, cr, lo, hi = P_left[ok], P_right[ok], P_lo[ok], P_hi[ok]
        inc, itin = P_inc[ok], P_itin[ok]

        def fn(x, itin=itin):
            return fmap.compose(x, itin)

        # preimage of a and b inside the parent; exact where they hit the image ends
        x_lo = np.where(inc, cl, cr)  # point mapped to lo
        x_hi = np.where(inc, cr, cl)  # point mapped to hi
        need_a = a > lo
        need_b = b < hi
        pa = x_lo.copy()
        pb = x_hi.copy()
        if n == 0:
            pa = np.where(need_a, a, pa)
            pb = np.where(need_b, b, pb)
        else:
            if np.any(need_a):
                pa = np.where(need_a, bisect_monotone(fn, cl, cr, a, inc), pa)
            if np.any(need_b):
                pb = np.where(need_b, bisect_monotone(fn, cl, cr, b, inc), pb)
            _check_endpoints(fn, pa, a, need_a, cl, cr, j)
            _check_endpoints(fn, pb, b, need_b, cl, cr, j)
        left = np.minimum(pa, pb)
        right = np.maximum(pa, pb)

        fa, fb = br.func(a), br.func(b)
        img_lo = np.clip(np.minimum(fa, fb), 0.0, 1.0)
        img_hi = np.clip(np.maximum(fa, fb), 0.0, 1.0)
        child_inc = inc == br.increasing
        new_itin = np.hstack([itin, np.full((itin.shape[0], 1), j, np.uint8)])
        frozen = (right - left) < MIN_LENGTH
        keep = right > left
        _append(parts, left[keep], right[keep], new_itin[keep], img_lo[keep], img_hi[keep],
                child_inc[keep], frozen[keep])

    cat = {k: np.concatenate(v) if v else np.empty(0) for k, v in parts.items()}
    itin = cat["itin"] if parts["itin"] else np.zeros((0, n + 1), np.uint8)
    return Partition(fmap, n + 1, cat["left"], cat["right"], itin, cat["lo"], cat["hi"],
                     cat["inc"].astype(bool), cat["frozen"].astype(bool))


def _append(parts, left, right, itin, lo, hi, inc, frozen):
    parts["left"].append(left)
    parts["right"].append(right)
    parts["itin"].append(itin)
    parts["lo"].append(lo)
    parts["hi"].append(hi)
    parts["inc"].append(inc)
    parts["frozen"].append(frozen)


def _check_endpoints(fn, x, target, mask, cl, cr, branch):
    if not np.any(mask):
        return
    bad = mask & ((x < cl - ENDPOINT_TOL) | (x > cr + ENDPOINT_TOL))
    # a monotone composite reaches the target up to its own rounding; a large
    # residual means the piece was not monotone on the parent
    resid = np.abs(fn(x) - target)
    bad |= mask & (resid > 1e-6)
    if np.any(bad):
        k = int(np.flatnonzero(bad)[0])
        raise NumericError(
            f"inverse image for branch {branch} failed on cylinder [{cl[k]!r}, {cr[k]!r}] "
            f"(residual {resid[k]:.3g})")


@functools.lru_cache(maxsize=64)
def initial_partition(fmap, depth=1):
    """``P_depth`` of ``fmap`` built by repeated refinement (cached per map)."""
    if depth < 0:
        raise ValueError("depth must be non-negative")
    if depth == 0:
        return _depth_zero(fmap)
    return refine(fmap, initial_partition(fmap, depth - 1))


def partition(fmap, depth):
    """Alias of :func:`initial_partition` for readability at call sites."""
    return initial_partition(fmap, depth)


def cylinder_containing(part, x):
    """The cylinder of ``part`` containing ``x``.

    Shared endpoints resolve like the map's tie-break (left by default).
    """
    x = float(x)
    if not 0.0 <= x <= 1.0:
        raise DomainError(f"point outside [0, 1]: {x}")
    if part.fmap.tie_break == "right":
        k = int(np.searchsorted(part.left, x, side="right")) - 1
    else:
        k = int(np.searchsorted(part.right, x, side="left"))
    k = min(max(k, 0), len(part) - 1)
    return part[k]


@dataclass(frozen=True)
class PeriodicSpectrum:
    """Fixed points of ``f^n`` with their ``log|Df^n|`` and itineraries."""

    n: int
    points: np.ndarray
    log_multipliers: np.ndarray
    itineraries: np.ndarray

    def __len__(self):
        return self.points.size

    @property
    def multipliers(self):
        return np.exp(self.log_multipliers)


def _count_sign_changes(g, left, right, samples=17):
    s = np.linspace(0.0, 1.0, samples)
    xs = left[:, None] + (right - left)[:, None] * s[None, :]
    vals = g(xs)
    sg = np.sign(vals)
    # zeros are counted once
    changes = np.sum((sg[:, 1:] * sg[:, :-1] < 0) | ((sg[:, 1:] == 0) & (sg[:, :-1] != 0)), axis=1)
    return changes


@functools.lru_cache(maxsize=64)
def periodic_spectrum(fmap, n):
    """All solutions of ``f^n(x) = x``, one bisection per depth-``n`` cylinder."""
    if n < 1:
        raise ValueError("period must be >= 1")
    part = initial_partition(fmap, n)
    live = np.flatnonzero(~part.frozen)
    left, right, itin = part.left[live], part.right[live], part.itinerary[live]

    def g(x, itin=itin):
        return fmap.compose(x, itin) - x

    def g2(xs):
        flat = fmap.compose(xs.reshape(-1), np.repeat(itin, xs.shape[1], axis=0))
        return flat.reshape(xs.shape) - xs

    changes = _count_sign_changes(g2, left, right)
    if np.any(changes > 1):
        k = int(np.flatnonzero(changes > 1)[0])
        raise AmbiguityError(
            f"f^{n} - id changes sign {int(changes[k])} times on cylinder "
            f"[{left[k]!r}, {right[k]!r}]; map outside the supported class for this solver")
    roots, has = bisect_sign_change(g, left, right)
    roots, itin = roots[has], itin[has]
    _, logd = fmap.compose(roots, itin, with_log_deriv=True)

    order = np.argsort(roots, kind="stable")
    roots, logd, itin = roots[order], logd[order], itin[order]
    keep = np.ones(roots.size, bool)
    if roots.size > 1:
        keep[1:] = np.diff(roots) > DEDUP_TOL
    for arr in (roots, logd, itin):
        arr.setflags(write=False)
    return PeriodicSpectrum(n, roots[keep], logd[keep], itin[keep])


def periodic_points(fmap, n):
    """List of ``(x, |Df^n(x)|)`` over the fixed points of ``f^n``."""
    spec = periodic_spectrum(fmap, n)
    return [(float(x), float(m)) for x, m in zip(spec.points, spec.multipliers)]
