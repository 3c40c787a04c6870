"""Inducing schemes ``(X, F, tau)`` and the measures they carry.

A scheme is a finite list of branch domains ``X_i ⊂ X`` with return times
``tau_i``; ``F = f^{tau_i}`` maps each ``X_i`` monotonically onto ``X``.
Countable schemes are finitised at ``T_max`` and the uncovered part of ``X``
is reported as escaped mass. On the symbolic side the scheme is a full shift
whose symbols are the branches.
"""

from dataclasses import dataclass, field, replace
import csv
import math

import numpy as np

from .errors import PreconditionError
from .maps import SKIP
from .numerics import bisect_monotone, bisect_sign_change, log_sum_exp
from .shift import LocallyConstantPotential, ShiftSpace

ONTO_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class InducingScheme:
    """Finitised inducing scheme.

    Attributes
    ----------
    fmap : IntervalMap
    X : tuple of float
        Base interval ``(a, b)``.
    left, right : ndarray
        Branch domains, sorted left to right.
    tau : ndarray of int
        Return times.
    itinerary : ndarray of uint8, shape (m, max tau)
        Branch symbols of ``f`` along each return, padded with ``SKIP``.
    increasing : ndarray of bool
        Orientation of ``F`` on each branch.
    escaped_mass : float
        ``|X \\ ∪ X_i| / |X|``.
    K : float or None
        Distortion bound, once estimated.
    """

    fmap: object
    X: tuple
    left: np.ndarray
    right: np.ndarray
    tau: np.ndarray
    itinerary: np.ndarray
    increasing: np.ndarray
    escaped_mass: float
    K: float | None = None
    T_max: int | None = None
    base_domain: int | None = None
    escaped_detail: dict = field(default_factory=dict)

    def __post_init__(self):
        order = np.argsort(self.left, kind="stable")
        for name in ("left", "right", "tau", "itinerary", "increasing"):
            arr = np.asarray(getattr(self, name))[order]
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_branches(self):
        return self.left.size

    @property
    def lengths(self):
        return self.right - self.left

    @property
    def width(self):
        return self.X[1] - self.X[0]

    def with_K(self, K):
        return replace(self, K=float(K))

    def apply(self, x, i):
        """``F`` on branch ``i`` (vectorised over ``x`` and ``i``)."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        i = np.broadcast_to(np.asarray(i), x.shape)
        return self.fmap.compose(x, self.itinerary[i])

    def log_dF(self, x, i):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        i = np.broadcast_to(np.asarray(i), x.shape)
        return self.fmap.compose(x, self.itinerary[i], with_log_deriv=True)[1]

    def fixed_points(self):
        """The fixed point of ``F`` in each branch (``F_i`` maps ``X_i`` onto ``X``)."""
        idx = np.arange(self.n_branches)

        def g(x):
            return self.apply(x, idx) - x

        roots, _ = bisect_sign_change(g, self.left, self.right)
        return roots

    def fixed_point_log_dF(self):
        return self.log_dF(self.fixed_points(), np.arange(self.n_branches))

    def truncated(self, T):
        """Sub-scheme keeping branches with ``tau <= T``."""
        keep = self.tau <= T
        lost = float(np.sum(self.lengths[~keep])) / self.width
        width = max(1, int(self.tau[keep].max()) if keep.any() else 1)
        return replace(self, left=self.left[keep], right=self.right[keep], tau=self.tau[keep],
                       itinerary=self.itinerary[keep][:, :width], increasing=self.increasing[keep],
                       escaped_mass=self.escaped_mass + lost, T_max=T)

    def validate(self, tol=ONTO_TOL):
        """Check disjoint interiors and that each ``F_i`` maps ``X_i`` onto ``X``."""
        problems = []
        if np.any(self.left[1:] < self.right[:-1] - tol):
            problems.append("branch interiors overlap")
        if np.any(self.left < self.X[0] - tol) or np.any(self.right > self.X[1] + tol):
            problems.append("branch outside X")
        idx = np.arange(self.n_branches)
        fl = self.apply(self.left, idx)
        fr = self.apply(self.right, idx)
        lo, hi = np.minimum(fl, fr), np.maximum(fl, fr)
        bad = (np.abs(lo - self.X[0]) > tol) | (np.abs(hi - self.X[1]) > tol)
        if np.any(bad):
            problems.append(f"{int(bad.sum())} branch(es) not onto X")
        return problems

    def to_csv(self, path):
        """Dump ``X``, branch intervals, ``tau``, ``K`` and escaped mass."""
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["X_left", "X_right", "K", "escaped_mass"])
            w.writerow([repr(self.X[0]), repr(self.X[1]), repr(self.K), repr(self.escaped_mass)])
            w.writerow(["branch", "left", "right", "tau"])
            for k in range(self.n_branches):
                w.writerow([k, repr(float(self.left[k])), repr(float(self.right[k])), int(self.tau[k])])


def full_interval_scheme(fmap):
    """The trivial scheme ``X = [0, 1]``, ``F = f``, ``tau = 1`` (full-branch maps only)."""
    if not fmap.is_full_branch:
        raise PreconditionError("the trivial scheme needs every branch onto [0, 1]")
    n = fmap.n_branches
    return InducingScheme(
        fmap=fmap, X=(0.0, 1.0),
        left=np.array([b.left for b in fmap.branches]),
        right=np.array([b.right for b in fmap.branches]),
        tau=np.ones(n, dtype=int),
        itinerary=np.arange(n, dtype=np.uint8)[:, None],
        increasing=np.array([b.increasing for b in fmap.branches]),
        escaped_mass=0.0, K=1.0 if all(_is_affine(b) for b in fmap.branches) else None, T_max=1)


def _is_affine(branch):
    xs = np.linspace(branch.left, branch.right, 9)
    d = branch.deriv(xs)
    return bool(np.allclose(d, d[0], rtol=1e-14, atol=0.0))


# -- induced potentials -----------------------------------------------------------

def induced_potential(fmap, scheme, base_potential):
    """Depth-1 shift potential for ``Phi = S_tau phi`` on the scheme's full shift.

    Parameters
    ----------
    base_potential : tuple
        ``("log_deriv",)`` for ``phi = log|Df|``, ``("constant", c)``, or
        ``("geometric", t, p)`` for ``phi = -t log|Df| - p`` (so that
        ``Phi = -t log|DF| - p tau``).

    Notes
    -----
    Values are taken at each branch's fixed point. The ``log|Df|`` part
    varies inside a branch by at most ``log K``, shrinking geometrically with
    ``theta = sup 1/|DF|`` on deeper cylinders; this is declared as the tail.
    """
    if scheme.fmap is not fmap:
        raise PreconditionError("scheme was built for a different map")
    kind = base_potential[0]
    tau = scheme.tau.astype(float)
    if kind == "constant":
        return LocallyConstantPotential(float(base_potential[1]) * tau)
    logdf = scheme.fixed_point_log_dF()
    if kind == "log_deriv":
        coef, p = -1.0, 0.0
    elif kind == "geometric":
        coef, p = float(base_potential[1]), float(base_potential[2])
    else:
        raise ValueError(f"unknown base potential {kind!r}")
    table = -coef * logdf - p * tau
    K = scheme.K if scheme.K is not None else 1.0
    tail = None
    if K > 1.0 and coef != 0.0:
        theta = float(np.max(np.exp(-logdf)))
        theta = min(theta, 0.999)
        tail = (abs(coef) * math.log(K), theta)
    return LocallyConstantPotential(table, tail)


# -- induced measures ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class InducedMeasure:
    """Bernoulli measure on the scheme's full shift (``weights[i] = mu_F(X_i)``)."""

    scheme: InducingScheme
    weights: np.ndarray
    within: str = "gibbs"  # how mass is spread inside cylinders: "gibbs" or "lebesgue"

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if np.any(w < 0) or not np.isfinite(w).all():
            raise ValueError("weights must be finite and non-negative")
        w = w / np.sum(w)
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_potential(cls, scheme, potential):
        """Equilibrium (Gibbs) Bernoulli weights ``exp(Psi_i)`` renormalised."""
        T = potential.table
        return cls(scheme, np.exp(T - log_sum_exp(T)))

    @classmethod
    def lebesgue(cls, scheme):
        """Normalised Lebesgue measure on ``∪ X_i`` (invariant for affine schemes)."""
        return cls(scheme, scheme.lengths / np.sum(scheme.lengths), within="lebesgue")

    @property
    def mean_tau(self):
        return float(np.dot(self.weights, self.scheme.tau))

    def entropy(self):
        w = self.weights[self.weights > 0]
        return float(-np.sum(w * np.log(w)))

    def integral(self, values):
        return float(np.dot(self.weights, values))

    # -- interval masses ---------------------------------------------------------
    def interval_mass(self, lo, hi, depth=4):
        """``mu_F([lo, hi] ∩ X)`` resolved through ``depth`` levels of the shift."""
        lo = np.atleast_1d(np.asarray(lo, dtype=float))
        hi = np.atleast_1d(np.asarray(hi, dtype=float))
        return self._interval_mass(lo, hi, depth)

    def _interval_mass(self, lo, hi, depth):
        s = self.scheme
        L = s.left[None, :]
        R = s.right[None, :]
        a = np.maximum(lo[:, None], L)
        b = np.minimum(hi[:, None], R)
        overlap = np.clip(b - a, 0.0, None)
        frac = overlap / (R - L)
        if depth <= 0 or self.within == "lebesgue":
            return np.sum(frac * self.weights[None, :], axis=1)
        full = frac >= 1.0 - 1e-15
        out = np.sum(np.where(full, self.weights[None, :], 0.0), axis=1)
        part = (frac > 0) & ~full
        if np.any(part):
            r, i = np.nonzero(part)
            fa = s.apply(a[r, i], i)
            fb = s.apply(b[r, i], i)
            sub = self._interval_mass(np.minimum(fa, fb), np.maximum(fa, fb), depth - 1)
            np.add.at(out, r, self.weights[i] * sub)
        return out


def _as_union(target):
    if len(target) == 2 and np.isscalar(target[0]):
        return [tuple(map(float, target))]
    return [tuple(map(float, iv)) for iv in target]


def project_measure(measure, target_sets, depth=4):
    """Push ``mu_F`` down to ``mu = (1/∫tau) sum_i sum_{k<tau_i} mu_F(X_i ∩ f^{-k} A)``.

    Each target is an interval ``(a, b)`` or a list of intervals (a union).
    ``X_i ∩ f^{-k} A`` is an interval because ``f^k`` is monotone on ``X_i``.
    """
    s = measure.scheme
    fmap = s.fmap
    mean_tau = measure.mean_tau
    if not math.isfinite(mean_tau) or mean_tau <= 0:
        raise PreconditionError("mean return time must be finite")
    # all (branch, k) slices with their image intervals f^k(X_i)
    br = np.repeat(np.arange(s.n_branches), s.tau)
    ks = np.concatenate([np.arange(t) for t in s.tau])
    width = s.itinerary.shape[1]
    cols = np.arange(width)[None, :]
    itin_k = np.where(cols < ks[:, None], s.itinerary[br], SKIP).astype(np.uint8)
    xl, xr = s.left[br], s.right[br]
    yl = fmap.compose(xl, itin_k)
    yr = fmap.compose(xr, itin_k)
    inc = yr >= yl
    img_lo, img_hi = np.minimum(yl, yr), np.maximum(yl, yr)

    out = []
    for target in target_sets:
        total = 0.0
        for a, b in _as_union(target):
            lo = np.maximum(img_lo, a)
            hi = np.minimum(img_hi, b)
            hit = hi > lo
            if not np.any(hit):
                continue
            idx = np.flatnonzero(hit)

            def fsub(x, idx=idx):
                return fmap.compose(x, itin_k[idx])

            pl = np.where(lo[idx] <= img_lo[idx], np.where(inc[idx], xl[idx], xr[idx]),
                          bisect_monotone(fsub, xl[idx], xr[idx], lo[idx], inc[idx]))
            ph = np.where(hi[idx] >= img_hi[idx], np.where(inc[idx], xr[idx], xl[idx]),
                          bisect_monotone(fsub, xl[idx], xr[idx], hi[idx], inc[idx]))
            m = measure.interval_mass(np.minimum(pl, ph), np.maximum(pl, ph), depth)
            total += float(np.sum(m))
        out.append(total / mean_tau)
    return out


def abramov(measure, induced_quantity):
    """Convert an induced entropy or Lyapunov exponent: ``q / ∫tau dmu_F``."""
    return float(induced_quantity) / measure.mean_tau


@dataclass
class KacReport:
    mean_tau: float
    tower_mass: float
    reciprocal: float
    residual: float
    holds: bool


def kac_check(scheme, measure, tower_mass=None, tol=1e-6):
    """Compare ``∫tau dmu_F`` with ``1/mu(X)``.

    Without ``tower_mass`` the base mass is estimated by projecting the measure.
    """
    if measure.scheme is not scheme:
        raise PreconditionError("measure lives on a different scheme")
    if tower_mass is None:
        tower_mass = project_measure(measure, [scheme.X])[0]
    recip = 1.0 / tower_mass
    res = abs(measure.mean_tau - recip)
    return KacReport(measure.mean_tau, float(tower_mass), recip, res, res <= tol)


# -- distortion --------------------------------------------------------------------

@dataclass
class DistortionEstimate:
    K: float
    empirical_log_sup: float
    per_branch: np.ndarray
    suspect: list


def _pull_back(scheme, i, lo, hi):
    """Sub-interval of ``X_i`` mapped by ``F_i`` onto ``[lo, hi] ⊂ X``."""
    idx = np.asarray(i)

    def g(x):
        return scheme.apply(x, idx)

    inc = scheme.increasing[idx]
    pa = bisect_monotone(g, scheme.left[idx], scheme.right[idx], lo, inc)
    pb = bisect_monotone(g, scheme.left[idx], scheme.right[idx], hi, inc)
    return np.minimum(pa, pb), np.maximum(pa, pb)


def estimate_distortion(fmap, scheme, samples=16, max_words=400, seed=0, suspect_factor=50.0):
    """Empirical distortion ``K`` of the scheme over words of length ``<= 3``.

    For each sampled cylinder ``X_{w}`` the spread of ``log|DF^n|`` over
    ``samples`` interior points is recorded. ``K`` is the empirical sup with
    its logarithm inflated by 10%, so that affine schemes give exactly 1.
    """
    if samples < 2:
        raise PreconditionError("need at least 2 samples per branch")
    if scheme.fmap is not fmap:
        raise PreconditionError("scheme was built for a different map")
    m = scheme.n_branches
    rng = np.random.default_rng(seed)
    s = (np.arange(samples) + 0.5) / samples
    per_branch = np.zeros(m)

    def spread(lo, hi, words):
        xs = lo[:, None] + (hi - lo)[:, None] * s[None, :]
        total = np.zeros(xs.shape)
        cur = xs.copy()
        for step in range(words.shape[1]):
            i = np.repeat(words[:, step], samples)
            total += scheme.log_dF(cur.reshape(-1), i).reshape(xs.shape)
            cur = scheme.apply(cur.reshape(-1), i).reshape(xs.shape)
        with np.errstate(invalid="ignore"):
            return np.ptp(total, axis=1)

    words1 = np.arange(m)[:, None]
    sp1 = spread(scheme.left, scheme.right, words1)
    per_branch[:] = sp1
    worst = float(np.nanmax(sp1)) if m else 0.0
    for n in (2, 3):
        count = min(max_words, m ** n)
        if m ** n <= max_words:
            words = np.array(np.meshgrid(*[np.arange(m)] * n, indexing="ij")).reshape(n, -1).T
        else:
            words = rng.integers(0, m, size=(count, n))
        lo = np.full(words.shape[0], scheme.X[0])
        hi = np.full(words.shape[0], scheme.X[1])
        # cylinder X_w = F_{w0}^{-1} ... F_{w_{n-1}}^{-1}(X)
        for step in range(n - 1, -1, -1):
            lo, hi = _pull_back(scheme, words[:, step], lo, hi)
        ok = hi > lo
        if np.any(ok):
            sp = spread(lo[ok], hi[ok], words[ok])
            worst = max(worst, float(np.nanmax(sp)))
            np.maximum.at(per_branch, words[ok, 0], sp)
    median = float(np.median(per_branch)) if m else 0.0
    suspect = [int(k) for k in np.flatnonzero(
        ~np.isfinite(per_branch) | (per_branch > suspect_factor * max(median, 1e-3)))]
    if not math.isfinite(worst):
        return DistortionEstimate(math.inf, worst, per_branch, suspect)
    return DistortionEstimate(math.exp(1.1 * worst), worst, per_branch, suspect)


def scheme_shift(scheme):
    """The full shift on the scheme's branches."""
    return ShiftSpace.full(scheme.n_branches)
