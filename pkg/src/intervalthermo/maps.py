"""Piecewise-monotone interval maps on ``[0, 1]``.

An :class:`IntervalMap` is an ordered tuple of monotone branches plus critical
data. All evaluation is vectorised; composite evaluation along symbolic
itineraries (``compose``) is the workhorse for the cylinder, tower and inducing
code, which always know which branch a point is supposed to follow.
"""

from dataclasses import dataclass, field
import math

import numpy as np

from . import expr
from .errors import ConfigError, DomainError

SMOOTH = "smooth-multimodal"
CUSP = "cusp"

#: itinerary padding symbol meaning "no step"
SKIP = 255

_EDGE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Branch:
    """One monotone piece ``func`` on ``[left, right]`` with derivative ``deriv``."""

    left: float
    right: float
    func: object
    deriv: object
    increasing: bool
    expression: str | None = None

    @property
    def width(self):
        return self.right - self.left


@dataclass(frozen=True, eq=False)
class IntervalMap:
    """A piecewise-monotone map of the unit interval.

    Attributes
    ----------
    branches : tuple of Branch
        Ordered left to right; closures cover ``[0, 1]``.
    critical : tuple of (float, float)
        ``(location, order)`` pairs. Smooth maps have ``Df = 0`` there; cusp maps
        may have one-sided derivative ``0`` or ``inf``.
    kind : str
        ``"smooth-multimodal"`` or ``"cusp"``.
    tie_break : str
        Which branch owns a shared endpoint: ``"left"`` (default) or ``"right"``
        for maps defined with half-open branches such as ``2x mod 1``.
    constants : dict
        Known closed forms for built-ins: ``h_top``, ``lambda_min``,
        ``lambda_max`` and ``pressure`` (a callable of ``t``).
    """

    branches: tuple
    critical: tuple = ()
    kind: str = SMOOTH
    name: str = "custom"
    params: dict = field(default_factory=dict)
    tie_break: str = "left"
    constants: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.branches:
            raise ConfigError("a map needs at least one branch")
        if self.kind not in (SMOOTH, CUSP):
            raise ConfigError(f"unknown map kind {self.kind!r}")
        if self.tie_break not in ("left", "right"):
            raise ConfigError("tie_break must be 'left' or 'right'")
        prev = 0.0
        for b in self.branches:
            if not b.left < b.right:
                raise ConfigError(f"degenerate branch [{b.left}, {b.right}]")
            if abs(b.left - prev) > _EDGE_TOL:
                raise ConfigError("branch domains must tile [0, 1] left to right")
            prev = b.right
        if abs(prev - 1.0) > _EDGE_TOL:
            raise ConfigError("branch domains must end at 1")

    # -- structure ---------------------------------------------------------
    @property
    def n_branches(self):
        return len(self.branches)

    @property
    def breakpoints(self):
        """Interior branch endpoints, ascending."""
        return np.array([b.right for b in self.branches[:-1]])

    @property
    def is_full_branch(self):
        """True when every branch maps onto ``[0, 1]``."""
        for b in self.branches:
            ends = b.func(np.array([b.left, b.right]))
            if abs(min(ends)) > 1e-12 or abs(max(ends) - 1.0) > 1e-12:
                return False
        return True

    def __repr__(self):
        extra = ", ".join(f"{k}={v}" for k, v in self.params.items())
        return f"IntervalMap({self.name}{', ' + extra if extra else ''})"

    # -- pointwise evaluation ---------------------------------------------
    def branch_index(self, x):
        """Index of the branch owning ``x`` (vectorised, honours ``tie_break``)."""
        xa = np.asarray(x, dtype=float)
        if np.any(~np.isfinite(xa)) or np.any(xa < -_EDGE_TOL) or np.any(xa > 1.0 + _EDGE_TOL):
            raise DomainError(f"point outside [0, 1]: {x}")
        side = "left" if self.tie_break == "left" else "right"
        idx = np.searchsorted(self.breakpoints, xa, side=side)
        return idx if idx.ndim else int(idx)

    def _dispatch(self, x, attr):
        xa = np.asarray(x, dtype=float)
        idx = np.atleast_1d(self.branch_index(xa))
        flat = np.atleast_1d(xa).astype(float)
        out = np.empty_like(flat)
        with np.errstate(divide="ignore", invalid="ignore"):
            for j, b in enumerate(self.branches):
                m = idx == j
                if np.any(m):
                    out[m] = getattr(b, attr)(flat[m])
        return out.reshape(xa.shape) if xa.ndim else float(out[0])

    def __call__(self, x):
        return self._dispatch(x, "func")

    def derivative(self, x):
        return self._dispatch(x, "deriv")

    def log_deriv(self, x):
        """``log|Df(x)|``: ``-inf`` at zeros of ``Df``, ``+inf`` at singular cusps."""
        d = self.derivative(x)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(d)) if np.ndim(d) else float(np.log(abs(d)) if d != 0 else -np.inf)

    # -- itinerary-driven evaluation ---------------------------------------
    def compose(self, x, itineraries, with_log_deriv=False):
        """Apply branches along per-point itineraries.

        ``itineraries`` has shape ``(len(x), k)`` with branch indices or
        :data:`SKIP`. Each point follows its own symbols regardless of which
        branch it currently sits in; this is how cylinder endpoints are pushed
        forward without tie-break ambiguity.
        """
        y = np.array(x, dtype=float, copy=True)
        itin = np.asarray(itineraries)
        if itin.ndim == 1:
            itin = np.broadcast_to(itin, (y.size,) + itin.shape)
        acc = np.zeros_like(y) if with_log_deriv else None
        with np.errstate(divide="ignore", invalid="ignore"):
            for k in range(itin.shape[1]):
                col = itin[:, k]
                for j, b in enumerate(self.branches):
                    m = col == j
                    if not np.any(m):
                        continue
                    if with_log_deriv:
                        acc[m] += np.log(np.abs(b.deriv(y[m])))
                    y[m] = b.func(y[m])
        return (y, acc) if with_log_deriv else y

    def orbit(self, x, n):
        """Forward orbit ``x, f(x), ..., f^n(x)`` of a single point."""
        out = [float(x)]
        for _ in range(n):
            out.append(float(self(out[-1])))
        return np.array(out)


# -- built-in families ------------------------------------------------------

def _linear(a, b):
    return (lambda x: a * x + b), (lambda x: np.full(np.shape(x), float(a)))


def tent():
    """Full tent map: slope ``+-2`` with turning point ``1/2``."""
    f0, d0 = _linear(2.0, 0.0)
    f1, d1 = _linear(-2.0, 2.0)
    log2 = math.log(2.0)
    return IntervalMap(
        branches=(Branch(0.0, 0.5, f0, d0, True, "2*x"), Branch(0.5, 1.0, f1, d1, False, "2-2*x")),
        critical=(),
        kind=CUSP,
        name="tent",
        constants={
            "h_top": log2,
            "lambda_min": log2,
            "lambda_max": log2,
            "pressure": lambda t: (1.0 - t) * log2,
        },
    )


def doubling():
    """``x -> 2x mod 1`` with half-open branches ``[0, 1/2)``, ``[1/2, 1)``."""
    f0, d0 = _linear(2.0, 0.0)
    f1, d1 = _linear(2.0, -1.0)
    log2 = math.log(2.0)
    return IntervalMap(
        branches=(Branch(0.0, 0.5, f0, d0, True, "2*x"), Branch(0.5, 1.0, f1, d1, True, "2*x-1")),
        critical=(),
        kind=CUSP,
        name="doubling",
        tie_break="right",
        constants={
            "h_top": log2,
            "lambda_min": log2,
            "lambda_max": log2,
            "pressure": lambda t: (1.0 - t) * log2,
        },
    )


def quadratic(gamma):
    """Logistic family ``x -> gamma x (1 - x)``, ``0 < gamma <= 4``."""
    gamma = float(gamma)
    if not 0.0 < gamma <= 4.0:
        raise ConfigError("quadratic parameter must lie in (0, 4]")

    def f(x):
        return gamma * x * (1.0 - x)

    def df(x):
        return gamma * (1.0 - 2.0 * x)

    text = f"{gamma!r}*x*(1-x)"
    return IntervalMap(
        branches=(Branch(0.0, 0.5, f, df, True, text), Branch(0.5, 1.0, f, df, False, text)),
        critical=((0.5, 2.0),),
        kind=SMOOTH,
        name="quadratic",
        params={"gamma": gamma},
    )


def _chebyshev_pressure(t):
    log2 = math.log(2.0)
    return (1.0 - t) * log2 if t >= -1.0 else -t * math.log(4.0)


def chebyshev():
    """``x -> 4x(1-x)``, the quadratic map with preperiodic critical orbit."""
    base = quadratic(4.0)
    return IntervalMap(
        branches=base.branches,
        critical=base.critical,
        kind=SMOOTH,
        name="chebyshev",
        constants={
            "h_top": math.log(2.0),
            "lambda_min": math.log(2.0),
            "lambda_max": math.log(4.0),
            "pressure": _chebyshev_pressure,
            "t_minus": -1.0,
        },
    )


def lorenz(rho=1.5):
    """Contracting Lorenz-like cusp map with two full increasing branches.

    ``1 - (1 - 2x)^rho`` on ``[0, 1/2]`` and ``(2x - 1)^rho`` on ``[1/2, 1]``:
    the one-sided derivatives at the discontinuity vanish for ``rho > 1`` and
    blow up for ``rho < 1``.
    """
    rho = float(rho)
    if rho <= 0.0 or rho == 1.0:
        raise ConfigError("lorenz exponent must be positive and different from 1")

    def f0(x):
        return 1.0 - np.power(np.clip(1.0 - 2.0 * x, 0.0, None), rho)

    def d0(x):
        return 2.0 * rho * np.power(np.clip(1.0 - 2.0 * x, 0.0, None), rho - 1.0)

    def f1(x):
        return np.power(np.clip(2.0 * x - 1.0, 0.0, None), rho)

    def d1(x):
        return 2.0 * rho * np.power(np.clip(2.0 * x - 1.0, 0.0, None), rho - 1.0)

    return IntervalMap(
        branches=(
            Branch(0.0, 0.5, f0, d0, True, f"1-(1-2*x)^{rho}"),
            Branch(0.5, 1.0, f1, d1, True, f"(2*x-1)^{rho}"),
        ),
        critical=((0.5, rho),),
        kind=CUSP,
        name="lorenz",
        params={"rho": rho},
        constants={"h_top": math.log(2.0)},
    )


BUILTINS = {
    "tent": tent,
    "doubling": doubling,
    "chebyshev": chebyshev,
    "quadratic": quadratic,
    "lorenz": lorenz,
}


def builtin(name, **params):
    """Construct a built-in map by family name."""
    try:
        factory = BUILTINS[name]
    except KeyError:
        raise ConfigError(f"unknown map family {name!r}; choose from {sorted(BUILTINS)}") from None
    try:
        return factory(**params)
    except TypeError as exc:
        raise ConfigError(f"bad parameters for {name}: {exc}") from None


def from_expressions(pieces, critical=(), kind=SMOOTH, name="custom", tie_break="left"):
    """Build a map from ``[(left, right, expression), ...]``.

    Monotonicity of every piece is checked on a sampled grid.
    """
    branches = []
    for left, right, text in pieces:
        f, df = expr.compile_expression(text)
        left, right = float(left), float(right)
        xs = np.linspace(left, right, 257)
        with np.errstate(all="ignore"):
            ys = f(xs)
        if not np.all(np.isfinite(ys)):
            raise ConfigError(f"expression {text!r} is not finite on [{left}, {right}]")
        steps = np.diff(ys)
        if np.all(steps > 0):
            inc = True
        elif np.all(steps < 0):
            inc = False
        else:
            raise ConfigError(f"expression {text!r} is not strictly monotone on [{left}, {right}]")
        if ys.min() < -1e-9 or ys.max() > 1.0 + 1e-9:
            raise ConfigError(f"expression {text!r} leaves [0, 1] on [{left}, {right}]")
        branches.append(Branch(left, right, f, df, inc, text))
    crit = tuple((float(c), float(o)) for c, o in critical)
    return IntervalMap(branches=tuple(branches), critical=crit, kind=kind, name=name, tie_break=tie_break)


def eval_map(fmap, x):
    """Evaluate ``fmap`` at ``x``; shared endpoints follow the map's tie-break."""
    return fmap(x)


def log_deriv(fmap, x):
    return fmap.log_deriv(x)


def branch_partition(fmap):
    """The depth-1 cylinder partition: maximal intervals of monotonicity."""
    from .cylinders import initial_partition

    return initial_partition(fmap, 1)


# -- class F diagnostics ----------------------------------------------------

def critical_order_estimate(fmap, c, offsets=(1e-4, 1e-5, 1e-6)):
    """Log-log slope of ``|f(x) - f(c)|`` against ``|x - c|`` on each side of ``c``.

    Returns the list of one-sided slope estimates (one per side that lies in
    ``[0, 1]``), each computed between consecutive offsets.
    """
    slopes = []
    offs = np.asarray(offsets, dtype=float)
    for side in (-1.0, 1.0):
        xs = c + side * offs
        if np.any(xs < 0.0) or np.any(xs > 1.0):
            continue
        j = int(np.searchsorted(fmap.breakpoints, c + side * 1e-9))
        b = fmap.branches[j]
        fc = float(b.func(np.array([c]))[0])
        with np.errstate(divide="ignore"):
            logs = np.log(np.abs(b.func(xs) - fc))
        slopes.extend(np.diff(logs) / np.diff(np.log(offs)))
    return slopes


@dataclass
class ConditionResult:
    status: str  # pass | fail | heuristic-pass | not-applicable
    detail: str


@dataclass
class ClassFReport:
    map_name: str
    depth: int
    conditions: dict
    in_class: bool
    caveats: list

    def summary(self):
        lines = [f"class-F check for {self.map_name} (depth {self.depth})"]
        for key, res in self.conditions.items():
            lines.append(f"  {key}) {res.status}: {res.detail}")
        return "\n".join(lines)


def _schwarzian_convex(fmap, samples=2001, tol=1e-9):
    worst = 0.0
    for b in fmap.branches:
        xs = np.linspace(b.left, b.right, samples)[1:-1]
        with np.errstate(divide="ignore"):
            g = 1.0 / np.sqrt(np.abs(b.deriv(xs)))
        ok = np.isfinite(g)
        g, xs = g[ok], xs[ok]
        if g.size < 3:
            continue
        defect = g[1:-1] - 0.5 * (g[:-2] + g[2:])
        scale = np.maximum(1.0, np.abs(g[1:-1]))
        worst = max(worst, float(np.max(defect / scale)))
    return worst <= tol, worst


def _transitivity_heuristic(fmap, n_iter=20000, bins=40, seed=0.1234567891):
    core_lo, core_hi = 0.0, 1.0
    if fmap.critical:
        values = []
        for c, _ in fmap.critical:
            orb = fmap.orbit(c, 2)
            values.extend(orb[1:])
        core_lo, core_hi = min(values), max(values)
        if core_hi - core_lo < 1e-9:
            return False, "critical orbit collapses"
    x = seed * (core_hi - core_lo) + core_lo
    hits = np.zeros(bins, dtype=int)
    for _ in range(n_iter):
        x = float(fmap(x))
        k = int((x - core_lo) / (core_hi - core_lo) * bins)
        if 0 <= k < bins:
            hits[k] += 1
    missing = int(np.sum(hits == 0))
    return missing == 0, f"orbit of length {n_iter} visits {bins - missing}/{bins} bins of [{core_lo:.6g}, {core_hi:.6g}]"


def check_class_F(fmap, depth, collision_tol=1e-10):
    """Finite-depth, sampled check of the class-F conditions a) to d).

    Condition c) (transitivity) is heuristic and d) (no critical orbit
    collisions) can only be falsified at finite depth.
    """
    if depth < 1:
        raise ValueError("depth must be >= 1")
    conds = {}
    caveats = ["d) is only falsifiable at finite depth; a pass means no collision up to the given depth",
               "c) is tested heuristically by orbit density"]
    nonflat = [(c, o) for c, o in fmap.critical if 1.0 < o < math.inf]
    if fmap.kind != SMOOTH or not nonflat:
        conds["a"] = ConditionResult("fail", "no critical point with order > 1; classified cusp-class")
        conds["b"] = ConditionResult("not-applicable", "cusp-class map")
        conds["c"] = ConditionResult("not-applicable", "cusp-class map")
        conds["d"] = ConditionResult("not-applicable", "cusp-class map")
        return ClassFReport(fmap.name, depth, conds, False, caveats)

    bad = []
    for c, order in fmap.critical:
        est = critical_order_estimate(fmap, c)
        if not est or max(abs(s - order) for s in est) > 0.01 * order:
            bad.append(f"c={c}: estimates {np.round(est, 4).tolist()} vs order {order}")
        if abs(fmap.derivative(c)) > 1e-9:
            bad.append(f"c={c}: Df(c) != 0")
    conds["a"] = ConditionResult("fail" if bad else "pass",
                                 "; ".join(bad) or f"{len(fmap.critical)} non-flat critical point(s)")

    ok, worst = _schwarzian_convex(fmap)
    conds["b"] = ConditionResult("pass" if ok else "fail",
                                 f"max relative midpoint-convexity defect of 1/sqrt|Df| = {worst:.3g}")

    ok, detail = _transitivity_heuristic(fmap)
    conds["c"] = ConditionResult("heuristic-pass" if ok else "fail", detail)

    orbits = [(k, fmap.orbit(c, depth)) for k, (c, _) in enumerate(fmap.critical)]
    collisions = []
    for a, orb_a in orbits:
        for b, orb_b in orbits:
            for n in range(depth + 1):
                for m in range(depth + 1):
                    if n == m or (a, n) >= (b, m):
                        continue
                    if abs(orb_a[n] - orb_b[m]) < collision_tol:
                        collisions.append((a, n, b, m))
    if collisions:
        a, n, b, m = collisions[0]
        conds["d"] = ConditionResult(
            "fail", f"f^{n}(c{a}) = f^{m}(c{b}) = {orbits[a][1][n]:.12g} ({len(collisions)} collision(s))")
    else:
        conds["d"] = ConditionResult("pass", f"no collision among f^n(Cr), n <= {depth}")
    in_class = all(r.status in ("pass", "heuristic-pass") for r in conds.values())
    return ClassFReport(fmap.name, depth, conds, in_class, caveats)
