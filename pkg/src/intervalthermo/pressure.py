"""Pressure function ``p(t) = P(-t log|Df|)`` and its analysis.

Two independent routes:

* periodic: ratio estimator on ``sum_{f^n x = x} |Df^n(x)|^{-t}``;
* induced: the root ``q`` of ``P^G(-t log|DF| - q tau) = 0`` on a first-return
  scheme, found by bisection.

A third, one-sided ingredient is the periodic-orbit lower bound
``max_orbit (-t lambda_orbit)`` (Dirac measures on periodic orbits), which
takes over where no inducing scheme sees the equilibrium state.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
import functools
import math

import numpy as np
from scipy import optimize

from . import cylinders
from .errors import BracketError, PreconditionError, StructuralError, ThermoError
from .hofbauer import build_tower, choose_base, first_return_scheme
from .inducing import InducedMeasure, abramov, estimate_distortion, induced_potential
from .numerics import log_sum_exp
from .shift import GibbsCheck, ShiftSpace, gibbs_measure

ROOT_XTOL = 1e-13


@dataclass
class PointEstimate:
    value: float
    error: float
    method: str
    flags: list = field(default_factory=list)
    diagnostics: dict = field(default_factory=dict)


# -- periodic route ------------------------------------------------------------

def _log_z(fmap, t, n):
    spec = cylinders.periodic_spectrum(fmap, n)
    lm = spec.log_multipliers
    ok = np.isfinite(lm)
    if not np.any(ok):
        raise StructuralError(f"no periodic points of period {n}")
    return float(log_sum_exp(-t * lm[ok])), int(np.count_nonzero(~ok))


def pressure_periodic(fmap, t, n=12):
    """Ratio estimator ``log Z_n - log Z_{n-1}`` with ``Z_n = sum |Df^n|^{-t}``.

    The error bar extrapolates the last change of the ratio as a geometric
    tail, ``|r_n - r_{n-1}| / (1 - rho)`` with ``rho`` the contraction of the
    last two changes (plain ``|r_n - r_{n-1}|`` when they do not contract).
    """
    if n < 4:
        raise ValueError("need n >= 4 for an error bar")
    lz = []
    skipped = 0
    for m in range(n - 3, n + 1):
        v, s = _log_z(fmap, t, m)
        lz.append(v)
        skipped += s
    r = np.diff(lz)
    d0, d1 = abs(r[1] - r[0]), abs(r[2] - r[1])
    err = d1
    if 0.0 < d1 < d0:
        err = d1 / (1.0 - d1 / d0)
    flags = ["critical-periodic-points-skipped"] if skipped else []
    return PointEstimate(float(r[-1]), float(err), "periodic", flags, {"n": n, "log_Z": lz})


def periodic_lambda(fmap, t, n):
    """Lyapunov exponent of the periodic-point weights ``|Df^n|^{-t}`` at depth ``n``."""
    lm = cylinders.periodic_spectrum(fmap, n).log_multipliers
    lm = lm[np.isfinite(lm)]
    w = np.exp(-t * lm - log_sum_exp(-t * lm))
    return float(np.dot(w, lm) / n)


@dataclass(frozen=True)
class OrbitBound:
    """Extreme orbit Lyapunov exponents among periodic points of period ``<= n``."""

    lam_min: float
    lam_max: float
    n: int

    def __call__(self, t):
        return max(-t * self.lam_min, -t * self.lam_max)

    def lam_at(self, t):
        return self.lam_max if -t * self.lam_max >= -t * self.lam_min else self.lam_min


def orbit_bound(fmap, n=8):
    lams = []
    for m in range(1, n + 1):
        lm = cylinders.periodic_spectrum(fmap, m).log_multipliers
        lm = lm[np.isfinite(lm)]
        lams.extend(lm / m)
    if not lams:
        raise StructuralError("no periodic orbits")
    return OrbitBound(float(min(lams)), float(max(lams)), n)


# -- induced route ---------------------------------------------------------------

@functools.lru_cache(maxsize=32)
def _branch_data(scheme):
    logdf = scheme.fixed_point_log_dF()
    return logdf, scheme.tau.astype(float)


def _tail_ratio(terms, tau, T, rtol=1e-6):
    """Common ratio of the per-``tau`` weight sums over the last three levels, or None."""
    if T < 4:
        return None
    W = []
    for k in (T - 2, T - 1, T):
        m = tau == k
        if not np.any(m):
            return None
        W.append(log_sum_exp(terms[m]))
    r1, r2 = W[1] - W[0], W[2] - W[1]
    if abs(r1 - r2) > rtol * max(1.0, abs(r2)) or r2 >= 0.0:
        return None
    return W[2], r2


def _root_function(t, logdf, tau, T, extrapolate):
    def g(q):
        terms = -t * logdf - q * tau
        total = log_sum_exp(terms)
        if extrapolate:
            tail = _tail_ratio(terms, tau, T)
            if tail is not None:
                lw, lr = tail
                # sum_{k > T} W_T r^{k-T} = W_T r / (1 - r)
                extra = lw + lr - math.log1p(-math.exp(lr))
                total = np.logaddexp(total, extra)
        return float(total)
    return g


def _solve(g, lo, hi, max_expand=60):
    glo, ghi = g(lo), g(hi)
    width = max(1.0, hi - lo)
    n = 0
    while glo < 0.0 and n < max_expand:
        lo -= width
        width *= 2
        glo = g(lo)
        n += 1
    while ghi > 0.0 and n < max_expand:
        hi += width
        width *= 2
        ghi = g(hi)
        n += 1
    if not (glo >= 0.0 >= ghi):
        raise BracketError(f"zero-pressure root not bracketed in [{lo}, {hi}]")
    if glo == 0.0:
        return lo, (lo, hi)
    if ghi == 0.0:
        return hi, (lo, hi)
    return optimize.bisect(g, lo, hi, xtol=ROOT_XTOL, rtol=4 * np.finfo(float).eps, maxiter=400), (lo, hi)


def _initial_bracket(fmap, t, logdf, tau):
    free = (-t * logdf) / tau
    lo = float(np.min(free))
    h_top = fmap.constants.get("h_top", math.log(fmap.n_branches))
    xs = np.linspace(0.0, 1.0, 1025)
    ld = np.abs(fmap.log_deriv(xs))
    slope = float(np.max(ld[np.isfinite(ld)]))
    hi = h_top + abs(t) * slope
    if hi <= lo:
        hi = lo + 1.0
    return lo, hi


def pressure_induced(fmap, t, scheme, extrapolate=True, sensitivity_tol=1e-6, tail_threshold=1e-3):
    """Root ``p`` of ``q -> P^G(-t log|DF| - q tau) = 0`` on ``scheme``.

    On a full shift with depth-one table the Gurevich pressure is the log-sum
    of branch weights, so the root solves ``sum_i |DF_i|^{-t} e^{-q tau_i} = 1``.
    When the per-return-time weight sums are geometric over the last levels
    the tail beyond ``T_max`` is summed in closed form (flag
    ``tail-extrapolated``). Sensitivity is measured against the scheme cut at
    ``T_max / 2``.
    """
    if scheme.fmap is not fmap:
        raise PreconditionError("scheme was built for a different map")
    if scheme.n_branches == 0:
        raise StructuralError("scheme has no branches")
    logdf, tau = _branch_data(scheme)
    T = int(tau.max())
    flags = []
    lo, hi = _initial_bracket(fmap, t, logdf, tau)
    g = _root_function(t, logdf, tau, T, extrapolate)
    p, bracket = _solve(g, lo, hi)
    extrapolated = extrapolate and _tail_ratio(-t * logdf - p * tau, tau, T) is not None
    if extrapolated:
        flags.append("tail-extrapolated")

    half = max(1, T // 2)
    keep = tau <= half
    sens = math.nan
    if np.any(keep) and half < T:
        g_half = _root_function(t, logdf[keep], tau[keep], half, extrapolate)
        try:
            p_half, _ = _solve(g_half, *_initial_bracket(fmap, t, logdf[keep], tau[keep]))
            sens = abs(p - p_half)
        except BracketError:
            sens = math.inf
    if not sens <= sensitivity_tol:
        flags.append("truncation-sensitive")

    terms = -t * logdf - p * tau
    w = np.exp(terms - log_sum_exp(terms))
    tail_mass = float(np.sum(w[tau > half]))
    mean_tau = float(np.dot(w, tau))
    if tail_mass > tail_threshold and not extrapolated and "truncation-sensitive" in flags:
        flags.append("tail-dominated")
    err = (sens if math.isfinite(sens) else abs(p)) + ROOT_XTOL
    diag = {"bracket": bracket, "sensitivity": sens, "tail_mass": tail_mass, "mean_tau": mean_tau,
            "T_max": T, "n_branches": int(tau.size)}
    return PointEstimate(float(p), float(err), "induced", flags, diag)


def induced_lambda(scheme, t, p):
    """``lambda(mu_t)`` by Abramov from the induced Gibbs weights at the root."""
    logdf, tau = _branch_data(scheme)
    terms = -t * logdf - p * tau
    w = np.exp(terms - log_sum_exp(terms))
    return float(np.dot(w, logdf) / np.dot(w, tau))


# -- scheme construction -----------------------------------------------------------

def default_scheme(fmap, T_max=30, R=12, distortion_samples=16):
    """First-return scheme on the tower with an estimated distortion bound."""
    tower = build_tower(fmap, 0 if fmap.is_full_branch else R)
    choice = choose_base(tower)
    scheme = first_return_scheme(tower, choice, T_max)
    if scheme.n_branches == 0:
        raise StructuralError("first-return scheme is empty")
    dist = estimate_distortion(fmap, scheme, samples=distortion_samples)
    return scheme.with_K(dist.K), tower, choice, dist


# -- the curve ----------------------------------------------------------------------

@dataclass
class CurveConfig:
    depth: int = 12
    T_max: int = 30
    R: int = 12
    orbit_period: int = 8
    threads: int = 1
    kink_factor: float = 3.0
    agreement_floor: float = 1e-9
    acip_tol: float = 1e-2
    slope_tol: float = 1e-3


@dataclass
class PressureCurve:
    map_name: str
    t: np.ndarray
    p: np.ndarray
    p_err: np.ndarray
    method: list
    lam: np.ndarray
    entropy: np.ndarray
    flags: list
    Dminus: np.ndarray = None
    Dplus: np.ndarray = None
    Dminus_err: np.ndarray = None
    Dplus_err: np.ndarray = None
    diagnostics: dict = field(default_factory=dict)

    def __len__(self):
        return self.t.size

    @property
    def failed(self):
        return [i for i, f in enumerate(self.flags) if any(s.startswith("failed") for s in f)]


def _point(fmap, t, cfg, scheme, bound, markov):
    flags = []
    per = None
    try:
        per = pressure_periodic(fmap, t, cfg.depth)
    except ThermoError as exc:
        flags.append(f"periodic-failed: {exc}")
    ind = None
    if scheme is not None and (markov or t < 1.0):
        try:
            ind = pressure_induced(fmap, t, scheme)
        except ThermoError as exc:
            flags.append(f"induced-failed: {exc}")
    b = bound(t)
    b_lam = bound.lam_at(t)

    if ind is not None and "tail-dominated" not in ind.flags:
        flags.extend(ind.flags)
        if b > ind.value + ind.error:
            value, err, method, lam = b, ind.error, "orbit", b_lam
            flags.append("orbit-dominated")
        else:
            value, err, method = ind.value, ind.error, "induced"
            lam = induced_lambda(scheme, t, ind.value)
    elif per is not None:
        if ind is not None:
            flags.extend(ind.flags)
        if b > per.value + per.error:
            value, err, method, lam = b, per.error, "orbit", b_lam
            flags.append("orbit-dominated")
        else:
            value, err, method = per.value, per.error, "periodic"
            lam = periodic_lambda(fmap, t, cfg.depth)
    else:
        return math.nan, math.nan, "none", math.nan, math.nan, flags + ["failed"]
    if per is not None and method != "periodic":
        if abs(per.value - value) > per.error + err + cfg.agreement_floor:
            flags.append("method-disagreement")
    h = value + t * lam
    if method == "orbit":
        h = 0.0
    return value, err, method, lam, h, sorted(set(flags))


def pressure_curve(fmap, t_grid, config=None):
    """Pressure on an ascending grid; per-point failures are recorded, not raised."""
    cfg = config or CurveConfig()
    t = np.asarray(t_grid, dtype=float)
    if t.size == 0:
        raise ValueError("empty grid")
    if np.any(np.diff(t) <= 0):
        raise ValueError("grid must be strictly ascending")
    markov = fmap.is_full_branch
    diag = {}
    # shared caches are filled before the parallel section
    for m in range(1, max(cfg.depth, cfg.orbit_period) + 1):
        cylinders.periodic_spectrum(fmap, m)
    bound = orbit_bound(fmap, min(cfg.orbit_period, cfg.depth))
    scheme = None
    try:
        scheme, tower, choice, dist = default_scheme(fmap, cfg.T_max, cfg.R)
        _branch_data(scheme)
        diag["scheme"] = {"X": list(scheme.X), "branches": scheme.n_branches, "T_max": scheme.T_max,
                          "K": scheme.K, "escaped_mass": scheme.escaped_mass, "base": choice.method,
                          "tower_domains": len(tower), "distortion_suspect": dist.suspect}
    except ThermoError as exc:
        diag["scheme"] = {"error": str(exc)}
    diag["orbit_bound"] = {"lambda_min": bound.lam_min, "lambda_max": bound.lam_max, "period": bound.n}

    def work(tv):
        try:
            return _point(fmap, float(tv), cfg, scheme, bound, markov)
        except Exception as exc:  # recorded per point
            return math.nan, math.nan, "none", math.nan, math.nan, [f"failed: {exc}"]

    threads = cfg.threads if cfg.threads and cfg.threads > 0 else None
    if threads == 1:
        results = [work(tv) for tv in t]
    else:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            results = list(ex.map(work, t))
    p, err, method, lam, h, flags = zip(*results)
    curve = PressureCurve(fmap.name, t, np.array(p), np.array(err), list(method), np.array(lam),
                          np.array(h), [list(f) for f in flags], diagnostics=diag)
    if len(curve) >= 3:
        derivative_analysis(curve)
    return curve


def curve_from_values(t, p, p_err=None, name="synthetic"):
    """Wrap given values as a curve (used for synthetic inputs and tests)."""
    t = np.asarray(t, dtype=float)
    p = np.asarray(p, dtype=float)
    err = np.zeros_like(p) if p_err is None else np.asarray(p_err, dtype=float)
    curve = PressureCurve(name, t, p, err, ["given"] * t.size, np.full(t.size, np.nan),
                          np.full(t.size, np.nan), [[] for _ in t])
    if t.size >= 3:
        derivative_analysis(curve)
    return curve


# -- curve analysis -----------------------------------------------------------------

def derivative_analysis(curve):
    """One-sided derivatives with one Richardson step.

    ``D^-p(t_i)`` extrapolates the backward quotients over ``t_{i-1}`` and
    ``t_{i-2}``; ``D^+`` mirrors this. The error bar is the size of the
    Richardson correction plus the propagated pressure error.
    """
    t, p, e = curve.t, curve.p, curve.p_err
    n = t.size
    if n < 3:
        raise ValueError("derivative analysis needs at least 3 grid points")
    Dm = np.full(n, np.nan)
    Dp = np.full(n, np.nan)
    Em = np.full(n, np.nan)
    Ep = np.full(n, np.nan)
    ee = np.nan_to_num(e, nan=0.0)
    for i in range(n):
        if i >= 1:
            h1 = t[i] - t[i - 1]
            d1 = (p[i] - p[i - 1]) / h1
            noise = (ee[i] + ee[i - 1]) / h1
            if i >= 2:
                h2 = t[i] - t[i - 2]
                d2 = (p[i] - p[i - 2]) / h2
                # first-order error terms cancel for the combination below
                r = (h2 * d1 - h1 * d2) / (h2 - h1)
                Dm[i], Em[i] = r, abs(r - d1) + noise
            else:
                Dm[i], Em[i] = d1, math.inf
        if i <= n - 2:
            h1 = t[i + 1] - t[i]
            d1 = (p[i + 1] - p[i]) / h1
            noise = (ee[i] + ee[i + 1]) / h1
            if i <= n - 3:
                h2 = t[i + 2] - t[i]
                d2 = (p[i + 2] - p[i]) / h2
                r = (h2 * d1 - h1 * d2) / (h2 - h1)
                Dp[i], Ep[i] = r, abs(r - d1) + noise
            else:
                Dp[i], Ep[i] = d1, math.inf
    curve.Dminus, curve.Dplus, curve.Dminus_err, curve.Dplus_err = Dm, Dp, Em, Ep
    return Dm, Dp


@dataclass
class TransitionReport:
    kinks: list
    t_minus: float | None
    t_plus: float | None
    t_minus_note: str
    t_plus_note: str
    lambda_m: float
    lambda_M: float
    lambda_m_stable: bool
    lambda_M_stable: bool
    acip: str
    maximizing: dict

    def to_dict(self):
        return {
            "kinks": self.kinks,
            "t_minus": self.t_minus,
            "t_plus": self.t_plus,
            "t_minus_note": self.t_minus_note,
            "t_plus_note": self.t_plus_note,
            "lambda_m": self.lambda_m,
            "lambda_M": self.lambda_M,
            "lambda_m_stable": self.lambda_m_stable,
            "lambda_M_stable": self.lambda_M_stable,
            "acip": self.acip,
            "maximizing": self.maximizing,
        }


def _end_slope(t, p, end, tol):
    idx = [0, 1, 2] if end == "left" else [-3, -2, -1]
    tt, pp = t[idx], p[idx]
    s = np.diff(pp) / np.diff(tt)
    slope = s[0] if end == "left" else s[-1]
    return float(slope), bool(abs(s[1] - s[0]) <= tol)


def maximizing_measure_probe(curve, slope_tol=1e-3):
    """Slope at the negative end (``-lambda_M``) and the entropy intercept ``p + t lambda_M``."""
    if len(curve) < 3:
        raise ValueError("need at least 3 grid points")
    slope, stable = _end_slope(curve.t, curve.p, "left", slope_tol)
    lam_M = -slope
    intercept = float(curve.p[0] + curve.t[0] * lam_M)
    return {"lambda_M": lam_M, "intercept": intercept, "stable": stable,
            "flag": "" if stable else "slope not stabilised"}


def _crossing(t, gap, tol, first_positive):
    """Locate where ``gap`` leaves zero (rising edge) by linear extrapolation."""
    pos = gap > tol
    if first_positive:
        if pos[0]:
            return None, "not attained on grid (below range)"
        if not pos.any():
            return None, "not attained on grid (above range)"
        i = int(np.argmax(pos))
        j = min(i + 1, t.size - 1)
        if j > i and pos[j]:
            s = (gap[j] - gap[i]) / (t[j] - t[i])
            if s > 0:
                return float(t[i] - gap[i] / s), ""
        return float(t[i]), "grid resolution"
    if pos[-1]:
        return None, "not attained on grid (above range)"
    if not pos.any():
        return None, "not attained on grid (below range)"
    i = int(np.flatnonzero(pos)[-1])
    j = max(i - 1, 0)
    if j < i and pos[j]:
        s = (gap[i] - gap[j]) / (t[i] - t[j])
        if s < 0:
            return float(t[i] - gap[i] / s), ""
    return float(t[i]), "grid resolution"


def detect_transitions(curve, kink_threshold=None, kink_factor=3.0, slope_tol=1e-3, acip_tol=1e-2):
    """Kinks, ``t^±``, ``lambda_m``, ``lambda_M`` and the acip verdict."""
    if curve.Dminus is None:
        derivative_analysis(curve)
    t, p = curve.t, curve.p
    gap = curve.Dplus - curve.Dminus
    err = curve.Dminus_err + curve.Dplus_err
    thr = kink_factor * err if kink_threshold is None else np.maximum(kink_threshold, kink_factor * err)
    cand = np.isfinite(gap) & (np.abs(gap) > thr)
    kinks = []
    for i in np.flatnonzero(cand):
        lo, hi = max(0, i - 1), min(t.size, i + 2)
        neigh = np.abs(np.nan_to_num(gap[lo:hi], nan=0.0))
        if abs(gap[i]) < np.max(neigh):
            continue
        kinks.append({"t": float(t[i]), "Dminus": float(curve.Dminus[i]), "Dplus": float(curve.Dplus[i]),
                      "gap": float(gap[i]), "error": float(err[i])})

    left, l_stable = _end_slope(t, p, "left", slope_tol)
    right, r_stable = _end_slope(t, p, "right", slope_tol)
    lam_M, lam_m = -left, -right
    tol_gap = np.maximum(3.0 * np.nan_to_num(curve.p_err, nan=0.0), 1e-9) + 1e-9 * np.abs(t)
    t_minus, note_m = _crossing(t, p + lam_M * t, tol_gap, first_positive=True)
    t_plus, note_p = _crossing(t, p + lam_m * t, tol_gap, first_positive=False)

    acip = "undetermined"
    at1 = np.flatnonzero(np.isclose(t, 1.0, atol=1e-12))
    if at1.size and abs(p[at1[0]]) <= acip_tol:
        i = int(at1[0])
        dm = curve.Dminus[i]
        e = curve.Dminus_err[i] if np.isfinite(curve.Dminus_err[i]) else 0.0
        if np.isfinite(dm):
            acip = "yes" if dm < -max(kink_factor * e, acip_tol) else "no"
    return TransitionReport(kinks, t_minus, t_plus, note_m, note_p, lam_m, lam_M, r_stable, l_stable, acip,
                            maximizing_measure_probe(curve, slope_tol))


def curve_shape_check(curve, conv_tol=1e-6, mono_tol=1e-9):
    """Second differences ``>= -conv_tol`` (scaled to the grid) and first differences ``<= mono_tol``."""
    t, p = curve.t, curve.p
    ok = np.isfinite(p)
    t, p = t[ok], p[ok]
    d1 = np.diff(p)
    slopes = d1 / np.diff(t)
    second = np.diff(slopes)
    return {
        "convex": bool(np.all(second >= -conv_tol)),
        "decreasing": bool(np.all(d1 <= mono_tol)),
        "min_second_difference": float(second.min()) if second.size else 0.0,
        "max_first_difference": float(d1.max()) if d1.size else 0.0,
    }


def smooth_interior(curve, report, halo=2):
    """Indices whose derivative stencil is away from the ends and from every kink."""
    n = len(curve)
    bad = np.zeros(n, bool)
    bad[:halo] = True
    bad[n - halo:] = True
    for k in report.kinks:
        i = int(np.argmin(np.abs(curve.t - k["t"])))
        bad[max(0, i - halo):i + halo + 1] = True
    return np.flatnonzero(~bad)


# -- equilibrium states --------------------------------------------------------------

@dataclass
class EquilibriumSummary:
    t: float
    p: float
    lam: float
    entropy: float
    residual: float
    mean_tau: float
    positive_entropy: bool
    cylinder_table: list
    flags: list


def equilibrium_summary(fmap, t, scheme, top=8):
    """Induced Gibbs state at the zero-pressure root; ``lambda`` and ``h`` via Abramov."""
    est = pressure_induced(fmap, t, scheme)
    pot = induced_potential(fmap, scheme, ("geometric", t, est.value))
    measure = InducedMeasure.from_potential(scheme, pot)
    logdf, _ = _branch_data(scheme)
    lam = abramov(measure, measure.integral(logdf))
    h = abramov(measure, measure.entropy())
    residual = abs(h - t * lam - est.value)
    flags = list(est.flags)
    if not math.isfinite(measure.mean_tau):
        flags.append("divergent-mean-return-time")
    order = np.argsort(-measure.weights, kind="stable")[:top]
    table = [{"branch": int(i), "left": float(scheme.left[i]), "right": float(scheme.right[i]),
              "tau": int(scheme.tau[i]), "weight": float(measure.weights[i])} for i in order]
    return EquilibriumSummary(t, est.value, lam, h, residual, measure.mean_tau, h > 0, table, flags)


def induced_gibbs_measure(fmap, scheme, t):
    """Gibbs measure of the normalised induced potential on the scheme's full shift.

    Returns ``(measure, p)``: ``p`` is the zero-pressure root and the potential
    handed to the shift module is ``Psi_t`` shifted by its residual pressure so
    that ``P^G = 0`` exactly on the finite scheme.
    """
    est = pressure_induced(fmap, t, scheme, extrapolate=False)
    pot = induced_potential(fmap, scheme, ("geometric", t, est.value))
    pot = pot.shifted(-float(log_sum_exp(pot.table)))
    return gibbs_measure(ShiftSpace.full(scheme.n_branches), pot), est.value


def gibbs_cylinder_check(fmap, scheme, measure, t, p, depth, points=3):
    """Exhaustive Gibbs-inequality check on all cylinders of the induced shift up to ``depth``.

    For every word ``w`` the ratio ``mu[w] / exp(S_n Psi(x))`` is evaluated at
    ``points`` points ``x`` of the cylinder, with the true induced potential
    ``Psi = -t log|DF| - p tau - c`` (``c`` the normalising constant used by
    the measure). Cylinder points are built by prepending inverse branches, so
    ``S_n Psi`` accumulates one branch at a time.
    """
    from .inducing import _pull_back  # shared bisection helper

    m = scheme.n_branches
    c = float(measure.potential.table[0] - (-t * _branch_data(scheme)[0][0] - p * scheme.tau[0]))
    logw = measure.potential.table  # depth-1 Bernoulli: log mu[w] = sum of these
    a, b = scheme.X
    ys = np.linspace(a, b, points)
    # level-0 state: points in X with zero Birkhoff sum and zero log-mass
    x = ys.copy()
    S = np.zeros_like(x)
    L = np.zeros_like(x)
    worst = 0.0
    for _ in range(depth):
        i = np.repeat(np.arange(m), x.size)
        xr = np.tile(x, m)
        lo, _hi = _pull_back(scheme, i, xr, xr)
        psi = -t * scheme.log_dF(lo, i) - p * scheme.tau[i] + c
        x = lo
        S = np.tile(S, m) + psi
        L = np.tile(L, m) + logw[i]
        worst = max(worst, float(np.max(np.abs(L - S))))
    return GibbsCheck(depth, measure.C, worst, worst <= math.log(measure.C) + 1e-9)
