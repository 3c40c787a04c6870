"""Truncated Hofbauer extension and first-return schemes on it.

Domains are the distinct image intervals ``f^k(C_k)``; an edge ``D -> D'``
along branch ``j`` exists when ``D' = f(D ∩ B_j)`` has non-empty interior.
Construction is a breadth-first search, so a domain's level is its graph
distance from the base ``D_0 = [0, 1]``. Only levels ``<= R`` are kept; edges
into dropped domains are remembered so stepping across them can be reported.
"""

from dataclasses import dataclass
from collections import deque
import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components, breadth_first_order

from .cylinders import periodic_spectrum
from .errors import DomainError, PreconditionError, TruncationBoundary
from .inducing import InducingScheme
from .maps import SKIP
from .numerics import bisect_monotone

DEDUP_TOL = 1e-12
MEMBER_TOL = 1e-12

_NO_EDGE = -1
_DROPPED = -2


@dataclass(frozen=True)
class TowerDomain:
    id: int
    lo: float
    hi: float
    level: int

    @property
    def interval(self):
        return (self.lo, self.hi)

    @property
    def length(self):
        return self.hi - self.lo

    def contains(self, x, tol=MEMBER_TOL):
        return self.lo - tol <= x <= self.hi + tol


class HofbauerTower:
    """The compact part ``Î_R`` of the Hofbauer extension of ``fmap``."""

    def __init__(self, fmap, R, domains, successor, transitive):
        self.fmap = fmap
        self.R = R
        self.domains = tuple(domains)
        # successor[d, j]: target id, _NO_EDGE or _DROPPED
        self.successor = successor
        self.successor.setflags(write=False)
        self.transitive = transitive
        self.transitive.setflags(write=False)

    @property
    def edges(self):
        out = []
        for d in range(len(self.domains)):
            for j in range(self.fmap.n_branches):
                t = int(self.successor[d, j])
                if t >= 0:
                    out.append((d, j, t))
        return out

    @property
    def dropped_edges(self):
        return [(int(d), int(j)) for d, j in zip(*np.nonzero(self.successor == _DROPPED))]

    @property
    def levels(self):
        return np.array([d.level for d in self.domains])

    def __len__(self):
        return len(self.domains)

    def __repr__(self):
        return f"HofbauerTower({self.fmap.name}, R={self.R}, {len(self)} domains)"

    def domain_of(self, lo, hi, tol=DEDUP_TOL):
        for d in self.domains:
            if abs(d.lo - lo) <= tol and abs(d.hi - hi) <= tol:
                return d.id
        return None

    def bfs_levels(self):
        """Graph distances from ``D_0`` recomputed on the retained graph."""
        n = len(self.domains)
        rows, cols = [], []
        for d, _, t in self.edges:
            rows.append(d)
            cols.append(t)
        G = csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(n, n))
        order, pred = breadth_first_order(G, 0, directed=True, return_predecessors=True)
        lev = np.full(n, -1)
        lev[0] = 0
        for v in order[1:]:
            lev[v] = lev[pred[v]] + 1
        return lev

    def to_edge_list(self, path=None):
        """Plain-text export: domain lines then ``src branch dst`` edge lines."""
        lines = [f"# tower of {self.fmap.name}, R={self.R}", "# domain id level lo hi transitive"]
        for d in self.domains:
            lines.append(f"domain {d.id} {d.level} {d.lo!r} {d.hi!r} {int(self.transitive[d.id])}")
        lines.append("# edge src branch dst")
        for s, j, t in self.edges:
            lines.append(f"edge {s} {j} {t}")
        for s, j in self.dropped_edges:
            lines.append(f"truncated {s} {j}")
        text = "\n".join(lines) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text


def build_tower(fmap, R):
    """Breadth-first construction of ``Î_R``."""
    if R < 0:
        raise ValueError("R must be non-negative")
    nb = fmap.n_branches
    domains = [TowerDomain(0, 0.0, 1.0, 0)]
    succ = [[_NO_EDGE] * nb]
    queue = deque([0])
    while queue:
        d = domains[queue.popleft()]
        for j, br in enumerate(fmap.branches):
            a, b = max(d.lo, br.left), min(d.hi, br.right)
            if not b > a:
                continue
            fa, fb = float(br.func(np.array([a]))[0]), float(br.func(np.array([b]))[0])
            lo, hi = max(0.0, min(fa, fb)), min(1.0, max(fa, fb))
            target = None
            for e in domains:
                if abs(e.lo - lo) <= DEDUP_TOL and abs(e.hi - hi) <= DEDUP_TOL:
                    target = e.id
                    break
            if target is None:
                if d.level + 1 > R:
                    succ[d.id][j] = _DROPPED
                    continue
                target = len(domains)
                domains.append(TowerDomain(target, lo, hi, d.level + 1))
                succ.append([_NO_EDGE] * nb)
                queue.append(target)
            succ[d.id][j] = target
    S = np.array(succ, dtype=int)
    return HofbauerTower(fmap, R, domains, S, _transitive_part(S))


def _transitive_part(S):
    """Forward closure of the largest non-trivial strongly connected component.

    At finite ``R`` this is a lower approximation of the transitive part.
    """
    n = S.shape[0]
    rows, cols = np.nonzero(S >= 0)
    G = csr_matrix((np.ones(rows.size), (rows, S[rows, cols])), shape=(n, n))
    n_comp, labels = connected_components(G, directed=True, connection="strong")
    best, best_size = None, 0
    for c in range(n_comp):
        members = np.flatnonzero(labels == c)
        nontrivial = members.size > 1 or np.any(S[members[0]] == members[0])
        if nontrivial and members.size > best_size:
            best, best_size = c, members.size
    flag = np.zeros(n, dtype=bool)
    if best is None:
        return flag
    start = np.flatnonzero(labels == best)
    flag[start] = True
    queue = deque(start.tolist())
    while queue:
        v = queue.popleft()
        for t in S[v]:
            if t >= 0 and not flag[t]:
                flag[t] = True
                queue.append(int(t))
    return flag


def step(tower, x, domain_id):
    """``f̂(x, D) = (f(x), D')``.

    Raises
    ------
    DomainError
        ``x`` is not in the domain.
    TruncationBoundary
        The edge leads above level ``R``.
    """
    d = tower.domains[domain_id]
    if not d.contains(x):
        raise DomainError(f"{x!r} is not in domain {domain_id} = [{d.lo!r}, {d.hi!r}]")
    fmap = tower.fmap
    j = fmap.branch_index(min(max(x, 0.0), 1.0))
    t = int(tower.successor[domain_id, j])
    if t == _NO_EDGE:
        # x sits on a shared endpoint whose owning branch meets D only there
        for alt in (j - 1, j + 1):
            if 0 <= alt < fmap.n_branches and tower.successor[domain_id, alt] != _NO_EDGE:
                br = fmap.branches[alt]
                if br.left - MEMBER_TOL <= x <= br.right + MEMBER_TOL:
                    j, t = alt, int(tower.successor[domain_id, alt])
                    break
    if t == _DROPPED:
        raise TruncationBoundary(domain_id, j)
    if t == _NO_EDGE:
        raise DomainError(f"no edge from domain {domain_id} at {x!r}")
    y = float(fmap.branches[j].func(np.array([x]))[0])
    return y, t


def random_lifted_points(tower, n, seed=0):
    """Uniformly chosen domains with uniform points inside them."""
    rng = np.random.default_rng(seed)
    ids = rng.integers(0, len(tower), n)
    lo = np.array([tower.domains[i].lo for i in ids])
    hi = np.array([tower.domains[i].hi for i in ids])
    return lo + (hi - lo) * rng.random(n), ids


def semiconjugacy_residuals(tower, xs, ids):
    """``|π(f̂(x̂)) - f(π(x̂))|`` for each lifted point; truncated steps are skipped."""
    res = []
    skipped = 0
    for x, d in zip(xs, ids):
        try:
            y, _ = step(tower, float(x), int(d))
        except TruncationBoundary:
            skipped += 1
            continue
        res.append(abs(y - float(tower.fmap(float(x)))))
    return np.array(res), skipped


# -- base selection ----------------------------------------------------------------

@dataclass(frozen=True)
class BaseChoice:
    domain_id: int
    X: tuple
    method: str


def _orbits(fmap, n):
    spec = periodic_spectrum(fmap, n)
    pts = list(spec.points)
    orbits = []
    used = np.zeros(len(pts), bool)
    for k, x in enumerate(pts):
        if used[k]:
            continue
        orb = fmap.orbit(x, n - 1)
        if np.min(np.abs(orb[1:] - x)) < 1e-9 if n > 1 else False:
            continue  # smaller period
        for y in orb:
            used |= np.abs(np.asarray(pts) - y) < 1e-9
        orbits.append(np.sort(orb))
    return orbits


def choose_base(tower, max_period=6, margin=0.05):
    """Pick a base interval for a first-return scheme.

    Candidates are gaps between consecutive points of one periodic orbit of
    period ``2..max_period``: the orbit of such an interval's boundary never
    enters its interior, so first returns are full branches. The widest gap
    inside a transitive domain and at least ``margin`` away from ``0`` and
    ``1`` wins. Falls back to the middle third of the widest transitive domain.
    """
    fmap = tower.fmap
    trans = [d for d in tower.domains if tower.transitive[d.id]] or list(tower.domains)
    best = None
    for n in range(2, max_period + 1):
        try:
            orbits = _orbits(fmap, n)
        except Exception:
            continue
        for orb in orbits:
            for a, b in zip(orb[:-1], orb[1:]):
                if a < margin or b > 1.0 - margin or b - a < 1e-6:
                    continue
                hosts = [d for d in trans if d.lo <= a and b <= d.hi]
                if not hosts:
                    continue
                host = max(hosts, key=lambda d: (d.length, -d.id))
                if best is None or b - a > best.X[1] - best.X[0] + 1e-12:
                    best = BaseChoice(host.id, (float(a), float(b)), f"periodic-gap(n={n})")
    if best is not None:
        return best
    host = max(trans, key=lambda d: (d.length, -d.id))
    third = host.length / 3.0
    return BaseChoice(host.id, (host.lo + third, host.hi - third), "middle-third")


# -- first-return schemes ----------------------------------------------------------

def first_return_scheme(tower, base, T_max, max_pieces=200000, cover_tol=1e-10, min_length=1e-300,
                        onto_tol=1e-10):
    """Branches of the first return of ``f̂`` to ``X̂ = (X, D)``, projected by ``π``.

    Parameters
    ----------
    base : BaseChoice or tuple ``(domain_id, (a, b))``
    T_max : int
        Largest return time explored.

    Returns
    -------
    InducingScheme
        Only returns that cover ``X`` are branches. Mass lost to partial
        returns, to the truncation of the tower and to ``tau > T_max`` is
        accounted in ``escaped_mass`` (fraction of ``|X|``) and detailed in
        ``escaped_detail``. If branches from some return time on fail to map
        onto ``X`` within ``onto_tol`` (floating-point resolution near critical
        orbits), the scheme is cut there and ``T_max`` is lowered accordingly.
    """
    if isinstance(base, BaseChoice):
        dom, (a, b) = base.domain_id, base.X
    else:
        dom, (a, b) = base
    a, b = float(a), float(b)
    D = tower.domains[dom]
    if not b > a:
        raise PreconditionError("base interval is empty")
    if a < D.lo - MEMBER_TOL or b > D.hi + MEMBER_TOL:
        raise PreconditionError(f"base [{a}, {b}] is not inside domain {dom} = [{D.lo}, {D.hi}]")
    if T_max < 1:
        raise ValueError("T_max must be >= 1")
    fmap = tower.fmap
    width = b - a
    S = tower.successor

    # live pieces: x-interval, image interval, orientation, domain, itinerary
    xl = np.array([a])
    xr = np.array([b])
    lo = np.array([a])
    hi = np.array([b])
    inc = np.array([True])
    dm = np.array([dom])
    itin = np.zeros((1, 0), dtype=np.uint8)

    out_l, out_r, out_tau, out_itin, out_inc = [], [], [], [], []
    lost = {"truncated": 0.0, "partial": 0.0, "beyond_T_max": 0.0, "resolution": 0.0, "piece_cap": 0.0}

    def pull(xl_, xr_, itin_, inc_, y):
        """x in [xl, xr] with f^k(x) = y along itin."""
        if itin_.shape[1] == 0:
            return np.asarray(y, dtype=float)

        def g(x):
            return fmap.compose(x, itin_)

        return bisect_monotone(g, xl_, xr_, y, inc_)

    for k in range(1, T_max + 1):
        n_xl, n_xr, n_lo, n_hi, n_inc, n_dm, n_itin = [], [], [], [], [], [], []
        for j, br in enumerate(fmap.branches):
            ca = np.maximum(lo, br.left)
            cb = np.minimum(hi, br.right)
            ok = cb > ca
            if not np.any(ok):
                continue
            idx = np.flatnonzero(ok)
            ca, cb = ca[idx], cb[idx]
            pinc, pit = inc[idx], itin[idx]
            # x-interval of the sub-piece (exact where the cut is at an image end)
            at_lo = ca <= lo[idx]
            at_hi = cb >= hi[idx]
            x_at_lo = np.where(pinc, xl[idx], xr[idx])
            x_at_hi = np.where(pinc, xr[idx], xl[idx])
            pa = np.where(at_lo, x_at_lo, pull(xl[idx], xr[idx], pit, pinc, ca) if not np.all(at_lo) else x_at_lo)
            pb = np.where(at_hi, x_at_hi, pull(xl[idx], xr[idx], pit, pinc, cb) if not np.all(at_hi) else x_at_hi)
            sxl, sxr = np.minimum(pa, pb), np.maximum(pa, pb)
            fa, fb = br.func(ca), br.func(cb)
            tgt = S[dm[idx], j]
            child_inc = pinc == br.increasing
            child_it = np.hstack([pit, np.full((idx.size, 1), j, np.uint8)])
            dropped = tgt == _DROPPED
            if np.any(dropped):
                lost["truncated"] += float(np.sum(sxr[dropped] - sxl[dropped]))
            keep = tgt >= 0
            n_xl.append(sxl[keep]); n_xr.append(sxr[keep])
            n_lo.append(np.clip(np.minimum(fa, fb), 0, 1)[keep]); n_hi.append(np.clip(np.maximum(fa, fb), 0, 1)[keep])
            n_inc.append(child_inc[keep]); n_dm.append(tgt[keep]); n_itin.append(child_it[keep])
        if not n_xl:
            break
        xl, xr = np.concatenate(n_xl), np.concatenate(n_xr)
        lo, hi = np.concatenate(n_lo), np.concatenate(n_hi)
        inc, dm, itin = np.concatenate(n_inc), np.concatenate(n_dm), np.concatenate(n_itin)

        # returns to the base
        at_base = dm == dom
        covers = at_base & (lo <= a + cover_tol) & (hi >= b - cover_tol)
        partial = at_base & ~covers & (np.minimum(hi, b) > np.maximum(lo, a))
        cont_lo, cont_hi, cont_idx = [], [], []
        if np.any(covers):
            ci = np.flatnonzero(covers)
            need = ~((lo[ci] >= a) & (hi[ci] <= b))
            ra = np.where(inc[ci], xl[ci], xr[ci])  # x at image lo
            rb = np.where(inc[ci], xr[ci], xl[ci])
            if np.any(need):
                ya = np.maximum(a, lo[ci])
                yb = np.minimum(b, hi[ci])
                ra = np.where(lo[ci] < a, pull(xl[ci], xr[ci], itin[ci], inc[ci], ya), ra)
                rb = np.where(hi[ci] > b, pull(xl[ci], xr[ci], itin[ci], inc[ci], yb), rb)
            out_l.append(np.minimum(ra, rb)); out_r.append(np.maximum(ra, rb))
            out_tau.append(np.full(ci.size, k)); out_inc.append(inc[ci].copy())
            out_itin.append(np.hstack([itin[ci], np.full((ci.size, T_max - k), SKIP, np.uint8)]))
            # parts of the image beyond X keep going
            for side_lo, side_hi, mask in ((lo[ci], np.full(ci.size, a), lo[ci] < a - cover_tol),
                                           (np.full(ci.size, b), hi[ci], hi[ci] > b + cover_tol)):
                if np.any(mask):
                    cont_idx.append(ci[mask]); cont_lo.append(side_lo[mask]); cont_hi.append(side_hi[mask])
        if np.any(partial):
            pi = np.flatnonzero(partial)
            ya = np.maximum(a, lo[pi])
            yb = np.minimum(b, hi[pi])
            xa = pull(xl[pi], xr[pi], itin[pi], inc[pi], ya)
            xb = pull(xl[pi], xr[pi], itin[pi], inc[pi], yb)
            lost["partial"] += float(np.sum(np.abs(xb - xa)))
            for side_lo, side_hi, mask in ((lo[pi], np.full(pi.size, a), lo[pi] < a),
                                           (np.full(pi.size, b), hi[pi], hi[pi] > b)):
                if np.any(mask):
                    cont_idx.append(pi[mask]); cont_lo.append(side_lo[mask]); cont_hi.append(side_hi[mask])
        # untouched pieces continue whole
        rest = np.flatnonzero(~(covers | partial))
        pieces = [(rest, lo[rest], hi[rest])] + list(zip(cont_idx, cont_lo, cont_hi))
        new = {key: [] for key in ("xl", "xr", "lo", "hi", "inc", "dm", "itin")}
        for idx_, plo, phi in pieces:
            if idx_.size == 0:
                continue
            # x-interval of the image sub-range [plo, phi]
            full_lo = plo <= lo[idx_]
            full_hi = phi >= hi[idx_]
            x_lo = np.where(inc[idx_], xl[idx_], xr[idx_])
            x_hi = np.where(inc[idx_], xr[idx_], xl[idx_])
            if not np.all(full_lo):
                x_lo = np.where(full_lo, x_lo, pull(xl[idx_], xr[idx_], itin[idx_], inc[idx_], plo))
            if not np.all(full_hi):
                x_hi = np.where(full_hi, x_hi, pull(xl[idx_], xr[idx_], itin[idx_], inc[idx_], phi))
            new["xl"].append(np.minimum(x_lo, x_hi)); new["xr"].append(np.maximum(x_lo, x_hi))
            new["lo"].append(plo); new["hi"].append(phi)
            new["inc"].append(inc[idx_]); new["dm"].append(dm[idx_]); new["itin"].append(itin[idx_])
        if not new["xl"]:
            xl = np.empty(0)
            break
        xl, xr = np.concatenate(new["xl"]), np.concatenate(new["xr"])
        lo, hi = np.concatenate(new["lo"]), np.concatenate(new["hi"])
        inc, dm, itin = np.concatenate(new["inc"]), np.concatenate(new["dm"]), np.concatenate(new["itin"])
        # drop pieces below resolution and enforce the piece cap
        tiny = (xr - xl <= min_length) | (hi - lo <= 0.0)
        if np.any(tiny):
            lost["resolution"] += float(np.sum(xr[tiny] - xl[tiny]))
            keep = ~tiny
            xl, xr, lo, hi, inc, dm, itin = xl[keep], xr[keep], lo[keep], hi[keep], inc[keep], dm[keep], itin[keep]
        if xl.size > max_pieces:
            order = np.argsort(-(xr - xl), kind="stable")
            cut = order[max_pieces:]
            lost["piece_cap"] += float(np.sum(xr[cut] - xl[cut]))
            keep = np.sort(order[:max_pieces])
            xl, xr, lo, hi, inc, dm, itin = xl[keep], xr[keep], lo[keep], hi[keep], inc[keep], dm[keep], itin[keep]
        if xl.size == 0:
            break
    if xl.size:
        lost["beyond_T_max"] += float(np.sum(xr - xl))

    if out_l:
        L, Rr = np.concatenate(out_l), np.concatenate(out_r)
        tau = np.concatenate(out_tau)
        it = np.concatenate(out_itin)
        incs = np.concatenate(out_inc)
        width_it = int(tau.max())
        it = it[:, :width_it]
    else:
        L = Rr = np.empty(0)
        tau = np.empty(0, dtype=int)
        it = np.zeros((0, 1), np.uint8)
        incs = np.empty(0, bool)
    T_eff = T_max
    if tau.size:
        # long returns through near-critical points lose endpoint accuracy; the
        # scheme is cut below the first return time whose branches miss X
        fl = fmap.compose(L, it)
        fr = fmap.compose(Rr, it)
        resid = np.maximum(np.abs(np.minimum(fl, fr) - a), np.abs(np.maximum(fl, fr) - b))
        bad = ~(resid <= onto_tol)
        if np.any(bad):
            T_eff = int(tau[bad].min()) - 1
            cut = tau > T_eff
            lost["resolution"] += float(np.sum(Rr[cut] - L[cut]))
            keep = ~cut
            L, Rr, tau, it, incs = L[keep], Rr[keep], tau[keep], it[keep], incs[keep]
            it = it[:, :max(1, T_eff)]
    covered = float(np.sum(Rr - L))
    escaped = max(0.0, 1.0 - covered / width)
    detail = {key: v / width for key, v in lost.items()}
    detail["resolution_T"] = T_eff
    return InducingScheme(fmap=fmap, X=(a, b), left=L, right=Rr, tau=tau, itinerary=it, increasing=incs,
                          escaped_mass=escaped, T_max=T_eff, base_domain=dom, escaped_detail=detail)


def scheme_for_map(fmap, T_max, R=None, base=None):
    """Convenience: build a tower, choose a base and extract the first-return scheme."""
    if R is None:
        R = 0 if fmap.is_full_branch else 12
    tower = build_tower(fmap, R)
    choice = base if base is not None else choose_base(tower)
    return first_return_scheme(tower, choice, T_max), tower, choice
