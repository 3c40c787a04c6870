"""Thermodynamics of finite (and truncated countable) Markov shifts.

Potentials are locally constant on cylinders of a fixed depth ``d``, with an
optional declared variation tail for potentials that are only approximated by
such a table (induced potentials). Partition sums run a dynamic programme over
``(d-1)``-blocks in log-scaled form; the transfer-matrix oracle is built
separately on ``d``-words and solved by power iteration.
"""

from dataclasses import dataclass, field
import itertools
import math

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .errors import NumericError, PreconditionError, StructuralError
from .numerics import log_sum_exp


class ShiftSpace:
    """A one-sided subshift of finite type on ``{0, ..., k-1}``.

    Parameters
    ----------
    transition : array_like of bool, shape (k, k)
        ``transition[i, j]`` is true when ``j`` may follow ``i``.
    mixing : bool, optional
        Asserted mixing flag. When omitted it is computed (primitivity of the
        transition matrix).
    """

    def __init__(self, transition, mixing=None):
        A = np.asarray(transition, dtype=bool)
        if A.ndim != 2 or A.shape[0] != A.shape[1] or A.shape[0] == 0:
            raise StructuralError("transition matrix must be square and non-empty")
        if np.any(~A.any(axis=1)) or np.any(~A.any(axis=0)):
            raise StructuralError("transition matrix has an all-zero row or column")
        A.setflags(write=False)
        self.transition = A
        self.is_full = bool(A.all())
        self.mixing = _is_primitive(A) if mixing is None else bool(mixing)

    @classmethod
    def full(cls, k):
        return cls(np.ones((k, k), dtype=bool), mixing=True)

    @property
    def n_symbols(self):
        return self.transition.shape[0]

    def admissible(self, word):
        w = np.asarray(word, dtype=int)
        return bool(np.all(self.transition[w[:-1], w[1:]])) if w.size > 1 else True

    def __repr__(self):
        kind = "full" if self.is_full else "SFT"
        return f"ShiftSpace({kind}, {self.n_symbols} symbols)"


def _is_primitive(A):
    k = A.shape[0]
    if A.all():
        return True
    n_comp, _ = connected_components(csr_matrix(A.astype(np.int8)), directed=True, connection="strong")
    if n_comp != 1:
        return False
    # Wielandt: primitive iff A^((k-1)^2 + 1) > 0
    M = A.astype(float)
    P = np.eye(k)
    e = (k - 1) ** 2 + 1
    base = M
    while e:
        if e & 1:
            P = np.minimum(P @ base, 1.0)
        base = np.minimum(base @ base, 1.0)
        e >>= 1
    return bool(np.all(P > 0))


class LocallyConstantPotential:
    """``phi(x) = table[x_0, ..., x_{d-1}]`` plus an optional variation tail.

    Parameters
    ----------
    table : array_like, shape ``(k,) * d``
        Values on admissible ``d``-words (others are ignored).
    tail : tuple (A, theta), optional
        Declared extra variation ``V_n <= A * theta**(n-1)`` for potentials
        represented by the table only approximately. ``theta < 1`` makes the
        potential weakly Hölder with a summable tail.
    """

    def __init__(self, table, tail=None):
        T = np.array(table, dtype=float)
        if T.ndim == 0:
            raise ValueError("table needs at least one symbol axis")
        if len(set(T.shape)) != 1:
            raise ValueError("table must have equal axes")
        T.setflags(write=False)
        self.table = T
        if tail is not None:
            A, theta = float(tail[0]), float(tail[1])
            if A < 0 or not 0 <= theta < 1:
                raise ValueError("tail must be (A >= 0, 0 <= theta < 1)")
            tail = (A, theta)
        self.tail = tail

    @property
    def depth(self):
        return self.table.ndim

    @property
    def n_symbols(self):
        return self.table.shape[0]

    @property
    def is_exact(self):
        return self.tail is None or self.tail[0] == 0.0

    def shifted(self, c):
        """The potential ``phi + c``."""
        return LocallyConstantPotential(self.table + c, self.tail)

    def value(self, word):
        return float(self.table[tuple(int(s) for s in word[: self.depth])])

    def birkhoff_periodic(self, word):
        """``S_n phi`` at the periodic point ``word^infinity``."""
        w = list(word)
        n = len(w)
        ext = (w * (self.depth // n + 2))[: n + self.depth - 1]
        return float(sum(self.table[tuple(ext[i:i + self.depth])] for i in range(n)))

    def birkhoff_range(self, word):
        """Min and max of ``S_n phi`` over admissible points of the cylinder ``[word]``.

        Exact for the tabulated part; the tail contributes ``± sum_k V_k``.
        """
        w = tuple(int(s) for s in word)
        n, d, k = len(w), self.depth, self.n_symbols
        lo = hi = 0.0
        if d == 1:
            lo = hi = float(np.sum(self.table[list(w)]))
        else:
            fixed = sum(float(self.table[w[i:i + d]]) for i in range(max(0, n - d + 1)))
            vals = []
            for ext in itertools.product(range(k), repeat=d - 1):
                full = w + ext
                vals.append(fixed + sum(float(self.table[full[i:i + d]]) for i in range(max(0, n - d + 1), n)))
            lo, hi = min(vals), max(vals)
        if self.tail is not None:
            A, th = self.tail
            slack = sum(A * th ** (j - 1) for j in range(1, n + 1))
            lo, hi = lo - slack, hi + slack
        return lo, hi

    def variation(self, n):
        """``V_n``: sup of ``|phi(x) - phi(y)|`` over ``x, y`` agreeing on ``n`` symbols."""
        if n < 1:
            raise ValueError("variation index starts at 1")
        v = 0.0
        if n < self.depth:
            axes = tuple(range(n, self.depth))
            v = float(np.max(np.ptp(self.table, axis=axes)))
        if self.tail is not None:
            v = max(v, self.tail[0] * self.tail[1] ** (n - 1))
        return v

    def variation_sum(self, start=1):
        """``sum_{k >= start} V_k`` (finite for exact tables, geometric tail otherwise)."""
        total = sum(self.variation(n) for n in range(start, self.depth))
        if self.tail is not None:
            A, th = self.tail
            m = max(start, self.depth)
            total += A * th ** (m - 1) / (1.0 - th)
        return total

    @property
    def summable(self):
        return math.isfinite(self.variation_sum(2))


# -- block dynamics ------------------------------------------------------------

def _block_matrix(shift, pot):
    """Weighted transition matrix on ``(d-1)``-blocks, in log form.

    Returns ``(states, logM)`` where ``states`` lists the first symbol of each
    state and ``logM[u, v]`` is ``-inf`` for forbidden moves. For ``d = 1`` the
    states are symbols and the weight ``phi(a)`` sits on edges leaving ``a``.
    """
    A = shift.transition
    k = shift.n_symbols
    d = pot.depth
    if pot.n_symbols != k:
        raise ValueError("potential and shift alphabets differ")
    T = pot.table
    if d == 1:
        logM = np.where(A, T[:, None], -np.inf)
        return np.arange(k), logM
    if d == 2:
        return np.arange(k), np.where(A, T, -np.inf)
    blocks = [w for w in itertools.product(range(k), repeat=d - 1) if shift.admissible(w)]
    index = {w: i for i, w in enumerate(blocks)}
    logM = np.full((len(blocks), len(blocks)), -np.inf)
    for u in blocks:
        for b in range(k):
            if A[u[-1], b]:
                v = u[1:] + (b,)
                logM[index[u], index[v]] = T[u + (b,)]
    return np.array([u[0] for u in blocks]), logM


def log_partition_sums(shift, pot, n_max, base_symbol=0):
    """``log Z_n`` for ``n = 1..n_max`` (``base_symbol=None`` sums over all symbols)."""
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    if shift.is_full and pot.depth == 1:
        lse = log_sum_exp(pot.table)
        n = np.arange(1, n_max + 1)
        if base_symbol is None:
            return n * lse
        return pot.table[base_symbol] + (n - 1) * lse
    first, logM = _block_matrix(shift, pot)
    base = np.ones(first.size, bool) if base_symbol is None else first == base_symbol
    shift_c = np.max(logM[np.isfinite(logM)])
    M = np.exp(logM - shift_c)
    X = np.eye(first.size)
    out = np.empty(n_max)
    log_scale = 0.0
    for n in range(1, n_max + 1):
        X = X @ M
        s = np.max(X)
        if s <= 0.0:
            raise StructuralError("no admissible words")
        X /= s
        log_scale += math.log(s)
        tr = float(np.sum(np.diag(X)[base]))
        out[n - 1] = (math.log(tr) if tr > 0 else -np.inf) + log_scale + n * shift_c
    return out


def partition_sum(shift, pot, n, base_symbol=0):
    """``Z_n``: sum of ``exp(S_n phi)`` over period-``n`` words starting with ``base_symbol``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    logz = log_partition_sums(shift, pot, n, base_symbol)[-1]
    if not np.isfinite(logz):
        raise StructuralError(f"no admissible loop of length {n} through symbol {base_symbol}")
    return float(np.exp(logz))


def brute_force_partition_sum(shift, pot, n, base_symbol=0):
    """Literal enumeration of periodic words (test oracle, exponential cost)."""
    total = 0.0
    k = shift.n_symbols
    firsts = range(k) if base_symbol is None else [base_symbol]
    for w in itertools.product(firsts, *([range(k)] * (n - 1))):
        if shift.admissible(w + (w[0],)):
            total += math.exp(pot.birkhoff_periodic(w))
    return total


@dataclass
class PressureEstimate:
    value: float
    error: float
    converged: bool
    n_used: int
    ratios: np.ndarray = field(repr=False)
    raw: np.ndarray = field(repr=False)
    flags: list = field(default_factory=list)


def gurevich_pressure(shift, pot, n_max=2000, base_symbol=0, tol=1e-13):
    """Gurevich pressure from the ratio sequence ``log Z_{n+1} - log Z_n``.

    The raw sequence ``(1/n) log Z_n`` is returned alongside. The error bar is
    a geometric-tail extrapolation of the last ratio differences.
    """
    if not shift.mixing:
        raise PreconditionError("Gurevich ratio estimator needs a mixing shift")
    if shift.is_full and pot.depth == 1:
        lz = log_partition_sums(shift, pot, 3, base_symbol)
        v = float(log_sum_exp(pot.table))
        return PressureEstimate(v, 0.0, True, 3, np.diff(lz), lz / np.arange(1, 4))
    chunk = 64
    logz = np.empty(0)
    n = 0
    while True:
        n = min(n_max, max(2 * n, chunk))
        logz = log_partition_sums(shift, pot, n, base_symbol)
        ratios = np.diff(logz)
        fin = np.isfinite(ratios)
        if np.count_nonzero(fin) >= 4:
            r = ratios[fin]
            d = np.abs(np.diff(r[-4:]))
            if np.all(d < tol) or n >= n_max:
                break
        elif n >= n_max:
            break
    raw = logz / np.arange(1, logz.size + 1)
    ratios = ratios[np.isfinite(ratios)]
    if ratios.size < 2:
        raise StructuralError("partition sums vanish; base symbol lies on no loop")
    d = np.abs(np.diff(ratios))
    last = float(d[-1]) if d.size else 0.0
    rho = float(min(0.999, d[-1] / d[-2])) if d.size >= 2 and d[-2] > 0 else 0.5
    err = last * rho / (1.0 - rho) + abs(ratios[-1]) * 1e-15
    conv = last < max(tol, 1e-12) * 10
    flags = [] if conv else ["not-converged"]
    if not conv:
        err = max(err, last)
    return PressureEstimate(float(ratios[-1]), err, conv, logz.size, ratios, raw, flags)


def truncation_ladder(pressure_of, k_min=1, k_max=20, tol=1e-8):
    """Pressures of truncations ``N = 2**k`` until successive values differ by ``< tol``.

    ``pressure_of(N)`` returns the pressure of the system restricted to the
    first ``N`` symbols. Returns ``(ladder, converged)`` with ladder a list of
    ``(N, P_N)``; values are expected to be non-decreasing in ``N``.
    """
    ladder = []
    for k in range(k_min, k_max + 1):
        N = 2 ** k
        ladder.append((N, float(pressure_of(N))))
        if len(ladder) >= 2 and abs(ladder[-1][1] - ladder[-2][1]) < tol:
            return ladder, True
    return ladder, False


# -- transfer-matrix oracle ------------------------------------------------------

def _word_graph(shift, pot):
    k, d = shift.n_symbols, pot.depth
    words = [w for w in itertools.product(range(k), repeat=d) if shift.admissible(w)]
    index = {w: i for i, w in enumerate(words)}
    W = np.zeros((len(words), len(words)))
    for w in words:
        weight = math.exp(pot.table[w])
        for b in range(k):
            v = w[1:] + (b,)
            if shift.transition[w[-1], b] and v in index:
                W[index[w], index[v]] = weight
    return W


def perron_root(W, tol=1e-12, max_iter=200000):
    """Perron root of a non-negative irreducible matrix by power iteration."""
    n_comp, _ = connected_components(csr_matrix(W > 0), directed=True, connection="strong")
    if n_comp != 1:
        raise StructuralError(f"weighted transition matrix is reducible ({n_comp} classes)")
    for shift_c in (0.0, 1.0):
        M = W + shift_c * np.eye(W.shape[0])
        v = np.full(W.shape[0], 1.0 / W.shape[0])
        lam = 0.0
        for _ in range(max_iter // 2):
            w = M @ v
            new = float(np.sum(w))
            w /= new
            if abs(new - lam) <= tol * new and np.max(np.abs(w - v)) <= tol:
                return new - shift_c
            lam, v = new, w
        # periodic matrices make plain iteration oscillate; the shift cures that
    raise NumericError("power iteration did not converge")


def transfer_matrix_pressure(shift, pot, tol=1e-12):
    """``log`` of the Perron root of the ``exp(phi)``-weighted ``d``-word matrix."""
    return math.log(perron_root(_word_graph(shift, pot), tol=tol))


# -- Gibbs measures --------------------------------------------------------------

class GibbsMeasure:
    """Gibbs (or conformal) measure of a normalised potential on a full shift.

    ``C`` is the distortion constant for the convention that a word of length
    ``n`` is compared with ``exp(-nP + S_n phi)``.
    """

    def __init__(self, potential, log_weights, left, right, P, C, kind):
        self.potential = potential
        self.P = P
        self.C = C
        self.kind = kind
        self._logM = log_weights
        self._logl = np.log(left) if left is not None else None
        self._logr = np.log(right)
        self.depth = potential.depth
        self.n_symbols = potential.n_symbols

    # log mass of a word, vectorised over rows of ``words`` (all of equal length)
    def log_mass(self, words):
        W = np.atleast_2d(np.asarray(words, dtype=int))
        n = W.shape[1]
        d = self.depth
        T = self.potential.table
        if d == 1:
            out = np.sum(T[W], axis=1)
            return out if np.ndim(words) > 1 else float(out[0])
        if n < d - 1:
            # sum over extensions to length d-1
            k = self.n_symbols
            ext = np.array(list(itertools.product(range(k), repeat=d - 1 - n)), dtype=int)
            full = np.concatenate([np.repeat(W, len(ext), axis=0), np.tile(ext, (W.shape[0], 1))], axis=1)
            vals = self.log_mass(full).reshape(W.shape[0], len(ext))
            out = log_sum_exp(vals, axis=1)
            return out if np.ndim(words) > 1 else float(out[0])
        out = np.zeros(W.shape[0])
        for i in range(n - d + 1):
            out += T[tuple(W[:, i + j] for j in range(d))]
        first = self._block_index(W[:, : d - 1])
        last = self._block_index(W[:, n - d + 1:])
        out += self._logr[last]
        if self._logl is not None:
            out += self._logl[first]
        return out if np.ndim(words) > 1 else float(out[0])

    def mass(self, word):
        return float(np.exp(self.log_mass(np.asarray(word)[None, :])[0]))

    def _block_index(self, blocks):
        k = self.n_symbols
        idx = np.zeros(blocks.shape[0], dtype=int)
        for j in range(blocks.shape[1]):
            idx = idx * k + blocks[:, j]
        return idx

    def max_log_mass(self, n):
        """``max_{|w| = n} log mu[w]`` by a max-plus dynamic programme."""
        T = self.potential.table
        d = self.depth
        if d == 1:
            return n * float(np.max(T))
        if n < d - 1:
            k = self.n_symbols
            words = np.array(list(itertools.product(range(k), repeat=n)), dtype=int)
            return float(np.max(self.log_mass(words)))
        k = self.n_symbols
        nb = k ** (d - 1)
        start = np.zeros(nb) if self._logl is None else self._logl.copy()
        # transitions between (d-1)-blocks
        V = start
        for _ in range(n - d + 1):
            blocks = np.arange(nb)
            nxt = np.full(nb, -np.inf)
            for b in range(k):
                target = (blocks * k) % nb + b
                word_idx = blocks * k + b
                cand = V + T.reshape(-1)[word_idx]
                np.maximum.at(nxt, target, cand)
            V = nxt
        return float(np.max(V + self._logr))

    def depth1_masses(self):
        return np.exp(self.log_mass(np.arange(self.n_symbols)[:, None]))


def gibbs_measure(shift, pot, tol=1e-9, conformal=False):
    """Invariant Gibbs measure (or conformal measure) of ``pot`` with ``P^G = 0``."""
    if not shift.is_full:
        raise PreconditionError("gibbs_measure is implemented for full shifts")
    P = gurevich_pressure(shift, pot).value
    if abs(P) > tol:
        raise PreconditionError(f"potential is not normalised: P^G = {P:.3g}")
    K = math.exp(pot.variation_sum(1))
    C = K if conformal else K * K
    d = pot.depth
    k = pot.n_symbols
    if d == 1:
        return GibbsMeasure(pot, None, None, np.ones(1), P, C, "conformal" if conformal else "invariant")
    nb = k ** (d - 1)
    M = np.zeros((nb, nb))
    T = pot.table.reshape(-1)
    for u in range(nb):
        for b in range(k):
            M[u, (u * k) % nb + b] = math.exp(T[u * k + b])
    w, vr = np.linalg.eig(M)
    i = int(np.argmax(w.real))
    r = np.abs(vr[:, i].real)
    wl, vl = np.linalg.eig(M.T)
    il = int(np.argmax(wl.real))
    lft = np.abs(vl[:, il].real)
    if conformal:
        r = r / np.sum(r)
        return GibbsMeasure(pot, M, None, r, P, C, "conformal")
    r = r / np.sum(r)
    lft = lft / np.dot(lft, r)
    return GibbsMeasure(pot, M, lft, r, P, C, "invariant")


def bernoulli_potential(weights):
    """Depth-1 potential ``log w_i`` on the full shift."""
    w = np.asarray(weights, dtype=float)
    with np.errstate(divide="ignore"):
        return LocallyConstantPotential(np.log(w))


@dataclass
class GibbsCheck:
    max_depth: int
    C: float
    worst_log_ratio: float  # max over cylinders of |log(mu / exp(S_n phi))|
    holds: bool


def gibbs_bound_check(measure, max_depth, samples=None, rng=None):
    """Check ``1/C <= mu[w] / exp(S_n phi(x)) <= C`` on cylinders of depth ``<= max_depth``.

    Exhaustive by default; ``samples`` switches to random words for large alphabets.
    Uses the tabulated range of ``S_n phi`` over each cylinder.
    """
    pot = measure.potential
    k = measure.n_symbols
    logC = math.log(measure.C)
    worst = 0.0
    if pot.depth == 1 and samples is None:
        # log mu[w] - S_n phi = 0 on the table; the tail adds its variation
        if pot.tail is not None:
            A, th = pot.tail
            worst = sum(A * th ** (j - 1) for j in range(1, max_depth + 1))
        return GibbsCheck(max_depth, measure.C, worst, worst <= logC + 1e-12)
    gen = rng if rng is not None else np.random.default_rng(0)
    for n in range(1, max_depth + 1):
        if samples is None:
            words = itertools.product(range(k), repeat=n)
        else:
            words = (tuple(gen.integers(0, k, n)) for _ in range(samples))
        for w in words:
            lm = measure.log_mass(np.array(w)[None, :])[0]
            lo, hi = pot.birkhoff_range(w)
            worst = max(worst, abs(lm - lo), abs(lm - hi))
    return GibbsCheck(max_depth, measure.C, worst, worst <= logC + 1e-12)


@dataclass
class DecayReport:
    lam: float
    empirical_lam: float
    depth: int
    holds: bool
    violations: list


def cylinder_mass_decay_check(measure, depth, enumerate_small=True):
    """Check ``m(C_n) <= exp(-lambda n)`` with ``lambda = -log(C sup_i m(C_1^i))``.

    The maximum over all words of each length comes from a max-plus dynamic
    programme; for alphabets up to 4 symbols and depth up to 8 the words are
    also enumerated literally.
    """
    if abs(measure.P) > 1e-9:
        raise PreconditionError("decay check expects a zero-pressure measure")
    sup1 = float(np.max(measure.depth1_masses()))
    lam = -math.log(measure.C * sup1)
    violations = []
    emp = math.inf
    for n in range(1, depth + 1):
        mx = measure.max_log_mass(n)
        if enumerate_small and measure.n_symbols <= 4 and n <= 8:
            words = np.array(list(itertools.product(range(measure.n_symbols), repeat=n)), dtype=int)
            mx = max(mx, float(np.max(measure.log_mass(words))))
        emp = min(emp, -mx / n)
        if mx > -lam * n + 1e-12:
            violations.append((n, mx, -lam * n))
    return DecayReport(lam, emp, depth, not violations, violations)
