"""Oracle suite run by ``intervalthermo --selftest``.

Each check compares a computed quantity with an independent reference and a
tolerance. ``run_selftest(tolerances=...)`` overrides tolerances by check
name, which is how the negative-control tests make a check fail on purpose.
"""

from dataclasses import dataclass
import math
import sys

import numpy as np

from . import maps
from .hofbauer import BaseChoice, build_tower, random_lifted_points, scheme_for_map, semiconjugacy_residuals
from .errors import StructuralError
from .inducing import InducedMeasure, kac_check
from .pressure import default_scheme, equilibrium_summary, pressure_induced, pressure_periodic
from .shift import LocallyConstantPotential, ShiftSpace, gurevich_pressure, transfer_matrix_pressure

DEFAULT_TOLERANCES = {
    "transfer-matrix": 1e-6,
    "kac": 1e-6,
    "abramov": 1e-4,
    "semiconjugacy": 1e-12,
    "chebyshev-closed-form": 5e-3,
}


@dataclass
class CheckResult:
    name: str
    value: float
    tol: float

    @property
    def passed(self):
        return bool(self.value <= self.tol)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{self.name:<24} {status}  err={self.value:.3e}  tol={self.tol:.1e}"


def random_markov_shift(rng, max_symbols=6, max_depth=2):
    """A mixing transition matrix with a random locally constant potential."""
    while True:
        k = int(rng.integers(2, max_symbols + 1))
        A = (rng.random((k, k)) < 0.6).astype(int)
        np.fill_diagonal(A, 1)
        try:
            shift = ShiftSpace(A)
        except StructuralError:
            continue
        if shift.mixing:
            break
    d = int(rng.integers(1, max_depth + 1))
    table = rng.normal(0.0, 1.0, (k,) * d)
    return shift, LocallyConstantPotential(table)


def _transfer_matrix(seed=0, count=20):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(count):
        shift, pot = random_markov_shift(rng)
        worst = max(worst, abs(gurevich_pressure(shift, pot).value - transfer_matrix_pressure(shift, pot)))
    return worst


def _kac():
    f = maps.doubling()
    scheme, _, _ = scheme_for_map(f, 30, base=BaseChoice(0, (0.0, 0.5), "given"))
    return abs(kac_check(scheme, InducedMeasure.lebesgue(scheme), tower_mass=0.5).mean_tau - 2.0)


def _abramov():
    worst = 0.0
    for name in ("tent", "doubling"):
        f = maps.builtin(name)
        scheme = default_scheme(f)[0]
        for t in (0.0, 0.5, 1.0):
            worst = max(worst, equilibrium_summary(f, t, scheme).residual)
    return worst


def _semiconjugacy(n=2000):
    tower = build_tower(maps.quadratic(3.9), 10)
    xs, ids = random_lifted_points(tower, n, seed=1)
    res, _ = semiconjugacy_residuals(tower, xs, ids)
    return float(res.max()) if res.size else math.inf


def _chebyshev():
    f = maps.chebyshev()
    scheme = default_scheme(f)[0]
    worst = 0.0
    for t in (-0.5, 0.0, 0.5, 1.0):
        exact = f.constants["pressure"](t)
        worst = max(worst, abs(pressure_induced(f, t, scheme).value - exact),
                    abs(pressure_periodic(f, t, 14).value - exact))
    return worst


CHECKS = (
    ("transfer-matrix", _transfer_matrix),
    ("kac", _kac),
    ("abramov", _abramov),
    ("semiconjugacy", _semiconjugacy),
    ("chebyshev-closed-form", _chebyshev),
)


def run_selftest(tolerances=None, stream=None):
    """Run every check, print a pass/fail table and return the results."""
    stream = sys.stdout if stream is None else stream
    tol = dict(DEFAULT_TOLERANCES)
    if tolerances:
        unknown = set(tolerances) - set(tol)
        if unknown:
            raise KeyError(f"unknown selftest checks: {sorted(unknown)}")
        tol.update(tolerances)
    results = []
    for name, fn in CHECKS:
        try:
            value = float(fn())
        except Exception as exc:
            print(f"{name:<24} FAIL  {type(exc).__name__}: {exc}", file=stream)
            value = math.inf
        else:
            r = CheckResult(name, value, tol[name])
            print(r.line(), file=stream)
        results.append(CheckResult(name, value, tol[name]))
    n_fail = sum(not r.passed for r in results)
    print(f"{len(results) - n_fail}/{len(results)} checks passed", file=stream)
    return results
