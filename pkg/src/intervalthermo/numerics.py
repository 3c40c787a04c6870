"""Small vectorised numerical kernels used across modules."""

import numpy as np
from scipy.special import logsumexp

#: absolute width at which bisection stops; below the 1e-14 endpoint tolerance
BISECT_XTOL = 2.0e-16


def bisect_monotone(func, lo, hi, target, increasing, maxiter=120):
    """Solve ``func(x) = target`` elementwise by bisection.

    Parameters
    ----------
    func : callable
        Vectorised function of an array shaped like ``lo``; element ``k`` of the
        result must depend only on element ``k`` of the input.
    lo, hi : array_like
        Brackets with ``lo <= hi``.
    target : array_like
        Right-hand sides.
    increasing : array_like of bool
        Orientation of ``func`` on each bracket.

    Returns
    -------
    ndarray
        Midpoints of the final brackets. Targets outside the image of a bracket
        converge to the nearer endpoint; callers clip targets beforehand.
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    target = np.broadcast_to(np.asarray(target, dtype=float), lo.shape)
    sign = np.where(np.broadcast_to(increasing, lo.shape), 1.0, -1.0)
    for _ in range(maxiter):
        mid = 0.5 * (lo + hi)
        val = func(mid)
        below = sign * (val - target) < 0.0
        hit = val == target
        # an exact hit collapses the bracket so representable roots stay exact
        lo = np.where(below | hit, mid, lo)
        hi = np.where(below & ~hit, hi, mid)
        if np.all(hi - lo <= BISECT_XTOL):
            break
    return 0.5 * (lo + hi)


def bisect_sign_change(func, lo, hi, maxiter=120):
    """Locate a zero of ``func`` on each bracket where it changes sign.

    Returns the root estimates and a boolean mask of brackets that actually
    contain a sign change (zero endpoints count as a change).
    """
    lo = np.array(lo, dtype=float, copy=True)
    hi = np.array(hi, dtype=float, copy=True)
    flo = func(lo)
    fhi = func(hi)
    has_root = flo * fhi <= 0.0
    increasing = fhi >= flo
    root = bisect_monotone(func, lo, hi, 0.0, increasing, maxiter=maxiter)
    # exact zeros at the endpoints are kept verbatim
    root = np.where(flo == 0.0, lo, root)
    root = np.where((fhi == 0.0) & (flo != 0.0), hi, root)
    return root, has_root


def log_sum_exp(values, axis=None):
    """``log(sum(exp(values)))`` that tolerates ``-inf`` entries."""
    return logsumexp(values, axis=axis)
