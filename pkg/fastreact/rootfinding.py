"""
Module for the bracketed scalar root finders used by the free boundary solve
and the implicit reaction substep. Both are safe versions of Newton-Raphson:
an iterate leaving the bracket (or converging too slowly) is replaced by a
bisection step.
"""

import logging

import numpy as np

from .exceptions import FreeBoundaryError, SolverFailure

LOG = logging.getLogger('fastreact.rootfinding')


def expand_bracket(func, lo, hi, factor=2.0, max_expansions=60, lower_bound=None):
    """
    Grow [lo, hi] geometrically until func changes sign across it.

    Args:
        func: Scalar function
        lo: Initial lower end
        hi: Initial upper end
        factor: Growth factor applied to the offending end(s)
        max_expansions: Number of growths attempted before giving up
        lower_bound: If set, lo is never moved below it

    Returns:
        lo, hi, f_lo, f_hi: Bracket and end values with f_lo * f_hi <= 0

    Raises:
        FreeBoundaryError: If no sign change was found
    """
    with np.errstate(over='ignore'):
        f_lo, f_hi = func(lo), func(hi)

        for i in range(max_expansions):
            if np.sign(f_lo) * np.sign(f_hi) <= 0:
                return lo, hi, f_lo, f_hi

            LOG.debug('Expanding bracket [{}, {}]'.format(lo, hi))
            hi = hi * factor if hi > 0 else hi + (hi - lo)
            f_hi = func(hi)

            if lower_bound is None:
                lo = lo * factor if lo < 0 else lo - (hi - lo)
            else:
                lo = max(lower_bound, lo * factor if lo < 0 else lower_bound)
            f_lo = func(lo)

    raise FreeBoundaryError(
        'No sign change found in [{}, {}] (f = {}, {})'.format(lo, hi, f_lo, f_hi),
        bracket=(lo, hi))


def bisect_newton(func, dfunc, lo, hi, switch_width=1e-3, xtol=4e-16, maxiter=200):
    """
    Bisect a bracketed root down to switch_width, then polish with Newton
    iterations that fall back to bisection when they leave the bracket.

    Args:
        func: Scalar function with a single sign change in [lo, hi]
        dfunc: Derivative of func
        lo: Lower end of the bracket
        hi: Upper end of the bracket
        switch_width: Bracket width at which Newton takes over
        xtol: Relative step size at which iterations stop
        maxiter: Iteration limit shared by both phases

    Returns:
        root: x with func(x) == 0 or bracketed to xtol

    Raises:
        FreeBoundaryError: If the bracket has no sign change or the
            iteration limit is reached
    """
    with np.errstate(over='ignore', invalid='ignore'):
        f_lo, f_hi = func(lo), func(hi)

        if f_lo == 0:
            return lo
        if f_hi == 0:
            return hi
        if np.sign(f_lo) == np.sign(f_hi):
            raise FreeBoundaryError('Root is not bracketed', bracket=(lo, hi))

        # orient so that func(neg) < 0 < func(pos)
        neg, pos = (lo, hi) if f_lo < 0 else (hi, lo)

        for i in range(maxiter):
            if abs(pos - neg) <= switch_width:
                break
            mid = 0.5 * (neg + pos)
            f_mid = func(mid)
            if f_mid == 0:
                return mid
            elif f_mid < 0:
                neg = mid
            else:
                pos = mid

        x = 0.5 * (neg + pos)
        dx = abs(pos - neg)

        for i in range(maxiter):
            f, df = func(x), dfunc(x)
            if f == 0:
                return x
            elif f < 0:
                neg = x
            else:
                pos = x

            newton_ok = np.isfinite(df) and df != 0
            if newton_ok:
                step = f / df
                candidate = x - step
                newton_ok = (min(neg, pos) < candidate < max(neg, pos)
                             and abs(2.0 * step) <= dx)

            if newton_ok:
                dx = abs(step)
                x_new = candidate
            else:
                # x is now an end of the bracket so the midpoint moves
                x_new = 0.5 * (neg + pos)
                dx = 0.5 * abs(pos - neg)

            if x_new == x or dx <= xtol * max(abs(x_new), 1.0):
                return x_new
            x = x_new

    raise FreeBoundaryError('Root iteration did not converge', bracket=(neg, pos))


def vector_newton_bisect(func, dfunc, lo, hi, tol, maxiter=100, **failure_info):
    """
    Solve func(x) = 0 elementwise for an increasing func with
    func(lo) <= 0 <= func(hi). Each entry keeps its own bracket and takes
    a Newton step when it stays strictly inside, a bisection step otherwise.

    Args:
        func: Vectorized function of x
        dfunc: Vectorized derivative, may be infinite or nan where undefined
        lo: Array of lower bracket ends
        hi: Array of upper bracket ends
        tol: Absolute tolerance on |func|
        maxiter: Iteration limit
        failure_info: Extra attributes attached to a raised SolverFailure

    Returns:
        x: Array of roots inside [lo, hi]

    Raises:
        SolverFailure: If some entry has not converged after maxiter
    """
    lo = np.array(lo, dtype=float)
    hi = np.array(hi, dtype=float)
    x = 0.5 * (lo + hi)
    active = hi > lo

    for i in range(maxiter):
        if not np.any(active):
            return x

        xa = x[active]
        with np.errstate(divide='ignore', invalid='ignore', over='ignore'):
            f = func(xa, active)
            df = dfunc(xa, active)

        converged = np.abs(f) <= tol

        # shrink brackets, func is increasing
        lo_a = np.where(f < 0, xa, lo[active])
        hi_a = np.where(f > 0, xa, hi[active])

        with np.errstate(divide='ignore', invalid='ignore'):
            newton = xa - f / df
        use_newton = (np.isfinite(df) & (df > 0) & np.isfinite(newton)
                      & (newton > lo_a) & (newton < hi_a))
        x_new = np.where(use_newton, newton, 0.5 * (lo_a + hi_a))
        x_new = np.where(converged, xa, x_new)

        lo[active] = lo_a
        hi[active] = hi_a
        x[active] = x_new

        # a bracket down to a few ulps cannot be refined further
        collapsed = hi_a - lo_a <= 4.0 * np.finfo(float).eps * np.maximum(np.abs(hi_a), 1e-300)
        done = converged | collapsed | (x_new == xa)
        idx = np.flatnonzero(active)
        active[idx[done]] = False

    if np.any(active):
        raise SolverFailure(
            'Reaction solve did not converge in {} iterations at {} cells'
            ''.format(maxiter, int(np.sum(active))), **failure_info)

    return x
