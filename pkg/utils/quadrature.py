"""Adaptive Simpson quadrature on finite, half-infinite and tail-mapped ranges."""

import math

from utils.errors import ConvergenceError

FINITE_TOL = 1e-12
TAIL_TOL = 1e-10

# relative floor below which Simpson differences are roundoff, not error
_ROUNDOFF = 1e-14
_MAX_CHUNKS = 400


def adaptive_simpson(f, a, b, tol=FINITE_TOL, max_depth=50):
    """Adaptive Simpson's rule with Richardson correction.

    Args:
        f: Integrand, finite on [a, b].
        a: Lower bound.
        b: Upper bound; a > b integrates the other way round.
        tol: Absolute error tolerance.
        max_depth: Maximum recursion depth.

    Returns:
        Tuple of (integral_value, error_estimate).
    """
    if a == b:
        return 0.0, 0.0
    if a > b:
        value, error = adaptive_simpson(f, b, a, tol, max_depth)
        return -value, error

    fa = f(a)
    fb = f(b)
    fm = f(0.5 * (a + b))
    whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    return _refine(f, a, b, fa, fm, fb, whole, tol, max_depth)


def _refine(f, a, b, fa, fm, fb, whole, tol, depth):
    m = 0.5 * (a + b)
    lm = 0.5 * (a + m)
    rm = 0.5 * (m + b)
    flm = f(lm)
    frm = f(rm)

    width = b - a
    left = width / 12.0 * (fa + 4.0 * flm + fm)
    right = width / 12.0 * (fm + 4.0 * frm + fb)
    error = (left + right - whole) / 15.0

    floor = _ROUNDOFF * width * (abs(fa) + abs(flm) + abs(fm) + abs(frm) + abs(fb))
    if depth <= 0 or abs(error) <= max(tol, floor) or not (a < lm < m < rm < b):
        return left + right + error, abs(error)

    left_value, left_error = _refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
    right_value, right_error = _refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    return left_value + right_value, left_error + right_error


def integrate(f, a, b, tol=FINITE_TOL, points=()):
    """Oriented integral of f over [a, b], split at the given breakpoints."""
    if a == b:
        return 0.0
    if a > b:
        return -integrate(f, b, a, tol, points)

    cuts = sorted({float(x) for x in points if a < x < b})
    edges = [a, *cuts, b]
    piece_tol = tol / (len(edges) - 1)
    pieces = [
        adaptive_simpson(f, lo, hi, piece_tol)[0]
        for lo, hi in zip(edges[:-1], edges[1:])
    ]
    return math.fsum(pieces)


def integrate_to_infinity(f, a, tol=TAIL_TOL, width=1.0, points=()):
    """Integral of f over [a, inf) by doubling chunks until they stop contributing.

    Raises:
        ConvergenceError: if the chunks are still contributing after the
            chunk budget is spent (tail too heavy for the requested tol).
    """
    points = tuple(points)
    chunks = []
    lo = a
    quiet = 0
    for k in range(_MAX_CHUNKS):
        hi = lo + width
        chunk = integrate(f, lo, hi, tol * 0.5 ** min(k + 1, 30), points)
        chunks.append(chunk)
        if abs(chunk) <= 0.25 * tol:
            quiet += 1
            if quiet >= 2:
                return math.fsum(chunks)
        else:
            quiet = 0
        lo = hi
        width *= 2.0
        if not math.isfinite(lo + width):
            break
    raise ConvergenceError(
        f"integral over [{a}, inf) did not settle to tolerance {tol:g}"
    )


def integrate_log_tail(h, mass, tol=TAIL_TOL):
    """Integral of h(q) over q in (0, mass], via q = exp(-t).

    The substitution turns an endpoint singularity at q -> 0 (a quantile
    blowing up in a tail) into an exponentially weighted half line.

    Raises:
        ConvergenceError: if q underflows or h(q) q overflows before the
            integral settles.
    """
    if mass <= 0.0:
        return 0.0

    def integrand(t):
        q = math.exp(-t)
        if q == 0.0:
            raise ConvergenceError(
                f"tail integral over (0, {mass:g}] still contributing where q underflows"
            )
        try:
            value = h(q) * q
        except OverflowError:
            raise ConvergenceError(f"tail integrand overflows at q = {q:g}")
        if not math.isfinite(value):
            raise ConvergenceError(f"tail integrand is not finite at q = {q:g}")
        return value

    return integrate_to_infinity(integrand, -math.log(mass), tol)
