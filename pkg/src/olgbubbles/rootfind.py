"""Bracketed scalar root finding.

Bisection only: every residual in this package is continuous on its
admissible interval but not necessarily smooth or monotone, and bisection is
deterministic down to the last bit.
"""

import math

import numpy as np


def bisect(func, lo, hi, f_lo=None, f_hi=None, rtol=0.0, maxiter=400):
    """Root of ``func`` on [lo, hi] given a sign change.

    Runs until the bracket can no longer be split in floating point, or until
    its width falls below ``rtol * |midpoint|``. Returns ``(root, iterations)``.
    """
    if f_lo is None:
        f_lo = func(lo)
    if f_hi is None:
        f_hi = func(hi)
    if f_lo == 0.0:
        return lo, 0
    if f_hi == 0.0:
        return hi, 0
    if (f_lo > 0.0) == (f_hi > 0.0):
        raise ValueError("root is not bracketed")
    it = 0
    while it < maxiter:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if rtol and hi - lo <= rtol * abs(mid):
            break
        it += 1
        f_mid = func(mid)
        if f_mid == 0.0:
            return mid, it
        if (f_mid > 0.0) == (f_lo > 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    # the endpoint with the smaller residual
    return (lo if abs(f_lo) <= abs(f_hi) else hi), it


def sign_change_brackets(func, grid):
    """All adjacent grid pairs on which ``func`` changes sign.

    Exact zeros on the grid come back as degenerate brackets (x, x).
    Points where ``func`` is undefined (raises or returns nan) break the scan.
    """
    values = []
    for x in grid:
        try:
            v = func(x)
        except (ValueError, ZeroDivisionError, OverflowError):
            v = math.nan
        values.append(v)
    brackets = []
    for i, v in enumerate(values):
        if v == 0.0:
            brackets.append((grid[i], grid[i], 0.0, 0.0))
    for i in range(len(grid) - 1):
        a, b = values[i], values[i + 1]
        if math.isnan(a) or math.isnan(b) or a == 0.0 or b == 0.0:
            continue
        if (a > 0.0) != (b > 0.0):
            brackets.append((grid[i], grid[i + 1], a, b))
    brackets.sort(key=lambda br: br[0])
    return brackets


def log_grid(lo, hi, n):
    return [float(x) for x in np.geomspace(lo, hi, n)]


def golden_max(func, lo, hi, xtol=1e-13, maxiter=500):
    """Maximise a unimodal ``func`` on [lo, hi] by golden-section search.

    Returns ``(x, func(x))``.
    """
    invphi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = lo, hi
    c = b - invphi * (b - a)
    d = a + invphi * (b - a)
    fc, fd = func(c), func(d)
    for _ in range(maxiter):
        if b - a <= xtol * max(1.0, abs(a) + abs(b)):
            break
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - invphi * (b - a)
            fc = func(c)
        else:
            a, c, fc = c, d, fd
            d = a + invphi * (b - a)
            fd = func(d)
    if fc >= fd:
        return c, fc
    return d, fd
