import math

from ..errors import NoBracket


def bisect_root(h, lo, hi, tol=1e-12):
    """Bisection for a sign change of ``h`` inside ``[lo, hi]``.

    Returns the midpoint of the final bracket, whose width is at most
    ``tol`` (or an exact root if one is hit).
    """
    f_lo, f_hi = h(lo), h(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if math.copysign(1.0, f_lo) == math.copysign(1.0, f_hi):
        raise NoBracket(f"h({lo!r})={f_lo!r} and h({hi!r})={f_hi!r} have the same sign")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        f_mid = h(mid)
        if f_mid == 0.0:
            return mid
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
