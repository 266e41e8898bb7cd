"""Bessel functions of integer and half-integer order, and their first zero.

The ascending series cancels badly for x of order 10 and beyond, so it is
summed in decimal arithmetic with enough guard digits to keep ten
significant figures out to x = 30.
"""
import math
from decimal import Decimal, localcontext

from ..errors import DomainError
from .roots import bisect_root

_PI = Decimal(
    "3.14159265358979323846264338327950288419716939937510582097494459230781640628620899"
)
MAX_TERMS = 200


def _check_order(nu):
    two_nu = round(2 * nu)
    if nu < 0 or abs(2 * nu - two_nu) > 1e-12:
        raise DomainError(f"order must be a non-negative multiple of 1/2, got {nu!r}")
    return two_nu


def gamma_half_integer(two_x):
    """Gamma(two_x / 2) by the recurrence from Gamma(1/2) and Gamma(1)."""
    if int(two_x) != two_x or two_x < 1:
        raise DomainError(f"two_x must be a positive integer, got {two_x!r}")
    two_x = int(two_x)
    if two_x % 2 == 0:
        return float(math.factorial(two_x // 2 - 1))
    value = math.sqrt(math.pi)
    for k in range(1, two_x, 2):
        value *= k / 2
    return value


def _gamma_decimal(two_x):
    # Gamma(two_x / 2) in the active decimal context.
    if two_x % 2 == 0:
        return Decimal(math.factorial(two_x // 2 - 1))
    value = _PI.sqrt()
    for k in range(1, two_x, 2):
        value = value * k / 2
    return value


def bessel_j(nu, x):
    """J_nu(x) for nu in {0, 1/2, 1, ...} and x >= 0 by the ascending series."""
    two_nu = _check_order(nu)
    if x < 0:
        raise DomainError(f"bessel_j needs x >= 0, got {x!r}")
    if x == 0:
        return 1.0 if two_nu == 0 else 0.0
    with localcontext() as ctx:
        ctx.prec = 40 + int(x)
        half = Decimal(x) / 2
        # (x/2)^nu / Gamma(nu + 1)
        power = half ** (two_nu // 2)
        if two_nu % 2:
            power *= half.sqrt()
        term = power / _gamma_decimal(two_nu + 2)
        nu_d = Decimal(two_nu) / 2
        q = half * half
        total = term
        cutoff = abs(term) * Decimal(10) ** -(ctx.prec - 5)
        for k in range(1, MAX_TERMS):
            term = -term * q / (k * (k + nu_d))
            total += term
            if abs(term) < cutoff and k > half:
                break
        return float(total)


def bessel_j_prime(nu, x):
    """d/dx J_nu(x) = (nu / x) J_nu(x) - J_{nu+1}(x), for x > 0."""
    return nu / x * bessel_j(nu, x) - bessel_j(nu + 1, x)


def bessel_first_zero(nu, tol=1e-12):
    """Smallest positive zero of J_nu.

    The bracket ``[max(nu, 1e-3), nu + pi + 3]`` can hold two zeros, so it is
    scanned in steps of 0.25 for the first sign change, which is then bisected
    and finished with one Newton step.
    """
    _check_order(nu)
    lo, end = max(nu, 1e-3), nu + math.pi + 3
    f_lo = bessel_j(nu, lo)
    hi = lo
    while True:
        hi = min(lo + 0.25, end)
        if (bessel_j(nu, hi) < 0) != (f_lo < 0) or hi >= end:
            break
        lo = hi
    root = bisect_root(lambda x: bessel_j(nu, x), lo, hi, tol)
    slope = bessel_j_prime(nu, root)
    if slope != 0.0:
        polished = root - bessel_j(nu, root) / slope
        if abs(polished - root) <= tol:
            root = polished
    return root
