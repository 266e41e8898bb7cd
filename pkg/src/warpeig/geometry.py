"""Metric quantities of geodesic balls: S(r), V(r), V/S, C(r) and a Ricci check."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import BudgetExceeded, DomainError, NonFinite
from .numerics import DEFAULT_QUADRATURE, Quadrature, gamma_half_integer
from .warping.spec import Manifold, make_manifold

__all__ = [
    "BallSpec", "Manifold", "RicciCertificate", "SERIES_EPS",
    "capacity_integral", "exit_ratio", "exit_ratio_direct", "make_manifold",
    "ricci_nonnegative", "sphere_constant", "surface_area", "volume",
]

SERIES_EPS = 1e-4
RICCI_TOL = 1e-9
CONDITIONING_LIMIT = 1e12
KERNEL_MAX_SUBDIVISIONS = 2000


@dataclass(frozen=True)
class BallSpec:
    manifold: Manifold
    r: float

    def __post_init__(self):
        check_radius(self.manifold, self.r)


def check_radius(m, r, *, allow_zero=False):
    """0 < r <= R; a Custom metric with finite extent needs r < R."""
    if not math.isfinite(r) or r < 0 or (r == 0 and not allow_zero):
        raise DomainError(f"radius must be positive and finite, got {r!r}")
    if r > m.extent:
        raise DomainError(f"radius {r!r} exceeds the extent R={m.extent!r}")
    if r == m.extent and not m.warping.is_builtin:
        raise DomainError(f"radius must be < R={m.extent!r} for a custom metric")


def sphere_constant(n):
    """Area of the unit (n-1)-sphere, 2 pi^(n/2) / Gamma(n/2)."""
    return 2 * math.pi ** (n / 2) / gamma_half_integer(n)


def _raise_status(status, what):
    if status == kernels.NONFINITE:
        raise NonFinite(f"{what}: integrand not finite")
    if status == kernels.BUDGET:
        raise BudgetExceeded(f"{what}: subdivision budget exhausted")
    if status != kernels.OK:
        raise RuntimeError(f"{what}: kernel status {status}")


def surface_area(m: Manifold, r):
    check_radius(m, r)
    value = sphere_constant(m.n) * m.warping.value("f", r) ** (m.n - 1)
    if not math.isfinite(value):
        raise NonFinite(f"S({r!r}) overflows")
    return value


def volume(m: Manifold, r, q: Quadrature = DEFAULT_QUADRATURE):
    check_radius(m, r)
    prog = m.warping.program("f")
    value, _, status = kernels.warped_power_integral(
        prog.code, prog.consts, m.n, 0.0, float(r),
        q.rel_tol, q.abs_tol, min(q.max_subdivisions, KERNEL_MAX_SUBDIVISIONS),
    )
    _raise_status(status, f"V({r!r})")
    return sphere_constant(m.n) * value


def series_coefficients(m: Manifold):
    """(c2, c3) in V/S = s/n + c2 s^2 + c3 s^3 + ..., from f''(0) and f'''(0).

    Terms quadratic in f''(0) are dropped; they only enter at s^3 when
    f''(0) != 0, i.e. for metrics that are not smooth at the pole.
    """
    n = m.n
    b = m.warping.at_pole("ddf") / 2
    c = m.warping.at_pole("dddf") / 6
    return -(n - 1) * b / (n * (n + 1)), -2 * (n - 1) * c / (n * (n + 2))


def _log_programs(m):
    lf, dlf = m.warping.program("log_f"), m.warping.program("dlog_f")
    return lf.code, lf.consts, dlf.code, dlf.consts


def exit_ratio(m: Manifold, sigma, q: Quadrature = DEFAULT_QUADRATURE, eps=SERIES_EPS):
    """V(sigma)/S(sigma), with the series sigma/n + ... below ``eps``."""
    check_radius(m, sigma, allow_zero=True)
    c2, c3 = series_coefficients(m)
    value, status = kernels.exit_ratio(
        *_log_programs(m), float(m.n), float(sigma), c2, c3, eps,
        q.rel_tol, q.abs_tol, min(q.max_subdivisions, KERNEL_MAX_SUBDIVISIONS),
    )
    _raise_status(status, f"V/S({sigma!r})")
    return value


def exit_ratio_direct(m: Manifold, sigma, q: Quadrature = DEFAULT_QUADRATURE):
    """V(sigma)/S(sigma) formed literally from :func:`volume` and :func:`surface_area`."""
    return volume(m, sigma, q) / surface_area(m, sigma)


def capacity_integral(m: Manifold, r, q: Quadrature = DEFAULT_QUADRATURE, lo=0.0):
    """C(r), the integral of V/S over [0, r] (or over [lo, r])."""
    check_radius(m, r)
    c2, c3 = series_coefficients(m)
    value, _, status = kernels.capacity_integral(
        *_log_programs(m), m.n, float(lo), float(r), c2, c3, SERIES_EPS,
        q.rel_tol, q.abs_tol, min(q.max_subdivisions, KERNEL_MAX_SUBDIVISIONS),
    )
    _raise_status(status, f"C({r!r})")
    return value


@dataclass(frozen=True)
class RicciCertificate:
    """Outcome of the grid check of the two warped-product Ricci eigenvalues.

    ``status`` is ``certified_nonneg``, ``violated`` or ``inconclusive``;
    ``t`` is the first violating radius when violated.
    """

    status: str
    t: float | None
    min_radial: float
    min_tangential: float

    @property
    def certified(self):
        return self.status == "certified_nonneg"


def ricci_nonnegative(m: Manifold, r, grid=256, tol=RICCI_TOL):
    """Check -f''/f >= 0 and (n-2)(1-f'^2)/f^2 - f''/f >= 0 on (0, r].

    Grid points below 1e-4 are moved to 1e-4, where both quantities are
    within O(1e-8) of their finite limit at the pole.
    """
    if grid < 64:
        raise ValueError("grid must be >= 64")
    check_radius(m, r)
    w = m.warping
    ts = np.maximum(r * np.arange(1, grid + 1) / grid, 1e-4)
    f = np.asarray(w.value("f", ts), dtype=float)
    df = np.asarray(w.value("df", ts), dtype=float)
    ddf = np.asarray(w.value("ddf", ts), dtype=float)
    with np.errstate(all="ignore"):
        radial = -ddf / f
        tangential_part = (1 - df) * (1 + df) / f**2
        tangential = (m.n - 2) * tangential_part + radial
    radial_min = float(np.nanmin(radial)) if np.isfinite(radial).any() else math.nan
    tangential_min = float(np.nanmin(tangential)) if np.isfinite(tangential).any() else math.nan
    bad = ~((radial >= -tol) & (tangential >= -tol))
    if bad.any():
        first = int(np.argmax(bad))
        if np.isfinite(radial[first]) and np.isfinite(tangential[first]):
            return RicciCertificate("violated", float(ts[first]), radial_min, tangential_min)
        return RicciCertificate("inconclusive", float(ts[first]), radial_min, tangential_min)
    if not w.is_builtin:
        scale = np.maximum(np.abs(radial), np.abs(tangential_part))
        if np.max(scale) > CONDITIONING_LIMIT:
            return RicciCertificate("inconclusive", None, radial_min, tangential_min)
    return RicciCertificate("certified_nonneg", None, radial_min, tangential_min)
