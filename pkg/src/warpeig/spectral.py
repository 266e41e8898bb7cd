"""First Dirichlet eigenvalue of geodesic balls and its bounds.

Two independent solvers are provided. :func:`first_eigenvalue` shoots the
radial equation u'' + (n-1)(f'/f)u' + lam u = 0 with an adaptive
Runge-Kutta kernel. :func:`first_eigenvalue_picard` instead iterates the
integral operator

    T u(t) = Theta - mu * int_0^t int_0^s (f(x)/f(s))^(n-1) u(x) dx ds

whose fixed points are the radial solutions with u(0) = Theta, u'(0) = 0.
Both bisect on the eigen-parameter using the fact that the first zero of the
radial solution moves inward as the parameter grows. The first Dirichlet
eigenfunction of these balls is radial, so only radial solutions are needed.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev as cheb

from . import geometry, kernels
from .errors import ClosedManifold, DomainError, NoConvergence, NonFinite, StepUnderflow
from .numerics import bessel_first_zero
from .warping.spec import Manifold

SHOOT_T0 = 1e-6
SHOOT_RTOL = 1e-12
SHOOT_ATOL = 1e-300
SCAN_DENSITY = 2048.0
MAX_EXPANSIONS = 60
SLACK = 1e-6
PICARD_ORDER = 12
PICARD_PANELS_PER_UNIT = 50.0
PICARD_MIN_PANELS = 16


def _check_dirichlet_radius(m: Manifold, r):
    geometry.check_radius(m, r)
    if m.warping.kind == "sphere" and r >= math.pi:
        raise ClosedManifold("r = pi is the whole sphere, a closed manifold with no Dirichlet problem")
    if r >= m.extent:
        raise DomainError(f"Dirichlet radius must be < R={m.extent!r}")


def bessel_constant(n):
    """First zero of J_{(n-2)/2}."""
    return bessel_first_zero((n - 2) / 2)


# --------------------------------------------------------------------------
# Bounds

def bcg_lower_bound(m: Manifold, r, q=geometry.DEFAULT_QUADRATURE):
    """1/C(r): lower bound for the first Dirichlet eigenvalue of B(r)."""
    _check_dirichlet_radius(m, r)
    return 1.0 / geometry.capacity_integral(m, r, q)


@dataclass(frozen=True)
class ChengBound:
    """(c_n / r)^2 when Ricci >= 0 is certified on (0, r], else ``value`` is None."""

    value: float | None
    certificate: geometry.RicciCertificate
    bessel_zero: float


def cheng_upper_bound(m: Manifold, r, grid=256):
    _check_dirichlet_radius(m, r)
    cert = geometry.ricci_nonnegative(m, r, grid)
    c_n = bessel_constant(m.n)
    return ChengBound((c_n / r) ** 2 if cert.certified else None, cert, c_n)


# --------------------------------------------------------------------------
# Shooting

@dataclass(frozen=True)
class RadialProfile:
    """Samples of a radial solution u(t) on [0, r].

    ``mu`` is the eigen-parameter (a + lambda_1 in the fixed-point setting,
    lambda_1 itself at the eigenvalue) and ``theta`` the value u(0). When
    ``panels`` is set the samples are the Chebyshev-Lobatto panel grid used
    by :func:`apply_T`; ``residuals`` holds the sup-norm change of each
    Picard iteration.
    """

    r: float
    t: np.ndarray
    u: np.ndarray
    mu: float
    theta: float = 1.0
    panels: int = 0
    order: int = 0
    residuals: tuple = field(default=(), repr=False)

    def __call__(self, t):
        return np.interp(t, self.t, self.u)

    @property
    def samples(self):
        return list(zip(self.t.tolist(), self.u.tolist()))


def _shoot(m: Manifold, lam, r, rtol=SHOOT_RTOL, stop_at_zero=True, t_eval=None):
    prog = m.warping.program("dlog_f")
    t0 = min(SHOOT_T0, 1e-3 * r)
    t_eval = np.empty(0) if t_eval is None else np.ascontiguousarray(t_eval, dtype=float)
    u_eval = np.empty_like(t_eval)
    zero, u_end, status, _ = kernels.shoot(
        prog.code, prog.consts, float(m.n), float(lam), t0, float(r),
        rtol, SHOOT_ATOL, SCAN_DENSITY, stop_at_zero, t_eval, u_eval,
    )
    if status == kernels.UNDERFLOW:
        raise StepUnderflow(f"radial ODE step underflow (lambda={lam!r}, r={r!r})")
    if status == kernels.NONFINITE:
        raise NonFinite(f"radial ODE blew up (lambda={lam!r}, r={r!r})")
    if status != kernels.OK:
        raise NoConvergence(f"radial ODE exhausted its step budget (lambda={lam!r})")
    return zero, u_end, u_eval


def first_zero(m: Manifold, lam, r, rtol=SHOOT_RTOL):
    """Position of the first zero of the radial solution in (0, r], or inf."""
    return _shoot(m, lam, r, rtol)[0]


def _initial_bracket(m, r, has_zero, q):
    """(lo, hi) with no zero in (0, r] at lo and a zero at hi."""
    lower = bcg_lower_bound(m, r, q)
    lo = 0.5 * lower
    hi = 1.2 * max((bessel_constant(m.n) / r) ** 2, 4 * m.n / r**2)
    for _ in range(MAX_EXPANSIONS):
        if has_zero(hi):
            break
        lo = max(lo, hi)
        hi *= 2
    else:
        raise NoConvergence(f"no eigenvalue bracket found below {hi!r}")
    if has_zero(lo):
        raise NoConvergence(f"radial solution already vanishes at lambda={lo!r}")
    return lo, hi


def _bisect(has_zero, lo, hi, tol):
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if has_zero(mid):
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def first_eigenvalue(m: Manifold, r, tol=1e-10, rtol=SHOOT_RTOL, q=geometry.DEFAULT_QUADRATURE):
    """First Dirichlet eigenvalue of B(r) by shooting, to absolute ``tol``."""
    _check_dirichlet_radius(m, r)

    def has_zero(lam):
        return _shoot(m, lam, r, rtol)[0] <= r

    lo, hi = _initial_bracket(m, r, has_zero, q)
    return _bisect(has_zero, lo, hi, tol)


def shooting_profile(m: Manifold, r, lam, samples=2049, t=None):
    """Radial solution with u(0)=1, u'(0)=0 on [0, r].

    Sampled on a uniform grid of ``samples`` points unless the sorted
    nodes ``t`` are given.
    """
    geometry.check_radius(m, r)
    t = np.linspace(0.0, r, samples) if t is None else np.asarray(t, dtype=float)
    _, _, u = _shoot(m, lam, r, stop_at_zero=False, t_eval=t)
    return RadialProfile(float(r), t, u, float(lam))


# --------------------------------------------------------------------------
# The fixed-point operator on a Chebyshev-Lobatto panel grid

@lru_cache(maxsize=8)
def _reference_panel(order):
    """Lobatto nodes on [-1, 1] and the matrix of integrals from -1 to each node."""
    x = -np.cos(np.pi * np.arange(order) / (order - 1))
    vander = cheb.chebvander(x, order - 1)
    antider = np.empty((order, order))
    for k in range(order):
        coef = np.zeros(order)
        coef[k] = 1.0
        antider[:, k] = cheb.chebval(x, cheb.chebint(coef, lbnd=-1.0))
    return x, antider @ np.linalg.inv(vander)


def picard_grid(r, panels, order=PICARD_ORDER):
    """Nodes of ``panels`` equal panels on [0, r], shared endpoints merged."""
    x, _ = _reference_panel(order)
    edges = np.linspace(0.0, r, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (0.5 * (edges[:-1] + edges[1:]))[:, None] + half[:, None] * x[None, :]
    flat = np.concatenate([nodes[:, :-1].ravel(), [r]])
    flat[0] = 0.0
    return flat


def picard_panels(r, mu):
    return max(PICARD_MIN_PANELS, int(math.ceil(PICARD_PANELS_PER_UNIT * r * math.sqrt(max(mu, 1.0 / r**2)))))


def _panel_index(panels, order):
    return np.arange(panels)[:, None] * (order - 1) + np.arange(order)[None, :]


class _PicardOperator:
    """Precomputed pieces of T for one (manifold, r, grid)."""

    def __init__(self, m: Manifold, r, panels, order=PICARD_ORDER):
        self.r = float(r)
        self.panels, self.order = panels, order
        self.t = picard_grid(r, panels, order)
        self.idx = _panel_index(panels, order)
        _, self.S = _reference_panel(order)
        self.half = 0.5 * r / panels
        self.m = m.n - 1.0
        with np.errstate(all="ignore"):
            L = np.asarray(m.warping.value("log_f", self.t), dtype=float)
        L[0] = -np.inf
        if not np.all(np.isfinite(L[1:])):
            raise NonFinite("log f is not finite on the Picard grid")
        Lp = L[self.idx]
        ends = Lp[:, -1]
        starts = Lp[:, 0]
        with np.errstate(all="ignore"):
            # Weight of u(x) inside panel k relative to f(b_k)^(n-1).
            self.inner_weight = np.exp(self.m * (Lp - ends[:, None]))
            self.carry_scale = np.exp(self.m * (starts[:, None] - Lp))
            self.local_scale = np.exp(self.m * (ends[:, None] - Lp))
        self.carry_scale[0, :] = 0.0
        self.local_scale[0, 0] = 0.0
        self.ends = np.ascontiguousarray(ends)

    def ratio_integral(self, u):
        """int_0^s (f(x)/f(s))^(n-1) u(x) dx at every node s."""
        g = self.inner_weight * u[self.idx]
        local = self.half * (g @ self.S.T)
        offsets = kernels.panel_offsets(np.ascontiguousarray(local[:, -1]), self.ends, self.m)
        ratio = offsets[:, None] * self.carry_scale + local * self.local_scale
        ratio[0, 0] = 0.0
        return ratio

    def double_integral(self, u):
        ratio = self.ratio_integral(u)
        local = self.half * (ratio @ self.S.T)
        offsets = np.concatenate([[0.0], np.cumsum(local[:, -1])[:-1]])
        full = offsets[:, None] + local
        out = np.empty(self.t.shape[0])
        out[self.idx[:, :-1].ravel()] = full[:, :-1].ravel()
        out[-1] = full[-1, -1]
        return out

    def apply(self, u, mu, theta):
        return theta - mu * self.double_integral(u)


def apply_T(m: Manifold, r, u: RadialProfile, mu, theta):
    """One application of T to ``u``, returned on the same panel grid."""
    if mu < 0 or not theta > 0:
        raise DomainError("apply_T needs mu >= 0 and theta > 0")
    if not u.panels:
        raise DomainError("apply_T needs a profile sampled on a Picard panel grid")
    op = _PicardOperator(m, r, u.panels, u.order)
    if u.t.shape != op.t.shape or not np.allclose(u.t, op.t, rtol=0, atol=1e-12 * r):
        raise DomainError("profile grid does not match the panel layout")
    return RadialProfile(float(r), op.t, op.apply(u.u, mu, theta), float(mu), float(theta), u.panels, u.order)


def profile_on_grid(m: Manifold, r, g, mu, theta=1.0, panels=None, order=PICARD_ORDER):
    """Sample the callable ``g`` on the Picard grid as a :class:`RadialProfile`."""
    panels = picard_panels(r, mu) if panels is None else panels
    t = picard_grid(r, panels, order)
    return RadialProfile(float(r), t, np.asarray(g(t), dtype=float), float(mu), float(theta), panels, order)


def _picard_iterate(op, mu, theta, tol, max_iters):
    u = np.full(op.t.shape[0], float(theta))
    residuals = []
    for _ in range(max_iters):
        new = op.apply(u, mu, theta)
        if not np.all(np.isfinite(new)):
            raise NonFinite(f"Picard iterate overflowed at mu={mu!r}")
        change = float(np.max(np.abs(new - u)))
        residuals.append(change)
        u = new
        if change < tol:
            return u, residuals
    raise NoConvergence(
        f"Picard iteration did not reach {tol:g} in {max_iters} steps (last change {residuals[-1]:.3g})"
    )


def picard_radial_solution(m: Manifold, r, mu, theta=1.0, tol=1e-12, max_iters=500, panels=None,
                           order=PICARD_ORDER):
    """Fixed point of T by Picard iteration from u = theta."""
    if mu < 0 or not theta > 0:
        raise DomainError("picard_radial_solution needs mu >= 0 and theta > 0")
    geometry.check_radius(m, r)
    panels = picard_panels(r, mu) if panels is None else panels
    op = _PicardOperator(m, r, panels, order)
    u, residuals = _picard_iterate(op, mu, theta, tol * theta, max_iters)
    return RadialProfile(float(r), op.t, u, float(mu), float(theta), panels, order, tuple(residuals))


def first_eigenvalue_picard(m: Manifold, r, tol=1e-10, q=geometry.DEFAULT_QUADRATURE,
                            picard_tol=1e-12, max_iters=500):
    """First Dirichlet eigenvalue from the Picard solutions of T, to absolute ``tol``.

    mu is too large exactly when the fixed point dips to or below zero
    somewhere on the grid.
    """
    _check_dirichlet_radius(m, r)
    ops = {}

    def has_zero(mu):
        panels = picard_panels(r, mu)
        if panels not in ops:
            ops[panels] = _PicardOperator(m, r, panels)
        u, _ = _picard_iterate(ops[panels], mu, 1.0, picard_tol, max_iters)
        return float(np.min(u)) <= 0.0

    lo, hi = _initial_bracket(m, r, has_zero, q)
    # One grid for the whole bisection, fine enough for the top of the bracket.
    panels = picard_panels(r, hi)
    ops = {panels: ops.get(panels) or _PicardOperator(m, r, panels)}

    def has_zero_fixed(mu):
        u, _ = _picard_iterate(ops[panels], mu, 1.0, picard_tol, max_iters)
        return float(np.min(u)) <= 0.0

    return _bisect(has_zero_fixed, lo, hi, tol)


# --------------------------------------------------------------------------
# Reports

@dataclass
class BoundsReport:
    lower: float
    cheng_upper: float | None
    ricci_status: str
    lambda1: float | None = None
    lambda1_picard: float | None = None
    sandwich_ok: bool = True
    diagnostics: str = ""


def bounds_report(m: Manifold, r, tol=1e-10, q=geometry.DEFAULT_QUADRATURE, picard=True):
    """Lower bound, Cheng bound and computed eigenvalue(s) of B(r), with the sandwich verdict."""
    lower = bcg_lower_bound(m, r, q)
    cheng = cheng_upper_bound(m, r)
    lam = first_eigenvalue(m, r, tol, q=q)
    lam_p = first_eigenvalue_picard(m, r, tol, q=q) if picard else None
    notes = []
    ok = True
    for label, value in (("shooting", lam), ("picard", lam_p)):
        if value is None:
            continue
        if lower > value * (1 + SLACK):
            ok = False
            notes.append(f"lower bound {lower!r} exceeds {label} eigenvalue {value!r}")
        if cheng.value is not None and value > cheng.value * (1 + SLACK):
            ok = False
            notes.append(f"{label} eigenvalue {value!r} exceeds Cheng bound {cheng.value!r}")
    if cheng.value is None:
        where = f" at t={cheng.certificate.t!r}" if cheng.certificate.t is not None else ""
        notes.append(f"Cheng bound unavailable: Ricci {cheng.certificate.status}{where}")
    return BoundsReport(lower, cheng.value, cheng.certificate.status, lam, lam_p, ok, "; ".join(notes))


# --------------------------------------------------------------------------
# Fundamental tone

@dataclass
class ToneEstimate:
    value: float
    converged: bool
    radii: list
    values: list


def fundamental_tone(m: Manifold, tol=1e-2, r_max=80.0, r_start=1.0, workers=1, eig_tol=1e-10):
    """Limit of the first eigenvalue along the radii r_start * 2^k <= r_max.

    Converged once two successive values differ by less than ``tol``. With
    ``workers > 1`` all radii are evaluated concurrently; the scan for
    convergence is the same as in the sequential case, so results agree.
    """
    if not m.complete_with_pole:
        raise DomainError("the fundamental tone needs a manifold with a pole (R = inf)")
    radii = []
    r = r_start
    while r <= r_max:
        radii.append(r)
        r *= 2
    if not radii:
        raise DomainError("r_max is below the starting radius")

    def solve(radius):
        return first_eigenvalue(m, radius, eig_tol)

    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            all_values = list(pool.map(solve, radii))
        source = iter(all_values)
        compute = lambda _r: next(source)  # noqa: E731
    else:
        compute = solve
    used, values = [], []
    for radius in radii:
        values.append(compute(radius))
        used.append(radius)
        if len(values) >= 2 and abs(values[-1] - values[-2]) < tol:
            return ToneEstimate(values[-1], True, used, values)
    return ToneEstimate(values[-1], False, used, values)


@dataclass
class ToneLowerBound:
    value: float
    divergent: bool
    partial_integral: float
    tail_estimate: float


def fundamental_tone_lower_bound(m: Manifold, horizon=8.0, q=geometry.DEFAULT_QUADRATURE, verdict=None):
    """1 / integral of V/S over [0, inf); zero when that integral diverges.

    ``verdict`` may carry an already computed completeness classification.
    Raises :class:`~warpeig.errors.Inconclusive` when the tail cannot be
    classified.
    """
    from .errors import Inconclusive
    from .stochastic import classify_completeness

    if verdict is None:
        verdict = classify_completeness(m, horizon, q)
    if verdict.verdict == "complete":
        return ToneLowerBound(0.0, True, verdict.partial_integral, math.inf)
    if verdict.verdict == "incomplete":
        total = verdict.partial_integral + verdict.tail_estimate
        return ToneLowerBound(1.0 / total, False, verdict.partial_integral, verdict.tail_estimate)
    raise Inconclusive(f"cannot decide whether the integral of V/S converges: {verdict.diagnostics}")
