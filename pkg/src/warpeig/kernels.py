"""Hot numerical loops.

Everything here is written in the numba-compatible subset of Python and is
compiled with ``njit`` unless ``WARPEIG_DISABLE_NUMBA`` is set, in which case
the same functions run as ordinary Python. Kernels never raise: they return a
status code that the calling module turns into an exception.
"""
import math

import numpy as np

from ._jit import jit
from .numerics.ode import A as _A
from .numerics.ode import D as _D
from .numerics.ode import E as _E
from .numerics.quadrature import GWEIGHTS21, KWEIGHTS21, NODES21

OK, NONFINITE, BUDGET, UNDERFLOW = 0, 1, 2, 3

RK_A = np.ascontiguousarray(_A)
RK_E = np.ascontiguousarray(_E)
RK_D = np.ascontiguousarray(_D)
GK_X = np.ascontiguousarray(NODES21)
GK_WK = np.ascontiguousarray(KWEIGHTS21)
GK_WG = np.ascontiguousarray(GWEIGHTS21)
LOG2 = math.log(2.0)
EPS = 2.220446049250313e-16
# log f is known to about EPS*|log f|; the exponent difference inherits it
NOISE_FACTOR = 8.0


# --------------------------------------------------------------------------
# Program interpreter. The scalar helpers give IEEE results (inf/nan) in
# both modes instead of the exceptions plain Python math would raise.

@jit
def _div(a, b):
    if b == 0.0:
        if a == 0.0 or a != a:
            return math.nan
        return math.inf if (a > 0.0) == (math.copysign(1.0, b) > 0.0) else -math.inf
    return a / b


@jit
def _log(x):
    if x > 0.0:
        return math.log(x)
    if x == 0.0:
        return -math.inf
    return math.nan


@jit
def _exp(x):
    if x > 709.0:
        return math.inf
    return math.exp(x)


@jit
def _sinh(x):
    if abs(x) > 709.0:
        return math.copysign(math.inf, x)
    return math.sinh(x)


@jit
def _cosh(x):
    if abs(x) > 709.0:
        return math.inf
    return math.cosh(x)


@jit
def _pow(a, b):
    if a != a or b != b:
        return math.nan
    if b == math.floor(b) and abs(b) <= 64.0:
        k = int(abs(b))
        result = 1.0
        base = a
        while k > 0:
            if k & 1:
                result *= base
            base *= base
            k >>= 1
        if b < 0.0:
            return _div(1.0, result)
        return result
    if a < 0.0:
        return math.nan
    if a == 0.0:
        return 0.0 if b > 0.0 else math.inf
    return _exp(b * math.log(a))


@jit
def _lsinh(x):
    ax = abs(x)
    if ax == 0.0:
        return -math.inf
    if ax < 1e-3:
        # log(sinh x) = log x + x^2/6 - x^4/180
        return math.log(ax) + ax * ax / 6.0 - ax ** 4 / 180.0
    return ax + math.log1p(-math.exp(-2.0 * ax)) - LOG2


@jit
def _lcosh(x):
    ax = abs(x)
    return ax + math.log1p(math.exp(-2.0 * ax)) - LOG2


@jit
def eval_program(code, consts, t, stack):
    sp = 0
    for i in range(code.shape[0]):
        op = code[i, 0]
        if op == 0:
            stack[sp] = t
            sp += 1
        elif op == 1:
            stack[sp] = consts[code[i, 1]]
            sp += 1
        elif op <= 6:
            b = stack[sp - 1]
            a = stack[sp - 2]
            sp -= 1
            if op == 2:
                stack[sp - 1] = a + b
            elif op == 3:
                stack[sp - 1] = a - b
            elif op == 4:
                stack[sp - 1] = a * b
            elif op == 5:
                stack[sp - 1] = _div(a, b)
            else:
                stack[sp - 1] = _pow(a, b)
        else:
            x = stack[sp - 1]
            if op == 7:
                y = -x
            elif op == 10:
                y = math.sin(x)
            elif op == 11:
                y = math.cos(x)
            elif op == 12:
                y = _sinh(x)
            elif op == 13:
                y = _cosh(x)
            elif op == 14:
                y = _exp(x)
            elif op == 15:
                y = _log(x)
            elif op == 16:
                y = math.sqrt(x) if x >= 0.0 else math.nan
            elif op == 17:
                y = math.tanh(x)
            elif op == 18:
                y = _lsinh(x)
            elif op == 19:
                y = _lcosh(x)
            else:
                y = _div(1.0, math.tanh(x))
            stack[sp - 1] = y
    return stack[0]


@jit
def eval_program_array(code, consts, ts, stack):
    out = np.empty(ts.shape[0])
    for i in range(ts.shape[0]):
        out[i] = eval_program(code, consts, ts[i], stack)
    return out


# --------------------------------------------------------------------------
# Adaptive Gauss-Kronrod over an integrand ``fn(x, args)``.

@jit(cache=False)
def _gk21(fn, args, a, b):
    c = 0.5 * (a + b)
    h = 0.5 * (b - a)
    k = 0.0
    g = 0.0
    finite = True
    for i in range(21):
        v = fn(c + h * GK_X[i], args)
        if not math.isfinite(v):
            finite = False
        k += GK_WK[i] * v
        g += GK_WG[i] * v
    return h * k, abs(h * (k - g)), finite


@jit(cache=False)
def adaptive_gk(fn, args, a, b, rtol, atol, maxsub):
    """Returns (integral, error estimate, status)."""
    if b <= a:
        return 0.0, 0.0, OK
    lo = np.empty(maxsub)
    hi = np.empty(maxsub)
    val = np.empty(maxsub)
    err = np.empty(maxsub)
    v, e, finite = _gk21(fn, args, a, b)
    if not finite:
        return v, e, NONFINITE
    lo[0] = a
    hi[0] = b
    val[0] = v
    err[0] = e
    count = 1
    total = v
    total_err = e
    while total_err > max(atol, rtol * abs(total)):
        if count >= maxsub:
            return total, total_err, BUDGET
        worst = 0
        for i in range(1, count):
            if err[i] > err[worst]:
                worst = i
        m = 0.5 * (lo[worst] + hi[worst])
        v1, e1, f1 = _gk21(fn, args, lo[worst], m)
        v2, e2, f2 = _gk21(fn, args, m, hi[worst])
        if not (f1 and f2):
            return total, total_err, NONFINITE
        total += v1 + v2 - val[worst]
        total_err += e1 + e2 - err[worst]
        lo[count] = m
        hi[count] = hi[worst]
        val[count] = v2
        err[count] = e2
        hi[worst] = m
        val[worst] = v1
        err[worst] = e1
        count += 1
    total = 0.0
    for i in range(count):
        total += val[i]
    return total, total_err, OK


# --------------------------------------------------------------------------
# Warped-product integrals

@jit
def _power_integrand(s, args):
    code, consts, stack, n = args
    return _pow(eval_program(code, consts, s, stack), n - 1.0)


@jit(cache=False)
def warped_power_integral(code, consts, n, a, b, rtol, atol, maxsub):
    """Integral of f(s)^(n-1) over [a, b]."""
    stack = np.empty(64)
    return adaptive_gk(_power_integrand, (code, consts, stack, float(n)), a, b, rtol, atol, maxsub)


@jit
def _ratio_integrand(s, args):
    code, consts, stack, m, shift = args
    return _exp(m * (eval_program(code, consts, s, stack) - shift))


@jit(cache=False)
def exit_ratio(logf_code, logf_consts, dlogf_code, dlogf_consts, n, sigma,
               c2, c3, eps, rtol, atol, maxsub):
    """V(sigma)/S(sigma) as the integral of exp((n-1)(log f(s) - log f(sigma))).

    Below ``eps`` the series sigma/n + c2 sigma^2 + c3 sigma^3 is returned.
    The integration range is split geometrically towards sigma so that a
    sharply peaked integrand (fast-growing f) is resolved.
    """
    if sigma <= 0.0:
        return 0.0, OK
    if sigma < eps:
        return sigma / n + c2 * sigma * sigma + c3 * sigma ** 3, OK
    stack = np.empty(64)
    m = n - 1.0
    shift = eval_program(logf_code, logf_consts, sigma, stack)
    slope = abs(m * eval_program(dlogf_code, dlogf_consts, sigma, stack))
    if not (math.isfinite(shift) and math.isfinite(slope)):
        return math.nan, NONFINITE
    levels = 3
    scale = sigma * slope
    if scale > 1.0:
        levels += int(math.ceil(math.log(scale) / LOG2))
    if levels > 60:
        levels = 60
    args = (logf_code, logf_consts, stack, m, shift)
    rtol = max(rtol, _log_noise(m, shift))
    piece_atol = atol / (levels + 1)
    total = 0.0
    left = 0.0
    width = 0.5 * sigma
    for k in range(levels + 1):
        right = sigma - width if k < levels else sigma
        v, e, status = adaptive_gk(_ratio_integrand, args, left, right, rtol, piece_atol, maxsub)
        if status != OK:
            return math.nan, status
        total += v
        left = right
        width *= 0.5
    return total, OK


@jit
def _log_noise(m, log_value):
    """Relative accuracy floor of exp(m * (L(s) - L(sigma))) given |L| ~ log_value."""
    return NOISE_FACTOR * EPS * m * abs(log_value)


@jit(cache=False)
def _exit_ratio_integrand(sigma, args):
    lc, lk, dc, dk, n, c2, c3, eps, rtol, atol, maxsub = args
    v, status = exit_ratio(lc, lk, dc, dk, n, sigma, c2, c3, eps, rtol, atol, maxsub)
    if status != OK:
        return math.nan
    return v


@jit(cache=False)
def capacity_integral(logf_code, logf_consts, dlogf_code, dlogf_consts, n, a, b,
                      c2, c3, eps, rtol, atol, maxsub):
    """Integral of the exit ratio over [a, b]; inner tolerances are 10x tighter.

    ``rtol`` is raised to 10x the cancellation floor of log f at ``b``.
    """
    args = (logf_code, logf_consts, dlogf_code, dlogf_consts, float(n),
            c2, c3, eps, 0.1 * rtol, 0.1 * atol, maxsub)
    if b > eps:
        stack = np.empty(64)
        noise = 10.0 * _log_noise(n - 1.0, eval_program(logf_code, logf_consts, b, stack))
        if math.isfinite(noise):
            rtol = max(rtol, noise)
    return adaptive_gk(_exit_ratio_integrand, args, a, b, rtol, atol, maxsub)


# --------------------------------------------------------------------------
# Radial shooting: u'' + (n-1)(f'/f) u' + lam u = 0, u(0)=1, u'(0)=0.

@jit
def _radial_rhs(t, u, v, code, consts, stack, m, lam):
    return v, -m * eval_program(code, consts, t, stack) * v - lam * u


@jit
def _hermite_u(r1, r2, r3, r4, r5, theta):
    return r1 + theta * (r2 + (1.0 - theta) * (r3 + theta * (r4 + (1.0 - theta) * r5)))


@jit
def shoot(dlogf_code, dlogf_consts, n, lam, t0, t_end, rtol, atol,
          scan_density, stop_at_zero, t_eval, u_eval):
    """Integrate the radial equation from t0 (Taylor seed) to t_end.

    Returns (first zero or inf, u(t_end), status, steps). Values of u at the
    ascending times ``t_eval`` are written into ``u_eval`` from the dense
    output; times below t0 use the Taylor seed.
    """
    stack = np.empty(64)
    m = n - 1.0
    u = 1.0 - lam * t0 * t0 / (2.0 * n)
    v = -lam * t0 / n
    t = t0
    n_eval = t_eval.shape[0]
    j = 0
    while j < n_eval and t_eval[j] <= t0:
        u_eval[j] = 1.0 - lam * t_eval[j] ** 2 / (2.0 * n)
        j += 1
    ku = np.empty(7)
    kv = np.empty(7)
    ku[0], kv[0] = _radial_rhs(t, u, v, dlogf_code, dlogf_consts, stack, m, lam)
    h = 0.1 * t0
    zero = math.inf
    rejected = False
    steps = 0
    eps_mach = 2.220446049250313e-16
    while t < t_end:
        if h < 10.0 * eps_mach * max(1.0, abs(t)):
            return zero, u, UNDERFLOW, steps
        if steps > 50_000_000:
            return zero, u, BUDGET, steps
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True
        for i in range(1, 7):
            su = 0.0
            sv = 0.0
            for q in range(i):
                su += RK_A[i, q] * ku[q]
                sv += RK_A[i, q] * kv[q]
            ci = 0.0
            for q in range(i):
                ci += RK_A[i, q]
            ku[i], kv[i] = _radial_rhs(t + ci * h, u + h * su, v + h * sv,
                                       dlogf_code, dlogf_consts, stack, m, lam)
        # 7th stage is the FSAL evaluation at the new point.
        u_new = u + h * (RK_A[6, 0] * ku[0] + RK_A[6, 2] * ku[2] + RK_A[6, 3] * ku[3]
                         + RK_A[6, 4] * ku[4] + RK_A[6, 5] * ku[5])
        v_new = v + h * (RK_A[6, 0] * kv[0] + RK_A[6, 2] * kv[2] + RK_A[6, 3] * kv[3]
                         + RK_A[6, 4] * kv[4] + RK_A[6, 5] * kv[5])
        if not (math.isfinite(u_new) and math.isfinite(v_new) and math.isfinite(ku[6]) and math.isfinite(kv[6])):
            h *= 0.25
            rejected = True
            steps += 1
            continue
        eu = 0.0
        ev = 0.0
        for q in range(7):
            eu += RK_E[q] * ku[q]
            ev += RK_E[q] * kv[q]
        eu *= h
        ev *= h
        size = max(max(abs(u), abs(v)), max(abs(u_new), abs(v_new)))
        sc = atol + rtol * size
        err = math.sqrt(0.5 * ((eu / sc) ** 2 + (ev / sc) ** 2))
        steps += 1
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            rejected = True
            continue
        r1 = u
        r2 = u_new - u
        r3 = h * ku[0] - r2
        r4 = r2 - h * ku[6] - r3
        r5 = 0.0
        for q in range(7):
            r5 += RK_D[q] * ku[q]
        r5 *= h
        t_new = t_end if last else t + h
        if zero == math.inf:
            # Scan the interpolant for the first sign change in this step.
            npts = int(scan_density * h) + 1
            prev_theta = 0.0
            prev_u = u
            found = False
            for p in range(1, npts + 1):
                theta = p / npts
                cur = u_new if p == npts else _hermite_u(r1, r2, r3, r4, r5, theta)
                if cur == 0.0 or (cur < 0.0) != (prev_u < 0.0):
                    a_th = prev_theta
                    b_th = theta
                    fa = prev_u
                    for _ in range(200):
                        if b_th - a_th <= 1e-16:
                            break
                        mid = 0.5 * (a_th + b_th)
                        fm = _hermite_u(r1, r2, r3, r4, r5, mid)
                        if fm == 0.0:
                            a_th = mid
                            b_th = mid
                            break
                        if (fm < 0.0) == (fa < 0.0):
                            a_th = mid
                            fa = fm
                        else:
                            b_th = mid
                    zero = t + 0.5 * (a_th + b_th) * h
                    if cur == 0.0 and p == npts:
                        zero = t_new
                    found = True
                    break
                prev_theta = theta
                prev_u = cur
            if found and stop_at_zero:
                return zero, u_new, OK, steps
        while j < n_eval and t_eval[j] <= t_new:
            theta = (t_eval[j] - t) / h
            u_eval[j] = _hermite_u(r1, r2, r3, r4, r5, theta)
            j += 1
        t = t_new
        u = u_new
        v = v_new
        ku[0] = ku[6]
        kv[0] = kv[6]
        factor = 5.0 if err == 0.0 else min(5.0, 0.9 * err ** -0.2)
        if rejected:
            factor = min(factor, 1.0)
        rejected = False
        h *= factor
    return zero, u, OK, steps


@jit
def panel_offsets(totals, log_f_ends, m):
    """Scaled running integrals across panels.

    ``totals[k]`` is the integral over panel k divided by f(b_k)^m, where b_k
    is the right end of the panel and ``log_f_ends[k]`` = log f(b_k). The
    result at k is the integral over [0, a_k] divided by f(a_k)^m.
    """
    out = np.zeros(totals.shape[0])
    for k in range(1, totals.shape[0]):
        carry = out[k - 1]
        if carry != 0.0:
            carry *= math.exp(m * (log_f_ends[k - 2] - log_f_ends[k - 1])) if k >= 2 else 0.0
        out[k] = carry + totals[k - 1]
    return out
