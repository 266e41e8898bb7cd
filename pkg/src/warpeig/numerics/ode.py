"""Dormand-Prince 5(4) integrator with continuous (dense) output."""
from dataclasses import dataclass, field

import numpy as np

from ..errors import NonFinite, StepUnderflow

# Butcher tableau (shared with the jitted radial kernel).
C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
A = np.array([
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [1 / 5, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3 / 40, 9 / 40, 0.0, 0.0, 0.0, 0.0],
    [44 / 45, -56 / 15, 32 / 9, 0.0, 0.0, 0.0],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0.0, 0.0],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0.0],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
])
B = A[6].copy()
# Difference between the 5th- and embedded 4th-order weights.
E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])
# Coefficients of the order-4 continuous extension.
D = np.array([
    -12715105075 / 11282082432, 0.0, 87487479700 / 32700410799,
    -10690763975 / 1880347072, 701980252875 / 199316789632,
    -1453857185 / 822651844, 69997945 / 29380423,
])

SAFETY = 0.9
MIN_FACTOR = 0.2
MAX_FACTOR = 5.0


@dataclass
class Trajectory:
    """Accepted steps of an integration plus the data to interpolate them.

    ``times`` has shape (m,), ``states`` (m, d) and ``dense`` (m-1, 5, d)
    holds the per-step interpolation coefficients.
    """

    times: np.ndarray
    states: np.ndarray
    dense: np.ndarray = field(repr=False)
    order: int = 4

    @property
    def nodes(self):
        return list(zip(self.times, self.states))

    def __call__(self, t):
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr < self.times[0]) or np.any(t_arr > self.times[-1]):
            raise ValueError("dense output requested outside the integrated range")
        scalar = t_arr.ndim == 0
        t_arr = np.atleast_1d(t_arr)
        idx = np.clip(np.searchsorted(self.times, t_arr, side="right") - 1, 0, len(self.times) - 2)
        h = self.times[idx + 1] - self.times[idx]
        theta = ((t_arr - self.times[idx]) / h)[:, None]
        r = self.dense[idx]
        out = r[:, 0] + theta * (r[:, 1] + (1 - theta) * (r[:, 2] + theta * (r[:, 3] + (1 - theta) * r[:, 4])))
        return out[0] if scalar else out


# step underflow with the state this much above its start is a finite-time blow-up
BLOW_UP_GROWTH = 1e8


def _rms(x):
    return float(np.sqrt(np.mean(x * x)))


def solve_ivp(rhs, y0, t0, t1, tol=1e-10, max_steps=1_000_000):
    """Integrate ``y' = rhs(t, y)`` from ``t0`` to ``t1``.

    ``tol`` is used as both the relative and absolute local error tolerance.
    """
    if not t1 > t0:
        raise ValueError("solve_ivp requires t0 < t1")
    y = np.array(y0, dtype=float).ravel()
    blow_up_level = BLOW_UP_GROWTH * max(1.0, float(np.max(np.abs(y))))
    t = float(t0)
    k = np.empty((7, y.size))
    k[0] = rhs(t, y)
    if not np.all(np.isfinite(k[0])):
        raise NonFinite(f"rhs is not finite at t={t!r}")

    scale = tol + tol * np.abs(y)
    d0, d1 = _rms(y / scale), _rms(k[0] / scale)
    h = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    h = min(h, t1 - t)

    times, states, dense = [t], [y.copy()], []
    rejected = blew_up = False
    for _ in range(max_steps):
        if t >= t1:
            break
        if h < 10 * np.finfo(float).eps * max(1.0, abs(t)):
            if blew_up or np.max(np.abs(y)) > blow_up_level:
                raise NonFinite(f"solution is not finite beyond t={t!r}")
            raise StepUnderflow(f"step size {h:.3g} underflowed at t={t!r}")
        h = min(h, t1 - t)
        for i in range(1, 7):
            k[i] = rhs(t + C[i] * h, y + h * (A[i, :i] @ k[:i]))
        y_new = y + h * (B @ k[:6])
        k7 = k[6]
        if not np.all(np.isfinite(y_new)) or not np.all(np.isfinite(k7)):
            h *= 0.25
            rejected = blew_up = True
            continue
        blew_up = False
        err_vec = h * (E @ k)
        scale = tol + tol * np.maximum(np.abs(y), np.abs(y_new))
        err = _rms(err_vec / scale)
        if err <= 1.0:
            r1 = y
            r2 = y_new - y
            r3 = h * k[0] - r2
            r4 = r2 - h * k7 - r3
            r5 = h * (D @ k)
            dense.append(np.stack([r1, r2, r3, r4, r5]))
            t = t1 if t1 - (t + h) <= 1e-14 * abs(t1) else t + h
            y = y_new
            k[0] = k7
            times.append(t)
            states.append(y.copy())
            factor = MAX_FACTOR if err == 0 else min(MAX_FACTOR, SAFETY * err ** -0.2)
            if rejected:
                factor = min(factor, 1.0)
            h *= factor
            rejected = False
        else:
            h *= max(MIN_FACTOR, SAFETY * err ** -0.2)
            rejected = True
    else:
        raise StepUnderflow(f"exceeded {max_steps} steps before reaching t1={t1!r}")
    return Trajectory(np.array(times), np.array(states), np.array(dense).reshape(-1, 5, y.size))
