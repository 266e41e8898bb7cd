"""Stochastic completeness from the growth of V/S.

A manifold with a pole is stochastically complete exactly when the integral
of V(r)/S(r) over [0, inf) diverges. Divergence cannot be decided from
finitely many samples, so the tail is judged from the log-log slope of V/S
at three horizons and from how the partial integrals grow; anything between
the two clear regimes is reported as inconclusive.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from . import geometry
from .errors import DomainError, WarpeigError
from .warping.spec import Manifold

SLOPE_DEAD_ZONE = 0.05
SLOPE_STEP = 0.01
DEFAULT_HORIZON = 8.0

COMPLETE, INCOMPLETE, INCONCLUSIVE = "complete", "incomplete", "inconclusive"


@dataclass
class CompletenessVerdict:
    verdict: str
    partial_integral: float
    tail_slope: float
    horizons: list
    slopes: list = field(default_factory=list)
    increments: list = field(default_factory=list)
    tail_estimate: float = math.nan
    diagnostics: str = ""


def log_log_slope(m: Manifold, sigma, q=geometry.DEFAULT_QUADRATURE, step=SLOPE_STEP):
    """d log(V/S) / d log(sigma) by a central difference in log sigma."""
    up = geometry.exit_ratio(m, sigma * math.exp(step), q)
    down = geometry.exit_ratio(m, sigma * math.exp(-step), q)
    return (math.log(up) - math.log(down)) / (2 * step)


def classify_completeness(m: Manifold, base_horizon=DEFAULT_HORIZON, q=geometry.DEFAULT_QUADRATURE):
    """Complete, incomplete or inconclusive, from horizons H, 2H and 4H."""
    if not m.complete_with_pole:
        raise DomainError(
            f"completeness test needs a manifold with a pole (R = inf), got R={m.extent!r}"
        )
    if base_horizon < 4:
        raise DomainError("base_horizon must be >= 4")
    horizons = [base_horizon, 2 * base_horizon, 4 * base_horizon]
    try:
        c1 = geometry.capacity_integral(m, horizons[0], q)
        inc1 = geometry.capacity_integral(m, horizons[1], q, lo=horizons[0])
        inc2 = geometry.capacity_integral(m, horizons[2], q, lo=horizons[1])
        slopes = [log_log_slope(m, h, q) for h in horizons]
        tail_ratio = geometry.exit_ratio(m, horizons[2], q)
    except (WarpeigError, ValueError, OverflowError) as exc:
        return CompletenessVerdict(INCONCLUSIVE, math.nan, math.nan, horizons,
                                   diagnostics=f"quadrature failed: {exc}")
    partial = c1 + inc1 + inc2
    increments = [inc1, inc2]
    base = dict(partial_integral=partial, tail_slope=slopes[-1], horizons=horizons,
                slopes=slopes, increments=increments)
    if all(p >= -1 + SLOPE_DEAD_ZONE for p in slopes) and inc2 >= inc1:
        return CompletenessVerdict(
            COMPLETE, **base, tail_estimate=math.inf,
            diagnostics=f"V/S slope {slopes[-1]:.3f} >= -1 and partial integrals keep growing",
        )
    if all(p <= -1 - SLOPE_DEAD_ZONE for p in slopes) and inc2 < inc1:
        # Power-law tail: integral of V/S beyond 4H with the slope measured there.
        tail = tail_ratio * horizons[2] / (-slopes[-1] - 1)
        return CompletenessVerdict(
            INCOMPLETE, **base, tail_estimate=tail,
            diagnostics=f"V/S slope {slopes[-1]:.3f} < -1 and increments shrink by {inc2 / inc1:.3g}",
        )
    return CompletenessVerdict(
        INCONCLUSIVE, **base,
        diagnostics=f"slopes {', '.join(f'{p:.3f}' for p in slopes)} inside or across the dead zone",
    )


@dataclass
class DynamicsVerdict:
    stochastic: CompletenessVerdict
    tone_lower_bound: float | None
    tone_positive: bool
    transient_flag: bool | None


def dynamics_verdict(m: Manifold, horizon=DEFAULT_HORIZON, q=geometry.DEFAULT_QUADRATURE):
    """Combine the completeness test with the lower bound for the fundamental tone.

    Incompleteness forces a positive tone bound, and a positive tone makes the
    manifold transient. A divergent integral only gives the trivial bound 0,
    so then nothing is claimed about the tone or about transience.
    """
    from .spectral import fundamental_tone_lower_bound

    verdict = classify_completeness(m, horizon, q)
    if verdict.verdict == INCONCLUSIVE:
        return DynamicsVerdict(verdict, None, False, None)
    bound = fundamental_tone_lower_bound(m, horizon, q, verdict=verdict)
    if verdict.verdict == INCOMPLETE:
        if not bound.value > 0:
            raise AssertionError(f"incomplete manifold with non-positive tone bound {bound.value!r}")
        return DynamicsVerdict(verdict, bound.value, True, True)
    return DynamicsVerdict(verdict, bound.value, False, None)
