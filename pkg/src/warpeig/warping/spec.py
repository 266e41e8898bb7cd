"""Warping functions f(t) of rotationally symmetric metrics dt^2 + f(t)^2 dtheta^2."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, ParseError, ValidationError
from .expr import (
    Const, Div, Expr, Neg, T,
    differentiate, func, log_abs, log_derivative, parse_warping,
)
from .program import Program, compile_expr

F0_TOL = 1e-12
DF0_TOL = 1e-9
MAX_PROGRAM_DEPTH = 64
BUILTINS = ("sphere", "euclidean", "hyperbolic")


@dataclass(frozen=True)
class WarpingSpec:
    """A warping function together with its derivatives and log-space forms.

    ``f``, ``df``, ``ddf`` and ``dddf`` are expression trees; ``log_f`` is
    log|f| and ``dlog_f`` is f'/f, both rewritten so they stay finite where
    f itself overflows. Builtins carry closed forms for all of them.
    """

    kind: str
    extent: float
    f: Expr
    df: Expr
    ddf: Expr
    dddf: Expr
    log_f: Expr
    dlog_f: Expr
    source: str = ""
    programs: dict = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.extent > 0:
            raise DomainError(f"extent must be positive, got {self.extent!r}")
        progs = {}
        for name in ("f", "df", "ddf", "log_f", "dlog_f"):
            prog = compile_expr(getattr(self, name))
            if prog.depth > MAX_PROGRAM_DEPTH:
                raise ParseError(f"expression nests deeper than {MAX_PROGRAM_DEPTH} levels", 0)
            progs[name] = prog
        object.__setattr__(self, "programs", progs)

    @property
    def is_builtin(self):
        return self.kind in BUILTINS

    @property
    def name(self):
        return self.kind if self.is_builtin else f"expr:{self.source}"

    def program(self, name) -> Program:
        return self.programs[name]

    def value(self, name, t):
        """Evaluate one of the stored expressions at ``t`` (scalar or array)."""
        out = getattr(self, name)(np.asarray(t, dtype=float))
        return float(out) if np.ndim(out) == 0 else out

    def at_pole(self, name):
        """Value at t=0, or the value at t=1e-8 when undefined at 0."""
        v = self.value(name, 0.0)
        if not math.isfinite(v):
            v = self.value(name, 1e-8)
        return v


def sphere():
    s, c = func("sin", T), func("cos", T)
    return WarpingSpec("sphere", math.pi, s, c, Neg(s), Neg(c), func("log", s), Div(c, s), "sin(t)")


def euclidean():
    return WarpingSpec(
        "euclidean", math.inf, T, Const(1.0), Const(0.0), Const(0.0),
        func("log", T), Div(Const(1.0), T), "t",
    )


def hyperbolic():
    s, c = func("sinh", T), func("cosh", T)
    return WarpingSpec("hyperbolic", math.inf, s, c, s, c, func("lsinh", T), func("coth", T), "sinh(t)")


def custom(text, extent=math.inf):
    """Warping from an expression in the variable ``t``."""
    f = parse_warping(text)
    df = differentiate(f)
    ddf = differentiate(df)
    return WarpingSpec(
        "custom", float(extent), f, df, ddf, differentiate(ddf),
        log_abs(f), log_derivative(f), text.strip(),
    )


_BUILTIN_FACTORIES = {"sphere": sphere, "euclidean": euclidean, "hyperbolic": hyperbolic}


def warping_from_string(text, extent=None):
    """Resolve ``sphere``, ``euclidean``, ``hyperbolic`` or ``expr:<expression>``."""
    key = text.strip()
    if key.lower() in _BUILTIN_FACTORIES:
        if extent is not None:
            raise DomainError(f"builtin metric {key!r} has a fixed extent")
        return _BUILTIN_FACTORIES[key.lower()]()
    if key.startswith("expr:"):
        return custom(key[5:], math.inf if extent is None else extent)
    raise ParseError(f"unknown metric {text!r}", 0, set(BUILTINS) | {"expr:<expression>"})


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    failures: tuple
    f_at_0: float
    df_at_0: float
    min_sampled_f: float


def validate_warping(w: WarpingSpec, samples=256):
    """Check f(0)=0, f'(0)=1 and f>0 on a log-spaced grid up to min(R, 50)."""
    if samples < 16:
        raise ValueError("samples must be >= 16")
    failures = []
    f0 = w.value("f", 0.0)
    if not (math.isfinite(f0) and abs(f0) <= F0_TOL):
        failures.append(f"f(0)={f0!r} is not 0 (tolerance {F0_TOL:g})")
    df0 = w.at_pole("df")
    if not (math.isfinite(df0) and abs(df0 - 1.0) <= DF0_TOL):
        failures.append(f"f'(0)={df0!r} is not 1 (tolerance {DF0_TOL:g})")
    top = min(w.extent, 50.0)
    grid = np.geomspace(min(1e-6, top / samples), top, samples)
    values = w.value("f", grid)
    bad = ~(values > 0)
    if bad.any():
        t_bad = float(grid[np.argmax(bad)])
        failures.append(f"f(t) <= 0 or undefined at t={t_bad!r}")
    return ValidationReport(not failures, tuple(failures), f0, df0, float(np.nanmin(values)))


@dataclass(frozen=True)
class Manifold:
    """Rotationally symmetric manifold [0, R) x S^(n-1) with a pole at t=0."""

    n: int
    warping: WarpingSpec

    @property
    def extent(self):
        return self.warping.extent

    @property
    def complete_with_pole(self):
        return math.isinf(self.extent)

    def __str__(self):
        return f"{self.warping.name} (n={self.n})"


def make_manifold(warping, n, samples=256):
    """Bind dimension ``n`` to a validated warping.

    ``warping`` may also be a metric string accepted by
    :func:`warping_from_string`.
    """
    if isinstance(warping, str):
        warping = warping_from_string(warping)
    if int(n) != n or n < 2:
        raise ValidationError([f"dimension must be an integer >= 2, got {n!r}"])
    report = validate_warping(warping, samples)
    if not report.ok:
        raise ValidationError(report.failures)
    return Manifold(int(n), warping)
