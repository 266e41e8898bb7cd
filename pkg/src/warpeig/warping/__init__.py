"""Warping functions: builtin model spaces and the expression language."""
from .expr import Expr, differentiate, evaluate, log_abs, log_derivative, parse_warping, to_string
from .program import Program, compile_expr
from .spec import (
    Manifold, ValidationReport, WarpingSpec, custom, euclidean, hyperbolic,
    make_manifold, sphere, validate_warping, warping_from_string,
)

__all__ = [
    "Expr", "Manifold", "Program", "ValidationReport", "WarpingSpec",
    "compile_expr", "custom", "differentiate", "euclidean", "evaluate",
    "hyperbolic", "log_abs", "log_derivative", "make_manifold", "parse_warping",
    "sphere", "to_string", "validate_warping", "warping_from_string",
]
