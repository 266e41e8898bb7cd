"""Self-contained numerical kernel: quadrature, ODEs, roots, Bessel zeros."""
from .bessel import bessel_first_zero, bessel_j, bessel_j_prime, gamma_half_integer
from .ode import Trajectory, solve_ivp
from .quadrature import DEFAULT_QUADRATURE, Quadrature, integrate
from .roots import bisect_root

__all__ = [
    "DEFAULT_QUADRATURE",
    "Quadrature",
    "Trajectory",
    "bessel_first_zero",
    "bessel_j",
    "bessel_j_prime",
    "bisect_root",
    "gamma_half_integer",
    "integrate",
    "solve_ivp",
]
