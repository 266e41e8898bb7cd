"""Eigenvalue bounds and completeness tests for rotationally symmetric manifolds."""
from ._jit import USE_NUMBA
from .errors import WarpeigError
from .geometry import (
    capacity_integral, exit_ratio, ricci_nonnegative, surface_area, volume,
)
from .spectral import (
    bcg_lower_bound, bounds_report, cheng_upper_bound, first_eigenvalue,
    first_eigenvalue_picard, fundamental_tone, fundamental_tone_lower_bound,
    picard_radial_solution,
)
from .stochastic import classify_completeness, dynamics_verdict
from .warping import Manifold, make_manifold, warping_from_string

__version__ = "0.1.0"
