"""Numerical laboratory for variations of weighted Bergman kernels of planar domains."""

__version__ = "0.1.0"

from .bergman import BergmanSpace, RadialBump, Weight, bergman_space, kernel_eval
from .errors import BergvarError, ConfigError, NumericalFailure
from .family import AffineMotion, DeformationFamily, PolynomialMotion, RadialFamily, TrivialMotion
from .geometry import boundary_quadrature, build_reference_quadrature, invert_fiber_map, pushforward_area
from .variation import VariationConfig, build_stencil, variation_identity, variation_inequality

__all__ = [
    "AffineMotion",
    "BergmanSpace",
    "BergvarError",
    "ConfigError",
    "DeformationFamily",
    "NumericalFailure",
    "PolynomialMotion",
    "RadialBump",
    "RadialFamily",
    "TrivialMotion",
    "VariationConfig",
    "Weight",
    "bergman_space",
    "boundary_quadrature",
    "build_reference_quadrature",
    "build_stencil",
    "invert_fiber_map",
    "kernel_eval",
    "pushforward_area",
    "variation_identity",
    "variation_inequality",
]
