"""Numerical experiments on entire functions sum a_n z^n / n! with |a_n| = 1."""
from .coeffs import (CoefficientSequence, combine_Q, make_exponential, make_hardy, make_psi_phase,
                     make_quadratic_phase, make_rational_phase, make_theorem5)
from .evaluate import eval_f, eval_fprime, eval_G, eval_grid, GridSpec
from .zeros import SectorBox, count_zeros, locate_zeros, winding_number

__all__ = [
    "CoefficientSequence", "combine_Q", "make_exponential", "make_hardy", "make_psi_phase",
    "make_quadratic_phase", "make_rational_phase", "make_theorem5", "eval_f", "eval_fprime", "eval_G",
    "eval_grid", "GridSpec", "SectorBox", "count_zeros", "locate_zeros", "winding_number",
]
__version__ = "0.1.0"
