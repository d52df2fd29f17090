"""Provably optimal parameter shift rules.

A shift rule estimates a derivative ``d^alpha f(x)`` of a function whose
Fourier spectrum lies in a finite frequency set ``Xi`` from shifted values
``sum_a u_a f(x - a)``. This package minimizes the rule's cost
``sum |u_a|`` through the dual problem and certifies the result.
"""

__version__ = "0.1.0"

from .config import DEFAULT_CONFIG, SolverConfig
from .errors import (ActiveSetInfeasible, AsymmetricInput, DegenerateBasis, DimensionMismatch,
                     DimTooLarge, IrrationalSpectrum, IterationLimit, NonIntegralFrequencies,
                     NormExceeded, NotPointy, NumericalBreakdown, ParseError, ShiftForgeError,
                     UnsupportedDimension)
from .freqset import (FrequencySet, ScalingMap, diff_spectrum, from_points, from_xi_plus,
                      is_pointy, linear_image, pointy_vertex, product, scale_to_integers)
from .kernels import BACKEND_NAME
from .lp import LinearProgram, LPResult, Status, solve
from .optimize import (Certificate, DualSolution, analytic_dual, analytic_value, certify,
                       dual_from_function, recover_from_basis, solve_dual, sparse_recover)
from .pqcsim import CircuitSpec, HermitianOp, expectation_trigpoly, shot_noise_estimate
from .shiftrule import (ShiftRule, apply, cost, fourier_at, residual, rescale,
                        solve_fixed_support)
from .trigpoly import (DerivativeTarget, TrigPoly, derivative, evaluate, global_extrema,
                       neg_deriv_at_zero, random_in_space, sup_norm)

__all__ = [name for name in dir() if not name.startswith("_")]
