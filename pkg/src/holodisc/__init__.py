"""Pseudo-holomorphic discs: exact disc transforms, a nonlinear Riemann-Hilbert
solver, reflection across the diameter, tangent lifts and norm diagnostics."""

from .acs import (AlmostComplexStructure, DeformationTensor, StructureField, TotallyRealBoundary,
                  deformation_from_j, is_totally_real, j_from_deformation, j_standard,
                  load_structure, normalize_coordinates)
from .diagnostics import (NormReport, RegularityIndex, convergence_study, holder_norm,
                          sobolev_norm, trace_norm)
from .grid import BoundaryFunction, DiscGrid, GridFunction, boundary_trace, d, dbar, make_disc_grid
from .kernels import BACKEND
from .lift import LiftedMap, LiftedStructure, lift_map, lift_structure, lift_totally_real
from .polynomial import PolarizedPolynomial
from .reflection import (HalfDiscFunction, analyticity_experiment, ext, halfdisc_map,
                         reflect_structure, verify_reflection)
from .rh_solver import (RHProblem, SolverError, SolverReport, estimate_gcz_constant,
                        neumann_inverse, phi_J, solve_linear_rh, solve_rh)
from .transforms import cauchy, cauchy_green, cauchy_green_poly, poisson, schwarz

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
