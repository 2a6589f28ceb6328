"""Exact tools for translation-invariant marginal and energy problems on the square lattice."""
from .errors import DomainError, ResourceError, StructuralError, TIMarginalError
from .exactlp import LinearProgram, Certificate, solve, feasibility, verify_certificate
from .lattice import (H, V, PLUS, MINUS, SITE, Distribution, MarginalSpec, Pattern, Region, rect,
                      marginalize, symmetrize_pattern, window_counts)
from .hierarchy import (Hamiltonian, EnergyBounds, energy_bounds, energy_lower_bound, energy_upper_bound,
                        square_feasible, strip_feasible)

__version__ = "0.1.0"
