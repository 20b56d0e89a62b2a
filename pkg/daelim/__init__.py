"""Index reduction and differential-algebraic elimination for polynomial DAE systems."""

from .dsl import DAESystem, load_system, parse_system, render_polynomial, render_system
from .elim import (EliminationResult, build_elimination_matrix, differential_algebraic_resultant,
                   eliminate_each)
from .errors import DaelimError, NotReducible, ResultantVanishes, ToleranceExceeded
from .reduction import ReductionResult, build_variable_pencil, reduce_index
from .symcore import Polynomial, Symbol, total_derivative
from .trajectory import evaluate_residual, load_trajectory, parse_trajectory
