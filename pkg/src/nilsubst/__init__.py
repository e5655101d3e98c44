"""Symbolic substitutions on lattices of graded nilpotent Lie groups."""

from .group import (GradedGroup, LieAlgebra, NotNilpotentError, ValidationReport, abelian_group, algebra_257g,
                    bch_group, gmu_algebra, gmu_bch_group, gmu_group, heisenberg_algebra, heisenberg_group,
                    validate_group)
from .grading import GradingProblem, GradingSolution, solve_grading, verify_grading
from .lattice import (DatumError, DilationDatum, ball_lattice_points, count_ball_points, count_dilated_box,
                      enumerate_dilated_box, locate, radii_of_box, splitting)
from .substitution import (BudgetError, Fixpoint, Patch, SubstitutionDatum, build_good, fixpoint, fixpoint_eval,
                           is_legal, is_nonperiodic, is_primitive, iterate, substitute, substitute_pointwise,
                           support_vn)

__version__ = "0.1.0"
