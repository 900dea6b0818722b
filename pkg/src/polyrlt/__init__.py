"""Global optimization of box-constrained polynomial programs with RLT.

Typical use::

    from polyrlt import parse_problem, solve, SolveOptions
    report = solve(parse_problem(text), SolveOptions(scheme="quadrlt"))
"""

from .algebra import Multiset, Polynomial, VarKey, atom, aux, canonicalize, complement, evaluate, expand_product, is_submultiset, union
from .bench import RootStats, compare, root_stats
from .bnb import SolveOptions, SolveReport, compute_gap, select_branching_variable, solve
from .estimators import Quadrifier, RLTSolver
from .exceptions import (
    DimensionMismatch,
    EmptyObjective,
    InvalidConfig,
    NegativeLowerBound,
    NoIncumbent,
    NotSubmultiset,
    NoViolation,
    NumericalFailure,
    PolyRLTError,
    ProblemSyntaxError,
    ResourceLimit,
    UnboundedKey,
    UnknownVariable,
)
from .lp import LPSolution, solve_lp
from .problem import (
    Constraint,
    GeneratorConfig,
    PolynomialProgram,
    generate_instance,
    load_problem,
    parse_problem,
    random_base,
    serialize_problem,
)
from .reduction import (
    ReducedProgram,
    apply_quadrlt,
    apply_scheme1,
    apply_scheme2,
    apply_scheme3,
    parse_reduced,
    reduce_program,
    serialize_reduced,
)
from .rlt import LinearRelaxation, aux_bounds, bound_factor_block, build_relaxation, compute_jsets, linearize, write_mps

__version__ = "0.1.0"

__all__ = [
    "Constraint",
    "DimensionMismatch",
    "EmptyObjective",
    "GeneratorConfig",
    "InvalidConfig",
    "LPSolution",
    "LinearRelaxation",
    "Multiset",
    "NegativeLowerBound",
    "NoIncumbent",
    "NoViolation",
    "NotSubmultiset",
    "NumericalFailure",
    "PolyRLTError",
    "Polynomial",
    "PolynomialProgram",
    "ProblemSyntaxError",
    "Quadrifier",
    "RLTSolver",
    "ReducedProgram",
    "ResourceLimit",
    "RootStats",
    "SolveOptions",
    "SolveReport",
    "UnboundedKey",
    "UnknownVariable",
    "VarKey",
    "apply_quadrlt",
    "apply_scheme1",
    "apply_scheme2",
    "apply_scheme3",
    "atom",
    "aux",
    "aux_bounds",
    "bound_factor_block",
    "build_relaxation",
    "canonicalize",
    "compare",
    "complement",
    "compute_gap",
    "compute_jsets",
    "evaluate",
    "expand_product",
    "generate_instance",
    "is_submultiset",
    "linearize",
    "load_problem",
    "parse_problem",
    "parse_reduced",
    "random_base",
    "reduce_program",
    "root_stats",
    "select_branching_variable",
    "serialize_problem",
    "serialize_reduced",
    "solve",
    "solve_lp",
    "union",
    "write_mps",
]
