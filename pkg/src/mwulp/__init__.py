"""Multiplicative-weight-update solver for positive (packing/covering) LPs.

The solver works on any pair of nonnegative linear operators ``P`` and ``C``
and never materializes them; graph problems are expressed through implicit
incidence-style operators and a compressed-sparse-blocks matrix format.
"""

from mwulp.implicit import IncidenceOp, InterweaveOp, PairOp
from mwulp.model import (CsbOperator, DenseRowOperator, LinearOperator, MixedInstance, Mode,
                         RowScaledOperator, TransposedOperator, as_operator, validate)
from mwulp.oracle import verify_solution
from mwulp.problems import (ProblemKind, ProblemSpec, build_bipartite_matching,
                            build_densest_feasibility, build_dominating_set,
                            build_generalized_matching, build_matching, build_vertex_cover,
                            solve_densest, solve_problem)
from mwulp.solver import (SolverConfig, Status, StepMode, solve_feasibility, solve_pure_covering,
                          solve_pure_packing)
from mwulp.sparse import CooMatrix, CsbMatrix, Graph, build_csb, from_matrix_market, spmv, spmv_t

__version__ = "0.1.0"

__all__ = [
    "Graph", "CooMatrix", "CsbMatrix", "build_csb", "spmv", "spmv_t", "from_matrix_market",
    "LinearOperator", "CsbOperator", "DenseRowOperator", "RowScaledOperator",
    "TransposedOperator", "as_operator", "IncidenceOp", "PairOp", "InterweaveOp",
    "Mode", "MixedInstance", "validate", "SolverConfig", "Status", "StepMode",
    "solve_feasibility", "solve_pure_packing", "solve_pure_covering",
    "ProblemKind", "ProblemSpec", "build_matching", "build_bipartite_matching",
    "build_dominating_set", "build_vertex_cover", "build_densest_feasibility",
    "build_generalized_matching", "solve_densest", "solve_problem", "verify_solution",
]
