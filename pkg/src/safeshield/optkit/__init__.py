"""Small dense convex solvers with dual variables.

Design notes
------------
* LP: two-phase primal simplex with a Bland's-rule fallback, because the
  containment LPs are routinely degenerate (query points on facets).
* QP: primal active-set with least-squares KKT steps.  The projection
  QPs have PSD-singular Hessians whose gradients stay in the Hessian
  range, so the subproblems remain consistent without regularisation
  and the active sets stay exact.
* Infeasibility detection runs through phase-1 with a 1e-7 residual
  threshold; active constraints are read at 1e-8 slack with ties
  resolved to "active".

All solvers are stateless given the problem data and safe for
concurrent use.
"""

from .barrier import maximize_log_sum
from .infnorm import solve_inf_norm
from .linalg import penrose_residual, pseudoinverse
from .lp import Solution, kkt_residual_lp, solve_lp
from .qp import ACT_TOL, QpProblem, active_set, kkt_residual_qp, solve_qp

__all__ = [
    "ACT_TOL",
    "QpProblem",
    "Solution",
    "active_set",
    "kkt_residual_lp",
    "kkt_residual_qp",
    "maximize_log_sum",
    "penrose_residual",
    "pseudoinverse",
    "solve_inf_norm",
    "solve_lp",
    "solve_qp",
]
