"""Epigraph reduction for grouped infinity-norm minimisation.

Handles both containment problems of the set algebra:

* point-in-zonotope: minimise ``max_i |x_i|`` subject to ``E x = d``
  (every variable is its own group);
* zonotope-in-zonotope: minimise the maximum absolute row sum of the
  stacked coefficient matrix, expressed here as groups of variable
  indices whose absolute values share one budget row.

Variables are sign-split, so at the optimum each pair carries at most
one nonzero entry and the group sums are exact absolute sums.
"""

from __future__ import annotations

import numpy as np

from .lp import Solution, solve_lp


def solve_inf_norm(E, d, groups=None, max_iter=None) -> Solution:
    """Minimise the grouped infinity norm of ``x`` subject to ``E x = d``.

    Returns a Solution whose ``objective`` is the optimal norm value and
    whose ``primal`` is the witness ``x``; ``extras["t"]`` repeats the
    optimum.  Infeasible equality systems surface as ``status ==
    "infeasible"``.
    """
    E = np.atleast_2d(np.asarray(E, dtype=float))
    d = np.asarray(d, dtype=float).ravel()
    m, n = E.shape
    if d.size != m:
        raise ValueError("E/d shape mismatch")
    if n == 0:
        feasible = bool(np.max(np.abs(d), initial=0.0) <= 1e-9)
        status = "optimal" if feasible else "infeasible"
        return Solution(np.zeros(0), np.zeros(m), np.zeros(0), status,
                        0.0 if feasible else np.inf,
                        0.0 if feasible else np.inf, {"t": 0.0})
    if groups is None:
        groups = [[j] for j in range(n)]

    # variable layout: [x+ (n), x- (n), t], all nonnegative
    nv = 2 * n + 1
    c = np.zeros(nv)
    c[-1] = 1.0
    A = np.zeros((m, nv))
    A[:, :n] = E
    A[:, n:2 * n] = -E
    rows = []
    for g in groups:
        r = np.zeros(nv)
        r[list(g)] = 1.0
        r[[n + j for j in g]] = 1.0
        r[-1] = -1.0
        rows.append(r)
    K = np.vstack(rows)
    h = np.zeros(K.shape[0])

    sol = solve_lp(c, A, d, K, h, max_iter=max_iter,
                   nonneg=np.ones(nv, dtype=bool))
    if sol.status != "optimal":
        return Solution(np.full(n, np.nan), sol.eq_duals, sol.ineq_duals,
                        sol.status, sol.kkt_residual, np.inf, {"t": np.inf})
    x = sol.primal[:n] - sol.primal[n:2 * n]
    t = float(sol.primal[-1])
    return Solution(x, sol.eq_duals, sol.ineq_duals[: len(groups)],
                    "optimal", sol.kkt_residual, t, {"t": t})
