"""Dense two-phase primal simplex for small linear programs.

Solves

    min  c'x   s.t.  A x = b,  K x <= h,  x free

and reports equality/inequality duals alongside the primal point.
Pivoting uses Dantzig's rule and falls back to Bland's rule once
degenerate stalling is detected, which keeps the method exact on the
degenerate containment problems (points sitting on facets) that this
package produces in bulk.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SolverFault

FEAS_TOL = 1e-9
COST_TOL = 1e-9
PHASE1_TOL = 1e-7
STALL_LIMIT = 60


@dataclass
class Solution:
    """Certified solver output.

    ``eq_duals`` (nu) and ``ineq_duals`` (lambda >= 0) satisfy the
    stationarity convention  c + A' nu + K' lambda = 0.
    """

    primal: np.ndarray
    eq_duals: np.ndarray
    ineq_duals: np.ndarray
    status: str  # "optimal" | "infeasible" | "max_iter"
    kkt_residual: float
    objective: float
    extras: dict = field(default_factory=dict)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"


def _pivot(T: np.ndarray, row: int, col: int, basis: np.ndarray) -> None:
    T[row] /= T[row, col]
    coeffs = T[:, col].copy()
    coeffs[row] = 0.0
    T -= np.outer(coeffs, T[row])
    basis[row] = col


def _run_simplex(T, basis, cost, allowed, max_iter):
    """Minimise ``cost`` over the tableau in place; returns iteration count.

    ``allowed`` masks columns eligible to enter the basis.
    """
    m = T.shape[0]
    n = T.shape[1] - 1
    bland = False
    stall = 0
    last_obj = np.inf
    for it in range(max_iter):
        y = cost[basis]
        # reduced costs r_j = c_j - y' T_j with identity basis columns
        red = cost[:n] - y @ T[:, :n]
        red[~allowed] = np.inf
        red[basis] = np.inf
        if bland:
            candidates = np.flatnonzero(red < -COST_TOL)
            if candidates.size == 0:
                return it, "optimal"
            col = int(candidates[0])
        else:
            col = int(np.argmin(red))
            if red[col] >= -COST_TOL:
                return it, "optimal"
        d = T[:, col]
        pos = d > FEAS_TOL
        if not np.any(pos):
            return it, "unbounded"
        ratios = np.full(m, np.inf)
        ratios[pos] = T[pos, -1] / d[pos]
        row = int(np.argmin(ratios))
        # deterministic tie-break: smallest basis index among near-minimal rows
        near = np.flatnonzero(ratios <= ratios[row] + FEAS_TOL)
        row = int(near[np.argmin(basis[near])])
        obj = float(cost[basis] @ T[:, -1])
        if obj >= last_obj - 1e-13:
            stall += 1
            if stall > STALL_LIMIT:
                bland = True
        else:
            stall = 0
        last_obj = obj
        _pivot(T, row, col, basis)
    return max_iter, "max_iter"


def solve_lp(c, A=None, b=None, K=None, h=None, max_iter=None,
             nonneg=None) -> Solution:
    """Two-phase simplex on the general form above.

    Variables flagged in ``nonneg`` are constrained to x_i >= 0 natively
    (no sign split, no explicit constraint row); the rest are free.
    Raises :class:`SolverFault` on an unbounded objective, which in this
    package always indicates a malformed constraint system.
    """
    c = np.asarray(c, dtype=float).ravel()
    n = c.size
    A = np.zeros((0, n)) if A is None else np.atleast_2d(np.asarray(A, dtype=float))
    b = np.zeros(0) if b is None else np.asarray(b, dtype=float).ravel()
    K = np.zeros((0, n)) if K is None else np.atleast_2d(np.asarray(K, dtype=float))
    h = np.zeros(0) if h is None else np.asarray(h, dtype=float).ravel()
    me, mi = A.shape[0], K.shape[0]
    if A.shape[1] != n or K.shape[1] != n or b.size != me or h.size != mi:
        raise ValueError("inconsistent LP shapes")
    if nonneg is None:
        nonneg = np.zeros(n, dtype=bool)
    else:
        nonneg = np.asarray(nonneg, dtype=bool)

    m = me + mi
    if max_iter is None:
        max_iter = 200 + 25 * (m + n)

    # standard form: free x = u - v, slacks on inequality rows,
    # artificials as needed
    M = np.vstack([A, K])
    rhs = np.concatenate([b, h])
    sign = np.where(rhs < 0, -1.0, 1.0)
    M = M * sign[:, None]
    rhs = rhs * sign

    free_idx = np.flatnonzero(~nonneg)
    n_free = free_idx.size
    n_std = n + n_free + mi
    S = np.zeros((m, n_std))
    S[:, :n] = M
    S[:, n:n + n_free] = -M[:, free_idx]
    for i in range(mi):
        S[me + i, n + n_free + i] = sign[me + i]

    # rows whose slack can seed the basis (inequality rows not flipped)
    basis = np.full(m, -1, dtype=int)
    art_cols = []
    for i in range(m):
        if i >= me and sign[i] > 0:
            basis[i] = n + n_free + (i - me)
    n_art = int(np.sum(basis < 0))
    S_full = np.hstack([S, np.zeros((m, n_art))])
    j = n_std
    for i in range(m):
        if basis[i] < 0:
            S_full[i, j] = 1.0
            basis[i] = j
            art_cols.append(j)
            j += 1
    total = S_full.shape[1]
    T = np.hstack([S_full, rhs[:, None]])

    iters = 0
    if art_cols:
        cost1 = np.zeros(total)
        cost1[art_cols] = 1.0
        allowed = np.ones(total, dtype=bool)
        it1, st1 = _run_simplex(T, basis, cost1, allowed, max_iter)
        iters += it1
        phase1_obj = float(cost1[basis] @ T[:, -1])
        if st1 == "max_iter":
            return Solution(np.full(n, np.nan), np.zeros(me), np.zeros(mi),
                            "max_iter", np.inf, np.nan, {"iterations": iters})
        if phase1_obj > PHASE1_TOL:
            return Solution(np.full(n, np.nan), np.zeros(me), np.zeros(mi),
                            "infeasible", phase1_obj, np.nan,
                            {"iterations": iters, "phase1": phase1_obj})
        # drive remaining artificials out of the basis
        art_set = set(art_cols)
        for i in range(m):
            if basis[i] in art_set:
                row = T[i, :n_std]
                nz = np.flatnonzero(np.abs(row) > 1e-9)
                if nz.size:
                    _pivot(T, i, int(nz[0]), basis)

    cost2 = np.zeros(total)
    cost2[:n] = c
    cost2[n:n + n_free] = -c[free_idx]
    allowed = np.ones(total, dtype=bool)
    allowed[n_std:] = False  # artificials banned in phase 2
    it2, st2 = _run_simplex(T, basis, cost2, allowed, max_iter)
    iters += it2
    if st2 == "unbounded":
        raise SolverFault("unbounded LP: malformed constraint system")

    xs = np.zeros(total)
    xs[basis] = T[:, -1]
    x = xs[:n].copy()
    x[free_idx] -= xs[n:n + n_free]

    # duals from the original basis columns: B' y = c_B
    B = S_full[:, basis]
    try:
        y = np.linalg.solve(B.T, cost2[basis])
    except np.linalg.LinAlgError:
        y = np.linalg.lstsq(B.T, cost2[basis], rcond=None)[0]
    y = y * sign  # undo row normalisation
    nu = -y[:me]
    lam = np.maximum(-y[me:], 0.0)

    obj = float(c @ x)
    resid = kkt_residual_lp(c, A, b, K, h, x, nu, lam, nonneg=nonneg)
    status = "optimal" if st2 == "optimal" else "max_iter"
    return Solution(x, nu, lam, status, resid, obj,
                    {"iterations": iters, "nonneg": nonneg})


def kkt_residual_lp(c, A, b, K, h, x, nu, lam, nonneg=None) -> float:
    """Independent KKT audit; returns the worst residual across conditions.

    For variables declared nonnegative the stationarity slack plays the
    role of their bound multiplier: it must be nonnegative and
    complementary to the variable value.
    """
    c = np.asarray(c, dtype=float).ravel()
    stat = c.copy()
    r = 0.0
    if A is not None and np.size(A):
        A = np.atleast_2d(A)
        stat = stat + A.T @ nu
        r = max(r, float(np.max(np.abs(A @ x - b), initial=0.0)))
    if K is not None and np.size(K):
        K = np.atleast_2d(K)
        stat = stat + K.T @ lam
        slack = np.asarray(h) - K @ x
        r = max(r, float(np.max(-slack, initial=0.0)))          # primal feasibility
        r = max(r, float(np.max(-lam, initial=0.0)))            # dual feasibility
        r = max(r, float(np.max(np.abs(lam * slack), initial=0.0)))  # complementarity
    if nonneg is not None and np.any(nonneg):
        nn = np.asarray(nonneg, dtype=bool)
        r = max(r, float(np.max(-x[nn], initial=0.0)))          # primal bound
        r = max(r, float(np.max(-stat[nn], initial=0.0)))       # bound multiplier >= 0
        r = max(r, float(np.max(np.abs(stat[nn] * x[nn]), initial=0.0)))
        stat = stat[~nn]
    r = max(r, float(np.max(np.abs(stat), initial=0.0)))
    return r
