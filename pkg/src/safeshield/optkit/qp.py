"""Primal active-set method for small dense convex QPs.

Solves

    min  1/2 x'Qx + q'x   s.t.  A x = b,  K x <= h

for symmetric PSD Q.  The equality-constrained subproblems are solved
through least-squares KKT systems, so rank-deficient Hessian blocks
(ever-present here: the projection QPs carry zero curvature on their
coefficient variables) need no regularisation and the reported active
set stays exact.  Exact active sets are what the closed-form safeguard
Jacobians consume, which rules out first-order/ADMM-style solvers.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SolverFault
from .lp import Solution, solve_lp

ACT_TOL = 1e-8
STEP_TOL = 1e-11


@dataclass
class QpProblem:
    Q: np.ndarray
    q: np.ndarray
    A: np.ndarray | None = None
    b: np.ndarray | None = None
    K: np.ndarray | None = None
    h: np.ndarray | None = None

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.q = np.asarray(self.q, dtype=float).ravel()
        n = self.q.size
        if self.Q.shape != (n, n):
            raise ValueError("Q/q shape mismatch")
        if np.max(np.abs(self.Q - self.Q.T), initial=0.0) > 1e-10:
            raise ValueError("Q must be symmetric")
        self.A = np.zeros((0, n)) if self.A is None else np.atleast_2d(np.asarray(self.A, dtype=float))
        self.b = np.zeros(0) if self.b is None else np.asarray(self.b, dtype=float).ravel()
        self.K = np.zeros((0, n)) if self.K is None else np.atleast_2d(np.asarray(self.K, dtype=float))
        self.h = np.zeros(0) if self.h is None else np.asarray(self.h, dtype=float).ravel()

    @property
    def n(self) -> int:
        return self.q.size


def _feasible_start(p: QpProblem) -> np.ndarray | None:
    sol = solve_lp(np.zeros(p.n), p.A, p.b, p.K, p.h)
    if sol.status != "optimal":
        return None
    return sol.primal


def _eqp_step(Q, g, C):
    """Least-squares solve of  [Q C'; C 0][p; mu] = [-g; 0]."""
    n = Q.shape[0]
    mc = C.shape[0]
    kkt = np.zeros((n + mc, n + mc))
    kkt[:n, :n] = Q
    kkt[:n, n:] = C.T
    kkt[n:, :n] = C
    rhs = np.concatenate([-g, np.zeros(mc)])
    sol = np.linalg.lstsq(kkt, rhs, rcond=None)[0]
    return sol[:n], sol[n:]


def solve_qp(p: QpProblem, x0=None, max_iter=None) -> Solution:
    """Active-set solve with KKT-certified output.

    The active set is recoverable from the primal as
    ``{i : h_i - K_i x* <= ACT_TOL}``.
    """
    n = p.n
    me, mi = p.A.shape[0], p.K.shape[0]
    if max_iter is None:
        max_iter = 100 + 15 * (n + me + mi)

    if x0 is None:
        x = _feasible_start(p)
        if x is None:
            return Solution(np.full(n, np.nan), np.zeros(me), np.zeros(mi),
                            "infeasible", np.inf, np.nan)
    else:
        x = np.asarray(x0, dtype=float).copy()

    work: list[int] = []
    lam_work = np.zeros(0)
    for it in range(max_iter):
        g = p.Q @ x + p.q
        C = np.vstack([p.A, p.K[work]]) if (me or work) else np.zeros((0, n))
        step, mu = _eqp_step(p.Q, g, C)
        if np.max(np.abs(step), initial=0.0) <= STEP_TOL:
            nu = mu[:me]
            lam_work = mu[me:]
            if lam_work.size == 0 or np.min(lam_work) >= -ACT_TOL:
                lam = np.zeros(mi)
                for k, idx in enumerate(work):
                    lam[idx] = max(lam_work[k], 0.0)
                resid = kkt_residual_qp(p, x, nu, lam)
                return Solution(x, nu, lam, "optimal", resid,
                                float(0.5 * x @ p.Q @ x + p.q @ x),
                                {"active_set": sorted(work), "iterations": it})
            drop = int(np.argmin(lam_work))
            work.pop(drop)
            continue
        # ratio test against inactive inequalities
        alpha = 1.0
        block = -1
        if mi:
            inactive = [i for i in range(mi) if i not in work]
            for i in inactive:
                d = float(p.K[i] @ step)
                if d > STEP_TOL:
                    a_i = float((p.h[i] - p.K[i] @ x) / d)
                    if a_i < alpha - 1e-14:
                        alpha = max(a_i, 0.0)
                        block = i
        x = x + alpha * step
        if block >= 0:
            work.append(block)
            work.sort()
    nu = np.zeros(me)
    lam = np.zeros(mi)
    resid = kkt_residual_qp(p, x, nu, lam)
    return Solution(x, nu, lam, "max_iter", resid,
                    float(0.5 * x @ p.Q @ x + p.q @ x),
                    {"active_set": sorted(work), "iterations": max_iter})


def active_set(p: QpProblem, x: np.ndarray, tol: float = ACT_TOL) -> np.ndarray:
    """Indices of inequality constraints tight at ``x`` (ties count as active)."""
    if p.K.shape[0] == 0:
        return np.zeros(0, dtype=int)
    slack = p.h - p.K @ x
    return np.flatnonzero(slack <= tol)


def kkt_residual_qp(p: QpProblem, x, nu, lam) -> float:
    """Independent audit of the four KKT conditions (separate code path)."""
    stat = p.Q @ x + p.q
    r = 0.0
    if p.A.shape[0]:
        stat = stat + p.A.T @ nu
        r = max(r, float(np.max(np.abs(p.A @ x - p.b), initial=0.0)))
    if p.K.shape[0]:
        stat = stat + p.K.T @ lam
        slack = p.h - p.K @ x
        r = max(r, float(np.max(-slack, initial=0.0)))
        r = max(r, float(np.max(-lam, initial=0.0)))
        r = max(r, float(np.max(np.abs(lam * slack), initial=0.0)))
    return max(r, float(np.max(np.abs(stat), initial=0.0)))
