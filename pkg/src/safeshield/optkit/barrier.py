"""Newton barrier maximiser for log-sum objectives over polytopes.

Maximises  sum_i log x_i  (over a designated index subset) subject to
K x <= h and optional equalities A x = b.  Maximising the log sum and
maximising the geometric mean of the same variables share their argmax
(monotone transform), which is the contract the safe-centre expansion
program relies on.

Equalities are eliminated through a nullspace parametrisation so each
centering step is an unconstrained damped Newton step.  Strict
feasibility is certified up front by a phase-1 LP that maximises the
worst constraint margin.
"""

from __future__ import annotations

import numpy as np

from .lp import Solution, solve_lp

GRAD_TOL = 1e-8
MARGIN_TOL = 1e-9


def _strictly_feasible_point(K, h, A, b):
    """Phase-1 LP: maximise the uniform slack margin; None if not strictly feasible."""
    n = K.shape[1]
    c = np.zeros(n + 1)
    c[-1] = -1.0  # maximise margin
    Ke = np.hstack([K, np.ones((K.shape[0], 1))])
    Ae = None if A is None else np.hstack([A, np.zeros((A.shape[0], 1))])
    # cap the margin so the LP stays bounded
    cap = np.zeros(n + 1)
    cap[-1] = 1.0
    Ke = np.vstack([Ke, cap])
    he = np.concatenate([h, [1e6]])
    sol = solve_lp(c, Ae, b, Ke, he)
    if sol.status != "optimal" or sol.primal[-1] <= MARGIN_TOL:
        return None
    return sol.primal[:n]


def maximize_log_sum(K, h, log_idx, A=None, b=None, max_stages=40,
                     newton_iters=60) -> Solution:
    """Barrier/Newton solve; ``primal`` holds all variables at the optimum.

    ``extras["objective_trace"]`` records the log-sum objective after each
    barrier stage converges (central-path milestones), which is monotone
    nondecreasing.  ``extras["grad_norm"]`` is the final reduced-gradient
    norm of the fully weighted stage.
    """
    K = np.atleast_2d(np.asarray(K, dtype=float))
    h = np.asarray(h, dtype=float).ravel()
    log_idx = np.asarray(log_idx, dtype=int)
    n = K.shape[1]
    A = None if A is None or np.size(A) == 0 else np.atleast_2d(np.asarray(A, dtype=float))
    b = None if A is None else np.asarray(b, dtype=float).ravel()

    x0 = _strictly_feasible_point(K, h, A, b)
    if x0 is None or np.min(x0[log_idx], initial=np.inf) <= MARGIN_TOL:
        return Solution(np.full(n, np.nan), np.zeros(0), np.zeros(K.shape[0]),
                        "infeasible", np.inf, -np.inf, {"objective_trace": []})

    if A is not None:
        # x = x_p + N z with N an orthonormal nullspace basis of A
        x_p = np.linalg.lstsq(A, b, rcond=None)[0]
        _, s, vt = np.linalg.svd(A)
        rank = int(np.sum(s > 1e-11 * max(s[0], 1.0)))
        N = vt[rank:].T
        if N.shape[1] == 0:
            obj = float(np.sum(np.log(x_p[log_idx])))
            return Solution(x_p, np.zeros(A.shape[0]), np.zeros(K.shape[0]),
                            "optimal", 0.0, obj, {"objective_trace": [obj],
                                                  "grad_norm": 0.0})
        z = np.linalg.lstsq(N, x0 - x_p, rcond=None)[0]
    else:
        x_p = np.zeros(n)
        N = np.eye(n)
        z = x0.copy()

    Kr = K @ N
    hr = h - K @ x_p
    sel = np.zeros((log_idx.size, n))
    sel[np.arange(log_idx.size), log_idx] = 1.0
    Lr = sel @ N
    lp = sel @ x_p  # offsets of the log variables

    def log_vars(zv):
        return lp + Lr @ zv

    def slacks(zv):
        return hr - Kr @ zv

    def objective(zv):
        return float(np.sum(np.log(log_vars(zv))))

    trace = []
    t = 1.0
    mu = 10.0
    m_ineq = K.shape[0]
    grad_norm = np.inf
    for _ in range(max_stages):
        for _ in range(newton_iters):
            v = log_vars(z)
            s = slacks(z)
            # minimise phi = -t*sum(log v) - sum(log s)
            gv = 1.0 / v
            gs = 1.0 / s
            grad = -t * (Lr.T @ gv) + Kr.T @ gs
            H = t * (Lr.T * (gv ** 2)) @ Lr + (Kr.T * (gs ** 2)) @ Kr
            try:
                step = np.linalg.solve(H, -grad)
            except np.linalg.LinAlgError:
                step = np.linalg.lstsq(H, -grad, rcond=None)[0]
            decrement = float(-grad @ step)
            if decrement <= 2.0 * GRAD_TOL ** 0.5 * 1e-4 or decrement < 0:
                break
            # backtrack to stay strictly feasible and decrease phi
            alpha = 1.0
            phi0 = -t * np.sum(np.log(v)) - np.sum(np.log(s))
            for _ in range(60):
                zn = z + alpha * step
                vn = log_vars(zn)
                sn = slacks(zn)
                if np.min(vn, initial=np.inf) > 0 and np.min(sn, initial=np.inf) > 0:
                    phin = -t * np.sum(np.log(vn)) - np.sum(np.log(sn))
                    if phin <= phi0 - 1e-4 * alpha * decrement:
                        break
                alpha *= 0.5
            else:
                alpha = 0.0
            if alpha == 0.0:
                break
            z = z + alpha * step
        v = log_vars(z)
        s = slacks(z)
        grad_norm = float(np.linalg.norm(-(Lr.T @ (1.0 / v)) + (Kr.T @ (1.0 / s)) / t))
        trace.append(objective(z))
        if m_ineq / t < GRAD_TOL and grad_norm < GRAD_TOL * max(1.0, np.linalg.norm(1.0 / v)):
            break
        t *= mu

    x = x_p + N @ z
    lam = (1.0 / t) / slacks(z)
    obj = objective(z)
    nu = np.zeros(0 if A is None else A.shape[0])
    return Solution(x, nu, lam, "optimal", grad_norm, obj,
                    {"objective_trace": trace, "grad_norm": grad_norm, "t": t})
