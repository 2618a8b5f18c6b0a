"""Boundary projection: minimum-distance mapping onto the safe action set.

Safe actions pass through untouched with an identity Jacobian.  Unsafe
actions are mapped to the nearest boundary point; the Jacobian there is
the projection matrix onto the column space of the generators whose
coefficients stay strictly inside their bounds, so it is symmetric,
idempotent, and of rank at most d-1.  Every gradient component along the
mapping direction is eliminated, which is why training pairs this
safeguard with the distance regulariser.
"""

from __future__ import annotations

import numpy as np

from ..errors import SafetyFault
from ..optkit import ACT_TOL, QpProblem, pseudoinverse, solve_qp
from .result import INTERVENE_TOL, SafeguardResult
from .sets import (InducedSystem, SafeActionSpec, TransitionLinearization,
                   induced_action_interval, induced_budgets, induced_system,
                   is_action_safe)


def bp_jacobian(generators: np.ndarray, inactive_idx, safe: bool,
                dim: int | None = None) -> np.ndarray:
    """Closed-form projection Jacobian from the QP active set.

    ``safe`` actions map to themselves: identity.  Otherwise the result
    is  G_i (G_i' G_i)^+ G_i'  over the inactive generator columns; an
    empty inactive set yields the zero matrix.
    """
    G = np.atleast_2d(np.asarray(generators, dtype=float))
    d = G.shape[0] if dim is None else dim
    if safe:
        return np.eye(d)
    idx = np.asarray(inactive_idx, dtype=int)
    if idx.size == 0:
        return np.zeros((d, d))
    Gi = G[:, idx]
    return Gi @ pseudoinverse(Gi.T @ Gi) @ Gi.T


def _project_explicit(spec: SafeActionSpec, a: np.ndarray) -> SafeguardResult:
    z = spec.explicit_set
    G, c = z.generators, z.centre
    qp = QpProblem(Q=2.0 * G.T @ G, q=-2.0 * G.T @ (a - c),
                   K=np.vstack([np.eye(z.order), -np.eye(z.order)]),
                   h=np.ones(2 * z.order))
    sol = solve_qp(qp, x0=np.zeros(z.order))
    if sol.status == "infeasible":
        raise SafetyFault("explicit safe action set is empty")
    gamma = sol.primal
    a_s = c + G @ gamma
    inactive = np.flatnonzero(1.0 - np.abs(gamma) > ACT_TOL)
    jac = bp_jacobian(G, inactive, safe=False, dim=z.dim)
    dist = float(np.linalg.norm(a_s - a))
    return SafeguardResult(a_s, jac, dist > INTERVENE_TOL, dist,
                           {"qp_solves": 1, "qp_status": sol.status,
                            "kkt_residual": sol.kkt_residual,
                            "active_generators": int(z.order - inactive.size)})


def _project_induced_1d(sys: InducedSystem, a: np.ndarray) -> SafeguardResult:
    lo, hi = induced_action_interval(sys)
    a_s = np.clip(a, lo, hi)
    dist = float(np.linalg.norm(a_s - a))
    moved = dist > INTERVENE_TOL
    jac = np.zeros((1, 1)) if moved else np.eye(1)
    return SafeguardResult(np.atleast_1d(a_s), jac, moved, dist,
                           {"lp_solves": 2, "interval": (lo, hi)})


def _kkt_jacobian(Q, A_eq, K_active, d: int) -> np.ndarray:
    """d(a_s)/d(a) from the differential of the fixed-active-set KKT system.

    The action enters the objective only through q = (-2a, 0), so the
    right-hand side of the differential system is [2 I_d; 0; 0].
    """
    n = Q.shape[0]
    me = A_eq.shape[0]
    ma = K_active.shape[0]
    M = np.zeros((n + me + ma, n + me + ma))
    M[:n, :n] = Q
    M[:n, n:n + me] = A_eq.T
    M[:n, n + me:] = K_active.T
    M[n:n + me, :n] = A_eq
    M[n + me:, :n] = K_active
    rhs = np.zeros((n + me + ma, d))
    rhs[:d, :] = 2.0 * np.eye(d)
    sol = np.linalg.lstsq(M, rhs, rcond=None)[0]
    return sol[:d, :]


def _project_induced(sys: InducedSystem, a: np.ndarray) -> SafeguardResult:
    """Conservative two-stage projection for multi-dimensional actions.

    Stage one fixes the noise-part coefficients Gamma at the minimal
    max-row-sum choice (one LP per state, cached upstream); the leftover
    per-row budgets shrink the safe state set into an explicit target
    zonotope.  Stage two projects onto its affine preimage by QP.  The
    result can be slightly conservative but is always safe.
    """
    d, n2 = sys.d, sys.n2
    budget = induced_budgets(sys)
    S = sys.spec.safe_state_set
    G_b = S.generators @ np.diag(budget)
    box = sys.spec.feasible_set

    n = d + n2
    Q = np.zeros((n, n))
    Q[:d, :d] = 2.0 * np.eye(d)
    q = np.concatenate([-2.0 * a, np.zeros(n2)])
    A_eq = np.hstack([sys.df_da, -G_b])
    b_eq = S.centre - sys.m0
    K = np.zeros((2 * n2 + 2 * d, n))
    h = np.zeros(2 * n2 + 2 * d)
    K[:n2, d:] = np.eye(n2)
    K[n2:2 * n2, d:] = -np.eye(n2)
    h[:2 * n2] = 1.0
    for j in range(d):
        K[2 * n2 + 2 * j, j] = 1.0
        K[2 * n2 + 2 * j + 1, j] = -1.0
        h[2 * n2 + 2 * j] = box.centre[j] + box.half_widths[j]
        h[2 * n2 + 2 * j + 1] = -(box.centre[j] - box.half_widths[j])

    qp = QpProblem(Q=Q, q=q, A=A_eq, b=b_eq, K=K, h=h)
    sol = solve_qp(qp)
    if sol.status == "infeasible":
        raise SafetyFault("empty induced safe action set (projection QP infeasible)")
    a_s = sol.primal[:d]
    slack = h - K @ sol.primal
    act = np.flatnonzero(slack <= ACT_TOL)
    jac = _kkt_jacobian(Q, A_eq, K[act], d)
    jac = 0.5 * (jac + jac.T)  # uniqueness argument: symmetric projector
    dist = float(np.linalg.norm(a_s - a))
    return SafeguardResult(a_s, jac, dist > INTERVENE_TOL, dist,
                           {"lp_solves": 1, "qp_solves": 1,
                            "qp_status": sol.status,
                            "kkt_residual": sol.kkt_residual,
                            "active_rows": act.tolist()})


def bp_project(spec: SafeActionSpec, lin: TransitionLinearization | None,
               a) -> SafeguardResult:
    """Project an action onto the safe action set (identity when safe)."""
    a = np.asarray(a, dtype=float).ravel()
    safe, cert = is_action_safe(spec, lin, a, check_feasible=False)
    if safe:
        return SafeguardResult(a.copy(), np.eye(a.size), False, 0.0,
                               {"containment_optimum": cert.optimum})
    if spec.mode == "explicit":
        res = _project_explicit(spec, a)
    else:
        sys = induced_system(spec, lin, a)
        res = (_project_induced_1d(sys, a) if sys.d == 1
               else _project_induced(sys, a))
    res.solver_stats["containment_optimum"] = cert.optimum
    return res
