"""Ray mask: radial contraction of the feasible set onto the safe set.

Every action is pulled towards the safe centre in proportion to the
safe/feasible boundary distances along its ray,

    a_s = c + (lam_safe / lam_feas) (a - c),

optionally through a tanh profile that leaves near-centre actions almost
unchanged.  Unlike boundary projection the Jacobian has full rank: in
ray-adapted (spherical) coordinates the map touches only the radial
coordinate, so the coordinate-space Jacobian is triangular with the
radial derivative and ones on the diagonal.  ``rm_jacobian`` returns the
Cartesian conjugate of that triangular matrix,

    J = (I - u u') + u (grad r_out)',    u = (a - c)/||a - c||,

whose eigenvalues are exactly {d r_out/d lam_a, 1, ..., 1}.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError, SafetyFault, SolverFault
from ..optkit import ACT_TOL, maximize_log_sum, solve_inf_norm, solve_lp
from ..zonoset import Box, Zonotope
from .bp import bp_project
from .result import (DegenerateRayError, INTERVENE_TOL, RayMaskConfig,
                     SafeguardResult)
from .sets import (SafeActionSpec, TransitionLinearization, induced_budgets,
                   induced_system, is_action_safe)

_RAY_TOL = 1e-12


@dataclass(frozen=True)
class RayBoundary:
    """Safe-boundary hit along a ray plus the active facet data."""

    point: np.ndarray
    lam: float                  # distance centre -> boundary point
    alpha: float                # boundary parameter; >= 1 iff the query is safe
    normal: np.ndarray          # supporting hyperplane normal (unit, outward)
    offset: float               # rho with h'x = rho on the facet
    ambiguous: bool = False


def _facet_from_duals(h_raw: np.ndarray, v: np.ndarray,
                      point: np.ndarray) -> tuple[np.ndarray, float]:
    norm = np.linalg.norm(h_raw)
    if norm <= 1e-12:
        raise SolverFault("degenerate facet normal from boundary LP duals")
    h = h_raw / norm
    if h @ v < 0:
        h = -h
    return h, float(h @ point)


def rm_boundary(spec: SafeActionSpec, lin: TransitionLinearization | None,
                c, a) -> RayBoundary:
    """Safe-set boundary along the ray from centre ``c`` through ``a``.

    Solves  max alpha  s.t.  c + alpha (a - c) in A_s.  The active
    facet's supporting hyperplane is recovered from the LP duals.
    """
    c = np.asarray(c, dtype=float).ravel()
    a = np.asarray(a, dtype=float).ravel()
    v = a - c
    if np.linalg.norm(v) <= _RAY_TOL:
        raise DegenerateRayError("ray query coincides with the safe centre")

    if spec.mode == "explicit":
        z = spec.explicit_set
        n = z.order
        # variables [alpha, gamma+ , gamma-]: G gamma - alpha v = c - c_z
        nv = 1 + 2 * n
        A = np.zeros((z.dim, nv))
        A[:, 0] = -v
        A[:, 1:1 + n] = z.generators
        A[:, 1 + n:] = -z.generators
        b = c - z.centre
        K = np.zeros((n, nv))
        h = np.ones(n)
        for i in range(n):
            K[i, 1 + i] = 1.0
            K[i, 1 + n + i] = 1.0
        nonneg = np.ones(nv, dtype=bool)
        nonneg[0] = False
        cvec = np.zeros(nv)
        cvec[0] = -1.0
        sol = solve_lp(cvec, A, b, K, h, nonneg=nonneg)
        if sol.status != "optimal":
            raise SafetyFault("safe boundary LP infeasible (centre outside set?)")
        alpha = float(sol.primal[0])
        point = c + alpha * v
        h_raw = -sol.eq_duals
        normal, rho = _facet_from_duals(h_raw, v, point)
        slack = h[:n] - K[:n] @ sol.primal
        ambiguous = int(np.sum(slack <= ACT_TOL)) > max(0, n - (z.dim - 1))
    else:
        sys = induced_system(spec, lin, a)
        A, b, K, h, meta = sys.build(ray_origin=c, ray_dir=v)
        cvec = np.zeros(sys.n_vars(ray=True))
        cvec[0] = -1.0
        sol = solve_lp(cvec, A, b, K, h, nonneg=meta["nonneg"])
        if sol.status != "optimal":
            raise SafetyFault("induced boundary LP infeasible (empty safe set?)")
        alpha = float(sol.primal[0])
        point = c + alpha * v
        y = sol.eq_duals[meta["centre_eq_rows"]]
        h_raw = sys.df_da.T @ y
        # feasible-box rows can carry the binding normal when the safe
        # region extends to the box face along this ray
        lam_box = sol.ineq_duals[meta["box_rows"]]
        for idx, l in enumerate(lam_box):
            j, sign = divmod(idx, 2)
            e = np.zeros(v.size)
            e[j] = 1.0 if sign == 0 else -1.0
            h_raw = h_raw - l * e
        normal, rho = _facet_from_duals(h_raw, v, point)
        rows = sol.ineq_duals[meta["row_sum_rows"]]
        ambiguous = int(np.sum(rows > ACT_TOL)) > sys.d_s
    lam = float(alpha * np.linalg.norm(v))
    return RayBoundary(point, lam, alpha, normal, rho, ambiguous)


def rm_feasible_boundary(box: Box, c, a) -> tuple[np.ndarray, float, int]:
    """Closed-form ray/box intersection: (point, distance, crossing dim)."""
    c = np.asarray(c, dtype=float).ravel()
    a = np.asarray(a, dtype=float).ravel()
    v = a - c
    nv = np.linalg.norm(v)
    if nv <= _RAY_TOL:
        raise DegenerateRayError("ray query coincides with the safe centre")
    t_best, k_best = np.inf, -1
    for j in range(box.dim):
        if abs(v[j]) <= 1e-15:
            continue
        face = box.centre[j] + (box.half_widths[j] if v[j] > 0 else -box.half_widths[j])
        t_j = (face - c[j]) / v[j]
        if t_j < t_best - 1e-15:
            t_best, k_best = t_j, j
    if k_best < 0 or not np.isfinite(t_best) or t_best <= 0:
        raise SolverFault("ray does not leave the feasible box (centre outside?)")
    return c + t_best * v, float(t_best * nv), k_best


def _radial_profile(cfg: RayMaskConfig, lam_a, lam_safe, lam_feas):
    """Output radius and its partials w.r.t. (lam_a, lam_safe, lam_feas)."""
    if cfg.map_kind == "linear":
        k = lam_safe / lam_feas
        r = k * lam_a
        return r, k, lam_a / lam_feas, -lam_a * lam_safe / lam_feas ** 2
    x = lam_a / lam_safe
    y = lam_feas / lam_safe
    th_x, th_y = np.tanh(x), np.tanh(y)
    sech2_x = 1.0 - th_x ** 2
    sech2_y = 1.0 - th_y ** 2
    r = lam_safe * th_x / th_y
    d_lam_a = sech2_x / th_y
    d_lam_safe = (th_x - x * sech2_x) / th_y + th_x * y * sech2_y / th_y ** 2
    d_lam_feas = -th_x * sech2_y / th_y ** 2
    return r, d_lam_a, d_lam_safe, d_lam_feas


def rm_jacobian(cfg: RayMaskConfig, c, a, facet: tuple[np.ndarray, float],
                box: Box) -> np.ndarray:
    """Exact ray-mask Jacobian with the active facet and box face held fixed.

    lam_safe(a) = lam_a (rho - h'c)/(h'(a-c)) and the ray/box distance are
    smooth closed forms once the facet and the crossing dimension are
    pinned, so the full matrix assembles from their gradients.
    """
    c = np.asarray(c, dtype=float).ravel()
    a = np.asarray(a, dtype=float).ravel()
    h, rho = np.asarray(facet[0], dtype=float).ravel(), float(facet[1])
    v = a - c
    lam_a = float(np.linalg.norm(v))
    if lam_a <= _RAY_TOL:
        return np.eye(a.size)
    u = v / lam_a
    hv = float(h @ v)
    r_h = rho - float(h @ c)
    if hv <= 0 or r_h <= 0:
        raise SolverFault("facet not supporting along the ray")
    lam_safe = lam_a * r_h / hv
    _, lam_feas, k = rm_feasible_boundary(box, c, a)
    v_k = v[k]
    e_k = np.zeros(a.size)
    e_k[k] = 1.0

    grad_safe = (lam_safe / lam_a) * u - lam_safe * h / hv
    grad_feas = (lam_feas / lam_a) * u - lam_feas * e_k / v_k
    _, d_a, d_s, d_f = _radial_profile(cfg, lam_a, lam_safe, lam_feas)
    grad_r = d_a * u + d_s * grad_safe + d_f * grad_feas
    return (np.eye(a.size) - np.outer(u, u)) + np.outer(u, grad_r)


def rm_map(cfg: RayMaskConfig, c, lam_safe: float, lam_feas: float, a,
           jacobian: np.ndarray | None = None) -> SafeguardResult:
    """Radial contraction towards the centre; lands inside the safe set.

    With the linear profile the mapping distance obeys
    ||a_s - a|| = ||c - a|| (1 - lam_safe/lam_feas) exactly.
    """
    c = np.asarray(c, dtype=float).ravel()
    a = np.asarray(a, dtype=float).ravel()
    v = a - c
    lam_a = float(np.linalg.norm(v))
    if lam_a <= _RAY_TOL:
        return SafeguardResult(a.copy(), np.eye(a.size), False, 0.0,
                               {"degenerate_ray": True})
    if not (0.0 < lam_safe <= lam_feas + 1e-9):
        raise SolverFault(
            f"boundary distance ordering violated: lam_safe={lam_safe:.6g}, "
            f"lam_feas={lam_feas:.6g}")
    r_out, _, _, _ = _radial_profile(cfg, lam_a, lam_safe, lam_feas)
    a_s = c + (r_out / lam_a) * v
    jac = np.eye(a.size) if jacobian is None else jacobian
    dist = float(np.linalg.norm(a_s - a))
    return SafeguardResult(a_s, jac, dist > INTERVENE_TOL, dist,
                           {"lam_a": lam_a, "lam_safe": lam_safe,
                            "lam_feas": lam_feas, "radial_out": r_out})


# ---------------------------------------------------------------------------
# safe centre
# ---------------------------------------------------------------------------

def _zonotopic_center(spec: SafeActionSpec, lin: TransitionLinearization,
                      a: np.ndarray, directions: np.ndarray) -> np.ndarray:
    """Centre of the largest-geometric-mean zonotope inside the induced set.

    The expansion  <c_a, D diag(l)>  must stay inside the feasible box
    (support inequalities) and its noisy next-state set inside the safe
    state zonotope.  The noise budget and per-direction coefficient
    vectors are fixed up front (conservative), which keeps the program a
    log-sum maximisation over linear constraints.
    """
    sys = induced_system(spec, lin, a)
    d, m = sys.d, directions.shape[1]
    n2 = sys.n2
    S = sys.spec.safe_state_set
    budget = induced_budgets(sys)

    ghat = np.zeros((n2, m))
    for i in range(m):
        target = sys.df_da @ directions[:, i]
        sol = solve_inf_norm(S.generators, target)
        if sol.status != "optimal":
            raise SolverFault("zonotopic centre: direction outside generator span")
        ghat[:, i] = sol.primal

    # variables [c_a (d), l (m), gamma+ (n2), gamma- (n2)]
    nv = d + m + 2 * n2
    box = spec.feasible_set
    K_rows, h_vals = [], []
    absD = np.abs(directions)
    for j in range(d):
        for sign in (1.0, -1.0):
            r = np.zeros(nv)
            r[j] = sign
            r[d:d + m] = absD[j]
            K_rows.append(r)
            h_vals.append(box.half_widths[j] + sign * box.centre[j])
    for i in range(m):                      # l > 0 handled by the log barrier
        r = np.zeros(nv)
        r[d + i] = -1.0
        K_rows.append(r)
        h_vals.append(0.0)
    for rr in range(n2):
        r = np.zeros(nv)
        r[d:d + m] = np.abs(ghat[rr])
        r[d + m + rr] = 1.0
        r[d + m + n2 + rr] = 1.0
        K_rows.append(r)
        h_vals.append(budget[rr])
    for i in range(2 * n2):
        r = np.zeros(nv)
        r[d + m + i] = -1.0
        K_rows.append(r)
        h_vals.append(0.0)
    A = np.zeros((sys.d_s, nv))
    A[:, :d] = sys.df_da
    A[:, d + m:d + m + n2] = S.generators
    A[:, d + m + n2:] = -S.generators
    b = S.centre - sys.m0

    sol = maximize_log_sum(np.vstack(K_rows), np.asarray(h_vals),
                           log_idx=list(range(d, d + m)), A=A, b=b)
    if sol.status != "optimal":
        raise SafetyFault("zonotopic centre program infeasible (empty safe set?)")
    return sol.primal[:d]


def _orthogonal_center(spec: SafeActionSpec, lin: TransitionLinearization | None,
                       a: np.ndarray) -> tuple[np.ndarray, dict]:
    """Midpoint of the two boundary points along the projection direction."""
    res = bp_project(spec, lin, a)
    if not res.intervened:
        raise ConfigError("orthogonal centre is defined for unsafe actions only")
    b1 = res.safe_action
    direction = b1 - a
    direction = direction / np.linalg.norm(direction)
    # continue through the set from b1 until the far boundary
    if spec.mode == "explicit":
        z = spec.explicit_set
        n = z.order
        nv = 1 + 2 * n
        A = np.zeros((z.dim, nv))
        A[:, 0] = -direction
        A[:, 1:1 + n] = z.generators
        A[:, 1 + n:] = -z.generators
        b = b1 - z.centre
        K = np.zeros((n, nv))
        h = np.ones(n)
        for i in range(n):
            K[i, 1 + i] = 1.0
            K[i, 1 + n + i] = 1.0
        cvec = np.zeros(nv)
        cvec[0] = -1.0
        sol = solve_lp(cvec, A, b, K, h, nonneg=np.ones(nv, dtype=bool))
    else:
        sys = induced_system(spec, lin, a)
        A, b, K, h, meta = sys.build(ray_origin=b1, ray_dir=direction)
        nv = sys.n_vars(ray=True)
        nonneg = meta["nonneg"].copy()
        nonneg[0] = True  # alpha >= 0: only walk forward from b1
        cvec = np.zeros(nv)
        cvec[0] = -1.0
        sol = solve_lp(cvec, A, b, K, h, nonneg=nonneg)
    if sol.status != "optimal":
        raise SafetyFault("orthogonal centre: far-boundary LP infeasible")
    b2 = b1 + float(sol.primal[0]) * direction
    return 0.5 * (b1 + b2), {"bp_point": b1, "far_point": b2,
                             "qp_solves": res.solver_stats.get("qp_solves", 0) + 0,
                             "lp_solves": res.solver_stats.get("lp_solves", 0) + 1}


def rm_center(spec: SafeActionSpec, lin: TransitionLinearization | None,
              cfg: RayMaskConfig, a, directions: np.ndarray | None = None,
              rng: np.random.Generator | None = None) -> np.ndarray:
    """Safe centre per the configured source.

    ``zonotopic`` needs sampled directions (pass ``directions`` computed
    once per episode, or an ``rng`` to draw them); ``orthogonal`` is only
    defined for unsafe actions.
    """
    a = np.asarray(a, dtype=float).ravel()
    if cfg.center_source == "explicit":
        if spec.mode != "explicit":
            raise ConfigError("explicit centre requires an explicit safe set")
        return spec.explicit_set.centre.copy()
    if cfg.center_source == "zonotopic":
        if spec.mode != "induced":
            raise ConfigError("zonotopic centre requires an induced safe set")
        if directions is None:
            if rng is None:
                raise ConfigError("zonotopic centre needs directions or an rng")
            directions = cfg.directions(spec.action_dim, rng)
        return _zonotopic_center(spec, lin, a, directions)
    centre, _ = _orthogonal_center(spec, lin, a)
    return centre
