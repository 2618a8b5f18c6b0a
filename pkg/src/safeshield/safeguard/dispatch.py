"""Safeguard dispatch and the distance regulariser."""

from __future__ import annotations

import numpy as np

from .bp import bp_project
from .result import DegenerateRayError, RayMaskConfig, SafeguardResult
from .rm import rm_boundary, rm_center, rm_feasible_boundary, rm_jacobian, rm_map
from .sets import SafeActionSpec, TransitionLinearization, is_action_safe


def _identity_result(a: np.ndarray, **stats) -> SafeguardResult:
    return SafeguardResult(a.copy(), np.eye(a.size), False, 0.0, dict(stats))


def apply_safeguard(kind: str, spec: SafeActionSpec,
                    lin: TransitionLinearization | None,
                    cfg: RayMaskConfig | None, a,
                    directions: np.ndarray | None = None) -> SafeguardResult:
    """Route an action through the configured safeguard.

    ``kind`` is "bp" or "rm".  The output action always satisfies the
    safety test and the Jacobian is finite everywhere.
    """
    a = np.asarray(a, dtype=float).ravel()
    if kind == "bp":
        return bp_project(spec, lin, a)
    if kind != "rm":
        raise ValueError(f"unknown safeguard kind {kind!r}")
    cfg = cfg if cfg is not None else RayMaskConfig()

    if cfg.center_source == "orthogonal":
        # the orthogonal centre exists only for unsafe actions; safe
        # actions pass through unmapped
        safe, cert = is_action_safe(spec, lin, a, check_feasible=False)
        if safe:
            return _identity_result(a, containment_optimum=cert.optimum)

    try:
        c = rm_center(spec, lin, cfg, a, directions=directions)
    except DegenerateRayError:
        return _identity_result(a, degenerate_ray=True)
    if np.linalg.norm(a - c) <= 1e-12:
        return _identity_result(a, at_centre=True)

    try:
        boundary = rm_boundary(spec, lin, c, a)
    except DegenerateRayError:
        return _identity_result(a, degenerate_ray=True)
    _, lam_feas, _ = rm_feasible_boundary(spec.feasible_set, c, a)

    jac = None
    if cfg.jacobian_kind == "exact":
        jac = rm_jacobian(cfg, c, a, (boundary.normal, boundary.offset),
                          spec.feasible_set)
    res = rm_map(cfg, c, boundary.lam, lam_feas, a, jacobian=jac)
    res.solver_stats["facet_ambiguous"] = boundary.ambiguous
    res.solver_stats["alpha_star"] = boundary.alpha
    res.solver_stats["centre"] = c
    return res


def regularized_loss_terms(a, a_s, c_d: float,
                           jacobian: np.ndarray) -> tuple[float, np.ndarray]:
    """Distance penalty  c_d ||a_s - a||^2  and its gradient w.r.t. ``a``.

    The gradient threads the safeguard Jacobian:
    2 c_d (J - I)' (a_s - a).  It restores a gradient component in the
    mapping direction that boundary projection otherwise eliminates.
    """
    a = np.asarray(a, dtype=float).ravel()
    a_s = np.asarray(a_s, dtype=float).ravel()
    if c_d < 0:
        raise ValueError("c_d must be nonnegative")
    diff = a_s - a
    penalty = float(c_d * diff @ diff)
    grad = 2.0 * c_d * (np.asarray(jacobian) - np.eye(a.size)).T @ diff
    return penalty, grad
