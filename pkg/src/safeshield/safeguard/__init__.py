"""Differentiable safety layer.

Maps raw policy actions into a safe action set (explicit zonotope or
noise-robust induced set) by boundary projection or ray mask and returns
the closed-form Jacobian for backpropagation.  Guarantees on every
output: the executed action passes the safety test, and the Jacobian is
finite with a deterministic one-sided value at non-smooth points.
"""

from .bp import bp_jacobian, bp_project
from .dispatch import apply_safeguard, regularized_loss_terms
from .result import (DegenerateRayError, INTERVENE_TOL, RayMaskConfig,
                     SafeguardResult)
from .rm import (RayBoundary, rm_boundary, rm_center, rm_feasible_boundary,
                 rm_jacobian, rm_map)
from .sets import (InducedSystem, SafeActionSpec, TransitionLinearization,
                   induced_action_interval, induced_budgets, induced_system,
                   is_action_safe, next_state_set)

__all__ = [
    "INTERVENE_TOL",
    "DegenerateRayError",
    "InducedSystem",
    "RayBoundary",
    "RayMaskConfig",
    "SafeActionSpec",
    "SafeguardResult",
    "TransitionLinearization",
    "apply_safeguard",
    "bp_jacobian",
    "bp_project",
    "induced_action_interval",
    "induced_budgets",
    "induced_system",
    "is_action_safe",
    "next_state_set",
    "regularized_loss_terms",
    "rm_boundary",
    "rm_center",
    "rm_feasible_boundary",
    "rm_jacobian",
    "rm_map",
]
