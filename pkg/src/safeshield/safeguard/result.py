"""Shared safeguard result/config types."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SafeshieldError

# separates solver noise from genuine interventions
INTERVENE_TOL = 1e-7


class DegenerateRayError(SafeshieldError):
    """Raised when a ray-mask query coincides with the safe centre."""


@dataclass
class SafeguardResult:
    """Safe action plus everything backpropagation needs.

    ``jacobian`` is d(a_s)/d(a); it is finite in every entry and, at
    non-smooth points, a deterministic one-sided choice.  ``intervened``
    is ``mapping_distance > INTERVENE_TOL``.
    """

    safe_action: np.ndarray
    jacobian: np.ndarray
    intervened: bool
    mapping_distance: float
    solver_stats: dict = field(default_factory=dict)


@dataclass(frozen=True)
class RayMaskConfig:
    """Ray-mask variant selection.

    center_source: "explicit" uses the zonotope centre, "zonotopic"
    expands a sampled-direction zonotope inside the induced set,
    "orthogonal" reflects the projection direction through the set.
    map_kind "hyperbolic" leaves near-centre actions almost unchanged
    while compressing the outer region towards the safe boundary.
    jacobian_kind "passthrough" replaces the backward map with the
    identity.  ``c_d`` scales the distance regulariser.
    """

    center_source: str = "explicit"   # explicit | zonotopic | orthogonal
    map_kind: str = "linear"          # linear | hyperbolic
    jacobian_kind: str = "exact"      # exact | passthrough
    c_d: float = 0.1
    n_dirs: int | None = None         # zonotopic directions, default 2*d

    def __post_init__(self):
        if self.center_source not in ("explicit", "zonotopic", "orthogonal"):
            raise ValueError(f"unknown center_source {self.center_source!r}")
        if self.map_kind not in ("linear", "hyperbolic"):
            raise ValueError(f"unknown map_kind {self.map_kind!r}")
        if self.jacobian_kind not in ("exact", "passthrough"):
            raise ValueError(f"unknown jacobian_kind {self.jacobian_kind!r}")
        if self.c_d < 0:
            raise ValueError("c_d must be nonnegative")

    def directions(self, dim: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform unit directions for the zonotopic centre, (dim, n_dirs)."""
        m = self.n_dirs if self.n_dirs is not None else 2 * dim
        if m < dim:
            raise ValueError("n_dirs must be at least the action dimension")
        raw = rng.standard_normal((dim, m))
        return raw / np.linalg.norm(raw, axis=0, keepdims=True)
