"""Batched safeguard application for vectorised rollouts.

One runner owns the safeguard configuration for a training run and
applies it lane by lane.  For one-dimensional induced sets (the
pendulum) the joint interval of the safe action set is computed once per
lane state and shared by the safety test, projection, centre, and
boundary queries; the results are identical to the per-operation solves
and cut the per-step cost to two LPs.

Every executed action is optionally re-verified with an independent
containment solve; the count of failures is the run's safety-violation
counter and must stay zero.
"""

from __future__ import annotations

import numpy as np

from .dispatch import apply_safeguard
from .result import INTERVENE_TOL, RayMaskConfig, SafeguardResult
from .rm import _radial_profile
from .sets import (SafeActionSpec, TransitionLinearization,
                   induced_action_interval, induced_system, is_action_safe)


class SafeguardRunner:
    def __init__(self, kind: str, spec: SafeActionSpec,
                 cfg: RayMaskConfig | None = None, use_fast_1d: bool = True,
                 recheck: bool = True):
        if kind not in ("bp", "rm"):
            raise ValueError(f"unknown safeguard kind {kind!r}")
        self.kind = kind
        self.spec = spec
        self.cfg = cfg if cfg is not None else RayMaskConfig()
        self.use_fast_1d = (use_fast_1d and spec.mode == "induced"
                            and spec.action_dim == 1)
        self.recheck = recheck
        self.directions: np.ndarray | None = None
        self.violations = 0
        self.interventions = 0
        self.steps = 0
        self.solves = {"lp": 0, "qp": 0, "barrier": 0}

    def refresh_directions(self, rng: np.random.Generator) -> None:
        """Resample zonotopic-centre directions (call once per episode)."""
        if self.kind == "rm" and self.cfg.center_source == "zonotopic":
            self.directions = self.cfg.directions(self.spec.action_dim, rng)

    def _fast_1d(self, lin, a: np.ndarray) -> SafeguardResult:
        sys = induced_system(self.spec, lin, a)
        lo, hi = induced_action_interval(sys)
        self.solves["lp"] += 2
        x = float(a[0])
        if self.kind == "bp":
            xs = min(max(x, lo), hi)
            moved = abs(xs - x) > INTERVENE_TOL
            jac = np.array([[0.0 if moved else 1.0]])
            return SafeguardResult(np.array([xs]), jac, moved, abs(xs - x),
                                   {"interval": (lo, hi)})
        # ray mask about the interval midpoint (exact centre in 1-D)
        c = 0.5 * (lo + hi)
        if self.cfg.center_source == "orthogonal" and lo <= x <= hi:
            return SafeguardResult(a.copy(), np.eye(1), False, 0.0,
                                   {"interval": (lo, hi)})
        v = x - c
        if abs(v) <= 1e-12:
            return SafeguardResult(a.copy(), np.eye(1), False, 0.0,
                                   {"interval": (lo, hi), "at_centre": True})
        lam_a = abs(v)
        lam_safe = (hi - c) if v > 0 else (c - lo)
        box = self.spec.feasible_set
        bnd = box.centre[0] + (box.half_widths[0] if v > 0 else -box.half_widths[0])
        lam_feas = abs(bnd - c)
        r_out, d_a, _, _ = _radial_profile(self.cfg, lam_a, lam_safe, lam_feas)
        xs = c + np.sign(v) * r_out
        jac = np.array([[1.0 if self.cfg.jacobian_kind == "passthrough"
                         else d_a]])
        dist = abs(xs - x)
        return SafeguardResult(np.array([xs]), jac, dist > INTERVENE_TOL, dist,
                               {"interval": (lo, hi), "centre": c})

    def apply_batch(self, lin_batch, actions: np.ndarray):
        """Safeguard every lane: (safe_actions, jacobians, intervened flags)."""
        B, d = actions.shape
        safe = np.empty_like(actions)
        jacs = np.empty((B, d, d))
        flags = np.zeros(B, dtype=bool)
        for i in range(B):
            lin = lin_batch.single(i)
            if self.use_fast_1d:
                res = self._fast_1d(lin, actions[i])
            else:
                res = apply_safeguard(self.kind, self.spec, lin, self.cfg,
                                      actions[i], directions=self.directions)
                self.solves["lp"] += res.solver_stats.get("lp_solves", 1)
                self.solves["qp"] += res.solver_stats.get("qp_solves", 0)
            safe[i] = res.safe_action
            jacs[i] = res.jacobian
            flags[i] = res.intervened
            if self.recheck:
                lin_s = self._requery(lin_batch, i, actions[i], safe[i])
                ok, _ = is_action_safe(self.spec, lin_s, safe[i],
                                       check_feasible=False)
                self.solves["lp"] += 1
                if not ok:
                    self.violations += 1
        self.steps += B
        self.interventions += int(np.sum(flags))
        return safe, jacs, flags

    def _requery(self, lin_batch, i: int,
                 anchor: np.ndarray, query: np.ndarray) -> TransitionLinearization:
        """Re-anchor lane i's linearisation at the executed action."""
        lin = lin_batch.single(i)
        value = lin.value + lin.df_da @ (query - anchor)
        return TransitionLinearization(value, lin.df_da, lin.df_dw)

    def stats(self) -> dict:
        rate = self.interventions / self.steps if self.steps else 0.0
        return {"violations": self.violations,
                "interventions": self.interventions,
                "steps": self.steps,
                "intervention_rate": rate,
                "solves": dict(self.solves)}
