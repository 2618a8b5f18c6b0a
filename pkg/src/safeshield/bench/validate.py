"""Safe-set validation: gatekeeper for the invariant-set config inputs.

The robust control invariant sets arrive as configuration (synthesised
offline); before any training run trusts them, this sweep checks on
sampled states that

  1. the induced safe action set is nonempty (LP feasibility, with the
     production safeguard machinery, so what is validated is exactly
     what training will execute), and
  2. one noisy safeguarded step from the state lands back inside the
     safe state set (point containment, any admissible noise draw).

A failed sample is returned as a counterexample.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import SafeshieldError
from ..safeguard import SafeActionSpec, is_action_safe
from ..safeguard.runner import SafeguardRunner
from ..zonoset import contains_point


@dataclass
class ValidationReport:
    n_samples: int
    feasibility_failures: list = field(default_factory=list)
    invariance_failures: list = field(default_factory=list)
    max_containment_optimum: float = -np.inf
    clamp_events: int = 0

    @property
    def passed(self) -> bool:
        return not self.feasibility_failures and not self.invariance_failures

    def summary(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}: {self.n_samples} samples, "
                f"{len(self.feasibility_failures)} infeasible, "
                f"{len(self.invariance_failures)} invariance failures, "
                f"max containment optimum {self.max_containment_optimum:.6f}, "
                f"{self.clamp_events} clamp events")


def _biased_states(S, rng: np.random.Generator, size: int) -> np.ndarray:
    """Sample the set with extra mass on faces and vertices.

    Uniform coefficient draws almost never reach the corners where
    one-step feasibility is tightest, so half the batch pins a random
    subset of coefficients (or all of them) to +-1.
    """
    n = S.order
    beta = rng.uniform(-1.0, 1.0, size=(size, n))
    kind = rng.uniform(size=size)
    face = (kind >= 0.5) & (kind < 0.8)
    vertex = kind >= 0.8
    signs = np.where(rng.uniform(size=(size, n)) < 0.5, -1.0, 1.0)
    pin = rng.uniform(size=(size, n)) < 0.4
    beta[face] = np.where(pin[face], signs[face], beta[face])
    beta[vertex] = signs[vertex]
    return S.centre + beta @ S.generators.T


def validate_safe_set(env, spec: SafeActionSpec, n_samples: int,
                      seed: int = 0, max_counterexamples: int = 10,
                      safeguard_kind: str = "bp") -> ValidationReport:
    """Sample states in the safe set and check feasibility plus invariance."""
    rng = np.random.default_rng(seed)
    S = spec.safe_state_set
    report = ValidationReport(n_samples=n_samples)
    runner = SafeguardRunner(safeguard_kind, spec, recheck=False)
    runner.refresh_directions(rng)
    chunk = 256
    done = 0
    while done < n_samples:
        b = min(chunk, n_samples - done)
        states = _biased_states(S, rng, b)
        raw = spec.feasible_set.sample(rng, size=b)
        lin = env.linearize(states, raw)
        for i in range(b):
            try:
                safe_i, jac_i, _ = runner.apply_batch(
                    type(lin)(lin.value[i:i + 1], lin.df_da[i:i + 1],
                              lin.df_dw[i:i + 1]),
                    raw[i:i + 1])
            except SafeshieldError as err:
                if len(report.feasibility_failures) < max_counterexamples:
                    report.feasibility_failures.append(
                        {"state": states[i].tolist(), "error": str(err)})
                continue
            lin_s = env.linearize(states[i:i + 1], safe_i)
            ok, cert = is_action_safe(spec, lin_s.single(0), safe_i[0],
                                      check_feasible=False)
            report.max_containment_optimum = max(
                report.max_containment_optimum, cert.optimum)
            if not ok:
                if len(report.feasibility_failures) < max_counterexamples:
                    report.feasibility_failures.append(
                        {"state": states[i].tolist(),
                         "optimum": cert.optimum})
                continue
            w = env.draw_noise(rng, 1)
            out = env.step(states[i:i + 1], safe_i, w, 0)
            report.clamp_events += out.clamp_events
            inside = contains_point(S, out.next_states[0])
            if not inside.contained:
                if len(report.invariance_failures) < max_counterexamples:
                    report.invariance_failures.append(
                        {"state": states[i].tolist(),
                         "next_state": out.next_states[0].tolist(),
                         "optimum": inside.optimum})
        done += b
    return report
