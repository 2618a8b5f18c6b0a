"""Run aggregation: Reward / #Steps / #Stuck, bootstrap CIs, CSV output.

Non-convergent runs (final reward below the task floor) are excluded
from the reward and step aggregates and counted in #Stuck instead.  All
randomness is seeded, so identical inputs produce byte-identical CSV.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

BOOTSTRAP_RESAMPLES = 1000
BOOTSTRAP_SEED = 20_240_501
CONVERGENCE_BAND = 0.05


@dataclass
class RunRecord:
    """Per-seed outcome of one training run."""

    variant: str
    seed: int
    records: list                    # eval dicts {step, eval_reward_mean, ...}
    violations: int
    env_steps: int
    wall_s: float
    interventions_per_step: float = 0.0

    @property
    def final_reward(self) -> float:
        return float(self.records[-1]["eval_reward_mean"])

    def steps_to_converge(self) -> int:
        """First eval step within 5% of the final policy's reward."""
        final = self.final_reward
        band = CONVERGENCE_BAND * abs(final)
        for rec in self.records:
            if abs(rec["eval_reward_mean"] - final) <= band:
                return int(rec["step"])
        return int(self.records[-1]["step"])


def bootstrap_ci(values, n_resamples: int = BOOTSTRAP_RESAMPLES,
                 seed: int = BOOTSTRAP_SEED, level: float = 0.95):
    """Seeded percentile-bootstrap CI of the mean."""
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        return (np.nan, np.nan)
    if values.size == 1:
        return (float(values[0]), float(values[0]))
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, values.size, size=(n_resamples, values.size))
    means = values[idx].mean(axis=1)
    tail = 100.0 * (1.0 - level) / 2.0
    lo, hi = np.percentile(means, [tail, 100.0 - tail])
    return float(lo), float(hi)


@dataclass
class SummaryRow:
    variant: str
    steps: float                 # mean #Steps over convergent runs
    reward: float                # mean final reward over convergent runs
    reward_ci: tuple
    stuck: int
    n_runs: int
    violations: int
    interventions_per_step: float
    wall_s_per_step: float
    reference_reward: float | None = None


@dataclass
class SummaryTable:
    rows: list = field(default_factory=list)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["variant", "steps", "reward", "reward_ci_lo",
                    "reward_ci_hi", "stuck", "n_runs", "violations",
                    "interventions_per_step", "reference_reward"])
        for r in self.rows:
            w.writerow([
                r.variant,
                f"{r.steps:.0f}" if np.isfinite(r.steps) else "",
                f"{r.reward:.4f}" if np.isfinite(r.reward) else "",
                f"{r.reward_ci[0]:.4f}" if np.isfinite(r.reward_ci[0]) else "",
                f"{r.reward_ci[1]:.4f}" if np.isfinite(r.reward_ci[1]) else "",
                r.stuck, r.n_runs, r.violations,
                f"{r.interventions_per_step:.6f}",
                "" if r.reference_reward is None
                else f"{r.reference_reward:.3f}",
            ])
        return buf.getvalue()


def aggregate(variant: str, runs: list, floor: float,
              reference: float | None = None) -> SummaryRow:
    """Fold per-seed runs into one table row, excluding stuck runs."""
    stuck = [r for r in runs if r.final_reward < floor]
    ok = [r for r in runs if r.final_reward >= floor]
    rewards = [r.final_reward for r in ok]
    steps = [r.steps_to_converge() for r in ok]
    total_env_steps = sum(r.env_steps for r in runs)
    return SummaryRow(
        variant=variant,
        steps=float(np.mean(steps)) if steps else np.nan,
        reward=float(np.mean(rewards)) if rewards else np.nan,
        reward_ci=bootstrap_ci(rewards),
        stuck=len(stuck),
        n_runs=len(runs),
        violations=sum(r.violations for r in runs),
        interventions_per_step=float(np.mean(
            [r.interventions_per_step for r in runs])),
        wall_s_per_step=(sum(r.wall_s for r in runs) / total_env_steps
                         if total_env_steps else np.nan),
        reference_reward=reference)
