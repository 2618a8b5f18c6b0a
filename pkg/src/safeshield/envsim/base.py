"""Shared environment machinery: batched states, linearisations, noise.

Environments are vectorised (one state row per lane), integrate with a
semi-implicit Euler scheme, and are affine in action and noise at any
fixed state, so the linearisation they report is exact in those
arguments.  States are kept inside the feasible state box by wrapping
the pendulum angle and clamping everything else; clamp events are
counted, and the safe-set validation guarantees they never fire inside
the safe state set.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import SimulationFault
from ..safeguard import TransitionLinearization
from ..zonoset import Box, Zonotope


@dataclass
class LinearizationBatch:
    """Per-lane transition linearisations (value anchored at the lane action)."""

    value: np.ndarray    # (B, d_S)
    df_da: np.ndarray    # (B, d_S, d)
    df_dw: np.ndarray    # (B, d_S, d_S)

    def single(self, i: int) -> TransitionLinearization:
        return TransitionLinearization(self.value[i], self.df_da[i],
                                       self.df_dw[i])

    @property
    def batch(self) -> int:
        return self.value.shape[0]


@dataclass
class StepOutput:
    next_states: np.ndarray   # (B, d_S)
    rewards: np.ndarray       # (B,)
    lin: LinearizationBatch
    truncated: bool
    clamp_events: int


class DiffEnv:
    """Base for the differentiable control environments."""

    state_dim: int
    action_dim: int
    obs_dim: int
    feasible_state: Box
    feasible_action: Box
    noise_box: Box
    init_set: Zonotope
    dt: float
    episode_length: int

    def reset(self, seed, batch: int) -> np.ndarray:
        """Deterministic per-seed initial states inside the init set.

        Lane i of any batch size sees the same state for the same seed.
        """
        rng = np.random.default_rng(seed)
        return self.init_set.sample(rng, size=batch)

    def draw_noise(self, rng: np.random.Generator, batch: int) -> np.ndarray:
        """Uniform draws over the (bounded) noise box."""
        w = self.noise_box.sample(rng, size=batch)
        assert np.all(np.abs(w - self.noise_box.centre)
                      <= self.noise_box.half_widths + 1e-12)
        return w

    def check_finite(self, states: np.ndarray, rewards: np.ndarray) -> None:
        if not (np.all(np.isfinite(states)) and np.all(np.isfinite(rewards))):
            raise SimulationFault("non-finite state or reward")

    # numpy / tape step pairs are implemented per environment
    def step_numpy(self, states, actions, noise):
        raise NotImplementedError

    def linearize(self, states, actions) -> LinearizationBatch:
        raise NotImplementedError

    def observe(self, states) -> np.ndarray:
        raise NotImplementedError
