"""Noisy torque-limited pendulum balancing.

State (theta, theta_dot) with theta in [-pi, pi) wrapped and the rate
clamped; one-dimensional torque action on [-1, 1].

    theta_ddot = 1.5 g sin(theta)/l + 3 c a/(m l^2) + w

semi-implicit Euler: the rate updates first, the angle integrates the
new rate.  Reward: -theta^2 - theta_dot^2/10 - a^2/100.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gradnet import tape as T
from ..zonoset import Box, Zonotope
from .base import DiffEnv, LinearizationBatch, StepOutput


@dataclass(frozen=True)
class PendulumParams:
    gravity: float = 9.81
    length: float = 1.0
    mass: float = 1.0
    torque_scale: float = 2.0
    dt: float = 0.05
    episode_length: int = 200
    noise_half_widths: tuple = (0.0, 0.1)
    rate_limit: float = 1000.0

    @property
    def gain_gravity(self) -> float:
        return 1.5 * self.gravity / self.length

    @property
    def gain_action(self) -> float:
        return 3.0 * self.torque_scale / (self.mass * self.length ** 2)


class PendulumEnv(DiffEnv):
    state_dim = 2
    action_dim = 1
    obs_dim = 3  # (cos theta, sin theta, theta_dot): no angle discontinuity

    def __init__(self, params: PendulumParams = PendulumParams(),
                 init_set: Zonotope | None = None):
        self.params = params
        self.dt = params.dt
        self.episode_length = params.episode_length
        self.feasible_state = Box([0.0, 0.0], [np.pi, params.rate_limit])
        self.feasible_action = Box([0.0], [1.0])
        self.noise_box = Box(np.zeros(2), params.noise_half_widths)
        self.init_set = init_set if init_set is not None else \
            Zonotope([0.0, 0.0], np.diag([0.05, 0.05]))
        dt = params.dt
        self._df_da = np.array([[dt * dt * params.gain_action],
                                [dt * params.gain_action]])
        self._df_dw = np.array([[dt, dt * dt],
                                [0.0, dt]])

    def _accel(self, theta, omega, a, w1):
        p = self.params
        return p.gain_gravity * np.sin(theta) + p.gain_action * a + w1

    def step_numpy(self, states, actions, noise):
        """One integration step: (next_states, rewards, clamp_events)."""
        p = self.params
        th, om = states[:, 0], states[:, 1]
        a = actions[:, 0]
        acc = self._accel(th, om, a, noise[:, 1])
        om_raw = om + p.dt * acc
        om_next = np.clip(om_raw, -p.rate_limit, p.rate_limit)
        clamp_events = int(np.sum(om_raw != om_next))
        th_next = th + p.dt * (om_next + noise[:, 0])
        th_next = th_next - 2.0 * np.pi * np.round(th_next / (2.0 * np.pi))
        rewards = -(th ** 2) - om ** 2 / 10.0 - a ** 2 / 100.0
        return np.stack([th_next, om_next], axis=1), rewards, clamp_events

    def step_tape(self, tape: T.Tape, s: T.Node, a: T.Node, noise: np.ndarray):
        """Tape-recorded step, value-identical to :meth:`step_numpy`."""
        p = self.params
        th, om = T.column(s, 0), T.column(s, 1)
        ac = T.column(a, 0)
        acc = T.add(T.add(T.scale(T.sin(th), p.gain_gravity),
                          T.scale(ac, p.gain_action)),
                    T.constant(tape, noise[:, 1]))
        om_next = T.clip(T.add(om, T.scale(acc, p.dt)),
                         -p.rate_limit, p.rate_limit)
        th_next = T.wrap_angle(T.add(th, T.scale(
            T.add(om_next, T.constant(tape, noise[:, 0])), p.dt)))
        nxt = T.stack_columns([th_next, om_next])
        reward = T.neg(T.add(T.add(T.mul(th, th),
                                   T.scale(T.mul(om, om), 0.1)),
                             T.scale(T.mul(ac, ac), 0.01)))
        return nxt, reward

    def linearize(self, states, actions) -> LinearizationBatch:
        """Exact affine data at (state, action, centre noise); unconstrained map."""
        B = states.shape[0]
        p = self.params
        th, om = states[:, 0], states[:, 1]
        a = actions[:, 0]
        acc = self._accel(th, om, a, 0.0)
        om_next = om + p.dt * acc
        th_next = th + p.dt * om_next
        value = np.stack([th_next, om_next], axis=1)
        return LinearizationBatch(value,
                                  np.broadcast_to(self._df_da, (B, 2, 1)).copy(),
                                  np.broadcast_to(self._df_dw, (B, 2, 2)).copy())

    def observe(self, states) -> np.ndarray:
        th, om = states[:, 0], states[:, 1]
        return np.stack([np.cos(th), np.sin(th), om], axis=1)

    def observe_tape(self, tape: T.Tape, s: T.Node) -> T.Node:
        th, om = T.column(s, 0), T.column(s, 1)
        return T.stack_columns([T.cos(th), T.sin(th), om])

    def step(self, states, actions, noise, step_index: int) -> StepOutput:
        lin = self.linearize(states, actions)
        nxt, rew, clamps = self.step_numpy(states, actions, noise)
        self.check_finite(nxt, rew)
        truncated = (step_index + 1) % self.episode_length == 0
        return StepOutput(nxt, rew, lin, truncated, clamps)
