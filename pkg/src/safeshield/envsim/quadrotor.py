"""Planar quadrotor stabilisation around a stored initial position.

State (x, y, r, x_dot, y_dot, r_dot, x0, y0): position, roll, their
rates, and the episode's initial position (constant through the episode
so the reward can reference it).  Actions are thrust a0 and roll command
a1 on [-1, 1]^2.

    x_ddot = (a0 c0 + g) sin(r) + w_x
    y_ddot = (a0 c0 + g) cos(r) - g + w_y
    r_ddot = a1 c1 pd2 - pd0 r - pd1 r_dot

Reward: -2.5 sqrt((x-x0)^2 + (y-y0)^2) - (r + x_dot + y_dot + r_dot)/10
        - (a0 c0 + g)^2/50 - (a1 c1)^2/100.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..gradnet import tape as T
from ..zonoset import Box, Zonotope
from .base import DiffEnv, LinearizationBatch, StepOutput

_POS = slice(0, 3)
_VEL = slice(3, 6)


@dataclass(frozen=True)
class QuadrotorParams:
    gravity: float = 9.81
    thrust_scale: float = 5.0      # c0
    roll_scale: float = 0.3        # c1
    pd_gains: tuple = (70.0, 17.0, 70.0)
    dt: float = 0.02
    episode_length: int = 200
    noise_half_widths: tuple = (0.0, 0.0, 0.0, 0.1, 0.1, 0.0, 0.0, 0.0)


class QuadrotorEnv(DiffEnv):
    state_dim = 8
    action_dim = 2
    obs_dim = 6  # relative position + roll + rates

    def __init__(self, params: QuadrotorParams = QuadrotorParams(),
                 init_set: Zonotope | None = None,
                 feasible_state: Box | None = None):
        self.params = params
        self.dt = params.dt
        self.episode_length = params.episode_length
        self.feasible_action = Box([0.0, 0.0], [1.0, 1.0])
        self.noise_box = Box(np.zeros(8), params.noise_half_widths)
        self.init_set = init_set if init_set is not None else Zonotope(
            np.zeros(8), np.diag([0.2, 0.2, 0.02, 0.05, 0.05, 0.02, 0.0, 0.0]))
        if feasible_state is None:
            hull = self.init_set.interval_hull()
            feasible_state = Box(hull.centre,
                                 1.25 * np.maximum(hull.half_widths, 1.0))
        self.feasible_state = feasible_state
        dt = params.dt
        dw = np.zeros((8, 8))
        dw[_POS, _POS] = dt * np.eye(3)
        dw[0:3, 3:6] = dt * dt * np.eye(3)
        dw[_VEL, _VEL] = dt * np.eye(3)
        dw[6:8, 6:8] = dt * np.eye(2)
        self._df_dw = dw

    def _accels(self, r, vr, a0, a1):
        p = self.params
        thrust = a0 * p.thrust_scale + p.gravity
        ax = thrust * np.sin(r)
        ay = thrust * np.cos(r) - p.gravity
        pd0, pd1, pd2 = p.pd_gains
        ar = a1 * p.roll_scale * pd2 - pd0 * r - pd1 * vr
        return ax, ay, ar

    def step_numpy(self, states, actions, noise):
        p = self.params
        pos, vel = states[:, _POS], states[:, _VEL]
        anchor = states[:, 6:8]
        a0, a1 = actions[:, 0], actions[:, 1]
        ax, ay, ar = self._accels(states[:, 2], states[:, 5], a0, a1)
        acc = np.stack([ax, ay, ar], axis=1)
        vel_raw = vel + p.dt * (acc + noise[:, _VEL])
        lo = self.feasible_state.centre - self.feasible_state.half_widths
        hi = self.feasible_state.centre + self.feasible_state.half_widths
        vel_next = np.clip(vel_raw, lo[_VEL], hi[_VEL])
        pos_raw = pos + p.dt * (vel_next + noise[:, _POS])
        pos_next = np.clip(pos_raw, lo[_POS], hi[_POS])
        clamp_events = int(np.sum(vel_raw != vel_next) + np.sum(pos_raw != pos_next))
        nxt = np.hstack([pos_next, vel_next, anchor + p.dt * noise[:, 6:8]])
        dist = np.sqrt((pos[:, 0] - anchor[:, 0]) ** 2
                       + (pos[:, 1] - anchor[:, 1]) ** 2)
        thrust = a0 * p.thrust_scale + p.gravity
        rewards = (-2.5 * dist
                   - (states[:, 2] + vel[:, 0] + vel[:, 1] + vel[:, 2]) / 10.0
                   - thrust ** 2 / 50.0
                   - (a1 * p.roll_scale) ** 2 / 100.0)
        return nxt, rewards, clamp_events

    def step_tape(self, tape: T.Tape, s: T.Node, a: T.Node, noise: np.ndarray):
        p = self.params
        lo = self.feasible_state.centre - self.feasible_state.half_widths
        hi = self.feasible_state.centre + self.feasible_state.half_widths
        cols = [T.column(s, j) for j in range(8)]
        a0, a1 = T.column(a, 0), T.column(a, 1)
        r, vr = cols[2], cols[5]
        thrust = T.add_scalar(T.scale(a0, p.thrust_scale), p.gravity)
        ax = T.mul(thrust, T.sin(r))
        ay = T.add_scalar(T.mul(thrust, T.cos(r)), -p.gravity)
        pd0, pd1, pd2 = p.pd_gains
        ar = T.sub(T.scale(a1, p.roll_scale * pd2),
                   T.add(T.scale(r, pd0), T.scale(vr, pd1)))
        vel_next, pos_next = [], []
        for j, acc in enumerate((ax, ay, ar)):
            w = T.constant(tape, noise[:, 3 + j])
            vn = T.clip(T.add(cols[3 + j], T.scale(T.add(acc, w), p.dt)),
                        lo[3 + j], hi[3 + j])
            vel_next.append(vn)
        for j in range(3):
            w = T.constant(tape, noise[:, j])
            pn = T.clip(T.add(cols[j], T.scale(T.add(vel_next[j], w), p.dt)),
                        lo[j], hi[j])
            pos_next.append(pn)
        anchor = [T.add(cols[6 + j],
                        T.constant(tape, p.dt * noise[:, 6 + j]))
                  for j in range(2)]
        nxt = T.stack_columns(pos_next + vel_next + anchor)

        dx = T.sub(cols[0], cols[6])
        dy = T.sub(cols[1], cols[7])
        dist = T.sqrt(T.add(T.mul(dx, dx), T.mul(dy, dy)))
        rate_term = T.add(T.add(cols[2], cols[3]), T.add(cols[4], cols[5]))
        rollcmd = T.scale(a1, p.roll_scale)
        reward = T.neg(T.add(
            T.add(T.scale(dist, 2.5), T.scale(rate_term, 0.1)),
            T.add(T.scale(T.mul(thrust, thrust), 1.0 / 50.0),
                  T.scale(T.mul(rollcmd, rollcmd), 1.0 / 100.0))))
        return nxt, reward

    def linearize(self, states, actions) -> LinearizationBatch:
        B = states.shape[0]
        p = self.params
        dt = p.dt
        a0, a1 = actions[:, 0], actions[:, 1]
        r = states[:, 2]
        ax, ay, ar = self._accels(r, states[:, 5], a0, a1)
        vel_next = states[:, _VEL] + dt * np.stack([ax, ay, ar], axis=1)
        pos_next = states[:, _POS] + dt * vel_next
        value = np.hstack([pos_next, vel_next, states[:, 6:8]])
        df_da = np.zeros((B, 8, 2))
        sin_r, cos_r = np.sin(r), np.cos(r)
        pd2 = p.pd_gains[2]
        df_da[:, 3, 0] = dt * p.thrust_scale * sin_r
        df_da[:, 4, 0] = dt * p.thrust_scale * cos_r
        df_da[:, 5, 1] = dt * p.roll_scale * pd2
        df_da[:, 0, 0] = dt * dt * p.thrust_scale * sin_r
        df_da[:, 1, 0] = dt * dt * p.thrust_scale * cos_r
        df_da[:, 2, 1] = dt * dt * p.roll_scale * pd2
        return LinearizationBatch(value, df_da,
                                  np.broadcast_to(self._df_dw, (B, 8, 8)).copy())

    def observe(self, states) -> np.ndarray:
        rel = states[:, 0:2] - states[:, 6:8]
        return np.hstack([rel, states[:, 2:6]])

    def observe_tape(self, tape: T.Tape, s: T.Node) -> T.Node:
        cols = [T.column(s, j) for j in range(8)]
        return T.stack_columns([T.sub(cols[0], cols[6]),
                                T.sub(cols[1], cols[7]),
                                cols[2], cols[3], cols[4], cols[5]])

    def step(self, states, actions, noise, step_index: int) -> StepOutput:
        lin = self.linearize(states, actions)
        nxt, rew, clamps = self.step_numpy(states, actions, noise)
        self.check_finite(nxt, rew)
        truncated = (step_index + 1) % self.episode_length == 0
        return StepOutput(nxt, rew, lin, truncated, clamps)
