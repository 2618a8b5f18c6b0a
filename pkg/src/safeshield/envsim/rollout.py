"""Plain (untraced) vectorised rollouts and trajectory buffer export.

The buffer records everything needed to audit a run offline: states,
raw and safe actions, rewards, intervention flags, and the per-step
linearisation values.  Replaying the recorded safe actions through the
environment with the recorded noise reproduces the rewards bit-exactly.

File format: magic ``SGTRAJ1`` followed by the named float64
little-endian arrays back to back, with a JSON sidecar carrying shapes
and metadata.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

_TRAJ_MAGIC = b"SGTRAJ1"


@dataclass
class TrajectoryBuffer:
    states: np.ndarray         # (T+1, B, d_S)
    raw_actions: np.ndarray    # (T, B, d)
    safe_actions: np.ndarray   # (T, B, d)
    rewards: np.ndarray        # (T, B)
    noises: np.ndarray         # (T, B, d_S)
    interventions: np.ndarray  # (T, B) bool stored as float
    truncated: np.ndarray      # (T,) vector-wide episode cuts
    lin_values: np.ndarray     # (T, B, d_S)
    meta: dict = field(default_factory=dict)

    @property
    def horizon(self) -> int:
        return self.raw_actions.shape[0]

    def episode_returns(self) -> np.ndarray:
        """Sum of rewards per lane over the recorded window."""
        return self.rewards.sum(axis=0)

    _FIELDS = ("states", "raw_actions", "safe_actions", "rewards", "noises",
               "interventions", "truncated", "lin_values")

    def save(self, path) -> None:
        path = Path(path)
        shapes = {}
        with open(path, "wb") as f:
            f.write(_TRAJ_MAGIC)
            for name in self._FIELDS:
                arr = np.ascontiguousarray(getattr(self, name), dtype="<f8")
                shapes[name] = list(arr.shape)
                f.write(arr.tobytes())
        sidecar = {"shapes": shapes, "meta": self.meta}
        path.with_suffix(path.suffix + ".json").write_text(
            json.dumps(sidecar, sort_keys=True))

    @classmethod
    def load(cls, path) -> "TrajectoryBuffer":
        path = Path(path)
        sidecar = json.loads(path.with_suffix(path.suffix + ".json").read_text())
        raw = path.read_bytes()
        if raw[: len(_TRAJ_MAGIC)] != _TRAJ_MAGIC:
            raise ValueError("not a trajectory file")
        off = len(_TRAJ_MAGIC)
        arrays = {}
        for name in cls._FIELDS:
            shape = sidecar["shapes"][name]
            count = int(np.prod(shape)) if shape else 1
            arr = np.frombuffer(raw, dtype="<f8", count=count, offset=off)
            off += count * 8
            arrays[name] = arr.reshape(shape).copy()
        return cls(meta=sidecar["meta"], **arrays)


def rollout_vector(env, policy_fn, safeguard_fn, horizon: int,
                   initial_states: np.ndarray, noise_rng: np.random.Generator,
                   start_step: int = 0) -> TrajectoryBuffer:
    """Roll the vector of environments forward ``horizon`` steps.

    ``policy_fn(obs) -> raw actions``; ``safeguard_fn(lin_batch, raw) ->
    (safe, jacobians, intervened)`` or ``None`` to run unsafeguarded.
    Early truncation (episode end) applies to the entire vector at once.
    """
    B = initial_states.shape[0]
    states = [initial_states.copy()]
    raws, safes, rewards, noises, flags, truncs, lins = [], [], [], [], [], [], []
    s = initial_states
    for t in range(horizon):
        obs = env.observe(s)
        a_raw = policy_fn(obs)
        lin = env.linearize(s, a_raw)
        if safeguard_fn is None:
            a_safe = a_raw
            intervened = np.zeros(B, dtype=bool)
        else:
            a_safe, _, intervened = safeguard_fn(lin, a_raw)
        w = env.draw_noise(noise_rng, B)
        out = env.step(s, a_safe, w, start_step + t)
        raws.append(a_raw)
        safes.append(a_safe)
        rewards.append(out.rewards)
        noises.append(w)
        flags.append(intervened.astype(float))
        truncs.append(float(out.truncated))
        lins.append(lin.value)
        s = out.next_states
        states.append(s.copy())
    return TrajectoryBuffer(
        states=np.asarray(states), raw_actions=np.asarray(raws),
        safe_actions=np.asarray(safes), rewards=np.asarray(rewards),
        noises=np.asarray(noises), interventions=np.asarray(flags),
        truncated=np.asarray(truncs), lin_values=np.asarray(lins))
