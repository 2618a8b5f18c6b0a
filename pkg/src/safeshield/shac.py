"""Short-horizon actor-critic over the differentiable simulation.

The policy is updated from analytic first-order gradients of a truncated
window of rewards plus a bootstrapped terminal value; the computational
graph is cut deliberately after each window (fresh tape, detached
states), which keeps gradients bounded over long runs.  The critic is
regressed on td-lambda targets.

One window's policy loss (per environment lane, discount d):

    L = -(1/B) sum_lanes [ sum_{i<h} d^i r_i + d^h V(s_h) ]
        + (c_d/B) sum ||a_s - a||^2

where safeguard interventions enter the backward pass through their
closed-form Jacobians and the distance penalty restores a gradient
component along the mapping direction.  Episode boundaries inside a
window bootstrap the pre-reset terminal value and restart the discount;
truncation is vector-wide, so every lane shares the segment structure.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, SafetyFault
from .gradnet import (AdamState, ArchSpec, PolicySpec, adam_update, grad_of,
                      init_mlp, mlp_forward, policy_forward, tape_backward)
from .gradnet import tape as T
from .gradnet.nn import mlp_forward_np, policy_mean_np
from .safeguard.runner import SafeguardRunner


@dataclass
class TrainConfig:
    horizon: int = 16
    discount: float = 0.99
    td_lambda: float = 0.95
    actor_lr: float = 2e-3
    critic_lr: float = 5e-4
    batch: int = 32
    total_steps: int = 100_000
    critic_epochs: int = 16
    critic_minibatch: int = 128
    c_d: float = 0.0
    seed: int = 0
    eval_every: int = 2048
    eval_episodes: int = 16
    grad_clip: float = 1.0
    hidden: tuple = (64, 64)

    def __post_init__(self):
        if not (0.0 < self.discount < 1.0):
            raise ConfigError("discount must lie in (0, 1)")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if not (0.0 <= self.td_lambda <= 1.0):
            raise ConfigError("td_lambda must lie in [0, 1]")
        if self.batch < 1 or self.total_steps < 0:
            raise ConfigError("batch must be >= 1 and total_steps >= 0")


@dataclass
class RolloutBatch:
    """One recorded short-horizon window with its live tape."""

    tape: T.Tape
    loss_node: T.Node            # policy loss (reward part + penalty)
    actor_leaf: T.Node
    critic_leaf: T.Node
    obs_seq: np.ndarray          # (h+1, B, obs): next-obs are pre-reset
    rewards: np.ndarray          # (h, B)
    dones: np.ndarray            # (h,) vector-wide episode cuts
    end_states: np.ndarray       # (B, d_S) post-reset states for the next window
    interventions: int
    raw_actions: np.ndarray      # (h, B, d)
    safe_actions: np.ndarray     # (h, B, d)
    penalty_value: float


def collect_window(env, runner: SafeguardRunner | None, actor: np.ndarray,
                   critic: np.ndarray, pspec: PolicySpec, varch: ArchSpec,
                   state0: np.ndarray, step0: int, cfg: TrainConfig,
                   eps_rng, noise_rng, reset_seeds) -> RolloutBatch:
    """Roll ``cfg.horizon`` steps on a fresh tape and assemble the loss."""
    tape = T.Tape()
    B = state0.shape[0]
    h = cfg.horizon
    d = cfg.discount
    actor_leaf = T.leaf(tape, actor)
    critic_leaf = T.leaf(tape, critic)
    s = T.constant(tape, state0)

    terms: list[T.Node] = []
    pen_terms: list[T.Node] = []
    obs_seq = np.empty((h + 1, B, env.obs_dim))
    rewards = np.empty((h, B))
    dones = np.zeros(h, dtype=bool)
    raws = np.empty((h, B, env.action_dim))
    safes = np.empty((h, B, env.action_dim))
    interventions = 0
    offset = 0
    for i in range(h):
        obs = env.observe_tape(tape, s)
        obs_seq[i] = obs.value
        eps = eps_rng.standard_normal((B, env.action_dim))
        a, _ = policy_forward(tape, actor_leaf, pspec, obs, eps,
                              env.feasible_action)
        raws[i] = a.value
        if runner is not None:
            lin = env.linearize(s.value, a.value)
            safe_np, jac_np, flags = runner.apply_batch(lin, a.value)
            a_s = T.matrix_vjp(a, safe_np, jac_np)
            interventions += int(np.sum(flags))
            if cfg.c_d > 0:
                diff = T.sub(a_s, a)
                pen_terms.append(T.nsum(T.mul(diff, diff)))
        else:
            a_s = a
        safes[i] = a_s.value
        w = env.draw_noise(noise_rng, B)
        s_next, r = env.step_tape(tape, s, a_s, w)
        env.check_finite(s_next.value, r.value)
        rewards[i] = r.value
        terms.append(T.scale(T.nsum(r), d ** (i - offset)))
        obs_next = env.observe_tape(tape, s_next)
        obs_seq[i + 1] = obs_next.value
        if (step0 + i + 1) % env.episode_length == 0:
            dones[i] = True
            v_term = mlp_forward(tape, critic_leaf, varch, obs_next)
            terms.append(T.scale(T.nsum(v_term), d ** (i + 1 - offset)))
            fresh = env.reset(int(reset_seeds.pop(0)), B)
            s = T.constant(tape, fresh)
            offset = i + 1
            if runner is not None:
                runner.refresh_directions(noise_rng)
        else:
            s = s_next
    if offset < h:
        v_end = mlp_forward(tape, critic_leaf, varch,
                            env.observe_tape(tape, s))
        terms.append(T.scale(T.nsum(v_end), d ** (h - offset)))

    total = terms[0]
    for t in terms[1:]:
        total = T.add(total, t)
    loss = T.scale(total, -1.0 / B)
    penalty_value = 0.0
    if pen_terms:
        pen = pen_terms[0]
        for t in pen_terms[1:]:
            pen = T.add(pen, t)
        loss = T.add(loss, T.scale(pen, cfg.c_d / B))
        penalty_value = float(sum(p.value for p in pen_terms)) * cfg.c_d / B
    return RolloutBatch(tape, loss, actor_leaf, critic_leaf, obs_seq, rewards,
                        dones, s.value.copy(), interventions, raws, safes,
                        penalty_value)


def policy_loss(batch: RolloutBatch, cfg: TrainConfig):
    """Loss value and clipped actor gradient via the recorded tape."""
    grads = tape_backward(batch.loss_node)
    g = grad_of(grads, batch.actor_leaf)
    norm = float(np.linalg.norm(g))
    if cfg.grad_clip > 0 and norm > cfg.grad_clip:
        g = g * (cfg.grad_clip / norm)
    return float(batch.loss_node.value), g


def td_lambda_targets(rewards: np.ndarray, values: np.ndarray, discount: float,
                      td_lambda: float, dones=None) -> np.ndarray:
    """Exponentially weighted n-step bootstrapped returns.

    ``values`` holds V(s_0..s_h) with the terminal entries evaluated at
    the pre-reset states; ``dones[i]`` cuts the recursion after step i.
    td_lambda = 0 is the one-step bootstrap, 1 the Monte-Carlo return to
    the horizon.
    """
    rewards = np.asarray(rewards, dtype=float)
    values = np.asarray(values, dtype=float)
    h = rewards.shape[0]
    if dones is None:
        dones = np.zeros(h, dtype=bool)
    targets = np.empty_like(rewards)
    g_next = values[h]
    for i in range(h - 1, -1, -1):
        if dones[i]:
            g_next = values[i + 1]
            targets[i] = rewards[i] + discount * values[i + 1]
        else:
            targets[i] = rewards[i] + discount * (
                (1.0 - td_lambda) * values[i + 1] + td_lambda * g_next)
        g_next = targets[i]
    return targets


def critic_update(obs: np.ndarray, targets: np.ndarray, critic: np.ndarray,
                  varch: ArchSpec, state: AdamState, cfg: TrainConfig,
                  rng) -> tuple[np.ndarray, float]:
    """Minibatch MSE regression for ``cfg.critic_epochs`` epochs."""
    n = obs.shape[0]
    mb = min(cfg.critic_minibatch, n)
    loss_val = np.nan
    for _ in range(cfg.critic_epochs):
        perm = rng.permutation(n)
        for lo in range(0, n, mb):
            idx = perm[lo:lo + mb]
            tape = T.Tape()
            leaf = T.leaf(tape, critic)
            pred = mlp_forward(tape, leaf, varch, T.constant(tape, obs[idx]))
            err = T.sub(pred, T.constant(tape, targets[idx, None]))
            loss = T.nmean(T.mul(err, err))
            grads = tape_backward(loss)
            g = grad_of(grads, leaf)
            critic = adam_update(critic, g, state, cfg.critic_lr)
            loss_val = float(loss.value)
            tape.clear()
    return critic, loss_val


def evaluate(env, runner: SafeguardRunner | None, actor: np.ndarray,
             pspec: PolicySpec, cfg: TrainConfig, eval_seed: int) -> dict:
    """Deterministic-mean episodes from fixed seeds; returns summary stats."""
    B = cfg.eval_episodes
    rng = np.random.default_rng(eval_seed)
    states = env.reset(eval_seed, B)
    total = np.zeros(B)
    interventions = 0
    if runner is not None:
        runner.refresh_directions(rng)
    for t in range(env.episode_length):
        obs = env.observe(states)
        a = policy_mean_np(actor, pspec, obs, env.feasible_action)
        if runner is not None:
            lin = env.linearize(states, a)
            a, _, flags = runner.apply_batch(lin, a)
            interventions += int(np.sum(flags))
        w = env.draw_noise(rng, B)
        out = env.step(states, a, w, t)
        total += out.rewards
        states = out.next_states
    boot_rng = np.random.default_rng(eval_seed + 1)
    resamples = boot_rng.integers(0, B, size=(1000, B))
    means = total[resamples].mean(axis=1)
    lo, hi = np.percentile(means, [2.5, 97.5])
    return {"eval_reward_mean": float(total.mean()),
            "eval_reward_ci": [float(lo), float(hi)],
            "eval_interventions": interventions}


@dataclass
class TrainLog:
    records: list = field(default_factory=list)
    violations: int = 0
    interventions: int = 0
    env_steps: int = 0
    wall_s: float = 0.0
    final_actor: np.ndarray | None = None
    final_critic: np.ndarray | None = None

    def final_reward(self) -> float:
        return self.records[-1]["eval_reward_mean"] if self.records else np.nan

    def write_jsonl(self, path) -> None:
        with open(path, "w") as f:
            for rec in self.records:
                f.write(json.dumps(rec, sort_keys=True) + "\n")


def train(env, runner: SafeguardRunner | None, cfg: TrainConfig,
          log_path=None) -> TrainLog:
    """Alternate windowed policy updates and critic regression.

    Logs one record per evaluation.  With a safeguard attached, any
    executed-action safety violation aborts the run (the counter must
    stay zero for the whole run).
    """
    t_start = time.perf_counter()
    ss = np.random.SeedSequence(cfg.seed)
    s_init, s_eps, s_noise, s_resets, s_actor, s_critic = ss.spawn(6)
    eps_rng = np.random.default_rng(s_eps)
    noise_rng = np.random.default_rng(s_noise)
    reset_rng = np.random.default_rng(s_resets)
    critic_rng = np.random.default_rng(s_critic)

    pspec = PolicySpec(env.obs_dim, env.action_dim, hidden=cfg.hidden)
    varch = ArchSpec(env.obs_dim, cfg.hidden, 1)
    actor = pspec.init_params(np.random.default_rng(s_actor))
    critic = init_mlp(varch, np.random.default_rng(s_actor.spawn(1)[0]))
    a_state = AdamState.zeros(actor.size)
    c_state = AdamState.zeros(critic.size)

    eval_seed = int(np.random.default_rng(s_init).integers(2 ** 31 - 1))
    states = env.reset(eval_seed + 1, cfg.batch)
    if runner is not None:
        runner.refresh_directions(noise_rng)

    log = TrainLog()
    step = 0
    next_eval = 0
    actor_loss = np.nan
    critic_loss = np.nan
    while True:
        if step >= next_eval or step >= cfg.total_steps:
            rec = evaluate(env, runner, actor, pspec, cfg, eval_seed)
            rec.update({"step": step,
                        "interventions_per_step":
                            (runner.interventions / max(runner.steps, 1))
                            if runner else 0.0,
                        "violations": runner.violations if runner else 0,
                        "actor_loss": actor_loss if np.isfinite(actor_loss) else None,
                        "critic_loss": critic_loss if np.isfinite(critic_loss) else None,
                        "wall_s": time.perf_counter() - t_start})
            log.records.append(rec)
            next_eval += cfg.eval_every
            if runner is not None and runner.violations > 0:
                raise SafetyFault(
                    "safety violation during safeguarded training")
        if step >= cfg.total_steps:
            break
        n_resets = 2 + cfg.horizon // env.episode_length
        reset_seeds = [int(reset_rng.integers(2 ** 31 - 1))
                       for _ in range(n_resets)]
        batch = collect_window(env, runner, actor, critic, pspec, varch,
                               states, step, cfg, eps_rng, noise_rng,
                               reset_seeds)
        actor_loss, a_grad = policy_loss(batch, cfg)
        if np.all(np.isfinite(a_grad)):
            actor = adam_update(actor, a_grad, a_state, cfg.actor_lr)
        values = mlp_forward_np(critic, varch,
                                batch.obs_seq.reshape(-1, env.obs_dim))
        values = values.reshape(cfg.horizon + 1, cfg.batch)
        targets = td_lambda_targets(batch.rewards, values, cfg.discount,
                                    cfg.td_lambda, batch.dones)
        critic, critic_loss = critic_update(
            batch.obs_seq[:-1].reshape(-1, env.obs_dim),
            targets.reshape(-1), critic, varch, c_state, cfg, critic_rng)
        states = batch.end_states
        step += cfg.horizon * cfg.batch
        log.interventions += batch.interventions
        batch.tape.clear()

    log.violations = runner.violations if runner else 0
    log.env_steps = step
    log.wall_s = time.perf_counter() - t_start
    log.final_actor = actor
    log.final_critic = critic
    if log_path is not None:
        log.write_jsonl(log_path)
    return log
