"""MLP actor/critic over one flat parameter vector, plus checkpoints.

Networks are 2x64 ELU by default.  The stochastic policy head squashes a
reparameterised Gaussian through tanh onto the feasible action box; the
log standard deviation is a state-independent parameter block clamped to
[-5, 2].
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field

import numpy as np

from ..zonoset import Box
from . import tape as T

_CKPT_MAGIC = b"SSCKPT1\n"
LOG_STD_MIN, LOG_STD_MAX = -5.0, 2.0
_LOG_2PI = float(np.log(2.0 * np.pi))


@dataclass(frozen=True)
class ArchSpec:
    """Layer widths and activation for one MLP."""

    in_dim: int
    hidden: tuple = (64, 64)
    out_dim: int = 1
    activation: str = "elu"

    @property
    def layer_dims(self) -> list[tuple[int, int]]:
        dims = [self.in_dim, *self.hidden, self.out_dim]
        return [(dims[i], dims[i + 1]) for i in range(len(dims) - 1)]

    @property
    def param_count(self) -> int:
        return sum(ni * no + no for ni, no in self.layer_dims)


def init_mlp(arch: ArchSpec, rng: np.random.Generator,
             final_scale: float = 1.0) -> np.ndarray:
    """Xavier-normal weights, zero biases, flat float64 vector."""
    chunks = []
    last = len(arch.layer_dims) - 1
    for i, (ni, no) in enumerate(arch.layer_dims):
        std = np.sqrt(2.0 / (ni + no))
        if i == last:
            std *= final_scale
        chunks.append(rng.normal(0.0, std, size=ni * no))
        chunks.append(np.zeros(no))
    return np.concatenate(chunks)


def mlp_forward(tape: T.Tape, flat: T.Node, arch: ArchSpec, x: T.Node,
                offset: int = 0) -> T.Node:
    act = T.elu if arch.activation == "elu" else T.tanh
    h = x
    o = offset
    last = len(arch.layer_dims) - 1
    for i, (ni, no) in enumerate(arch.layer_dims):
        W = T.reshape(T.slice1d(flat, o, o + ni * no), (ni, no))
        o += ni * no
        b = T.slice1d(flat, o, o + no)
        o += no
        h = T.add(T.matmul(h, W), b)
        if i != last:
            h = act(h)
    return h


@dataclass(frozen=True)
class PolicySpec:
    """Tanh-squashed Gaussian policy: MLP mean + state-independent log-std."""

    obs_dim: int
    action_dim: int
    hidden: tuple = (64, 64)
    activation: str = "elu"
    log_std_init: float = -1.0

    @property
    def arch(self) -> ArchSpec:
        return ArchSpec(self.obs_dim, self.hidden, self.action_dim,
                        self.activation)

    @property
    def param_count(self) -> int:
        return self.arch.param_count + self.action_dim

    def init_params(self, rng: np.random.Generator) -> np.ndarray:
        flat = init_mlp(self.arch, rng, final_scale=0.1)
        return np.concatenate([flat, np.full(self.action_dim,
                                             self.log_std_init)])


def policy_forward(tape: T.Tape, params: T.Node, spec: PolicySpec,
                   obs: T.Node, eps: np.ndarray | None,
                   action_box: Box) -> tuple[T.Node, T.Node]:
    """Reparameterised tanh-Gaussian draw scaled onto the feasible box.

    ``eps`` is the frozen standard-normal draw (B, d); ``None`` gives the
    deterministic mean action.  Returns (actions, log_probs); the log
    probability includes the tanh squash correction and the box scaling.
    Emitted actions lie strictly inside the box (tanh range).
    """
    mean = mlp_forward(tape, params, spec.arch, obs)
    n0 = spec.arch.param_count
    log_std = T.clip(T.slice1d(params, n0, n0 + spec.action_dim),
                     LOG_STD_MIN, LOG_STD_MAX)
    if eps is None:
        pre = mean
        z = T.scale(mean, 0.0)
    else:
        noise = T.mul(T.exp(log_std), T.constant(tape, eps))
        pre = T.add(mean, noise)
        z = T.mul(T.sub(pre, mean), T.exp(T.neg(log_std)))
    squashed = T.tanh(pre)
    hw = action_box.half_widths
    action = T.add(T.mul(squashed, T.constant(tape, hw)),
                   T.constant(tape, action_box.centre))
    # log N(pre; mean, sigma) - sum log |d action / d pre|
    gauss = T.scale(T.add(T.add(T.mul(z, z), T.scale(log_std, 2.0)),
                          T.constant(tape, np.full(spec.action_dim, _LOG_2PI))),
                    -0.5)
    # log(1 - tanh(x)^2) = 2 (log 2 - x - softplus(-2x))
    squash_corr = T.scale(T.sub(T.add_scalar(T.neg(pre), np.log(2.0)),
                                T.softplus(T.scale(pre, -2.0))), 2.0)
    log_det = T.add(squash_corr, T.constant(tape, np.log(hw)))
    logprob = T.nsum(T.sub(gauss, log_det), axis=1)
    return action, logprob


def save_checkpoint(path, flat: np.ndarray, meta: dict) -> None:
    """Flat float64 array with a JSON architecture header; round-trips bit-exactly."""
    header = json.dumps(meta, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(_CKPT_MAGIC)
        f.write(struct.pack("<I", len(header)))
        f.write(header)
        f.write(np.asarray(flat, dtype="<f8").tobytes())


def load_checkpoint(path) -> tuple[np.ndarray, dict]:
    with open(path, "rb") as f:
        magic = f.read(len(_CKPT_MAGIC))
        if magic != _CKPT_MAGIC:
            raise ValueError("not a parameter checkpoint file")
        (hlen,) = struct.unpack("<I", f.read(4))
        meta = json.loads(f.read(hlen).decode())
        flat = np.frombuffer(f.read(), dtype="<f8").copy()
    return flat, meta


def mlp_forward_np(flat: np.ndarray, arch: ArchSpec, x: np.ndarray,
                   offset: int = 0) -> np.ndarray:
    """Plain-numpy forward pass, value-identical to :func:`mlp_forward`."""
    h = x
    o = offset
    last = len(arch.layer_dims) - 1
    for i, (ni, no) in enumerate(arch.layer_dims):
        W = flat[o:o + ni * no].reshape(ni, no)
        o += ni * no
        b = flat[o:o + no]
        o += no
        h = h @ W + b
        if i != last:
            if arch.activation == "elu":
                h = np.where(h > 0, h, np.exp(np.minimum(h, 0.0)) - 1.0)
            else:
                h = np.tanh(h)
    return h


def policy_mean_np(flat: np.ndarray, spec: PolicySpec, obs: np.ndarray,
                   action_box: Box) -> np.ndarray:
    """Deterministic mean action (tanh-squashed, box-scaled), numpy path."""
    mean = mlp_forward_np(flat, spec.arch, obs)
    return action_box.centre + action_box.half_widths * np.tanh(mean)
