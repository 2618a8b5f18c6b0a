"""Minimal reverse-mode autodiff over numpy arrays.

A tape records array-valued nodes with per-parent vector-Jacobian
products; the backward pass walks the node list in reverse creation
order (already a reverse topological order) exactly once.  Safeguards
enter the graph through :func:`matrix_vjp`, a custom node that applies a
supplied per-sample Jacobian in the backward pass, which is how the
reward gradient is chained through the safety layer.

Tapes are single-threaded by design: one tape per training thread.
"""

from __future__ import annotations

import numpy as np


class Tape:
    """Recording of one computational graph; cleared at graph cuts."""

    def __init__(self):
        self._nodes: list[Node] = []
        self.epoch = 0

    def __len__(self) -> int:
        return len(self._nodes)

    def clear(self) -> None:
        """Release all recorded nodes; outstanding nodes become stale."""
        self._nodes.clear()
        self.epoch += 1

    def _append(self, node: "Node") -> int:
        self._nodes.append(node)
        return len(self._nodes) - 1


class Node:
    __slots__ = ("tape", "idx", "epoch", "value", "parents")

    def __init__(self, tape: Tape, value: np.ndarray, parents):
        self.tape = tape
        self.value = np.asarray(value, dtype=float)
        self.parents = tuple(parents)  # pairs (node, vjp)
        self.epoch = tape.epoch
        self.idx = tape._append(self)

    @property
    def shape(self):
        return self.value.shape


def _wrap(tape: Tape, x) -> Node:
    return x if isinstance(x, Node) else constant(tape, x)


def _unbroadcast(grad: np.ndarray, shape) -> np.ndarray:
    """Sum ``grad`` down to ``shape`` (inverse of numpy broadcasting)."""
    g = grad
    while g.ndim > len(shape):
        g = g.sum(axis=0)
    for ax, s in enumerate(shape):
        if s == 1 and g.shape[ax] != 1:
            g = g.sum(axis=ax, keepdims=True)
    return g.reshape(shape)


def constant(tape: Tape, value) -> Node:
    return Node(tape, value, ())


leaf = constant  # leaves are constants whose gradient the caller collects


def tape_backward(root: Node, seed=None) -> dict[int, np.ndarray]:
    """Exact reverse-mode gradients of ``root`` w.r.t. every recorded node.

    Returns a map from node index to accumulated gradient.  Raises if the
    tape was cleared after the node was recorded (use-after-clear).
    """
    tape = root.tape
    if root.epoch != tape.epoch:
        raise RuntimeError("backward through a cleared tape (use-after-clear)")
    grads: dict[int, np.ndarray] = {}
    if seed is None:
        seed = np.ones_like(root.value)
    grads[root.idx] = np.asarray(seed, dtype=float)
    for node in reversed(tape._nodes[: root.idx + 1]):
        g = grads.get(node.idx)
        if g is None:
            continue
        for parent, vjp in node.parents:
            pg = vjp(g)
            acc = grads.get(parent.idx)
            grads[parent.idx] = pg if acc is None else acc + pg
    return grads


def grad_of(grads: dict[int, np.ndarray], node: Node) -> np.ndarray:
    return grads.get(node.idx, np.zeros_like(node.value))


# ---------------------------------------------------------------------------
# operations
# ---------------------------------------------------------------------------

def add(a: Node, b) -> Node:
    b = _wrap(a.tape, b)
    val = a.value + b.value
    return Node(a.tape, val, (
        (a, lambda g: _unbroadcast(g, a.value.shape)),
        (b, lambda g: _unbroadcast(g, b.value.shape)),
    ))


def sub(a: Node, b) -> Node:
    b = _wrap(a.tape, b)
    val = a.value - b.value
    return Node(a.tape, val, (
        (a, lambda g: _unbroadcast(g, a.value.shape)),
        (b, lambda g: _unbroadcast(-g, b.value.shape)),
    ))


def mul(a: Node, b) -> Node:
    b = _wrap(a.tape, b)
    av, bv = a.value, b.value
    return Node(a.tape, av * bv, (
        (a, lambda g: _unbroadcast(g * bv, av.shape)),
        (b, lambda g: _unbroadcast(g * av, bv.shape)),
    ))


def neg(a: Node) -> Node:
    return Node(a.tape, -a.value, ((a, lambda g: -g),))


def scale(a: Node, s: float) -> Node:
    s = float(s)
    return Node(a.tape, s * a.value, ((a, lambda g: s * g),))


def add_scalar(a: Node, s: float) -> Node:
    return Node(a.tape, a.value + float(s), ((a, lambda g: g),))


def matmul(a: Node, b: Node) -> Node:
    av, bv = a.value, b.value
    return Node(a.tape, av @ bv, (
        (a, lambda g: g @ bv.T),
        (b, lambda g: av.T @ g),
    ))


def tanh(a: Node) -> Node:
    t = np.tanh(a.value)
    return Node(a.tape, t, ((a, lambda g: g * (1.0 - t * t)),))


def elu(a: Node) -> Node:
    v = a.value
    e = np.exp(np.minimum(v, 0.0))
    val = np.where(v > 0, v, e - 1.0)
    dv = np.where(v > 0, 1.0, e)
    return Node(a.tape, val, ((a, lambda g: g * dv),))


def sin(a: Node) -> Node:
    c = np.cos(a.value)
    return Node(a.tape, np.sin(a.value), ((a, lambda g: g * c),))


def cos(a: Node) -> Node:
    s = np.sin(a.value)
    return Node(a.tape, np.cos(a.value), ((a, lambda g: -g * s),))


def exp(a: Node) -> Node:
    e = np.exp(a.value)
    return Node(a.tape, e, ((a, lambda g: g * e),))


def log(a: Node) -> Node:
    v = a.value
    return Node(a.tape, np.log(v), ((a, lambda g: g / v),))


def softplus(a: Node) -> Node:
    v = a.value
    val = np.logaddexp(0.0, v)
    sig = 1.0 / (1.0 + np.exp(-v))
    return Node(a.tape, val, ((a, lambda g: g * sig),))


def sqrt(a: Node, grad_floor: float = 1e-6) -> Node:
    """Exact square root with a bounded backward pass at the origin."""
    r = np.sqrt(a.value)
    denom = 2.0 * np.maximum(r, grad_floor)
    return Node(a.tape, r, ((a, lambda g: g / denom),))


def clip(a: Node, lo: float, hi: float) -> Node:
    v = a.value
    mask = ((v >= lo) & (v <= hi)).astype(float)
    return Node(a.tape, np.clip(v, lo, hi), ((a, lambda g: g * mask),))


def wrap_angle(a: Node, period: float = 2.0 * np.pi) -> Node:
    """Wrap into [-period/2, period/2); unit gradient almost everywhere."""
    v = a.value
    wrapped = v - period * np.round(v / period)
    return Node(a.tape, wrapped, ((a, lambda g: g),))


def nsum(a: Node, axis=None) -> Node:
    shape = a.value.shape

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g, shape).copy()
        return np.broadcast_to(np.expand_dims(g, axis), shape).copy()

    return Node(a.tape, a.value.sum(axis=axis), ((a, vjp),))


def nmean(a: Node, axis=None) -> Node:
    shape = a.value.shape
    count = a.value.size if axis is None else shape[axis]

    def vjp(g):
        if axis is None:
            return np.broadcast_to(g / count, shape).copy()
        return np.broadcast_to(np.expand_dims(g / count, axis), shape).copy()

    return Node(a.tape, a.value.mean(axis=axis), ((a, vjp),))


def slice1d(a: Node, start: int, stop: int) -> Node:
    size = a.value.size

    def vjp(g):
        out = np.zeros(size)
        out[start:stop] = g
        return out

    return Node(a.tape, a.value[start:stop], ((a, vjp),))


def reshape(a: Node, shape) -> Node:
    old = a.value.shape
    return Node(a.tape, a.value.reshape(shape),
                ((a, lambda g: g.reshape(old)),))


def column(a: Node, j: int) -> Node:
    """Column j of a (B, k) array as a (B,) vector."""
    shape = a.value.shape

    def vjp(g):
        out = np.zeros(shape)
        out[:, j] = g
        return out

    return Node(a.tape, a.value[:, j].copy(), ((a, vjp),))


def stack_columns(cols: list[Node]) -> Node:
    tape = cols[0].tape
    val = np.stack([c.value for c in cols], axis=1)
    parents = []
    for j, c in enumerate(cols):
        parents.append((c, (lambda jj: lambda g: g[:, jj])(j)))
    return Node(tape, val, parents)


def concat(parts: list[Node], axis: int = 1) -> Node:
    tape = parts[0].tape
    val = np.concatenate([p.value for p in parts], axis=axis)
    offsets = np.cumsum([0] + [p.value.shape[axis] for p in parts])
    parents = []
    for i, p in enumerate(parts):
        lo, hi = offsets[i], offsets[i + 1]
        parents.append((p, (lambda lo, hi: lambda g:
                            np.take(g, range(lo, hi), axis=axis))(lo, hi)))
    return Node(tape, val, parents)


def matrix_vjp(a: Node, value: np.ndarray, jacobians: np.ndarray) -> Node:
    """Custom node: forward ``value`` with backward through per-sample Jacobians.

    ``jacobians`` has shape (B, d_out, d_in); the vjp is J[b]' g[b].  This
    is the safeguard node: the forward value comes from the convex solve,
    the backward map from its closed-form Jacobian.
    """
    J = np.asarray(jacobians, dtype=float)
    return Node(a.tape, value, ((a, lambda g: np.einsum("bj,bji->bi", g, J)),))
