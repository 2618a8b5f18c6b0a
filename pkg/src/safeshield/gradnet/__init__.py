"""Reverse-mode autodiff tape, MLP policy/critic, and Adam updates.

Double precision throughout: the active-set and rank checks downstream
need the headroom.
"""

from . import tape
from .adam import AdamState, adam_update
from .nn import (ArchSpec, PolicySpec, init_mlp, load_checkpoint,
                 mlp_forward, policy_forward, save_checkpoint)
from .tape import Node, Tape, grad_of, tape_backward

__all__ = [
    "AdamState",
    "ArchSpec",
    "Node",
    "PolicySpec",
    "Tape",
    "adam_update",
    "grad_of",
    "init_mlp",
    "load_checkpoint",
    "mlp_forward",
    "policy_forward",
    "save_checkpoint",
    "tape",
    "tape_backward",
]
