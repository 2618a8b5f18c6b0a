"""Vectorised differentiable control environments."""

from .base import DiffEnv, LinearizationBatch, StepOutput
from .pendulum import PendulumEnv, PendulumParams
from .quadrotor import QuadrotorEnv, QuadrotorParams
from .rollout import TrajectoryBuffer, rollout_vector

__all__ = [
    "DiffEnv",
    "LinearizationBatch",
    "PendulumEnv",
    "PendulumParams",
    "QuadrotorEnv",
    "QuadrotorParams",
    "StepOutput",
    "TrajectoryBuffer",
    "rollout_vector",
]
