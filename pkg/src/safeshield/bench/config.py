"""Experiment configuration: one TOML/JSON file drives a whole run.

A config names the environment, the safeguard variants to sweep, the
training hyperparameters, the seeds, and the safe-set input files
(robust control invariant sets are inputs here, produced offline; see
scripts/synthesize_safe_sets.py).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

try:
    import tomllib
except ModuleNotFoundError:  # python < 3.11
    import tomli as tomllib

from ..envsim import PendulumEnv, PendulumParams, QuadrotorEnv, QuadrotorParams
from ..errors import ConfigError
from ..safeguard import RayMaskConfig, SafeActionSpec
from ..safeguard.runner import SafeguardRunner
from ..shac import TrainConfig
from ..zonoset import Box, Zonotope

# reward floor separating converged from stuck runs at budget end
NON_CONVERGENCE_FLOOR = {"pendulum": -300.0, "quadrotor": -1200.0}

# full-scale tuned reference rewards, annotation only (not assertion targets)
REFERENCE_REWARD = {
    ("pendulum", "none"): -8.780,
    ("pendulum", "bp"): -8.402,
    ("pendulum", "rm"): -8.412,
    ("quadrotor", "none"): -157.5,
    ("quadrotor", "bp"): -333.6,
    ("quadrotor", "rm"): -251.7,
}


@dataclass(frozen=True)
class Variant:
    """One safeguard configuration row of the sweep."""

    name: str
    safeguard: str                      # none | bp | rm
    ray_mask: RayMaskConfig | None = None
    c_d: float = 0.0

    def __post_init__(self):
        if self.safeguard not in ("none", "bp", "rm"):
            raise ConfigError(f"unknown safeguard {self.safeguard!r}")


@dataclass
class ExperimentConfig:
    name: str
    env: str
    seeds: list
    out_dir: Path
    train: TrainConfig
    variants: list
    env_params: dict = field(default_factory=dict)
    safe_state_set: Zonotope | None = None
    explicit_action_set: Zonotope | None = None
    feasible_state_box: Box | None = None
    floor: float = 0.0
    base_dir: Path = Path(".")


def _load_raw(path: Path) -> dict:
    if path.suffix == ".toml":
        with open(path, "rb") as f:
            return tomllib.load(f)
    if path.suffix == ".json":
        return json.loads(path.read_text())
    raise ConfigError(f"unsupported config format {path.suffix!r}")


def _load_set(base: Path, ref: str, kind: str):
    p = (base / ref).resolve()
    if not p.exists():
        raise ConfigError(f"referenced file does not exist: {p}")
    try:
        data = json.loads(p.read_text())
        if kind == "zonotope":
            return Zonotope.from_dict(data)
        return Box.from_dict(data)
    except (json.JSONDecodeError, KeyError, ValueError) as err:
        raise ConfigError(f"cannot parse {kind} file {p}: {err}") from err


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    raw = _load_raw(path)
    base = path.parent
    try:
        env = raw["env"]
        if env not in ("pendulum", "quadrotor"):
            raise ConfigError(f"unknown env {env!r}")
        seeds = list(raw["seeds"])
        if not seeds:
            raise ConfigError("seed list must be non-empty")
        train = TrainConfig(**raw.get("train", {}))
        sets = raw.get("safe_sets", {})
        safe_state = (_load_set(base, sets["safe_state_set"], "zonotope")
                      if "safe_state_set" in sets else None)
        explicit = (_load_set(base, sets["explicit_action_set"], "zonotope")
                    if "explicit_action_set" in sets else None)
        feas_box = (_load_set(base, sets["feasible_state_box"], "box")
                    if "feasible_state_box" in sets else None)
        variants = []
        for v in raw.get("variants", [{"name": "unsafe", "safeguard": "none"}]):
            rm = None
            if v.get("safeguard") == "rm":
                rm_raw = dict(v.get("ray_mask", {}))
                rm_raw.setdefault("c_d", v.get("c_d", 0.0))
                rm = RayMaskConfig(**rm_raw)
            variants.append(Variant(name=v["name"], safeguard=v["safeguard"],
                                    ray_mask=rm, c_d=float(v.get("c_d", 0.0))))
        names = [v.name for v in variants]
        if len(set(names)) != len(names):
            raise ConfigError("variant names must be unique")
        return ExperimentConfig(
            name=raw.get("name", path.stem), env=env, seeds=seeds,
            out_dir=Path(raw.get("out_dir", f"runs/{path.stem}")),
            train=train, variants=variants,
            env_params=raw.get("env_params", {}),
            safe_state_set=safe_state, explicit_action_set=explicit,
            feasible_state_box=feas_box,
            floor=float(raw.get("non_convergence_floor",
                                NON_CONVERGENCE_FLOOR[env])),
            base_dir=base)
    except (KeyError, TypeError, ValueError) as err:
        if isinstance(err, ConfigError):
            raise
        raise ConfigError(f"malformed config {path}: {err}") from err


def build_env(cfg: ExperimentConfig):
    """Environment instance per config (init states sampled in the safe set)."""
    if cfg.env == "pendulum":
        params = PendulumParams(**{k: tuple(v) if k == "noise_half_widths" else v
                                   for k, v in cfg.env_params.items()})
        return PendulumEnv(params, init_set=cfg.safe_state_set)
    params = QuadrotorParams(**{k: tuple(v) if k in ("noise_half_widths",
                                                     "pd_gains") else v
                                for k, v in cfg.env_params.items()})
    return QuadrotorEnv(params, init_set=cfg.safe_state_set,
                        feasible_state=cfg.feasible_state_box)


def build_spec(cfg: ExperimentConfig, env) -> SafeActionSpec | None:
    """Safe action spec from the configured sets (explicit wins if present)."""
    if cfg.explicit_action_set is not None:
        return SafeActionSpec.explicit(cfg.explicit_action_set,
                                       env.feasible_action)
    if cfg.safe_state_set is not None:
        return SafeActionSpec.induced(cfg.safe_state_set, env.noise_box,
                                      env.feasible_action)
    return None


def build_runner(cfg: ExperimentConfig, env, variant: Variant):
    if variant.safeguard == "none":
        return None
    spec = build_spec(cfg, env)
    if spec is None:
        raise ConfigError("safeguarded variant needs a safe set file")
    return SafeguardRunner(variant.safeguard, spec, cfg=variant.ray_mask)


def variant_train_config(cfg: ExperimentConfig, variant: Variant,
                         seed: int) -> TrainConfig:
    return replace(cfg.train, seed=seed, c_d=variant.c_d)
