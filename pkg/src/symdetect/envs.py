"""Point-mass environments with known symmetry groups.

``box2d`` is a point agent in a square pen with elastic walls: its dynamics
are equivariant under the dihedral group of the square and nothing else.
``grav3d`` is a point mass under gravity above a ground plane with horizontal
wind: equivariant under rotations about z, x/y reflections and x/y
translations, but not under anything that moves or flips the vertical axis.

Every trajectory draws its randomness from its own child stream of the
config seed, so each one is reproducible on its own and simulation can be
vectorized across trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, fields, replace
from typing import Any

import numpy as np

from .trajectory import ChannelGroup, Dataset, StateSchema, Trajectory

BOX2D_POLICIES = ("random", "goal", "goal_biased")
GRAV3D_POLICIES = ("random", "goal")


class ConfigError(ValueError):
    pass


def _from_dict(cls, d: dict[str, Any]):
    names = {f.name for f in fields(cls)}
    unknown = set(d) - names
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} fields: {sorted(unknown)}")
    return cls(**d)


def _streams(seed: int, n: int) -> list[np.random.Generator]:
    return [np.random.default_rng(s) for s in np.random.SeedSequence(seed).spawn(n)]


def _disc(rng: np.random.Generator, radius: float) -> np.ndarray:
    r = radius * math.sqrt(rng.uniform())
    phi = rng.uniform(0.0, 2.0 * math.pi)
    return np.array([r * math.cos(phi), r * math.sin(phi)])


@dataclass(frozen=True)
class Box2DConfig:
    half_width: float = 1.0      # pen is [-L, L]^2
    init_radius: float = 0.5
    dt: float = 0.05
    steps: int = 100             # states per trajectory
    action_noise: float = 3.0    # ~99% of random rollouts bounce off a wall
    policy: str = "random"
    gain: float = 2.0
    damping: float = 0.5
    chirality: float = 1.0       # goal_biased only
    target_radius: float = 0.5
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.policy not in BOX2D_POLICIES:
            raise ConfigError(f"box2d policy must be one of {BOX2D_POLICIES}")
        if not 0 < self.init_radius <= self.half_width:
            raise ConfigError("need 0 < init_radius <= half_width")
        if not 0 <= self.target_radius <= self.half_width:
            raise ConfigError("need 0 <= target_radius <= half_width")
        if self.steps < 2 or self.dt <= 0 or self.action_noise < 0:
            raise ConfigError("need steps >= 2, dt > 0, action_noise >= 0")
        if self.n < 1:
            raise ConfigError("n must be positive")

    @classmethod
    def from_dict(cls, d):
        return _from_dict(cls, d)


@dataclass
class Box2DNoise:
    """All randomness of a box2d batch, drawn up front."""

    init_pos: np.ndarray  # N x 2
    init_vel: np.ndarray  # N x 2
    target: np.ndarray    # N x 2
    actions: np.ndarray   # N x (T-1) x 2 action noise

    def transformed(self, rot: np.ndarray) -> "Box2DNoise":
        return Box2DNoise(
            self.init_pos @ rot.T, self.init_vel @ rot.T,
            self.target @ rot.T, self.actions @ rot.T,
        )


def box2d_schema(policy: str) -> StateSchema:
    # random rollouts carry no target, so its (zero) slot is not geometric
    target_role = "passthrough" if policy == "random" else "position"
    return StateSchema(2, (
        ChannelGroup("pos", "position", (0, 1)),
        ChannelGroup("vel", "direction", (2, 3)),
        ChannelGroup("target", target_role, (4, 5)),
    ))


def sample_box2d_noise(config: Box2DConfig) -> Box2DNoise:
    N, T = config.n, config.steps
    init_pos = np.empty((N, 2))
    target = np.zeros((N, 2))
    actions = np.empty((N, T - 1, 2))
    for i, rng in enumerate(_streams(config.seed, N)):
        init_pos[i] = _disc(rng, config.init_radius)
        if config.policy != "random":
            target[i] = _disc(rng, config.target_radius)
        actions[i] = rng.normal(0.0, 1.0, size=(T - 1, 2)) * config.action_noise
    return Box2DNoise(init_pos, np.zeros((N, 2)), target, actions)


def rollout_box2d(noise: Box2DNoise, config: Box2DConfig) -> np.ndarray:
    """Simulate every trajectory in `noise`; returns N x T x 6 states
    ``[pos, vel, target]``."""
    L, dt = config.half_width, config.dt
    pos = noise.init_pos.copy()
    vel = noise.init_vel.copy()
    tgt = noise.target
    N, T = pos.shape[0], noise.actions.shape[1] + 1
    out = np.empty((N, T, 6))
    out[:, :, 4:] = tgt[:, None, :]
    out[:, 0, :2], out[:, 0, 2:4] = pos, vel
    for t in range(T - 1):
        a = noise.actions[:, t]
        if config.policy != "random":
            rel = tgt - pos
            a = a + config.gain * rel - config.damping * vel
            if config.policy == "goal_biased":
                a = a + config.chirality * np.stack([-rel[:, 1], rel[:, 0]], axis=1)
        vel = vel + a * dt
        pos = pos + vel * dt
        # elastic walls: mirror the overshoot and flip that velocity component
        hi, lo = pos > L, pos < -L
        pos = np.where(hi, 2 * L - pos, np.where(lo, -2 * L - pos, pos))
        vel = np.where(hi | lo, -vel, vel)
        pos = np.clip(pos, -L, L)
        out[:, t + 1, :2], out[:, t + 1, 2:4] = pos, vel
    return out


def _to_dataset(states: np.ndarray, schema: StateSchema, prefix: str, meta: dict) -> Dataset:
    trajs = tuple(
        Trajectory(f"{prefix}-{i:06d}", s, dict(meta)) for i, s in enumerate(states)
    )
    return Dataset(schema, trajs)


def gen_box2d(config: Box2DConfig) -> Dataset:
    states = rollout_box2d(sample_box2d_noise(config), config)
    meta = {"env": "box2d", "policy": config.policy, "seed": config.seed}
    return _to_dataset(states, box2d_schema(config.policy), "box2d", meta)


@dataclass(frozen=True)
class Grav3DConfig:
    half_width: float = 100.0    # initial x, y within this radius of the origin
    gravity: float = -9.8        # acceleration along z
    altitude: tuple[float, float] = (10.0, 50.0)
    max_wind: float = 3.0
    dt: float = 0.1
    steps: int = 100
    action_noise: float = 2.0
    policy: str = "random"
    gain: float = 0.5
    damping: float = 1.0
    battery_rate: float = 0.02   # per second, idle
    battery_thrust_rate: float = 0.005  # per second per unit |action|
    n: int = 1000
    seed: int = 0

    def __post_init__(self):
        if self.policy not in GRAV3D_POLICIES:
            raise ConfigError(f"grav3d policy must be one of {GRAV3D_POLICIES}")
        lo, hi = self.altitude
        if not 0 <= lo <= hi:
            raise ConfigError("altitude range must lie above the ground")
        object.__setattr__(self, "altitude", (float(lo), float(hi)))
        if self.steps < 2 or self.dt <= 0 or self.half_width <= 0 or self.max_wind < 0:
            raise ConfigError("need steps >= 2, dt > 0, half_width > 0, max_wind >= 0")
        if self.n < 1:
            raise ConfigError("n must be positive")

    @property
    def translation_headroom(self) -> float:
        """Translation bound for x/y candidates that keeps the initial
        distribution mismatch to a few percent."""
        return self.half_width / 10.0

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "altitude" in d:
            d["altitude"] = tuple(d["altitude"])
        return _from_dict(cls, d)


@dataclass
class Grav3DNoise:
    init_pos: np.ndarray  # N x 3
    init_vel: np.ndarray  # N x 3
    wind: np.ndarray      # N x 3, z component 0
    target: np.ndarray    # N x 3 (zeros under the random policy)
    actions: np.ndarray   # N x (T-1) x 3

    def transformed(self, rot: np.ndarray) -> "Grav3DNoise":
        return Grav3DNoise(
            self.init_pos @ rot.T, self.init_vel @ rot.T, self.wind @ rot.T,
            self.target @ rot.T, self.actions @ rot.T,
        )


def grav3d_schema(policy: str) -> StateSchema:
    groups = [
        ChannelGroup("pos", "position", (0, 1, 2)),
        ChannelGroup("vel", "direction", (3, 4, 5)),
        ChannelGroup("wind", "direction", (6, 7, 8)),
        ChannelGroup("battery", "passthrough", (9,)),
    ]
    if policy != "random":
        groups.append(ChannelGroup("target", "position", (10, 11, 12)))
    return StateSchema(3, tuple(groups))


def sample_grav3d_noise(config: Grav3DConfig) -> Grav3DNoise:
    N, T = config.n, config.steps
    lo, hi = config.altitude
    init_pos = np.empty((N, 3))
    wind = np.zeros((N, 3))
    target = np.zeros((N, 3))
    actions = np.empty((N, T - 1, 3))
    for i, rng in enumerate(_streams(config.seed, N)):
        init_pos[i, :2] = _disc(rng, config.half_width)
        init_pos[i, 2] = rng.uniform(lo, hi)
        phi = rng.uniform(0.0, 2.0 * math.pi)
        mag = rng.uniform(0.0, config.max_wind)
        wind[i, :2] = mag * math.cos(phi), mag * math.sin(phi)
        if config.policy != "random":
            target[i, :2] = init_pos[i, :2] + _disc(rng, config.half_width / 2)
            target[i, 2] = rng.uniform(lo, hi)
        actions[i] = rng.normal(0.0, 1.0, size=(T - 1, 3)) * config.action_noise
    return Grav3DNoise(init_pos, np.zeros((N, 3)), wind, target, actions)


def rollout_grav3d(noise: Grav3DNoise, config: Grav3DConfig) -> np.ndarray:
    """Simulate every trajectory; returns N x T x D states
    ``[pos, vel, wind, battery]`` plus ``target`` for the goal policy."""
    dt = config.dt
    pos = noise.init_pos.copy()
    vel = noise.init_vel.copy()
    N, T = pos.shape[0], noise.actions.shape[1] + 1
    goal = config.policy != "random"
    out = np.empty((N, T, 13 if goal else 10))
    out[:, :, 6:9] = noise.wind[:, None, :]
    if goal:
        out[:, :, 10:] = noise.target[:, None, :]
    g = np.array([0.0, 0.0, config.gravity])
    battery = np.ones(N)
    out[:, 0, :3], out[:, 0, 3:6], out[:, 0, 9] = pos, vel, battery
    for t in range(T - 1):
        a = noise.actions[:, t]
        if goal:
            a = a + config.gain * (noise.target - pos) - config.damping * vel - g
        vel = vel + (a + noise.wind + g) * dt
        pos = pos + vel * dt
        # inelastic ground: stop at z = 0, kill vertical velocity
        below = pos[:, 2] < 0.0
        pos[below, 2] = 0.0
        vel[below, 2] = 0.0
        drain = config.battery_rate + config.battery_thrust_rate * np.linalg.norm(a, axis=1)
        battery = np.maximum(battery - drain * dt, 0.0)
        out[:, t + 1, :3], out[:, t + 1, 3:6], out[:, t + 1, 9] = pos, vel, battery
    return out


def gen_grav3d(config: Grav3DConfig) -> Dataset:
    states = rollout_grav3d(sample_grav3d_noise(config), config)
    meta = {"env": "grav3d", "policy": config.policy, "seed": config.seed}
    return _to_dataset(states, grav3d_schema(config.policy), "grav3d", meta)


def with_overrides(config, **kw):
    return replace(config, **{k: v for k, v in kw.items() if v is not None})
