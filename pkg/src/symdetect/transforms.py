"""Candidate symmetry transformations and their application to trajectories."""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .trajectory import Dataset, DatasetError, StateSchema, Trajectory

KINDS = ("identity", "cyclic_rotation", "general_rotation", "reflection", "translation")
AXES = ("x", "y", "z")
STANDARD_ORDERS = (2, 3, 4, 6, 8)


class TransformError(ValueError):
    pass


@dataclass(frozen=True)
class CandidateTransform:
    """One candidate symmetry family.

    ``axis`` is the rotation axis for rotations (always ``"z"`` in 2D), the
    negated coordinate for reflections, and the shifted coordinate for
    translations. ``bound`` is the half-width of the translation offset range.
    """

    kind: str
    axis: str | None = None
    n: int | None = None
    bound: float | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise TransformError(f"unknown transform type {self.kind!r}")
        if self.kind == "identity":
            return
        if self.kind in ("cyclic_rotation", "general_rotation") and self.axis is None:
            object.__setattr__(self, "axis", "z")
        if self.axis not in AXES:
            raise TransformError(f"{self.kind}: invalid axis {self.axis!r}")
        if self.kind == "cyclic_rotation":
            if self.n is None or int(self.n) != self.n or self.n < 2:
                raise TransformError(f"cyclic_rotation needs integer n >= 2, got {self.n!r}")
            object.__setattr__(self, "n", int(self.n))
        if self.kind == "translation":
            if self.bound is None or not math.isfinite(self.bound) or self.bound < 0:
                raise TransformError(f"translation needs a finite bound >= 0, got {self.bound!r}")
            object.__setattr__(self, "bound", float(self.bound))

    # constructors
    @classmethod
    def identity(cls):
        return cls("identity")

    @classmethod
    def cyclic(cls, n: int, axis: str = "z"):
        return cls("cyclic_rotation", axis=axis, n=n)

    @classmethod
    def rotation(cls, axis: str = "z"):
        return cls("general_rotation", axis=axis)

    @classmethod
    def reflection(cls, axis: str):
        return cls("reflection", axis=axis)

    @classmethod
    def translation(cls, axis: str, bound: float):
        return cls("translation", axis=axis, bound=bound)

    def check_dim(self, spatial_dim: int) -> None:
        if self.kind == "identity":
            return
        if spatial_dim == 2:
            if self.kind in ("cyclic_rotation", "general_rotation") and self.axis != "z":
                raise TransformError("2D rotations are about the implicit z axis")
            if self.kind in ("reflection", "translation") and self.axis == "z":
                raise TransformError(f"{self.kind} axis 'z' invalid in 2D")
        elif spatial_dim != 3:
            raise TransformError(f"unsupported spatial_dim {spatial_dim}")

    @property
    def label(self) -> str:
        if self.kind == "identity":
            return "Identity"
        ax = self.axis.upper()
        if self.kind == "cyclic_rotation":
            return f"C{self.n} Rotation ({ax})"
        if self.kind == "general_rotation":
            return f"General {ax} Rotation"
        if self.kind == "reflection":
            return f"{ax} Reflection"
        return f"{ax} Translation (±{self.bound:g})"

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"type": self.kind}
        if self.kind == "identity":
            return d
        d["axis"] = self.axis
        if self.kind == "cyclic_rotation":
            d["n"] = self.n
        if self.kind == "translation":
            d["bound"] = self.bound
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "CandidateTransform":
        if not isinstance(d, dict) or "type" not in d:
            raise TransformError(f"candidate must be an object with 'type': {d!r}")
        unknown = set(d) - {"type", "axis", "n", "bound"}
        if unknown:
            raise TransformError(f"unknown candidate fields {sorted(unknown)}")
        return cls(d["type"], axis=d.get("axis"), n=d.get("n"), bound=d.get("bound"))


@dataclass(frozen=True)
class TransformDraw:
    angle: float | None = None
    offset: float | None = None


def load_candidates(path: str | Path) -> list[CandidateTransform]:
    with open(path) as f:
        raw = json.load(f)
    if not isinstance(raw, list):
        raise TransformError("candidate file must hold a JSON array")
    return [CandidateTransform.from_dict(d) for d in raw]


def save_candidates(candidates: list[CandidateTransform], path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump([c.to_dict() for c in candidates], f, indent=2)
        f.write("\n")


def _snap(m: np.ndarray) -> np.ndarray:
    # cos(pi/2) etc. are ~1e-17, not 0; exact entries keep C2/C4 group algebra exact
    for v in (-1.0, 0.0, 1.0):
        m[np.abs(m - v) < 1e-15] = v
    return m


def rotation_matrix(angle: float, axis: str, spatial_dim: int) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    if spatial_dim == 2:
        return np.array([[c, -s], [s, c]])
    if axis == "x":
        return np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]])
    if axis == "y":
        return np.array([[c, 0, s], [0, 1.0, 0], [-s, 0, c]])
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


def linear_part(
    transform: CandidateTransform, draw: TransformDraw, spatial_dim: int
) -> np.ndarray:
    """Orthogonal matrix of a rotation, reflection or identity transform."""
    transform.check_dim(spatial_dim)
    kind = transform.kind
    if kind == "translation":
        raise TransformError("translations have no linear part")
    if kind == "identity":
        return np.eye(spatial_dim)
    if kind == "reflection":
        m = np.eye(spatial_dim)
        a = AXES.index(transform.axis)
        m[a, a] = -1.0
        return m
    if kind == "cyclic_rotation":
        angle = 2.0 * math.pi / transform.n
    else:
        if draw.angle is None:
            raise TransformError("general rotation needs a drawn angle")
        angle = draw.angle
    return _snap(rotation_matrix(angle, transform.axis, spatial_dim))


def sample_draw(transform: CandidateTransform, rng: np.random.Generator) -> TransformDraw:
    if transform.kind == "general_rotation":
        return TransformDraw(angle=float(rng.uniform(-2.0 * math.pi, 2.0 * math.pi)))
    if transform.kind == "translation":
        if transform.bound == 0:
            return TransformDraw(offset=0.0)
        return TransformDraw(offset=float(rng.uniform(-transform.bound, transform.bound)))
    return TransformDraw()


def apply_to_trajectory(
    traj: Trajectory,
    schema: StateSchema,
    transform: CandidateTransform,
    draw: TransformDraw,
) -> Trajectory:
    """Apply one transform, with one draw, to every timestep of `traj`.

    Position groups map x -> Rx + t, direction groups x -> Rx; all other
    indices are left untouched.
    """
    if schema.max_index >= traj.dim:
        raise DatasetError(
            f"schema index {schema.max_index} out of range for trajectory {traj.id!r} "
            f"with D={traj.dim}"
        )
    if transform.kind == "identity":
        return traj
    transform.check_dim(schema.spatial_dim)
    out = traj.states.copy()
    if transform.kind == "translation":
        if draw.offset is None:
            raise TransformError("translation needs a drawn offset")
        a = AXES.index(transform.axis)
        for g in schema.groups:
            if g.role == "position":
                out[:, g.indices[a]] += draw.offset
    else:
        rot = linear_part(transform, draw, schema.spatial_dim)
        for g in schema.groups:
            if g.geometric:
                idx = list(g.indices)
                out[:, idx] = traj.states[:, idx] @ rot.T
    return Trajectory(traj.id, out, traj.meta)


def transform_dataset(
    dataset: Dataset, transform: CandidateTransform, seed: int
) -> tuple[Dataset, list[TransformDraw]]:
    """Transform every trajectory with its own independent draw."""
    transform.check_dim(dataset.schema.spatial_dim)
    rng = np.random.default_rng(seed)
    draws = [sample_draw(transform, rng) for _ in dataset.trajectories]
    trajs = tuple(
        apply_to_trajectory(t, dataset.schema, transform, d)
        for t, d in zip(dataset.trajectories, draws)
    )
    return Dataset(dataset.schema, trajs), draws


def standard_suite(spatial_dim: int, translation_bound: float) -> list[CandidateTransform]:
    """The usual candidate list: C2..C8, general rotation, axis reflections and
    translations (all rotations about z)."""
    axes = AXES[:spatial_dim]
    cands = [CandidateTransform.cyclic(n) for n in STANDARD_ORDERS]
    cands.append(CandidateTransform.rotation("z"))
    cands += [CandidateTransform.reflection(a) for a in axes]
    cands += [CandidateTransform.translation(a, translation_bound) for a in axes]
    return cands
