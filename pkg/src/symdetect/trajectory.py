"""Trajectory datasets: channel schemas, JSONL persistence, splitting and
initial-state conditioning."""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Sequence

import numpy as np

log = logging.getLogger(__name__)

ROLES = ("position", "direction", "passthrough")


class DatasetError(ValueError):
    """Raised for malformed or inconsistent trajectory data."""


@dataclass(frozen=True)
class ChannelGroup:
    name: str
    role: str
    indices: tuple[int, ...]

    def __post_init__(self):
        if self.role not in ROLES:
            raise DatasetError(f"group {self.name!r}: unknown role {self.role!r}")
        object.__setattr__(self, "indices", tuple(int(i) for i in self.indices))
        if any(i < 0 for i in self.indices):
            raise DatasetError(f"group {self.name!r}: negative index")

    @property
    def geometric(self) -> bool:
        return self.role != "passthrough"


@dataclass(frozen=True)
class StateSchema:
    """Maps state-vector indices to geometric channel groups.

    Indices not covered by any group are passthrough.
    """

    spatial_dim: int
    groups: tuple[ChannelGroup, ...] = ()

    def __post_init__(self):
        if self.spatial_dim not in (2, 3):
            raise DatasetError(f"spatial_dim must be 2 or 3, got {self.spatial_dim}")
        object.__setattr__(self, "groups", tuple(self.groups))
        seen: set[int] = set()
        names: set[str] = set()
        for g in self.groups:
            if g.name in names:
                raise DatasetError(f"duplicate group name {g.name!r}")
            names.add(g.name)
            if seen.intersection(g.indices) or len(set(g.indices)) != len(g.indices):
                raise DatasetError(f"group {g.name!r} overlaps another group")
            seen.update(g.indices)
            if g.geometric and len(g.indices) != self.spatial_dim:
                raise DatasetError(
                    f"group {g.name!r} ({g.role}) needs {self.spatial_dim} indices, "
                    f"got {len(g.indices)}"
                )

    def group(self, name: str) -> ChannelGroup:
        for g in self.groups:
            if g.name == name:
                return g
        raise KeyError(f"no channel group named {name!r}")

    @property
    def max_index(self) -> int:
        return max((max(g.indices) for g in self.groups if g.indices), default=-1)

    def to_dict(self) -> dict[str, Any]:
        return {
            "spatial_dim": self.spatial_dim,
            "groups": [
                {"name": g.name, "role": g.role, "indices": list(g.indices)}
                for g in self.groups
            ],
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "StateSchema":
        try:
            groups = [ChannelGroup(g["name"], g["role"], g["indices"]) for g in d["groups"]]
            return cls(int(d["spatial_dim"]), tuple(groups))
        except (KeyError, TypeError) as e:
            raise DatasetError(f"malformed schema: {e}") from e


@dataclass(frozen=True, eq=False)
class Trajectory:
    id: str
    states: np.ndarray
    meta: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        states = np.array(self.states, dtype=np.float64)
        if states.ndim != 2 or states.shape[0] < 1 or states.shape[1] < 1:
            raise DatasetError(
                f"trajectory {self.id!r}: states must be a non-empty T x D array"
            )
        if not np.all(np.isfinite(states)):
            raise DatasetError(f"trajectory {self.id!r}: non-finite value")
        states.flags.writeable = False
        object.__setattr__(self, "states", states)

    @property
    def length(self) -> int:
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return (
            self.id == other.id
            and self.meta == other.meta
            and self.states.shape == other.states.shape
            and bool(np.array_equal(self.states, other.states))
        )

    def __repr__(self):
        return f"Trajectory(id={self.id!r}, T={self.length}, D={self.dim})"


@dataclass(frozen=True)
class Dataset:
    schema: StateSchema
    trajectories: tuple[Trajectory, ...] = ()

    def __post_init__(self):
        trajs = tuple(self.trajectories)
        object.__setattr__(self, "trajectories", trajs)
        dims = {t.dim for t in trajs}
        if len(dims) > 1:
            raise DatasetError(f"dimension mismatch across trajectories: {sorted(dims)}")
        if dims and self.schema.max_index >= dims.pop():
            raise DatasetError("schema index out of range for state dimension")

    def __len__(self):
        return len(self.trajectories)

    def __iter__(self):
        return iter(self.trajectories)

    @property
    def dim(self) -> int | None:
        return self.trajectories[0].dim if self.trajectories else None

    def subset(self, indices: Iterable[int]) -> "Dataset":
        return Dataset(self.schema, tuple(self.trajectories[i] for i in indices))


def load_schema(path: str | Path) -> StateSchema:
    with open(path) as f:
        return StateSchema.from_dict(json.load(f))


def save_schema(schema: StateSchema, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(schema.to_dict(), f, indent=2)
        f.write("\n")


def _parse_record(line: str, lineno: int) -> Trajectory:
    try:
        rec = json.loads(line)
    except json.JSONDecodeError as e:
        raise DatasetError(f"line {lineno}: invalid JSON ({e.msg})") from e
    if not isinstance(rec, dict) or "id" not in rec or "states" not in rec:
        raise DatasetError(f"line {lineno}: record needs 'id' and 'states'")
    states = rec["states"]
    if not isinstance(states, list) or not all(isinstance(s, list) for s in states):
        raise DatasetError(f"line {lineno}: 'states' must be an array of arrays")
    if len({len(s) for s in states}) > 1:
        raise DatasetError(f"line {lineno}: dimension mismatch between states")
    meta = rec.get("meta", {})
    if not isinstance(meta, dict):
        raise DatasetError(f"line {lineno}: 'meta' must be an object")
    try:
        return Trajectory(str(rec["id"]), np.asarray(states, dtype=np.float64), meta)
    except (TypeError, ValueError) as e:
        raise DatasetError(f"line {lineno}: {e}") from e


def load_dataset(path: str | Path, schema: StateSchema) -> Dataset:
    trajs = []
    dim = None
    with open(path) as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            t = _parse_record(line, lineno)
            if dim is None:
                dim = t.dim
            elif t.dim != dim:
                raise DatasetError(
                    f"line {lineno}: dimension mismatch (expected {dim}, got {t.dim})"
                )
            trajs.append(t)
    log.info("loaded %d trajectories from %s", len(trajs), path)
    return Dataset(schema, tuple(trajs))


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    # json emits repr() floats, which round-trip float64 exactly
    with open(path, "w") as f:
        for t in dataset.trajectories:
            rec = {"id": t.id, "states": t.states.tolist(), "meta": t.meta}
            f.write(json.dumps(rec, allow_nan=False))
            f.write("\n")


def filter_initial_ball(dataset: Dataset, radius: float, group: str) -> Dataset:
    """Keep trajectories whose first position in `group` lies within `radius`
    of the origin. Used to make the initial-state distribution rotation
    symmetric before testing."""
    g = dataset.schema.group(group)
    if g.role != "position":
        raise DatasetError(f"group {group!r} has role {g.role!r}, expected position")
    idx = list(g.indices)
    keep = [
        i for i, t in enumerate(dataset.trajectories)
        if np.linalg.norm(t.states[0, idx]) <= radius
    ]
    log.info("initial-ball filter r=%g kept %d of %d trajectories", radius, len(keep), len(dataset))
    return dataset.subset(keep)


def split_sizes(n: int, fractions: Sequence[float]) -> tuple[int, int, int]:
    if len(fractions) != 3 or any(f < 0 for f in fractions):
        raise DatasetError(f"invalid split fractions {fractions!r}")
    if abs(sum(fractions) - 1.0) > 1e-9:
        raise DatasetError(f"split fractions must sum to 1, got {sum(fractions)!r}")
    n_val = int(math.floor(fractions[1] * n + 0.5))
    n_test = int(math.floor(fractions[2] * n + 0.5))
    if n_val + n_test > n:
        n_test = n - n_val
    return n - n_val - n_test, n_val, n_test


def split_dataset(
    dataset: Dataset, fractions: Sequence[float], seed: int
) -> tuple[Dataset, Dataset, Dataset]:
    """Seeded trajectory-level partition into (train, val, test).

    Validation and test sizes are rounded; the remainder goes to train.
    """
    if len(dataset) == 0:
        raise DatasetError("cannot split an empty dataset")
    n_train, n_val, _ = split_sizes(len(dataset), fractions)
    perm = np.random.default_rng(seed).permutation(len(dataset))
    return (
        dataset.subset(perm[:n_train]),
        dataset.subset(perm[n_train:n_train + n_val]),
        dataset.subset(perm[n_train + n_val:]),
    )
