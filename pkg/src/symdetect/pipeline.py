"""Symmetry detection experiments.

For each candidate transform: label original trajectories 0 and transformed
ones 1, train a fresh discriminator, and score the candidate by test accuracy.
Accuracy near one half means the transform could not be told apart from the
data, i.e. it is a symmetry of the dataset.
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor, as_completed
from dataclasses import asdict, dataclass, field
from statistics import NormalDist
from typing import Any, Sequence

import numpy as np

from . import gru
from .gru import AdamState, Batch, NetParams, TrainConfig
from .transforms import CandidateTransform, transform_dataset
from .trajectory import Dataset, DatasetError, split_dataset, split_sizes

log = logging.getLogger(__name__)

PAIRING_MODES = ("paired", "disjoint")
_Z95 = NormalDist().inv_cdf(0.975)


class TrainingDivergedError(FloatingPointError):
    pass


@dataclass
class LabeledSet:
    sequences: list[np.ndarray]
    labels: np.ndarray
    ids: list[str] = field(default_factory=list)

    def __len__(self):
        return len(self.sequences)

    def batch(self, idx) -> Batch:
        return Batch.from_sequences([self.sequences[i] for i in idx], self.labels[idx])

    def batches(self, size: int, order=None):
        order = np.arange(len(self)) if order is None else order
        for s in range(0, len(order), size):
            yield self.batch(order[s:s + size])

    def map_inputs(self, fn) -> "LabeledSet":
        return LabeledSet([fn(s) for s in self.sequences], self.labels, self.ids)


@dataclass
class ExperimentConfig:
    candidates: list[CandidateTransform]
    fractions: tuple[float, float, float] = (0.8, 0.1, 0.1)
    mode: str = "paired"
    train: TrainConfig = field(default_factory=TrainConfig)
    delta: float = 0.02
    seed: int = 0
    standardize: bool = True

    def __post_init__(self):
        if not 0 < self.delta < 0.5:
            raise ValueError(f"delta must lie in (0, 0.5), got {self.delta}")
        if self.mode not in PAIRING_MODES:
            raise ValueError(f"mode must be one of {PAIRING_MODES}")
        split_sizes(10, self.fractions)


@dataclass
class Verdict:
    symmetric: bool
    ci_low: float
    ci_high: float
    interval_straddles: bool

    @property
    def label(self) -> str:
        return "symmetric" if self.symmetric else "asymmetric"


@dataclass
class ExperimentResult:
    transform: dict[str, Any]
    accuracy: float | None
    ci_low: float | None
    ci_high: float | None
    verdict: str | None
    n_test: int
    history: list[dict[str, float]]
    seed: int
    delta: float
    interval_straddles: bool | None = None
    counts: dict[str, int] = field(default_factory=dict)
    error: str | None = None

    @property
    def ok(self) -> bool:
        return self.error is None

    def to_dict(self) -> dict[str, Any]:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "ExperimentResult":
        return cls(**d)


def build_labeled(
    split: Dataset, transform: CandidateTransform, mode: str, seed: int
) -> LabeledSet:
    """Original trajectories get label 0, transformed ones label 1.

    ``paired``: every trajectory appears both ways (exact balance).
    ``disjoint``: a random half is transformed, the rest kept original.
    """
    if len(split) == 0:
        raise DatasetError("cannot build a labeled set from an empty split")
    ss = np.random.SeedSequence(seed)
    draw_seed, perm_seed = (int(s.generate_state(1)[0]) for s in ss.spawn(2))
    if mode == "paired":
        moved, _ = transform_dataset(split, transform, draw_seed)
        orig = [t.states for t in split]
        seqs = orig + [t.states for t in moved]
        labels = np.r_[np.zeros(len(orig)), np.ones(len(orig))]
        ids = [t.id for t in split] * 2
        return LabeledSet(seqs, labels, ids)
    if mode != "disjoint":
        raise ValueError(f"unknown pairing mode {mode!r}")
    perm = np.random.default_rng(perm_seed).permutation(len(split))
    half = len(split) // 2
    keep = split.subset(np.sort(perm[:half]))
    moved, _ = transform_dataset(split.subset(np.sort(perm[half:])), transform, draw_seed)
    seqs = [t.states for t in keep] + [t.states for t in moved]
    labels = np.r_[np.zeros(len(keep)), np.ones(len(moved))]
    return LabeledSet(seqs, labels, [t.id for t in keep] + [t.id for t in moved])


def _mean_loss(params: NetParams, data: LabeledSet, batch_size: int) -> float:
    total = 0.0
    for b in data.batches(batch_size):
        logits, _ = gru.forward(params, b)
        total += float(np.sum(gru.bce_with_logits(logits, b.labels)))
    return total / len(data)


def train_discriminator(
    train: LabeledSet, val: LabeledSet, config: TrainConfig
) -> tuple[NetParams, list[dict[str, float]]]:
    """Minibatch Adam on mean BCE with early stopping on validation loss.

    Returns the parameters of the best validation epoch and the per-epoch
    history.
    """
    if len(train) == 0 or len(val) == 0:
        raise DatasetError("train and validation sets must be non-empty")
    D = train.sequences[0].shape[1]
    rng = np.random.default_rng(config.seed)
    init_seed = int(rng.integers(2**63))
    params = gru.init_params(D, init_seed)
    state = AdamState.fresh(params)
    best, best_loss, stale = params, math.inf, 0
    history: list[dict[str, float]] = []
    for epoch in range(config.max_epochs):
        order = rng.permutation(len(train))
        total = 0.0
        for b in train.batches(config.batch_size, order):
            loss, grads = gru.loss_and_grad(params, b)
            if not math.isfinite(loss):
                raise TrainingDivergedError(f"non-finite training loss at epoch {epoch}")
            params, state = gru.adam_step(params, grads, state, config)
            total += loss * len(b.labels)
        val_loss = _mean_loss(params, val, config.batch_size)
        if not math.isfinite(val_loss):
            raise TrainingDivergedError(f"non-finite validation loss at epoch {epoch}")
        history.append({"epoch": epoch, "train_loss": total / len(train), "val_loss": val_loss})
        if val_loss < best_loss:
            best, best_loss, stale = params, val_loss, 0
        else:
            stale += 1
            if stale >= config.patience:
                break
    return best, history


def predict(params: NetParams, data: LabeledSet, batch_size: int = 256) -> np.ndarray:
    """Predicted labels; a logit of exactly 0 predicts 0."""
    out = [gru.forward(params, b)[0] > 0.0 for b in data.batches(batch_size)]
    return np.concatenate(out).astype(np.float64) if out else np.empty(0)


def evaluate(params: NetParams, test: LabeledSet) -> float:
    if len(test) == 0:
        raise DatasetError("cannot evaluate on an empty test set")
    return float(np.mean(predict(params, test) == test.labels))


def wilson_interval(accuracy: float, n: int, z: float = _Z95) -> tuple[float, float]:
    denom = 1.0 + z * z / n
    centre = (accuracy + z * z / (2 * n)) / denom
    half = z * math.sqrt(accuracy * (1 - accuracy) / n + z * z / (4 * n * n)) / denom
    return max(0.0, centre - half), min(1.0, centre + half)


def verdict(accuracy: float, n_test: int, delta: float) -> Verdict:
    """Symmetric iff |accuracy - 0.5| <= delta (inclusive), with the Wilson
    95% interval alongside."""
    if not 0.0 <= accuracy <= 1.0 or n_test < 1:
        raise ValueError("accuracy must lie in [0, 1] and n_test >= 1")
    # tolerance so that e.g. 0.52 - 0.5 counts as exactly 0.02
    symmetric = abs(accuracy - 0.5) <= delta + 1e-12
    lo, hi = wilson_interval(accuracy, n_test)
    lo, hi = min(lo, accuracy), max(hi, accuracy)
    straddles = any(lo <= edge <= hi for edge in (0.5 - delta, 0.5 + delta))
    return Verdict(symmetric, lo, hi, straddles)


@dataclass
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, data: LabeledSet) -> "Standardizer":
        stacked = np.concatenate(data.sequences)
        mean = stacked.mean(axis=0)
        scale = stacked.std(axis=0)
        scale[scale < 1e-12] = 1.0
        return cls(mean, scale)

    def __call__(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale


def _derive(seed: int, *keys: int) -> int:
    return int(np.random.SeedSequence([seed, *keys]).generate_state(1)[0])


def _run_candidate(
    index: int,
    splits: tuple[Dataset, Dataset, Dataset],
    config: ExperimentConfig,
) -> ExperimentResult:
    cand = config.candidates[index]
    seed = _derive(config.seed, index)
    counts = {"train": len(splits[0]), "val": len(splits[1]), "test": len(splits[2])}
    try:
        labeled = [
            build_labeled(s, cand, config.mode, _derive(seed, k))
            for k, s in enumerate(splits)
        ]
        if config.standardize:
            scaler = Standardizer.fit(labeled[0])
            labeled = [ls.map_inputs(scaler) for ls in labeled]
        tcfg = gru.with_seed(config.train, _derive(seed, 99))
        params, history = train_discriminator(labeled[0], labeled[1], tcfg)
        acc = evaluate(params, labeled[2])
        n_test = len(labeled[2])
        v = verdict(acc, n_test, config.delta)
        return ExperimentResult(
            cand.to_dict(), acc, v.ci_low, v.ci_high, v.label, n_test, history,
            seed, config.delta, v.interval_straddles, counts,
        )
    except Exception as e:  # one bad candidate must not sink the sweep
        log.warning("candidate %s failed: %s", cand.label, e)
        return ExperimentResult(
            cand.to_dict(), None, None, None, None, 0, [], seed, config.delta,
            None, counts, f"{type(e).__name__}: {e}",
        )


def run_experiment(
    dataset: Dataset,
    config: ExperimentConfig,
    jobs: int = 1,
    on_result=None,
) -> list[ExperimentResult]:
    """Score every candidate on one shared seeded split.

    Results come back in candidate order whatever `jobs` is; `on_result`
    (if given) is called with ``(index, result)`` as each candidate finishes.
    """
    if len(dataset) < 10:
        raise DatasetError(f"need at least 10 trajectories, got {len(dataset)}")
    splits = split_dataset(dataset, config.fractions, config.seed)
    log.info(
        "dataset: %d trajectories -> train %d / val %d / test %d",
        len(dataset), *(len(s) for s in splits),
    )
    n = len(config.candidates)
    results: list[ExperimentResult | None] = [None] * n
    if jobs <= 1 or n <= 1:
        for i in range(n):
            results[i] = _run_candidate(i, splits, config)
            if on_result:
                on_result(i, results[i])
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = {pool.submit(_run_candidate, i, splits, config): i for i in range(n)}
            for fut in as_completed(futures):
                i = futures[fut]
                results[i] = fut.result()
                if on_result:
                    on_result(i, results[i])
    return results  # type: ignore[return-value]


def summarize(results: Sequence[ExperimentResult]) -> list[str]:
    lines = []
    for r in results:
        label = CandidateTransform.from_dict(r.transform).label
        if r.ok:
            lines.append(
                f"{label:<28} acc={100 * r.accuracy:5.1f}%  "
                f"CI=[{100 * r.ci_low:.1f}, {100 * r.ci_high:.1f}]  {r.verdict}"
            )
        else:
            lines.append(f"{label:<28} FAILED: {r.error}")
    return lines
