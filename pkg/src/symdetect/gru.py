"""Recurrent discriminator in plain numpy.

Architecture: linear encoder (D -> 8), single-layer GRU (8 -> 32), masked
elementwise max over valid timesteps, linear head (32 -> 1 logit). Forward and
backward (BPTT) are written out by hand; everything is float64.

Gate convention (reset gate wraps the hidden-side candidate term and its bias)::

    r_t = sigmoid(W_r e_t + b_ir + U_r h_{t-1} + b_hr)
    z_t = sigmoid(W_z e_t + b_iz + U_z h_{t-1} + b_hz)
    n_t = tanh(W_n e_t + b_in + r_t * (U_n h_{t-1} + b_hn))
    h_t = (1 - z_t) * n_t + z_t * h_{t-1}
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Callable, Iterator, Sequence

import numpy as np
from scipy.special import expit

ENC_DIM = 8
HIDDEN_DIM = 32
CHECKPOINT_VERSION = 1


class NonFiniteGradientError(FloatingPointError):
    pass


@dataclass
class NetParams:
    W_enc: np.ndarray
    b_enc: np.ndarray
    W_r: np.ndarray
    W_z: np.ndarray
    W_n: np.ndarray
    U_r: np.ndarray
    U_z: np.ndarray
    U_n: np.ndarray
    b_ir: np.ndarray
    b_iz: np.ndarray
    b_in: np.ndarray
    b_hr: np.ndarray
    b_hz: np.ndarray
    b_hn: np.ndarray
    W_out: np.ndarray
    b_out: np.ndarray

    @classmethod
    def names(cls) -> tuple[str, ...]:
        return tuple(f.name for f in fields(cls))

    def items(self) -> Iterator[tuple[str, np.ndarray]]:
        for name in self.names():
            yield name, getattr(self, name)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "NetParams":
        return NetParams(**{k: fn(v) for k, v in self.items()})

    def copy(self) -> "NetParams":
        return self.map(np.copy)

    def zeros_like(self) -> "NetParams":
        return self.map(np.zeros_like)

    @property
    def input_dim(self) -> int:
        return self.W_enc.shape[1]

    @property
    def size(self) -> int:
        return sum(v.size for _, v in self.items())

    def shapes(self) -> dict[str, tuple[int, ...]]:
        return {k: v.shape for k, v in self.items()}

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(v)) for _, v in self.items())


def init_params(
    D: int, seed: int, enc_dim: int = ENC_DIM, hidden_dim: int = HIDDEN_DIM
) -> NetParams:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) for every weight and bias,
    fan_in being the input width of the owning layer."""
    if D < 1:
        raise ValueError(f"input dimension must be >= 1, got {D}")
    rng = np.random.default_rng(seed)

    def u(shape, fan_in):
        a = 1.0 / math.sqrt(fan_in)
        return rng.uniform(-a, a, size=shape)

    E, H = enc_dim, hidden_dim
    return NetParams(
        W_enc=u((E, D), D), b_enc=u((E,), D),
        W_r=u((H, E), E), W_z=u((H, E), E), W_n=u((H, E), E),
        U_r=u((H, H), H), U_z=u((H, H), H), U_n=u((H, H), H),
        b_ir=u((H,), E), b_iz=u((H,), E), b_in=u((H,), E),
        b_hr=u((H,), H), b_hz=u((H,), H), b_hn=u((H,), H),
        W_out=u((1, H), H), b_out=u((1,), H),
    )


@dataclass
class Batch:
    inputs: np.ndarray   # B x T_max x D, zero padded
    lengths: np.ndarray  # B
    labels: np.ndarray   # B, values in {0, 1}

    def __post_init__(self):
        self.inputs = np.asarray(self.inputs, dtype=np.float64)
        self.lengths = np.asarray(self.lengths, dtype=np.int64)
        self.labels = np.asarray(self.labels, dtype=np.float64)
        if self.inputs.ndim != 3:
            raise ValueError("inputs must be B x T x D")
        B, T, _ = self.inputs.shape
        if self.lengths.shape != (B,) or self.labels.shape != (B,):
            raise ValueError("lengths and labels must have one entry per sequence")
        if B and (self.lengths.min() < 1 or self.lengths.max() > T):
            raise ValueError("lengths must lie in [1, T_max]")

    @classmethod
    def from_sequences(cls, seqs: Sequence[np.ndarray], labels) -> "Batch":
        lengths = np.array([len(s) for s in seqs])
        D = seqs[0].shape[1]
        x = np.zeros((len(seqs), lengths.max(), D))
        for i, s in enumerate(seqs):
            x[i, : len(s)] = s
        return cls(x, lengths, np.asarray(labels, dtype=np.float64))


@dataclass
class Cache:
    params: NetParams
    x: np.ndarray        # B x T x D (trimmed to the longest valid length)
    e: np.ndarray        # B x T x E
    h: np.ndarray        # B x (T+1) x H, h[:, 0] = 0
    r: np.ndarray
    z: np.ndarray
    n: np.ndarray
    hn: np.ndarray       # U_n h_{t-1} + b_hn
    argmax: np.ndarray   # B x H, pooled timestep per hidden unit
    pooled: np.ndarray   # B x H
    logits: np.ndarray


def _stack_input(p: NetParams):
    return np.concatenate([p.W_r, p.W_z, p.W_n]), np.concatenate([p.b_ir, p.b_iz, p.b_in])


def _stack_hidden(p: NetParams):
    return np.concatenate([p.U_r, p.U_z, p.U_n]), np.concatenate([p.b_hr, p.b_hz, p.b_hn])


def forward(params: NetParams, batch: Batch) -> tuple[np.ndarray, Cache]:
    """Logits for every sequence in `batch` plus the cache for :func:`backward`."""
    B, _, D = batch.inputs.shape
    if D != params.input_dim:
        raise ValueError(f"input dimension {D} does not match network ({params.input_dim})")
    T = int(batch.lengths.max())
    # anything past the longest valid step is padding; drop it so it cannot
    # enter any reduction
    x = batch.inputs[:, :T]
    H = params.U_r.shape[0]

    W_i, b_i = _stack_input(params)
    U_h, b_h = _stack_hidden(params)
    e = x @ params.W_enc.T + params.b_enc
    gi = e @ W_i.T + b_i

    h = np.zeros((B, T + 1, H))
    r = np.empty((B, T, H))
    z = np.empty((B, T, H))
    n = np.empty((B, T, H))
    hn = np.empty((B, T, H))
    for t in range(T):
        hp = h[:, t]
        gh = hp @ U_h.T + b_h
        g = gi[:, t]
        r[:, t] = expit(g[:, :H] + gh[:, :H])
        z[:, t] = expit(g[:, H:2 * H] + gh[:, H:2 * H])
        hn[:, t] = gh[:, 2 * H:]
        n[:, t] = np.tanh(g[:, 2 * H:] + r[:, t] * hn[:, t])
        h[:, t + 1] = (1.0 - z[:, t]) * n[:, t] + z[:, t] * hp

    valid = np.arange(T)[None, :] < batch.lengths[:, None]
    masked = np.where(valid[:, :, None], h[:, 1:], -np.inf)
    argmax = masked.argmax(axis=1)  # first occurrence on ties
    pooled = np.take_along_axis(masked, argmax[:, None, :], axis=1)[:, 0]
    logits = pooled @ params.W_out[0] + params.b_out[0]
    cache = Cache(params, x, e, h, r, z, n, hn, argmax, pooled, logits)
    return logits, cache


def bce_with_logits(logit, label):
    """Binary cross entropy on logits, stable for any finite logit."""
    x = np.asarray(logit, dtype=np.float64)
    y = np.asarray(label, dtype=np.float64)
    return np.maximum(x, 0.0) - x * y + np.log1p(np.exp(-np.abs(x)))


def mean_loss(logits, labels) -> float:
    return float(np.mean(bce_with_logits(logits, labels)))


def backward(cache: Cache, params: NetParams, labels) -> NetParams:
    """Exact gradient of the mean BCE loss with respect to every parameter."""
    if cache.params is not params:
        raise ValueError("cache was produced by a different parameter set")
    labels = np.asarray(labels, dtype=np.float64)
    B, T, _ = cache.x.shape
    if labels.shape != (B,):
        raise ValueError(f"expected {B} labels, got shape {labels.shape}")
    H = params.U_r.shape[0]

    dlogit = (expit(cache.logits) - labels) / B
    g = NetParams.zeros_like(params)
    g.W_out = (dlogit @ cache.pooled)[None, :]
    g.b_out = np.array([dlogit.sum()])
    dpool = dlogit[:, None] * params.W_out[0][None, :]

    # max pool routes each unit's gradient to its argmax step only
    dh_pool = np.zeros((B, T, H))
    np.put_along_axis(dh_pool, cache.argmax[:, None, :], dpool[:, None, :], axis=1)

    U_h, _ = _stack_hidden(params)
    dgi = np.empty((B, T, 3 * H))
    dgh = np.empty((B, T, 3 * H))
    dh = np.zeros((B, H))
    r, z, n, hn, h = cache.r, cache.z, cache.n, cache.hn, cache.h
    for t in range(T - 1, -1, -1):
        dh = dh + dh_pool[:, t]
        rt, zt, nt = r[:, t], z[:, t], n[:, t]
        dn = dh * (1.0 - zt)
        dz = dh * (h[:, t] - nt)
        dan = dn * (1.0 - nt * nt)
        dar = dan * hn[:, t] * rt * (1.0 - rt)
        daz = dz * zt * (1.0 - zt)
        dgi[:, t, :H] = dar
        dgi[:, t, H:2 * H] = daz
        dgi[:, t, 2 * H:] = dan
        dgh[:, t, :H] = dar
        dgh[:, t, H:2 * H] = daz
        dgh[:, t, 2 * H:] = dan * rt
        dh = dh * zt + dgh[:, t] @ U_h

    dgi2 = dgi.reshape(B * T, 3 * H)
    dgh2 = dgh.reshape(B * T, 3 * H)
    e2 = cache.e.reshape(B * T, -1)
    hprev2 = h[:, :-1].reshape(B * T, H)

    dW_i = dgi2.T @ e2
    db_i = dgi2.sum(axis=0)
    dU_h = dgh2.T @ hprev2
    db_h = dgh2.sum(axis=0)
    g.W_r, g.W_z, g.W_n = dW_i[:H], dW_i[H:2 * H], dW_i[2 * H:]
    g.b_ir, g.b_iz, g.b_in = db_i[:H], db_i[H:2 * H], db_i[2 * H:]
    g.U_r, g.U_z, g.U_n = dU_h[:H], dU_h[H:2 * H], dU_h[2 * H:]
    g.b_hr, g.b_hz, g.b_hn = db_h[:H], db_h[H:2 * H], db_h[2 * H:]

    W_i, _ = _stack_input(params)
    de = dgi2 @ W_i
    g.W_enc = de.T @ cache.x.reshape(B * T, -1)
    g.b_enc = de.sum(axis=0)
    return g


def loss_and_grad(params: NetParams, batch: Batch) -> tuple[float, NetParams]:
    logits, cache = forward(params, batch)
    return mean_loss(logits, batch.labels), backward(cache, params, batch.labels)


@dataclass
class TrainConfig:
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    batch_size: int = 64
    max_epochs: int = 50
    patience: int = 5
    seed: int = 0

    def __post_init__(self):
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("beta1 and beta2 must lie in [0, 1)")
        if self.learning_rate <= 0 or self.epsilon <= 0 or self.batch_size <= 0:
            raise ValueError("learning_rate, epsilon and batch_size must be positive")
        if self.max_epochs < 0 or self.patience < 1:
            raise ValueError("max_epochs must be >= 0 and patience >= 1")

    @classmethod
    def from_dict(cls, d: dict) -> "TrainConfig":
        unknown = set(d) - {f.name for f in fields(cls)}
        if unknown:
            raise ValueError(f"unknown train-config fields {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass
class AdamState:
    m: NetParams
    v: NetParams
    t: int = 0

    @classmethod
    def fresh(cls, params: NetParams) -> "AdamState":
        return cls(params.zeros_like(), params.zeros_like(), 0)


def adam_step(
    params: NetParams, grads: NetParams, state: AdamState, config: TrainConfig
) -> tuple[NetParams, AdamState]:
    """One bias-corrected Adam update. Returns new objects; inputs are not modified."""
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(f"non-finite gradient in {name}; step rejected")
    b1, b2, lr, eps = config.beta1, config.beta2, config.learning_rate, config.epsilon
    t = state.t + 1
    c1 = 1.0 - b1 ** t
    c2 = 1.0 - b2 ** t
    new_p, new_m, new_v = {}, {}, {}
    for name, p in params.items():
        g = getattr(grads, name)
        m = b1 * getattr(state.m, name) + (1.0 - b1) * g
        v = b2 * getattr(state.v, name) + (1.0 - b2) * (g * g)
        new_m[name], new_v[name] = m, v
        new_p[name] = p - lr * (m / c1) / (np.sqrt(v / c2) + eps)
    return NetParams(**new_p), AdamState(NetParams(**new_m), NetParams(**new_v), t)


def _sigmoid_diff(s, d):
    # sigmoid(a + d) - sigmoid(a) given s = sigmoid(a), without cancellation
    em = np.expm1(d)
    return s * (1.0 - s) * em / (1.0 + s * em)


def _tanh_diff(t, d):
    # tanh(a + d) - tanh(a) given t = tanh(a)
    td = np.tanh(d)
    return td * (1.0 - t * t) / (1.0 + t * td)


def _softplus_diff(x, d):
    # log(1 + e^(x + d)) - log(1 + e^x)
    return np.log1p(expit(x) * np.expm1(d))


def perturbed_loss_deltas(
    params: NetParams, batch: Batch, variants: Sequence[tuple[str, int, float]]
) -> np.ndarray:
    """Exact loss differences ``L(theta + d * e_i) - L(theta)`` for a list of
    single-entry perturbations ``(param_name, flat_index, d)``.

    Differences are carried through the forward equations with closed-form
    addition identities (products expanded, tanh/sigmoid/softplus via
    expm1-style formulas, max pooling re-evaluated), so nothing cancels and
    float64 resolves loss changes many orders below the loss itself. This is a
    forward-mode computation that shares nothing with :func:`backward`.
    """
    _, c = forward(params, batch)
    K = len(variants)
    B, T, _ = c.x.shape
    H = params.U_r.shape[0]
    E = params.W_enc.shape[0]
    W_i, _ = _stack_input(params)
    U_h, _ = _stack_hidden(params)
    y = batch.labels

    # bucket variants by the op they enter; gate rows are offset into the
    # stacked (r, z, n) layout
    offsets = {"r": 0, "z": H, "n": 2 * H}
    buckets: dict[str, list] = {}
    for k, (name, idx, d) in enumerate(variants):
        shape = getattr(params, name).shape
        if len(shape) == 2:
            i, j = (int(v) for v in np.unravel_index(idx, shape))
        else:
            i, j = idx, 0
        if name[:2] in ("W_", "U_") and name[2] in "rzn":
            key, i = name[0] + "_gate", offsets[name[2]] + i
        elif name in ("b_ir", "b_iz", "b_in", "b_hr", "b_hz", "b_hn"):
            key, i = "b" + name[2] + "_gate", offsets[name[3]] + i
        elif name == "W_out":
            key, i = "W_out", j
        else:
            key = name
        buckets.setdefault(key, []).append((k, i, j, d))
    g = {key: tuple(np.array(col) for col in zip(*rows)) for key, rows in buckets.items()}

    d_h = np.zeros((K, B, H))
    valid = np.arange(T)[None, :] < batch.lengths[:, None]
    d_pool = np.full((K, B, H), -np.inf)
    pooled = c.pooled
    for t in range(T):
        hp = c.h[:, t]
        d_e = np.zeros((K, B, E))
        if "W_enc" in g:
            ks, i, j, d = g["W_enc"]
            d_e[ks, :, i] += d[:, None] * c.x[:, t, j].T
        if "b_enc" in g:
            ks, i, _, d = g["b_enc"]
            d_e[ks, :, i] += d[:, None]
        e_new = c.e[:, t] + d_e
        d_gi = d_e @ W_i.T
        if "W_gate" in g:
            ks, i, j, d = g["W_gate"]
            d_gi[ks, :, i] += d[:, None] * e_new[ks, :, j]
        if "bi_gate" in g:
            ks, i, _, d = g["bi_gate"]
            d_gi[ks, :, i] += d[:, None]
        hp_new = hp + d_h
        d_gh = d_h @ U_h.T
        if "U_gate" in g:
            ks, i, j, d = g["U_gate"]
            d_gh[ks, :, i] += d[:, None] * hp_new[ks, :, j]
        if "bh_gate" in g:
            ks, i, _, d = g["bh_gate"]
            d_gh[ks, :, i] += d[:, None]

        r, z, n, hn = c.r[:, t], c.z[:, t], c.n[:, t], c.hn[:, t]
        d_r = _sigmoid_diff(r, d_gi[..., :H] + d_gh[..., :H])
        d_z = _sigmoid_diff(z, d_gi[..., H:2 * H] + d_gh[..., H:2 * H])
        d_hn = d_gh[..., 2 * H:]
        d_an = d_gi[..., 2 * H:] + r * d_hn + d_r * hn + d_r * d_hn
        d_n = _tanh_diff(n, d_an)
        d_h = (1.0 - z - d_z) * d_n + d_z * (hp + d_h - n) + z * d_h

        # new max minus old max, taken over (h_t - old max) + d_h_t
        cand = (c.h[:, t + 1] - pooled) + d_h
        live = valid[:, t][None, :, None]
        d_pool = np.where(live, np.maximum(d_pool, cand), d_pool)

    d_logit = d_pool @ params.W_out[0]
    if "W_out" in g:
        ks, i, _, d = g["W_out"]
        d_logit[ks] += d[:, None] * (pooled[:, i].T + d_pool[ks, :, i])
    if "b_out" in g:
        ks, _, _, d = g["b_out"]
        d_logit[ks] += d[:, None]
    d_loss = _softplus_diff(c.logits, d_logit) - y * d_logit
    return d_loss.mean(axis=1)


def gradient_check(
    params: NetParams,
    batch: Batch,
    step: float = 1e-5,
    backward_fn: Callable = backward,
    chunk: int = 2048,
) -> float:
    """Max relative error between analytic and central-difference gradients
    over every parameter entry, ``|ga - gfd| / max(1e-12, |ga| + |gfd|)``.

    The central differences come from :func:`perturbed_loss_deltas`, so
    gradients down to ~1e-10 are resolved. `backward_fn` is injectable so the
    harness itself can be mutation tested.
    """
    _, cache = forward(params, batch)
    analytic = backward_fn(cache, params, batch.labels)
    entries = [(name, i) for name, arr in params.items() for i in range(arr.size)]
    ga = np.concatenate([getattr(analytic, name).reshape(-1) for name in params.names()])
    fd = np.empty(len(entries))
    for s in range(0, len(entries), chunk):
        part = entries[s:s + chunk]
        variants = [(n, i, step) for n, i in part] + [(n, i, -step) for n, i in part]
        deltas = perturbed_loss_deltas(params, batch, variants)
        m = len(part)
        fd[s:s + m] = (deltas[:m] - deltas[m:]) / (2.0 * step)
    err = np.abs(ga - fd) / np.maximum(1e-12, np.abs(ga) + np.abs(fd))
    return float(err.max())


def save_checkpoint(path: str | Path, params: NetParams, state: AdamState | None = None) -> None:
    """JSON checkpoint: version, shape header, flat row-major values."""
    def dump(p: NetParams):
        return {k: v.reshape(-1).tolist() for k, v in p.items()}

    doc = {
        "format": "symdetect-gru-checkpoint",
        "version": CHECKPOINT_VERSION,
        "shapes": {k: list(s) for k, s in params.shapes().items()},
        "params": dump(params),
    }
    if state is not None:
        doc["adam"] = {"t": state.t, "m": dump(state.m), "v": dump(state.v)}
    with open(path, "w") as f:
        json.dump(doc, f)


def load_checkpoint(path: str | Path) -> tuple[NetParams, AdamState | None]:
    with open(path) as f:
        doc = json.load(f)
    if doc.get("format") != "symdetect-gru-checkpoint":
        raise ValueError(f"{path}: not a discriminator checkpoint")
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"{path}: unsupported checkpoint version {doc.get('version')!r}")
    shapes = doc["shapes"]

    def build(flat):
        return NetParams(**{
            k: np.asarray(flat[k], dtype=np.float64).reshape(shapes[k])
            for k in NetParams.names()
        })

    params = build(doc["params"])
    state = None
    if "adam" in doc:
        a = doc["adam"]
        state = AdamState(build(a["m"]), build(a["v"]), int(a["t"]))
    return params, state


def with_seed(config: TrainConfig, seed: int) -> TrainConfig:
    return replace(config, seed=seed)
