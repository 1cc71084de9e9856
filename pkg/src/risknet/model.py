"""Model assembly: config, parameter init, and the forward/backward stack.

The full stack is embedding -> dropout -> LSTM -> attention -> conv1d+ReLU
-> maxpool -> flatten -> dense softmax.  Reduced variants reuse the same
layer chain with pieces removed, so the ablation runs share one engine:

    lstm_attention_cnn  full stack
    lstm_cnn            no attention
    lstm                LSTM last step straight into the dense head
    cnn                 convolution directly over the embeddings

Backward consumes the forward cache in reverse and returns one gradient per
parameter array, keyed by dotted names ("lstm.W_f", "dense.b", ...).
"""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .embed import EmbeddingMatrix
from .layers import (
    AttentionParams,
    Conv1DParams,
    DenseParams,
    LSTMParams,
    check_finite,
    attention_backward,
    attention_forward,
    conv1d_relu_backward,
    conv1d_relu_forward,
    dense_softmax_backward,
    dense_softmax_forward,
    dropout_backward,
    dropout_forward,
    embedding_backward,
    embedding_forward,
    flatten_backward,
    flatten_forward,
    lstm_backward,
    lstm_forward,
    maxpool1d_backward,
    maxpool1d_forward,
)
from .rng import STREAM_INIT, bulk_generator

VARIANTS = ("cnn", "lstm", "lstm_cnn", "lstm_attention_cnn")

# per-variant layer chains; "last_step" slices h_T for the lstm-only head
_CHAINS = {
    "lstm_attention_cnn": ("embedding", "dropout", "lstm", "attention", "conv", "pool", "flatten", "dense"),
    "lstm_cnn": ("embedding", "dropout", "lstm", "conv", "pool", "flatten", "dense"),
    "lstm": ("embedding", "dropout", "lstm", "last_step", "dense"),
    "cnn": ("embedding", "dropout", "conv", "pool", "flatten", "dense"),
}

_LAYER_LABELS = {
    "embedding": "embedding",
    "dropout": "dropout",
    "lstm": "lstm",
    "attention": "attention",
    "conv": "conv1d_relu",
    "pool": "maxpool1d",
    "flatten": "flatten",
    "last_step": "last_step",
    "dense": "dense_softmax",
}


@dataclass
class ModelConfig:
    max_len: int
    embed_dim: int = 300
    lstm_units: int = 100
    dropout_rate: float = 0.5
    filters: int = 3
    kernel: int = 8
    pool: int = 2
    classes: int = 4
    seed: int = 0
    variant: str = "lstm_attention_cnn"
    dtype: str = "float32"

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")
        if self.dtype not in ("float32", "float64"):
            raise ValueError(f"dtype must be float32 or float64, got {self.dtype!r}")
        if self.max_len < 1:
            raise ValueError("max_len must be >= 1")
        if self.max_len < self.pool:
            raise ValueError("max_len shorter than pool window")

    @property
    def np_dtype(self):
        return np.float32 if self.dtype == "float32" else np.float64

    def flattened_dim(self) -> int:
        if self.variant == "lstm":
            return self.lstm_units
        return (self.max_len // self.pool) * self.filters

    def conv_in_dim(self) -> int:
        return self.embed_dim if self.variant == "cnn" else self.lstm_units

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class ModelParams:
    embedding: EmbeddingMatrix
    dense: DenseParams
    lstm: Optional[LSTMParams] = None
    attention: Optional[AttentionParams] = None
    conv: Optional[Conv1DParams] = None

    def named_arrays(self) -> list[tuple[str, np.ndarray]]:
        out = [("embedding", self.embedding.matrix)]
        for group in ("lstm", "attention", "conv", "dense"):
            params = getattr(self, group)
            if params is not None:
                out.extend((f"{group}.{n}", a) for n, a in params.named_arrays())
        return out

    def get(self, name: str) -> np.ndarray:
        for n, a in self.named_arrays():
            if n == name:
                return a
        raise KeyError(name)


def _glorot(rng: np.random.Generator, shape, fan_in: int, fan_out: int, dtype) -> np.ndarray:
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=shape).astype(dtype)


def init_params(cfg: ModelConfig, embedding: EmbeddingMatrix) -> ModelParams:
    """Glorot kernels, N(0, 0.05^2) attention w, forget bias 1, other biases 0.

    All draws come from one substream of the config seed in a fixed order,
    so the same seed always yields the same parameters.
    """
    if embedding.dim != cfg.embed_dim:
        raise ValueError(f"embedding dim {embedding.dim} != config embed_dim {cfg.embed_dim}")
    dt = cfg.np_dtype
    rng = bulk_generator(cfg.seed, STREAM_INIT, 1)
    D, H, T = cfg.embed_dim, cfg.lstm_units, cfg.max_len
    chain = _CHAINS[cfg.variant]

    lstm = None
    if "lstm" in chain:
        kw = {}
        for gate in ("f", "i", "o", "u"):
            kw[f"W_{gate}"] = _glorot(rng, (D, H), D, H, dt)
            kw[f"U_{gate}"] = _glorot(rng, (H, H), H, H, dt)
            kw[f"b_{gate}"] = (np.ones(H, dtype=dt) if gate == "f" else np.zeros(H, dtype=dt))
        lstm = LSTMParams(**kw)

    attention = None
    if "attention" in chain:
        attention = AttentionParams(
            w=rng.normal(0.0, 0.05, size=(H, 1)).astype(dt),
            b=np.zeros((T, 1), dtype=dt),
        )

    conv = None
    if "conv" in chain:
        d_in = cfg.conv_in_dim()
        k, F = cfg.kernel, cfg.filters
        conv = Conv1DParams(
            kernels=_glorot(rng, (k, d_in, F), k * d_in, k * F, dt),
            bias=np.zeros(F, dtype=dt),
        )

    M, C = cfg.flattened_dim(), cfg.classes
    dense = DenseParams(W=_glorot(rng, (M, C), M, C, dt), b=np.zeros(C, dtype=dt))

    emb = EmbeddingMatrix(embedding.matrix.astype(dt))
    return ModelParams(embedding=emb, dense=dense, lstm=lstm, attention=attention, conv=conv)


class Model:
    """Forward/backward engine for one config + parameter set."""

    def __init__(self, cfg: ModelConfig, params: ModelParams):
        self.cfg = cfg
        self.params = params

    def forward(self, batch: np.ndarray, mode: str = "infer", step: int = 0):
        """(B, T) indices -> (probs (B, C), cache). Train mode applies dropout."""
        cfg, p = self.cfg, self.params
        batch = np.asarray(batch)
        if batch.ndim != 2 or batch.shape[1] != cfg.max_len:
            raise ValueError(f"batch must be (B, {cfg.max_len}), got {batch.shape}")
        x = batch
        trace = []
        for op in _CHAINS[cfg.variant]:
            if op == "embedding":
                x, cache = embedding_forward(p.embedding.matrix, x)
            elif op == "dropout":
                x, cache = dropout_forward(x, cfg.dropout_rate, mode, cfg.seed, step)
            elif op == "lstm":
                x, cache = lstm_forward(p.lstm, x)
            elif op == "attention":
                x, cache = attention_forward(p.attention, x)
            elif op == "conv":
                x, cache = conv1d_relu_forward(p.conv, x)
            elif op == "pool":
                x, cache = maxpool1d_forward(x, cfg.pool)
            elif op == "flatten":
                x, cache = flatten_forward(x)
            elif op == "last_step":
                cache = x.shape
                x = x[:, -1, :]
            else:  # dense
                x, cache = dense_softmax_forward(p.dense, x)
            check_finite(_LAYER_LABELS[op], x)
            trace.append((op, cache))
        return x, trace

    def backward(self, trace, dprobs: np.ndarray | None = None,
                 dlogits: np.ndarray | None = None) -> dict[str, np.ndarray]:
        """Gradients for every parameter array from dprobs or fused dlogits."""
        grads: dict[str, np.ndarray] = {}
        dx: np.ndarray | None = None
        for op, cache in reversed(trace):
            if op == "dense":
                g, dx = dense_softmax_backward(cache, dprobs=dprobs, dlogits=dlogits)
                grads.update({f"dense.{n}": a for n, a in g.items()})
            elif op == "last_step":
                full = np.zeros(cache, dtype=dx.dtype)
                full[:, -1, :] = dx
                dx = full
            elif op == "flatten":
                dx = flatten_backward(cache, dx)
            elif op == "pool":
                dx = maxpool1d_backward(cache, dx)
            elif op == "conv":
                g, dx = conv1d_relu_backward(cache, dx)
                grads.update({f"conv.{n}": a for n, a in g.items()})
            elif op == "attention":
                g, dx = attention_backward(cache, dx)
                grads.update({f"attention.{n}": a for n, a in g.items()})
            elif op == "lstm":
                g, dx = lstm_backward(cache, dx)
                grads.update({f"lstm.{n}": a for n, a in g.items()})
            elif op == "dropout":
                dx = dropout_backward(cache, dx)
            else:  # embedding
                grads["embedding"] = embedding_backward(cache, dx)
        return grads

    def predict(self, batch: np.ndarray, batch_size: int = 256) -> np.ndarray:
        """Argmax class per row, lowest index on ties, inference mode."""
        batch = np.asarray(batch)
        out = np.empty(batch.shape[0], dtype=np.int64)
        for start in range(0, batch.shape[0], batch_size):
            probs, _ = self.forward(batch[start : start + batch_size], mode="infer")
            out[start : start + batch_size] = probs.argmax(axis=1)
        return out
