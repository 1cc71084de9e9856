"""Loss, Adam, and the mini-batch training loop.

Training is fully seeded: parameter init, per-epoch shuffles, and dropout
masks all derive from the run seed, so two runs with the same config produce
bit-identical models and histories.  No early stopping; the final partial
batch is trained rather than dropped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .embed import EmbeddingMatrix
from .layers import NumericsError
from .metrics import Metrics, compute_metrics
from .model import Model, ModelConfig, ModelParams, init_params
from .rng import STREAM_EPOCH, derive_seed, shuffled_indices

CLIP_EPS = 1e-7


def sparse_cce(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean -ln p[true] with probabilities clipped to [1e-7, 1 - 1e-7]."""
    probs = np.asarray(probs)
    labels = np.asarray(labels, dtype=np.int64)
    B, C = probs.shape
    if labels.shape != (B,):
        raise ValueError(f"labels must be shape ({B},), got {labels.shape}")
    if labels.min() < 0 or labels.max() >= C:
        raise ValueError(f"label out of range [0, {C})")
    picked = np.clip(probs[np.arange(B), labels], CLIP_EPS, 1.0 - CLIP_EPS)
    return float(np.mean(-np.log(picked)))


def cce_grad_logits(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Fused softmax+CCE gradient at the logits: (probs - onehot) / B."""
    labels = np.asarray(labels, dtype=np.int64)
    B = probs.shape[0]
    g = probs.copy()
    g[np.arange(B), labels] -= 1.0
    return g / B


def cce_grad_probs(probs: np.ndarray, labels: np.ndarray) -> np.ndarray:
    """Loss gradient w.r.t. probabilities (zero where the clip is active)."""
    labels = np.asarray(labels, dtype=np.int64)
    B = probs.shape[0]
    picked = probs[np.arange(B), labels]
    inside = (picked > CLIP_EPS) & (picked < 1.0 - CLIP_EPS)
    vals = np.zeros_like(picked)
    np.divide(-1.0, B * picked, out=vals, where=inside)
    g = np.zeros_like(probs)
    g[np.arange(B), labels] = vals
    return g


@dataclass
class AdamHyper:
    lr: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-7


class Adam:
    """Adam with bias correction; moments keyed by parameter name."""

    def __init__(self, named_params, hyper: AdamHyper | None = None):
        self.hyper = hyper or AdamHyper()
        self.m = {n: np.zeros_like(a) for n, a in named_params}
        self.v = {n: np.zeros_like(a) for n, a in named_params}
        self.t = 0

    def step(self, named_params, grads: dict) -> None:
        """In-place parameter update from a name -> gradient map."""
        h = self.hyper
        self.t += 1
        bc1 = 1.0 - h.beta1**self.t
        bc2 = 1.0 - h.beta2**self.t
        for name, theta in named_params:
            g = grads[name]
            if not np.all(np.isfinite(g)):
                raise NumericsError(f"non-finite gradient for parameter '{name}'")
            m = self.m[name] = h.beta1 * self.m[name] + (1.0 - h.beta1) * g
            v = self.v[name] = h.beta2 * self.v[name] + (1.0 - h.beta2) * (g * g)
            theta -= h.lr * (m / bc1) / (np.sqrt(v / bc2) + h.epsilon)


def adam_step(named_params, grads: dict, state: Adam) -> Adam:
    state.step(named_params, grads)
    return state


@dataclass
class TrainConfig:
    model: ModelConfig
    epochs: int = 10
    batch_size: int = 32
    train_fraction: float = 0.8
    seed: int = 0
    adam: AdamHyper = field(default_factory=AdamHyper)

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not 0.0 < self.train_fraction < 1.0:
            raise ValueError("train_fraction must be in (0, 1)")


@dataclass
class History:
    loss: list[float] = field(default_factory=list)
    accuracy: list[float] = field(default_factory=list)
    val_accuracy: Optional[list[float]] = None

    def save_csv(self, path: str | Path) -> None:
        with Path(path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            header = ["epoch", "loss", "accuracy"]
            if self.val_accuracy is not None:
                header.append("val_accuracy")
            writer.writerow(header)
            for i, (l, a) in enumerate(zip(self.loss, self.accuracy), start=1):
                row = [i, repr(l), repr(a)]
                if self.val_accuracy is not None:
                    row.append(repr(self.val_accuracy[i - 1]))
                writer.writerow(row)


def split_indices(n: int, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seed-shuffled index split; train size = floor(fraction * n)."""
    if n < 2:
        raise ValueError("need at least 2 samples to split")
    if not 0.0 < fraction < 1.0:
        raise ValueError("fraction must be in (0, 1)")
    order = shuffled_indices(n, seed)
    cut = int(fraction * n)
    return np.asarray(order[:cut]), np.asarray(order[cut:])


def fit(
    cfg: TrainConfig,
    X: np.ndarray,
    y: np.ndarray,
    embedding: EmbeddingMatrix,
    on_epoch: Callable[[int, float, float], None] | None = None,
) -> tuple[Model, History]:
    """Train on encoded sequences X (N, T) with integer labels y (N,)."""
    X = np.asarray(X)
    y = np.asarray(y, dtype=np.int64)
    if X.ndim != 2 or X.shape[0] == 0:
        raise ValueError("empty training set")
    if y.shape != (X.shape[0],):
        raise ValueError("labels must align with rows of X")
    if y.min() < 0 or y.max() >= cfg.model.classes:
        raise ValueError(f"label out of range [0, {cfg.model.classes})")
    params = init_params(cfg.model, embedding)
    model = Model(cfg.model, params)
    opt = Adam(params.named_arrays(), cfg.adam)
    history = History()
    n = X.shape[0]
    step = 0
    for epoch in range(cfg.epochs):
        order = shuffled_indices(n, derive_seed(cfg.seed, STREAM_EPOCH, epoch))
        loss_sum = 0.0
        correct = 0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = X[idx], y[idx]
            probs, trace = model.forward(xb, mode="train", step=step)
            loss_sum += sparse_cce(probs, yb) * len(idx)
            correct += int((probs.argmax(axis=1) == yb).sum())
            grads = model.backward(trace, dlogits=cce_grad_logits(probs, yb))
            opt.step(params.named_arrays(), grads)
            step += 1
        epoch_loss = loss_sum / n
        epoch_acc = correct / n
        history.loss.append(epoch_loss)
        history.accuracy.append(epoch_acc)
        if on_epoch is not None:
            on_epoch(epoch + 1, epoch_loss, epoch_acc)
    return model, history


def evaluate(model: Model, X: np.ndarray, y: np.ndarray) -> Metrics:
    """Argmax predictions (lowest class wins ties) scored over labeled rows."""
    preds = model.predict(np.asarray(X))
    return compute_metrics(np.asarray(y, dtype=np.int64), preds, model.cfg.classes)
