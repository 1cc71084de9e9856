"""SVM baseline and the five-way ablation comparison.

The SVM uses mean-embedding features and four one-vs-rest linear hinge
classifiers trained by seeded subgradient descent.  The ablation suite runs
the SVM plus the four neural variants on identical data and seed and emits a
CSV of accuracy / macro precision / recall / F1 per variant.
"""

from __future__ import annotations

import csv
import dataclasses
from pathlib import Path
from typing import Sequence

import numpy as np

from .embed import EmbeddingMatrix, UNK_INDEX
from .metrics import Metrics, compute_metrics
from .rng import STREAM_SVM, Xoshiro256StarStar, derive_seed
from .train import TrainConfig, evaluate, fit

ABLATION_VARIANTS = ("svm", "cnn", "lstm", "lstm_cnn", "lstm_attention_cnn")

# previously reported full-model results (percent), written as a non-binding
# footer under the ablation table
REFERENCE_FULL_MODEL = (90.3, 91.6, 93.7, 92.6)


def mean_embedding_features(X: np.ndarray, embedding: EmbeddingMatrix) -> np.ndarray:
    """Mean of embedding rows over real (non-PAD, non-UNK) indices per row.

    Rows with no real token become the zero vector.
    """
    X = np.asarray(X)
    E = embedding.matrix.astype(np.float64)
    real = X > UNK_INDEX
    summed = np.einsum("bt,btd->bd", real.astype(np.float64), E[X])
    counts = real.sum(axis=1, keepdims=True).astype(np.float64)
    return summed / np.maximum(counts, 1.0)


class LinearSVM:
    """One-vs-rest L2-regularized hinge classifiers, subgradient-trained."""

    def __init__(self, n_classes: int = 4, lam: float = 1e-4, epochs: int = 50,
                 lr0: float = 0.01, seed: int = 0):
        self.n_classes = n_classes
        self.lam = lam
        self.epochs = epochs
        self.lr0 = lr0
        self.seed = seed
        self.W: np.ndarray | None = None  # (C, D)
        self.b: np.ndarray | None = None  # (C,)

    def fit(self, X: np.ndarray, y: np.ndarray) -> "LinearSVM":
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y, dtype=np.int64)
        n, d = X.shape
        present = np.bincount(y, minlength=self.n_classes)
        for c in range(self.n_classes):
            if present[c] == 0:
                raise ValueError(f"class {c} has no training examples")
        self.W = np.zeros((self.n_classes, d))
        self.b = np.zeros(self.n_classes)
        for c in range(self.n_classes):
            sign = np.where(y == c, 1.0, -1.0)
            w = self.W[c]
            b = 0.0
            rng = Xoshiro256StarStar(derive_seed(self.seed, STREAM_SVM, c))
            order = list(range(n))
            for epoch in range(1, self.epochs + 1):
                rng.shuffle(order)
                lr = self.lr0 / epoch  # 1/t decay at epoch granularity
                for i in order:
                    margin = sign[i] * (w @ X[i] + b)
                    if margin < 1.0:
                        w -= lr * (self.lam * w - sign[i] * X[i])
                        b += lr * sign[i]
                    else:
                        w -= lr * self.lam * w
            self.b[c] = b
        return self

    def decision(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=np.float64) @ self.W.T + self.b

    def predict(self, X: np.ndarray) -> np.ndarray:
        return self.decision(X).argmax(axis=1)


def svm_baseline(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_test: np.ndarray,
    y_test: np.ndarray,
    embedding: EmbeddingMatrix,
    seed: int = 0,
    n_classes: int = 4,
) -> Metrics:
    """Train/score the SVM on encoded index matrices via mean embeddings."""
    clf = LinearSVM(n_classes=n_classes, seed=seed)
    clf.fit(mean_embedding_features(X_train, embedding), y_train)
    preds = clf.predict(mean_embedding_features(X_test, embedding))
    return compute_metrics(np.asarray(y_test, dtype=np.int64), preds, n_classes)


def ablation_suite(
    cfg: TrainConfig,
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_test: np.ndarray,
    y_test: np.ndarray,
    embedding: EmbeddingMatrix,
    variants: Sequence[str] = ABLATION_VARIANTS,
) -> list[dict]:
    """Train every variant on the same split/seed; rows in variant order."""
    rows = []
    for variant in variants:
        if variant == "svm":
            m = svm_baseline(X_train, y_train, X_test, y_test, embedding,
                             seed=cfg.seed, n_classes=cfg.model.classes)
        else:
            vcfg = dataclasses.replace(cfg, model=dataclasses.replace(cfg.model, variant=variant))
            model, _ = fit(vcfg, X_train, y_train, embedding)
            m = evaluate(model, X_test, y_test)
        rows.append(
            {
                "model": variant,
                "accuracy": m.accuracy,
                "precision": m.macro_precision,
                "recall": m.macro_recall,
                "f1": m.macro_f1,
            }
        )
    return rows


def save_ablation_csv(rows: list[dict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["model", "accuracy", "precision", "recall", "f1"])
        for r in rows:
            writer.writerow(
                [r["model"]] + [f"{r[k]:.4f}" for k in ("accuracy", "precision", "recall", "f1")]
            )
        acc, p, rec, f1 = REFERENCE_FULL_MODEL
        fh.write(
            "# reference lstm_attention_cnn (published benchmark, percent, non-binding): "
            f"accuracy={acc},precision={p},recall={rec},f1={f1}\n"
        )
