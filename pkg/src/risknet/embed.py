"""Vocabulary building, embedding-file loading, and fixed-length encoding.

Index 0 is PAD and index 1 is UNK in every vocabulary.  Sequences are
pre-padded (tokens right-aligned) and over-length sequences keep their last
max_len tokens, so the most recent words sit nearest the classifier head.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Document
from .rng import STREAM_INIT, STREAM_UNK, bulk_generator

PAD_INDEX = 0
UNK_INDEX = 1
PAD_TOKEN = "<pad>"
UNK_TOKEN = "<unk>"

INIT_SCALE = 0.05  # uniform half-width for embedding init and the UNK row


@dataclass(frozen=True)
class Vocabulary:
    token_to_index: dict[str, int]

    def __post_init__(self):
        for token, idx in self.token_to_index.items():
            if idx < 2:
                raise ValueError(f"token '{token}' maps to reserved index {idx}")
        indices = sorted(self.token_to_index.values())
        if indices != list(range(2, 2 + len(indices))):
            raise ValueError("vocabulary indices must be contiguous from 2")

    @property
    def size(self) -> int:
        """Total index count including PAD and UNK."""
        return len(self.token_to_index) + 2

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_index

    def index(self, token: str) -> int:
        return self.token_to_index.get(token, UNK_INDEX)

    def index_to_token(self) -> dict[int, str]:
        inv = {idx: tok for tok, idx in self.token_to_index.items()}
        inv[PAD_INDEX] = PAD_TOKEN
        inv[UNK_INDEX] = UNK_TOKEN
        return inv


@dataclass
class EmbeddingMatrix:
    matrix: np.ndarray  # V x D, float64

    def __post_init__(self):
        if self.matrix.ndim != 2:
            raise ValueError("embedding matrix must be 2-D")
        if not np.all(np.isfinite(self.matrix)):
            raise ValueError("embedding matrix contains non-finite entries")
        if np.any(self.matrix[PAD_INDEX] != 0.0):
            raise ValueError("PAD row must be all zeros")

    @property
    def dim(self) -> int:
        return self.matrix.shape[1]

    @property
    def vocab_size(self) -> int:
        return self.matrix.shape[0]


class EmbeddingFormatError(ValueError):
    pass


def load_embeddings(path: str | Path, seed: int = 0) -> tuple[Vocabulary, EmbeddingMatrix]:
    """Parse the standard text interchange format: header, then token + floats.

    File tokens get indices 2.. in file order.  The PAD row is zero and the
    UNK row is drawn from U(-0.05, 0.05) with the run seed so unknown words
    start as a trainable vector rather than a silent drop.
    """
    path = Path(path)
    with path.open("r", encoding="utf-8") as fh:
        header = fh.readline()
        parts = header.split()
        if len(parts) != 2:
            raise EmbeddingFormatError(f"line 1: header must be '<vocab> <dim>', got {header!r}")
        try:
            n_tokens, dim = int(parts[0]), int(parts[1])
        except ValueError:
            raise EmbeddingFormatError(f"line 1: non-integer header fields {parts}") from None
        if n_tokens < 1 or dim < 1:
            raise EmbeddingFormatError(f"line 1: header counts must be positive, got {parts}")
        token_to_index: dict[str, int] = {}
        first_line: dict[str, int] = {}
        rows = np.zeros((n_tokens + 2, dim), dtype=np.float64)
        count = 0
        for line_num, line in enumerate(fh, start=2):
            if not line.strip():
                continue
            fields = line.split()
            if len(fields) != dim + 1:
                raise EmbeddingFormatError(
                    f"line {line_num}: expected 1 token + {dim} values, got {len(fields)} fields"
                )
            token = fields[0]
            if token in first_line:
                raise EmbeddingFormatError(
                    f"line {line_num}: duplicate token '{token}' (first seen on line {first_line[token]})"
                )
            if count >= n_tokens:
                raise EmbeddingFormatError(
                    f"header mismatch: header declares {n_tokens} tokens but line {line_num} is one more"
                )
            try:
                vec = np.array([float(v) for v in fields[1:]], dtype=np.float64)
            except ValueError:
                raise EmbeddingFormatError(f"line {line_num}: non-numeric vector entry") from None
            if not np.all(np.isfinite(vec)):
                raise EmbeddingFormatError(f"line {line_num}: non-finite vector entry")
            first_line[token] = line_num
            token_to_index[token] = 2 + count
            rows[2 + count] = vec
            count += 1
    if count != n_tokens:
        raise EmbeddingFormatError(
            f"header mismatch: line 1 declares {n_tokens} tokens, file has {count}")
    rows[UNK_INDEX] = bulk_generator(seed, STREAM_UNK).uniform(-INIT_SCALE, INIT_SCALE, size=dim)
    return Vocabulary(token_to_index), EmbeddingMatrix(rows)


def build_vocab(docs: Sequence[Document], min_count: int = 1) -> Vocabulary:
    """Corpus vocabulary: frequency >= min_count, ordered by count then token."""
    freq: dict[str, int] = {}
    for doc in docs:
        for token in doc.text.split():
            freq[token] = freq.get(token, 0) + 1
    kept = sorted(
        (t for t, c in freq.items() if c >= min_count),
        key=lambda t: (-freq[t], t),
    )
    if not kept:
        raise ValueError("empty vocabulary: no token meets min_count")
    return Vocabulary({t: i + 2 for i, t in enumerate(kept)})


def init_embeddings(vocab: Vocabulary, dim: int, seed: int) -> EmbeddingMatrix:
    """Fresh U(-0.05, 0.05) matrix for a corpus vocabulary; PAD row zero."""
    rng = bulk_generator(seed, STREAM_INIT, 0)
    matrix = rng.uniform(-INIT_SCALE, INIT_SCALE, size=(vocab.size, dim))
    matrix[PAD_INDEX] = 0.0
    return EmbeddingMatrix(matrix)


def encode(tokens: Sequence[str], vocab: Vocabulary, max_len: int) -> list[int]:
    """Fixed-length index sequence: UNK for OOV, tail kept, left pad."""
    if max_len < 1:
        raise ValueError("max_len must be >= 1")
    ids = [vocab.index(t) for t in tokens[-max_len:]]
    return [PAD_INDEX] * (max_len - len(ids)) + ids


def decode(indices: Sequence[int], vocab: Vocabulary) -> list[str]:
    """Tokens for non-PAD indices; UNK positions come back as the UNK marker."""
    inv = vocab.index_to_token()
    return [inv[i] for i in indices if i != PAD_INDEX]


def encode_batch(docs: Sequence[Sequence[str]], vocab: Vocabulary, max_len: int) -> np.ndarray:
    """B x max_len int64 index matrix."""
    return np.array([encode(toks, vocab, max_len) for toks in docs], dtype=np.int64)


def save_vocab(vocab: Vocabulary, path: str | Path) -> None:
    """CSV dump `token,index`, reserved rows included, index order."""
    inv = vocab.index_to_token()
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["token", "index"])
        for idx in range(vocab.size):
            writer.writerow([inv[idx], idx])
