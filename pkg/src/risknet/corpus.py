"""Post collections: loading, merging, deduplication, and splitting.

A post record carries six fields (id, user, timestamp, subreddit, title,
body) plus an optional integer risk label in 0..3.  Two interchange formats
are supported: CSV with RFC-4180 quoting and JSON-lines with the same keys.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Iterable, Optional

from .rng import Xoshiro256StarStar


class RiskLabel(IntEnum):
    """Four-tier risk class; integer codes are stable across serialization."""

    NO_RISK = 0
    LOW_RISK = 1
    MODERATE_RISK = 2
    SEVERE_RISK = 3


CSV_COLUMNS = ["post_id", "user_id", "timestamp", "subreddit", "post_title", "post_body"]
LABEL_COLUMN = "label"


@dataclass(frozen=True)
class Post:
    post_id: str
    user_id: str
    timestamp: int
    subreddit: str
    title: str
    body: str
    label: Optional[RiskLabel] = None


@dataclass
class Document:
    """A cleaned, title+body merged post ready for the model pipeline."""

    user_id: str
    text: str
    label: Optional[RiskLabel] = None
    post_id: str = ""


@dataclass(frozen=True)
class RecordError:
    line: int
    message: str

    def __str__(self) -> str:
        return f"line {self.line}: {self.message}"


@dataclass
class LoadResult:
    posts: list[Post] = field(default_factory=list)
    errors: list[RecordError] = field(default_factory=list)


class CorpusFormatError(ValueError):
    """File-level problem: missing file, bad header, unknown format."""


def _parse_label(raw) -> Optional[RiskLabel]:
    if raw is None or raw == "":
        return None
    code = int(raw)
    if code not in (0, 1, 2, 3):
        raise ValueError(f"label code {code} outside 0..3")
    return RiskLabel(code)


def _make_post(rec: dict, seen_ids: dict[str, int], line: int) -> Post:
    for key in CSV_COLUMNS:
        if key not in rec or rec[key] is None:
            raise ValueError(f"missing field '{key}'")
    post_id = str(rec["post_id"])
    if not post_id:
        raise ValueError("empty post_id")
    if post_id in seen_ids:
        raise ValueError(f"duplicate post_id '{post_id}' (first seen at line {seen_ids[post_id]})")
    try:
        timestamp = int(rec["timestamp"])
    except (TypeError, ValueError):
        raise ValueError(f"non-integer timestamp {rec['timestamp']!r}") from None
    title = str(rec["post_title"])
    body = str(rec["post_body"])
    if not title and not body:
        raise ValueError("both post_title and post_body are empty")
    label = _parse_label(rec.get(LABEL_COLUMN))
    seen_ids[post_id] = line
    return Post(post_id, str(rec["user_id"]), timestamp, str(rec["subreddit"]), title, body, label)


def load_posts(path: str | Path, format: str | None = None) -> LoadResult:
    """Read a post collection; malformed records are collected, not fatal.

    ``format`` is "csv" or "jsonl"; if omitted it is taken from the file
    extension.  File-level problems (missing file, missing header column)
    raise :class:`CorpusFormatError`; record-level problems are returned as
    :class:`RecordError` entries with 1-based line numbers.
    """
    path = Path(path)
    if not path.exists():
        raise CorpusFormatError(f"no such file: {path}")
    if format is None:
        format = path.suffix.lstrip(".").lower()
    if format == "csv":
        return _load_csv(path)
    if format == "jsonl":
        return _load_jsonl(path)
    raise CorpusFormatError(f"unknown format '{format}' (expected csv or jsonl)")


def _load_csv(path: Path) -> LoadResult:
    result = LoadResult()
    seen: dict[str, int] = {}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise CorpusFormatError(f"{path}: empty file, expected a header row") from None
        if header[: len(CSV_COLUMNS)] != CSV_COLUMNS:
            missing = [c for c in CSV_COLUMNS if c not in header]
            raise CorpusFormatError(f"{path}: bad header, missing columns {missing or header}")
        has_label = len(header) > len(CSV_COLUMNS) and header[len(CSV_COLUMNS)] == LABEL_COLUMN
        for row in reader:
            line = reader.line_num  # physical line where the record ends
            if not row:
                continue
            rec = dict(zip(CSV_COLUMNS, row))
            if has_label and len(row) > len(CSV_COLUMNS):
                rec[LABEL_COLUMN] = row[len(CSV_COLUMNS)]
            try:
                result.posts.append(_make_post(rec, seen, line))
            except ValueError as exc:
                result.errors.append(RecordError(line, str(exc)))
    return result


def _load_jsonl(path: Path) -> LoadResult:
    result = LoadResult()
    seen: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line_no, raw in enumerate(fh, start=1):
            if not raw.strip():
                continue
            try:
                rec = json.loads(raw)
                if not isinstance(rec, dict):
                    raise ValueError("record is not a JSON object")
                result.posts.append(_make_post(rec, seen, line_no))
            except (json.JSONDecodeError, ValueError) as exc:
                result.errors.append(RecordError(line_no, str(exc)))
    return result


def save_posts(path: str | Path, posts: Iterable[Post], format: str | None = None) -> None:
    """Write posts in CSV or JSONL; the label column is always present."""
    path = Path(path)
    if format is None:
        format = path.suffix.lstrip(".").lower()
    if format == "csv":
        with open(path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(CSV_COLUMNS + [LABEL_COLUMN])
            for p in posts:
                writer.writerow(
                    [p.post_id, p.user_id, p.timestamp, p.subreddit, p.title, p.body,
                     "" if p.label is None else int(p.label)]
                )
    elif format == "jsonl":
        with open(path, "w", encoding="utf-8") as fh:
            for p in posts:
                rec = {
                    "post_id": p.post_id,
                    "user_id": p.user_id,
                    "timestamp": p.timestamp,
                    "subreddit": p.subreddit,
                    "post_title": p.title,
                    "post_body": p.body,
                    "label": None if p.label is None else int(p.label),
                }
                fh.write(json.dumps(rec, ensure_ascii=False) + "\n")
    else:
        raise CorpusFormatError(f"unknown format '{format}' (expected csv or jsonl)")


def merge_title_body(post: Post) -> str:
    """Title and body joined by one space; an empty side is dropped."""
    if post.title and post.body:
        return post.title + " " + post.body
    if post.title:
        return post.title
    if post.body:
        return post.body
    raise ValueError("empty post")


def dedupe(docs: list[Document]) -> list[Document]:
    """Keep the first occurrence of each exact cleaned-text string."""
    seen: set[str] = set()
    out = []
    for doc in docs:
        if doc.text not in seen:
            seen.add(doc.text)
            out.append(doc)
    return out


def split_train_test(
    docs: list[Document], train_fraction: float, seed: int
) -> tuple[list[Document], list[Document]]:
    """Deterministic shuffled split: floor(train_fraction * n) documents train.

    The permutation is Fisher-Yates driven by xoshiro256** seeded from the
    given 64-bit seed, so the exact split can be recomputed anywhere.
    """
    if not docs:
        raise ValueError("cannot split an empty document list")
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must lie in (0, 1)")
    for i, doc in enumerate(docs):
        if doc.label is None:
            raise ValueError(f"document {i} is unlabeled; split requires labels")
    idx = list(range(len(docs)))
    Xoshiro256StarStar(seed).shuffle(idx)
    n_train = math.floor(train_fraction * len(docs))
    train = [docs[i] for i in idx[:n_train]]
    test = [docs[i] for i in idx[n_train:]]
    return train, test
