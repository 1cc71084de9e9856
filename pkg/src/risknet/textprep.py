"""Deterministic text cleaning, tokenization, stop words, lemmatization.

Cleaning applies, in this fixed order: URL removal, e-mail removal, newline
removal, punctuation stripping, lowercasing, whitespace collapse.  URL and
e-mail matching must run before punctuation stripping or the patterns fall
apart.  The exact constants live in :data:`DEFAULT_RULES`:

* URLs: ``(?:https?://|www\\.)`` up to the next whitespace, case-insensitive.
* E-mails: ``nonspace+ @ nonspace+ . nonspace+``.
* Punctuation: the 32 ASCII characters ``!"#$%&'()*+,-./:;<=>?@[\\]^_`{|}~``.

Newlines are substituted with a space (so adjoining words stay separate)
and then collapsed with the rest of the whitespace.

The lemmatizer is a rule table with an exception dictionary, not a tagger:
each token is looked up in the shipped exceptions TSV first, then passed
through ordered suffix rules (-ies, -es, -s, -ing, -ed); the first matching
rule wins and rules never cascade.
"""

from __future__ import annotations

import re
import string
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

_VOWELS = set("aeiou")


@dataclass(frozen=True)
class CleanRules:
    url_pattern: re.Pattern = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
    email_pattern: re.Pattern = re.compile(r"\S+@\S+\.\S+")
    punctuation_set: str = string.punctuation
    lowercase: bool = True


DEFAULT_RULES = CleanRules()
_PUNCT_TABLE = str.maketrans({c: " " for c in DEFAULT_RULES.punctuation_set})


def clean(raw: str, rules: CleanRules = DEFAULT_RULES) -> str:
    s = rules.url_pattern.sub(" ", raw)
    s = rules.email_pattern.sub(" ", s)
    s = s.replace("\r", " ").replace("\n", " ")
    if rules is DEFAULT_RULES:
        s = s.translate(_PUNCT_TABLE)
    else:
        s = s.translate(str.maketrans({c: " " for c in rules.punctuation_set}))
    if rules.lowercase:
        s = s.lower()
    return " ".join(s.split())


def tokenize(text: str) -> list[str]:
    """Split cleaned text on spaces; never yields empty tokens."""
    return text.split()


@dataclass(frozen=True)
class StopWordList:
    words: frozenset[str] = field(default_factory=frozenset)


def load_stopwords(path: str | Path | None = None) -> StopWordList:
    """Load the stop-word list, one lowercase token per line (UTF-8).

    Without a path the packaged 179-word English list is used.
    """
    if path is None:
        text = resources.files("risknet.data").joinpath("stopwords.txt").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    return StopWordList(frozenset(w for w in text.splitlines() if w))


def drop_stopwords(tokens: list[str], stopwords: StopWordList) -> list[str]:
    return [t for t in tokens if t not in stopwords.words]


def load_lemma_exceptions(path: str | Path | None = None) -> dict[str, str]:
    """Exception dictionary from a TSV of ``surface<TAB>lemma`` rows."""
    if path is None:
        text = resources.files("risknet.data").joinpath("lemma_exceptions.tsv").read_text("utf-8")
    else:
        text = Path(path).read_text("utf-8")
    table = {}
    for line in text.splitlines():
        if not line:
            continue
        surface, lemma = line.split("\t")
        table[surface] = lemma
    return table


_DEFAULT_EXCEPTIONS: dict[str, str] | None = None


def _exceptions() -> dict[str, str]:
    global _DEFAULT_EXCEPTIONS
    if _DEFAULT_EXCEPTIONS is None:
        _DEFAULT_EXCEPTIONS = load_lemma_exceptions()
    return _DEFAULT_EXCEPTIONS


def _has_vowel(s: str) -> bool:
    return any(c in _VOWELS for c in s)


def _undouble(stem: str) -> str:
    # Porter-style: strip a doubled final consonant except l/s/z
    # ("running" -> "run" but "falling" -> "fall").
    if len(stem) >= 2 and stem[-1] == stem[-2] and stem[-1] not in _VOWELS and stem[-1] not in "lsz":
        return stem[:-1]
    return stem


def lemma(token: str, exceptions: dict[str, str] | None = None) -> str:
    """Map one lowercase token to its lemma by exception table, then rules."""
    exc = _exceptions() if exceptions is None else exceptions
    if token in exc:
        return exc[token]
    if token.endswith("ies") and len(token) >= 5:
        return token[:-3] + "y"
    if token.endswith("es") and len(token) >= 4 and token[:-2].endswith(("s", "sh", "ch", "x", "z", "o")):
        return token[:-2]
    if token.endswith("s") and len(token) >= 4 and not token.endswith("ss"):
        return token[:-1]
    if token.endswith("ing") and len(token) >= 5:
        stem = token[:-3]
        if len(stem) >= 2 and _has_vowel(stem):
            return _undouble(stem)
        return token
    if token.endswith("ed") and len(token) >= 5:
        stem = token[:-2]
        if len(stem) >= 3 and _has_vowel(stem):
            return _undouble(stem)
        return token
    return token


def lemmatize(tokens: list[str], exceptions: dict[str, str] | None = None) -> list[str]:
    exc = _exceptions() if exceptions is None else exceptions
    return [lemma(t, exc) for t in tokens]


def preprocess(
    raw: str,
    stopwords: StopWordList | None = None,
    exceptions: dict[str, str] | None = None,
    rules: CleanRules = DEFAULT_RULES,
) -> list[str]:
    """Full pipeline: clean, tokenize, drop stop words, lemmatize."""
    sw = load_stopwords() if stopwords is None else stopwords
    return lemmatize(drop_stopwords(tokenize(clean(raw, rules)), sw), exceptions)
