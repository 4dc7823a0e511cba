"""Shared text helpers: tokenization, stopwords, term frequencies.

Everything here is deterministic (no randomized hashing, no locale
dependence) because the rule-based extractor, the stub classifier and the
theme grouping all freeze expected outputs in tests.
"""

from __future__ import annotations

import re
import zlib
from collections import Counter

_TOKEN_RE = re.compile(r"[a-z]+")

# Small curated stopword list; enough to keep keyword grouping from
# latching onto function words.  Cue words used by the extractor are
# excluded separately (see content_words).
STOPWORDS = frozenset(
    """
    a an and are as at be been by can could did do does for from had has
    have he her him his how i if in into is it its me my no not of on or
    our she so that the their them then there these they this to too us
    was we were what when where which who will with would you your
    """.split()
)

# Cue vocabulary used by the rule-based extractor; also stripped before
# keyword grouping so "I think" in two positions does not merge topics.
CUE_WORDS = frozenset(
    ["should", "must", "think", "because", "since", "but", "however", "disagree"]
)


def tokenize(text: str) -> list[str]:
    """Lowercase word tokens, ascii letters only."""
    return _TOKEN_RE.findall(text.lower())


def content_words(text: str) -> list[str]:
    """Tokens minus stopwords and extractor cue words."""
    return [t for t in tokenize(text) if t not in STOPWORDS and t not in CUE_WORDS]


def term_frequencies(texts: list[str]) -> Counter:
    counts: Counter = Counter()
    for text in texts:
        counts.update(content_words(text))
    return counts


def top_terms(counts: Counter, k: int) -> list[str]:
    """Top-k terms by frequency, ties broken alphabetically."""
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [term for term, _ in ranked[:k]]


def stable_bucket(token: str, buckets: int) -> int:
    """Deterministic hash bucket (crc32, not Python's randomized hash)."""
    return zlib.crc32(token.encode("utf-8")) % buckets


def hash_embed(text: str, dim: int = 64) -> list[float]:
    """Hash-bucket term-frequency vector, L2-normalized.

    Used by the stub backend so similarity-based assignment stays
    reproducible across runs and machines.
    """
    vec = [0.0] * dim
    for tok in tokenize(text):
        vec[stable_bucket(tok, dim)] += 1.0
    norm = sum(v * v for v in vec) ** 0.5
    if norm > 0:
        vec = [v / norm for v in vec]
    return vec


def cosine(a: list[float], b: list[float]) -> float:
    return sum(x * y for x, y in zip(a, b))
