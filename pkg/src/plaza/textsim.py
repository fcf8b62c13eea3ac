"""Pluggable text similarity.

The deterministic baseline is cosine similarity over lowercased,
punctuation-stripped bags of words. Anything smarter (embeddings, a
reviewed LLM scorer) can be dropped in behind the same protocol.
"""
from __future__ import annotations

import re
from collections import Counter
from math import sqrt
from typing import Protocol

_TOKEN = re.compile(r"[^\W_]+", re.UNICODE)


class TextSimilarityProvider(Protocol):
    def similarity(self, a: str, b: str) -> float:
        """Similarity in [0, 1]; 1 means same content."""
        ...


def tokenize(text: str) -> list[str]:
    return _TOKEN.findall(text.lower())


class BagOfWordsSimilarity:
    """Cosine over token-count vectors; empty texts have similarity 0."""

    def similarity(self, a: str, b: str) -> float:
        ca, cb = Counter(tokenize(a)), Counter(tokenize(b))
        if not ca or not cb:
            return 0.0
        dot = sum(ca[t] * cb[t] for t in ca.keys() & cb.keys())
        norm = sqrt(sum(v * v for v in ca.values())) * sqrt(sum(v * v for v in cb.values()))
        return dot / norm if norm else 0.0


DEFAULT_SIMILARITY = BagOfWordsSimilarity()
