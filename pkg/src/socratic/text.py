"""Shared text helpers used by the stub scorers and the evaluation metrics."""

from __future__ import annotations

import re

_TOKEN_RE = re.compile(r"[0-9a-z]+")


def tokenize(text: str) -> list[str]:
    """Lowercase ``text`` and split it on runs of non-alphanumeric characters.

    This is the pinned tokenizer for the n-gram metrics and for the hash
    embedding stub. Real model backends bring their own tokenizers.
    """
    return _TOKEN_RE.findall(text.lower())


def has_word_characters(text: str) -> bool:
    """True if ``text`` contains at least one alphanumeric character."""
    return any(ch.isalnum() for ch in text)
