"""Greedy token-embedding similarity between two texts.

Each text is embedded token by token through a pluggable backend. Precision
is the mean over candidate tokens of the best cosine match in the reference,
recall swaps the roles, and F1 combines the two. F1 is the single scalar the
rest of the pipeline compares against the match threshold.

Two backends ship: a seeded-hash stub whose token vectors are deterministic
and quasi-orthogonal (the default for tests and offline runs), and an
exactly-orthogonal stub where similarity degenerates to token overlap. Real
contextual-embedding models plug in through the same ``embed_tokens``
contract.
"""

from __future__ import annotations

import hashlib
import math
import threading
import weakref
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np

from .corpus import ReferenceSolution
from .text import tokenize

DEFAULT_TAU = 0.8
_UNIT_NORM_TOLERANCE = 1e-6


class EmbeddingBackend(Protocol):
    """Contract for token embedders.

    ``embed_tokens`` returns the text's tokens in order, each with a
    unit-norm vector; the same text must always produce the same tokens and
    vectors. Backends that cannot take concurrent calls set ``thread_safe``
    to False and the scoring functions serialize access for them.
    """

    thread_safe: bool

    def embed_tokens(self, text: str) -> list[tuple[str, np.ndarray]]: ...


@dataclass(frozen=True)
class SimilarityScore:
    """Precision/recall/F1 triple from greedy token matching."""

    precision: float
    recall: float
    f1: float

    @classmethod
    def from_precision_recall(cls, precision: float, recall: float) -> "SimilarityScore":
        denom = precision + recall
        f1 = 2.0 * precision * recall / denom if denom > 0 else 0.0
        return cls(precision=precision, recall=recall, f1=f1)


class HashEmbeddingBackend:
    """Deterministic stub: each token hashes to a fixed random unit vector.

    Distinct tokens land quasi-orthogonal at the default dimension, so equal
    tokens score 1.0 against each other and unrelated ones score near 0.
    Identical construction arguments give identical vectors across processes.
    """

    def __init__(self, dim: int = 256, seed: int = 0):
        if dim < 8:
            raise ValueError("dim must be at least 8")
        self.dim = dim
        self.seed = seed
        self.thread_safe = True
        self._cache: dict[str, np.ndarray] = {}

    def _vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is None:
            digest = hashlib.blake2b(
                f"{self.seed}:{token}".encode("utf-8"), digest_size=8
            ).digest()
            rng = np.random.default_rng(int.from_bytes(digest, "big"))
            vec = rng.standard_normal(self.dim)
            vec /= np.linalg.norm(vec)
            vec.setflags(write=False)
            self._cache[token] = vec
        return vec

    def embed_tokens(self, text: str) -> list[tuple[str, np.ndarray]]:
        return [(tok, self._vector(tok)) for tok in tokenize(text)]


class OrthogonalEmbeddingBackend:
    """Stub that maps every distinct token to its own basis axis.

    Cosine similarity is then exactly 1 for equal tokens and exactly 0
    otherwise, which makes hand-computed expectations trivial. Axis
    assignment is first-seen order per instance.
    """

    def __init__(self, dim: int = 4096):
        self.dim = dim
        self.thread_safe = True
        self._axes: dict[str, int] = {}

    def _vector(self, token: str) -> np.ndarray:
        axis = self._axes.get(token)
        if axis is None:
            axis = len(self._axes)
            if axis >= self.dim:
                raise ValueError(f"vocabulary exceeds {self.dim} tokens")
            self._axes[token] = axis
        vec = np.zeros(self.dim)
        vec[axis] = 1.0
        return vec

    def embed_tokens(self, text: str) -> list[tuple[str, np.ndarray]]:
        return [(tok, self._vector(tok)) for tok in tokenize(text)]


_backend_locks: "weakref.WeakKeyDictionary" = weakref.WeakKeyDictionary()


def _embed(backend: EmbeddingBackend, text: str) -> list[tuple[str, np.ndarray]]:
    if getattr(backend, "thread_safe", True):
        return backend.embed_tokens(text)
    lock = _backend_locks.setdefault(backend, threading.Lock())
    with lock:
        return backend.embed_tokens(text)


def _check_unit_norm(pairs: Sequence[tuple[str, np.ndarray]]) -> None:
    for token, vec in pairs:
        norm = float(np.linalg.norm(vec))
        if abs(norm - 1.0) > _UNIT_NORM_TOLERANCE:
            raise ValueError(f"backend returned non-unit vector for token {token!r}")


def _directed_mean(
    from_pairs: Sequence[tuple[str, np.ndarray]],
    to_pairs: Sequence[tuple[str, np.ndarray]],
    idf: dict[str, float] | None,
) -> float:
    from_matrix = np.stack([vec for _, vec in from_pairs])
    to_matrix = np.stack([vec for _, vec in to_pairs])
    best = (from_matrix @ to_matrix.T).max(axis=1)
    if idf is None:
        return float(best.mean())
    weights = np.array([idf.get(tok, 1.0) for tok, _ in from_pairs])
    if weights.sum() <= 0:
        return float(best.mean())
    return float(np.average(best, weights=weights))


def _score_pairs(
    cand_pairs: Sequence[tuple[str, np.ndarray]],
    ref_pairs: Sequence[tuple[str, np.ndarray]],
    idf: dict[str, float] | None,
) -> SimilarityScore:
    precision = _directed_mean(cand_pairs, ref_pairs, idf)
    recall = _directed_mean(ref_pairs, cand_pairs, idf)
    return SimilarityScore.from_precision_recall(precision, recall)


def token_similarity(
    candidate: str,
    reference: str,
    backend: EmbeddingBackend,
    idf: dict[str, float] | None = None,
) -> SimilarityScore:
    """Score ``candidate`` against ``reference`` by greedy token matching.

    Both texts must carry at least one token under the backend's tokenizer.
    With ``idf`` given, each side's token maxima are idf-weighted instead of
    averaged uniformly.
    """
    if not candidate.strip() or not reference.strip():
        raise ValueError("token_similarity requires non-empty texts")
    cand_pairs = _embed(backend, candidate)
    ref_pairs = _embed(backend, reference)
    if not cand_pairs or not ref_pairs:
        raise ValueError("text produced no tokens under the backend")
    _check_unit_norm(cand_pairs)
    _check_unit_norm(ref_pairs)
    return _score_pairs(cand_pairs, ref_pairs, idf)


def is_match(
    a: str,
    b: str,
    backend: EmbeddingBackend,
    tau: float = DEFAULT_TAU,
    idf: dict[str, float] | None = None,
) -> bool:
    """True when the two texts are similar enough to count as the same part.

    Emptiness is meaningful here: two absent parts match, an absent part
    never matches a present one. Texts with no measurable tokens (only
    punctuation, say) count as absent. Never raises beyond backend errors.
    """
    if not 0.0 < tau <= 1.0:
        raise ValueError("tau must be in (0, 1]")
    a_pairs = _embed(backend, a) if a.strip() else []
    b_pairs = _embed(backend, b) if b.strip() else []
    if not a_pairs or not b_pairs:
        return bool(a_pairs) == bool(b_pairs)
    return _score_pairs(a_pairs, b_pairs, idf).f1 >= tau


def nearest_reference(
    student: str,
    references: Sequence[ReferenceSolution],
    backend: EmbeddingBackend,
    idf: dict[str, float] | None = None,
) -> ReferenceSolution:
    """Pick the reference whose text scores highest F1 against the student.

    Ties go to the lowest list index, so the result is reproducible for any
    fixed reference order.
    """
    if not references:
        raise ValueError("nearest_reference requires at least one reference")
    best_idx = 0
    best_f1 = -math.inf
    for idx, ref in enumerate(references):
        f1 = token_similarity(ref.text, student, backend, idf).f1
        if f1 > best_f1:
            best_idx, best_f1 = idx, f1
    return references[best_idx]


# ---------------------------------------------------------------------------
# Optional idf weighting


def build_idf_table(
    texts: Iterable[str], backend: EmbeddingBackend
) -> dict[str, float]:
    """Smoothed inverse document frequencies over the backend's tokens."""
    docs = [{tok for tok, _ in _embed(backend, t)} for t in texts if t.strip()]
    if not docs:
        raise ValueError("idf table needs at least one non-empty text")
    table: dict[str, float] = {}
    n = len(docs)
    vocabulary = set().union(*docs)
    for token in vocabulary:
        df = sum(1 for doc in docs if token in doc)
        table[token] = math.log((1 + n) / (1 + df)) + 1.0
    return table


def save_idf_table(path: str | Path, table: dict[str, float]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for token in sorted(table):
            fh.write(f"{token}\t{table[token]!r}\n")


def load_idf_table(path: str | Path) -> dict[str, float]:
    table: dict[str, float] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            token, _, weight = line.rstrip("\n").partition("\t")
            table[token] = float(weight)
    return table
