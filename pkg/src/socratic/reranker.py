"""Usefulness re-ranking of generated questions.

Every candidate question is described by a fixed-width feature vector: a
sentence embedding plus four scalars (well-formedness, fluency as negative
perplexity, model confidence as negative generation loss, and a
question-type score that prefers open-ended questions). A linear model
trained on 1-5 usefulness ratings scores the candidates and the best one
per reference is kept.

The least-squares fit uses the minimum-norm solution, so it stays
well-defined when features outnumber rows. ``UsefulnessRegressor`` and
``MeanBaselineRegressor`` wrap the same math in the scikit-learn estimator
idiom for array-shaped workflows.
"""

from __future__ import annotations

import hashlib
import json
import math
from collections import Counter
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Protocol, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin

from .corpus import QuestionCandidate

SCALAR_FEATURES = 4
DEFAULT_EMBEDDING_DIM = 768

_WH_WORDS = frozenset(
    ["what", "why", "when", "where", "which", "who", "whom", "whose", "how"]
)


def question_type_score(question: str) -> float:
    """Score the question's form: open-ended 1.0, either/or 0.8, yes/no 0.5."""
    if not question.strip():
        raise ValueError("question must be non-empty")
    first = question.split()[0].strip("\"'").rstrip(".,;:!?").lower()
    if first in _WH_WORDS:
        return 1.0
    if " or " in question.lower():
        return 0.8
    return 0.5


@dataclass(frozen=True)
class FeatureVector:
    """One candidate's feature row.

    Flattened layout is the embedding first, then well_formedness, fluency,
    model_confidence, question_type_score; ``to_list``/``from_list`` and the
    array form all use that order.
    """

    sentence_embedding: tuple[float, ...]
    well_formedness: float
    fluency: float
    model_confidence: float
    question_type_score: float

    def __post_init__(self) -> None:
        values = self.to_list()
        if not all(math.isfinite(v) for v in values):
            raise ValueError("feature values must be finite")
        if not 0.0 <= self.well_formedness <= 1.0:
            raise ValueError("well_formedness must be within [0, 1]")
        if self.fluency > 0 or self.model_confidence > 0:
            raise ValueError("fluency and model_confidence are negated costs, <= 0")
        if self.question_type_score not in (0.5, 0.8, 1.0):
            raise ValueError("question_type_score must be one of 0.5, 0.8, 1.0")

    @property
    def dimension(self) -> int:
        return len(self.sentence_embedding) + SCALAR_FEATURES

    def to_list(self) -> list[float]:
        return [
            *self.sentence_embedding,
            self.well_formedness,
            self.fluency,
            self.model_confidence,
            self.question_type_score,
        ]

    def as_array(self) -> np.ndarray:
        return np.array(self.to_list(), dtype=float)

    @classmethod
    def from_list(cls, values: Sequence[float]) -> "FeatureVector":
        if len(values) <= SCALAR_FEATURES:
            raise ValueError("feature list too short")
        return cls(
            sentence_embedding=tuple(float(v) for v in values[:-SCALAR_FEATURES]),
            well_formedness=float(values[-4]),
            fluency=float(values[-3]),
            model_confidence=float(values[-2]),
            question_type_score=float(values[-1]),
        )


class AuxiliaryScorers(Protocol):
    """Feature helpers: sentence embedding, well-formedness, perplexity."""

    def sentence_embed(self, text: str) -> np.ndarray: ...

    def well_formed_prob(self, text: str) -> float: ...

    def perplexity(self, text: str) -> float: ...


class CharNgramLM:
    """Character n-gram language model with add-k smoothing.

    Small enough to train on a question dataset in milliseconds, yet gives
    texts a graded, deterministic perplexity: strings resembling the
    training data score lower than noise.
    """

    BOS = "\x02"
    EOS = "\x03"
    UNK = "\x00"

    def __init__(self, n: int = 3, add_k: float = 0.5):
        if n < 2:
            raise ValueError("n must be at least 2")
        if add_k <= 0:
            raise ValueError("add_k must be positive")
        self.n = n
        self.add_k = add_k
        self.ngrams: Counter = Counter()
        self.contexts: Counter = Counter()
        self.vocabulary: set[str] = {self.UNK, self.EOS}

    def fit(self, texts: Iterable[str]) -> "CharNgramLM":
        for text in texts:
            chars = list(self.BOS * (self.n - 1)) + list(text) + [self.EOS]
            self.vocabulary.update(text)
            for i in range(self.n - 1, len(chars)):
                context = tuple(chars[i - self.n + 1 : i])
                self.ngrams[context + (chars[i],)] += 1
                self.contexts[context] += 1
        return self

    def _known(self, ch: str) -> str:
        return ch if ch in self.vocabulary else self.UNK

    def log_prob(self, text: str) -> float:
        if not self.contexts:
            raise ValueError("model is not fitted")
        chars = list(self.BOS * (self.n - 1)) + [self._known(c) for c in text]
        chars.append(self.EOS)
        v = len(self.vocabulary)
        total = 0.0
        for i in range(self.n - 1, len(chars)):
            context = tuple(chars[i - self.n + 1 : i])
            num = self.ngrams[context + (chars[i],)] + self.add_k
            den = self.contexts[context] + self.add_k * v
            total += math.log(num / den)
        return total

    def perplexity(self, text: str) -> float:
        events = len(text) + 1
        return math.exp(-self.log_prob(text) / events)


def _hash_vector(text: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.blake2b(f"{seed}:{text}".encode("utf-8"), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "big"))
    vec = rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


_OPENERS = frozenset(
    list(_WH_WORDS)
    + ["is", "are", "do", "does", "did", "can", "could", "would", "should", "will", "was", "were"]
)


class HeuristicScorers:
    """Deterministic scorer stub good enough for offline pipelines.

    Embeddings are seeded hash vectors, well-formedness is a transparent
    surface heuristic, and perplexity comes from a character n-gram model
    fitted on ``lm_texts`` (a fixed constant when no texts are given).
    """

    def __init__(
        self,
        lm_texts: Sequence[str] | None = None,
        dim: int = DEFAULT_EMBEDDING_DIM,
        seed: int = 0,
    ):
        self.dim = dim
        self.seed = seed
        self._lm = CharNgramLM().fit(lm_texts) if lm_texts else None

    def sentence_embed(self, text: str) -> np.ndarray:
        return _hash_vector(text, self.dim, self.seed)

    def well_formed_prob(self, text: str) -> float:
        stripped = text.strip()
        if not stripped:
            return 0.0
        score = 0.5
        if stripped.endswith("?"):
            score += 0.25
        first = stripped.split()[0].strip("\"'").rstrip(".,;:!?").lower()
        if first in _OPENERS:
            score += 0.25
        return score

    def perplexity(self, text: str) -> float:
        if self._lm is None:
            return 10.0
        return self._lm.perplexity(text)


class FixedScorers:
    """Constant-valued scorers for tests: hash embedding, fixed scalars."""

    def __init__(
        self,
        well_formed: float = 0.5,
        perplexity_value: float = 10.0,
        dim: int = DEFAULT_EMBEDDING_DIM,
        seed: int = 0,
    ):
        self.well_formed = well_formed
        self.perplexity_value = perplexity_value
        self.dim = dim
        self.seed = seed

    def sentence_embed(self, text: str) -> np.ndarray:
        return _hash_vector(text, self.dim, self.seed)

    def well_formed_prob(self, text: str) -> float:
        return self.well_formed

    def perplexity(self, text: str) -> float:
        return self.perplexity_value


def extract_features(
    question: str, candidate: QuestionCandidate, scorers: AuxiliaryScorers
) -> FeatureVector:
    """Build the feature row for one candidate question."""
    embedding = np.asarray(scorers.sentence_embed(question), dtype=float)
    return FeatureVector(
        sentence_embedding=tuple(float(v) for v in embedding),
        well_formedness=float(scorers.well_formed_prob(question)),
        fluency=-float(scorers.perplexity(question)),
        model_confidence=-float(candidate.confidence_loss),
        question_type_score=question_type_score(question),
    )


# ---------------------------------------------------------------------------
# Linear model


@dataclass
class RerankerModel:
    """Flat linear model: intercept-first weights over the feature layout."""

    feature_dimension: int
    weights: np.ndarray
    training_mean: float

    def __post_init__(self) -> None:
        self.weights = np.asarray(self.weights, dtype=float)
        if self.weights.shape != (self.feature_dimension + 1,):
            raise ValueError("weights must have feature_dimension + 1 entries")
        if not np.all(np.isfinite(self.weights)):
            raise ValueError("weights must be finite")


def _rows_to_arrays(
    rows: Sequence[tuple[FeatureVector, float]]
) -> tuple[np.ndarray, np.ndarray]:
    if len(rows) < 2:
        raise ValueError("need at least 2 rows to fit")
    dim = rows[0][0].dimension
    for features, _ in rows:
        if features.dimension != dim:
            raise ValueError("inconsistent feature dimensions")
    x = np.stack([features.as_array() for features, _ in rows])
    y = np.array([float(rating) for _, rating in rows])
    return x, y


def _solve_least_squares(x: np.ndarray, y: np.ndarray, ridge: float) -> np.ndarray:
    design = np.hstack([np.ones((x.shape[0], 1)), x])
    if ridge > 0:
        gram = design.T @ design
        penalty = ridge * np.eye(gram.shape[0])
        penalty[0, 0] = 0.0  # intercept stays unpenalized
        return np.linalg.solve(gram + penalty, design.T @ y)
    solution, *_ = np.linalg.lstsq(design, y, rcond=None)
    return solution


def fit_ols(
    rows: Sequence[tuple[FeatureVector, float]], ridge: float = 0.0
) -> RerankerModel:
    """Least-squares fit of ratings on features.

    With more features than rows the solution is the minimum-norm one, so
    the fit is deterministic in every regime. ``ridge`` adds an optional
    L2 penalty on the non-intercept weights.
    """
    x, y = _rows_to_arrays(rows)
    weights = _solve_least_squares(x, y, ridge)
    return RerankerModel(
        feature_dimension=x.shape[1],
        weights=weights,
        training_mean=float(y.mean()),
    )


def fit_mean_baseline(rows: Sequence[tuple[FeatureVector, float]]) -> RerankerModel:
    """Baseline that predicts the training-mean rating for every input."""
    x, y = _rows_to_arrays(rows)
    weights = np.zeros(x.shape[1] + 1)
    weights[0] = y.mean()
    return RerankerModel(
        feature_dimension=x.shape[1],
        weights=weights,
        training_mean=float(y.mean()),
    )


def predict_usefulness(
    model: RerankerModel, features: FeatureVector | np.ndarray | Sequence[float]
) -> float:
    """Raw regression output for one feature row; deliberately unclamped."""
    if isinstance(features, FeatureVector):
        row = features.as_array()
    else:
        row = np.asarray(features, dtype=float)
    if row.shape != (model.feature_dimension,):
        raise ValueError(
            f"expected {model.feature_dimension} features, got {row.shape}"
        )
    return float(model.weights[0] + row @ model.weights[1:])


def rerank(
    candidates: Sequence[QuestionCandidate], model: RerankerModel
) -> QuestionCandidate:
    """Pick the candidate with the highest predicted usefulness.

    Predictions are recomputed from stored features and written back onto
    the candidates. Ties keep the earliest candidate, i.e. the highest
    generator beam.
    """
    if not candidates:
        raise ValueError("rerank requires at least one candidate")
    best = None
    best_score = -math.inf
    for cand in candidates:
        if cand.features is None:
            raise ValueError(f"candidate {cand.question!r} has no features")
        prediction = predict_usefulness(model, cand.features)
        cand.predicted_usefulness = prediction
        if prediction > best_score:
            best, best_score = cand, prediction
    assert best is not None
    return best


# ---------------------------------------------------------------------------
# Persistence: a single JSON object, no binary payloads


def save_model(path: str | Path, model: RerankerModel) -> None:
    payload = {
        "feature_dimension": model.feature_dimension,
        "weights": [float(w) for w in model.weights],
        "training_mean": model.training_mean,
    }
    Path(path).write_text(json.dumps(payload) + "\n", encoding="utf-8")


def load_model(path: str | Path) -> RerankerModel:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    return RerankerModel(
        feature_dimension=int(payload["feature_dimension"]),
        weights=np.array(payload["weights"], dtype=float),
        training_mean=float(payload["training_mean"]),
    )


# ---------------------------------------------------------------------------
# scikit-learn estimator faces


class UsefulnessRegressor(BaseEstimator, RegressorMixin):
    """Array-API wrapper around the minimum-norm least-squares fit."""

    def __init__(self, ridge: float = 0.0):
        self.ridge = ridge

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be 2-d with one row per rating")
        if X.shape[0] < 2:
            raise ValueError("need at least 2 rows to fit")
        weights = _solve_least_squares(X, y, self.ridge)
        self.intercept_ = float(weights[0])
        self.coef_ = weights[1:]
        self.training_mean_ = float(y.mean())
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        return self.intercept_ + X @ self.coef_

    def to_model(self) -> RerankerModel:
        weights = np.concatenate([[self.intercept_], self.coef_])
        return RerankerModel(
            feature_dimension=self.n_features_in_,
            weights=weights,
            training_mean=self.training_mean_,
        )


class MeanBaselineRegressor(BaseEstimator, RegressorMixin):
    """Predicts the training-mean rating regardless of input."""

    def fit(self, X, y):
        X = np.asarray(X, dtype=float)
        y = np.asarray(y, dtype=float)
        if X.ndim != 2 or X.shape[0] != y.shape[0]:
            raise ValueError("X must be 2-d with one row per rating")
        if X.shape[0] < 1:
            raise ValueError("need at least 1 row to fit")
        self.training_mean_ = float(y.mean())
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        return np.full(X.shape[0], self.training_mean_)

    def to_model(self) -> RerankerModel:
        weights = np.zeros(self.n_features_in_ + 1)
        weights[0] = self.training_mean_
        return RerankerModel(
            feature_dimension=self.n_features_in_,
            weights=weights,
            training_mean=self.training_mean_,
        )
