"""Data model and file formats for exercises, questions, ratings and logs.

All corpora are line-delimited JSON (one UTF-8 encoded object per line):

* ``exercises.jsonl``    -- one exercise with its reference solutions per line
* ``qg_dataset.jsonl``   -- question-writing examples (source text -> question)
* ``annotations.jsonl``  -- 1-5 usefulness ratings for generated questions
* ``interactions.jsonl`` -- one record per checker-evaluated student attempt

Ingest trims outer whitespace; everything else is preserved byte-exact.
"""

from __future__ import annotations

import json
import random
import threading
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Iterator, Sequence

from .cause_effect import Connective, Decomposition

FEEDBACK_MODELS = ("minimal", "non_question", "question_based")
QUESTION_TYPES = ("binary", "binary_alternatives", "open_ended")
SPLITS = ("train", "valid", "test")


class CorpusError(Exception):
    """Base class for corpus loading and validation failures."""


class ParseError(CorpusError):
    """A line could not be parsed; carries the 1-based line number."""

    def __init__(self, path: str | Path, lineno: int, message: str):
        super().__init__(f"{path}:{lineno}: {message}")
        self.lineno = lineno


class ValidationError(CorpusError):
    """A record parsed but violated an invariant."""


@dataclass
class QuestionCandidate:
    """A generated question plus the scores attached to it along the pipeline.

    ``features`` and ``predicted_usefulness`` are filled in by the re-ranking
    stage; a freshly generated candidate carries only the generator scores.
    """

    question: str
    model_score: float
    confidence_loss: float
    features: Any | None = None  # reranker.FeatureVector once populated
    predicted_usefulness: float | None = None

    def __post_init__(self) -> None:
        if not self.question.strip():
            raise ValidationError("candidate question must be non-empty")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "question": self.question,
            "model_score": self.model_score,
            "confidence_loss": self.confidence_loss,
        }
        if self.features is not None:
            d["features"] = self.features.to_list()
        if self.predicted_usefulness is not None:
            d["predicted_usefulness"] = self.predicted_usefulness
        return d

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "QuestionCandidate":
        features = None
        if obj.get("features") is not None:
            from .reranker import FeatureVector

            features = FeatureVector.from_list(obj["features"])
        return cls(
            question=obj["question"],
            model_score=float(obj["model_score"]),
            confidence_loss=float(obj["confidence_loss"]),
            features=features,
            predicted_usefulness=(
                float(obj["predicted_usefulness"])
                if obj.get("predicted_usefulness") is not None
                else None
            ),
        )


@dataclass
class ReferenceSolution:
    """One gold solution for an exercise.

    ``decomposition`` is a cached split of ``text`` into cause and effect;
    ``question_bank`` holds precomputed candidates so the live service never
    needs a generator.
    """

    id: str
    text: str
    decomposition: Decomposition | None = None
    question_bank: list[QuestionCandidate] = field(default_factory=list)

    def validate(self) -> None:
        if not self.text.strip():
            raise ValidationError(f"reference {self.id!r}: text must be non-empty")
        if self.decomposition is not None:
            d = self.decomposition
            if d.effect not in self.text:
                raise ValidationError(
                    f"reference {self.id!r}: cached effect is not a substring of text"
                )
            if d.cause and d.cause not in self.text:
                raise ValidationError(
                    f"reference {self.id!r}: cached cause is not a substring of text"
                )

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {"id": self.id, "text": self.text}
        if self.decomposition is not None:
            d["decomposition"] = _decomposition_to_dict(self.decomposition)
        if self.question_bank:
            d["question_bank"] = [c.to_dict() for c in self.question_bank]
        return d

    @classmethod
    def from_dict(cls, obj: dict[str, Any], fallback_id: str) -> "ReferenceSolution":
        ref = cls(
            id=str(obj.get("id") or fallback_id),
            text=str(obj["text"]).strip(),
            decomposition=(
                _decomposition_from_dict(obj["decomposition"])
                if obj.get("decomposition")
                else None
            ),
            question_bank=[
                QuestionCandidate.from_dict(c) for c in obj.get("question_bank", [])
            ],
        )
        ref.validate()
        return ref


@dataclass
class Exercise:
    """A problem text with one or more reference solutions."""

    id: str
    problem: str
    references: list[ReferenceSolution]

    def validate(self) -> None:
        if not self.problem.strip():
            raise ValidationError(f"exercise {self.id!r}: problem must be non-empty")
        if not self.references:
            raise ValidationError(f"exercise {self.id!r}: needs at least one reference")
        for ref in self.references:
            ref.validate()

    def to_dict(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "problem": self.problem,
            "references": [r.to_dict() for r in self.references],
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "Exercise":
        ex_id = str(obj["id"])
        ex = cls(
            id=ex_id,
            problem=str(obj["problem"]).strip(),
            references=[
                ReferenceSolution.from_dict(r, fallback_id=f"{ex_id}:r{i}")
                for i, r in enumerate(obj.get("references", []))
            ],
        )
        ex.validate()
        return ex


@dataclass
class QGExample:
    """One question-writing example: a source text and a target question."""

    id: str
    source: str
    target: str
    question_type: str
    split: str | None = None

    def validate(self) -> None:
        if not self.source.strip():
            raise ValidationError(f"example {self.id!r}: source must be non-empty")
        if not self.target.strip().endswith("?"):
            raise ValidationError(f"example {self.id!r}: target must end with '?'")
        if self.question_type not in QUESTION_TYPES:
            raise ValidationError(
                f"example {self.id!r}: question_type must be one of {QUESTION_TYPES}"
            )
        if self.split is not None and self.split not in SPLITS:
            raise ValidationError(f"example {self.id!r}: bad split {self.split!r}")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "id": self.id,
            "source": self.source,
            "target": self.target,
            "question_type": self.question_type,
        }
        if self.split is not None:
            d["split"] = self.split
        return d

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "QGExample":
        ex = cls(
            id=str(obj["id"]),
            source=str(obj["source"]).strip(),
            target=str(obj["target"]).strip(),
            question_type=str(obj["question_type"]),
            split=obj.get("split"),
        )
        ex.validate()
        return ex


@dataclass
class UsefulnessAnnotation:
    """A 1-5 usefulness rating for one generated question.

    ``confidence_loss`` preserves the generator loss of the rated question so
    the model-confidence feature can be rebuilt from the file alone; it
    defaults to 0.0 for ratings collected without generator scores.
    """

    example_id: str
    reference_text: str
    question: str
    rating: int
    annotator_id: str | None = None
    confidence_loss: float = 0.0

    def validate(self) -> None:
        if not 1 <= self.rating <= 5:
            raise ValidationError(
                f"annotation {self.example_id!r}: rating must be in [1, 5]"
            )

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "example_id": self.example_id,
            "reference_text": self.reference_text,
            "question": self.question,
            "rating": self.rating,
        }
        if self.annotator_id is not None:
            d["annotator_id"] = self.annotator_id
        if self.confidence_loss:
            d["confidence_loss"] = self.confidence_loss
        return d

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "UsefulnessAnnotation":
        ann = cls(
            example_id=str(obj["example_id"]),
            reference_text=str(obj["reference_text"]),
            question=str(obj["question"]),
            rating=int(obj["rating"]),
            annotator_id=obj.get("annotator_id"),
            confidence_loss=float(obj.get("confidence_loss", 0.0)),
        )
        ann.validate()
        return ann


@dataclass
class InteractionRecord:
    """One checker-evaluated student attempt, as persisted for analytics."""

    session_id: str
    exercise_id: str
    student_answer: str
    checker_verdict: bool
    attempt_index: int
    feedback_model: str
    feedback_shown: str | None = None
    timestamp: datetime = field(
        default_factory=lambda: datetime.now(timezone.utc)
    )

    def validate(self) -> None:
        if self.attempt_index < 1:
            raise ValidationError("attempt_index must be >= 1")
        if self.feedback_model not in FEEDBACK_MODELS:
            raise ValidationError(
                f"feedback_model must be one of {FEEDBACK_MODELS}, "
                f"got {self.feedback_model!r}"
            )

    def to_dict(self) -> dict[str, Any]:
        return {
            "session_id": self.session_id,
            "exercise_id": self.exercise_id,
            "student_answer": self.student_answer,
            "feedback_shown": self.feedback_shown,
            "checker_verdict": self.checker_verdict,
            "attempt_index": self.attempt_index,
            "feedback_model": self.feedback_model,
            "timestamp": self.timestamp.isoformat(),
        }

    @classmethod
    def from_dict(cls, obj: dict[str, Any]) -> "InteractionRecord":
        rec = cls(
            session_id=str(obj["session_id"]),
            exercise_id=str(obj["exercise_id"]),
            student_answer=str(obj["student_answer"]),
            feedback_shown=obj.get("feedback_shown"),
            checker_verdict=bool(obj["checker_verdict"]),
            attempt_index=int(obj["attempt_index"]),
            feedback_model=str(obj["feedback_model"]),
            timestamp=datetime.fromisoformat(obj["timestamp"]),
        )
        rec.validate()
        return rec


def _decomposition_to_dict(d: Decomposition) -> dict[str, Any]:
    return {
        "cause": d.cause,
        "effect": d.effect,
        "connective": d.connective.value,
        "cause_span": list(d.cause_span) if d.cause_span else None,
        "effect_span": list(d.effect_span),
    }


def _decomposition_from_dict(obj: dict[str, Any]) -> Decomposition:
    return Decomposition(
        cause=str(obj["cause"]),
        effect=str(obj["effect"]),
        connective=Connective(obj["connective"]),
        cause_span=tuple(obj["cause_span"]) if obj.get("cause_span") else None,
        effect_span=tuple(obj["effect_span"]),
    )


# ---------------------------------------------------------------------------
# JSONL plumbing


def iter_jsonl(path: str | Path) -> Iterator[tuple[int, dict[str, Any]]]:
    """Yield ``(lineno, record)`` pairs, raising ParseError with line numbers."""
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, lineno, f"invalid JSON ({exc.msg})") from exc
            if not isinstance(obj, dict):
                raise ParseError(path, lineno, "record must be a JSON object")
            yield lineno, obj


def write_jsonl(path: str | Path, records: Iterable[dict[str, Any]]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, ensure_ascii=False) + "\n")


def _load_records(path, from_dict, seen_key=None):
    out = []
    seen: set[str] = set()
    for lineno, obj in iter_jsonl(path):
        try:
            rec = from_dict(obj)
        except (KeyError, TypeError) as exc:
            raise ParseError(path, lineno, f"missing or malformed field: {exc}") from exc
        except ValidationError as exc:
            raise ParseError(path, lineno, str(exc)) from exc
        if seen_key is not None:
            key = seen_key(rec)
            if key in seen:
                raise ParseError(path, lineno, f"duplicate id {key!r}")
            seen.add(key)
        out.append(rec)
    return out


def load_exercises(path: str | Path) -> list[Exercise]:
    """Load exercises, enforcing unique exercise and reference ids."""
    exercises = _load_records(path, Exercise.from_dict, seen_key=lambda e: e.id)
    ref_ids: set[str] = set()
    for ex in exercises:
        for ref in ex.references:
            if ref.id in ref_ids:
                raise ValidationError(f"duplicate reference id {ref.id!r}")
            ref_ids.add(ref.id)
    return exercises


def save_exercises(path: str | Path, exercises: Sequence[Exercise]) -> None:
    write_jsonl(path, (e.to_dict() for e in exercises))


def load_qg_examples(path: str | Path) -> list[QGExample]:
    return _load_records(path, QGExample.from_dict, seen_key=lambda e: e.id)


def save_qg_examples(path: str | Path, examples: Sequence[QGExample]) -> None:
    write_jsonl(path, (e.to_dict() for e in examples))


def load_annotations(path: str | Path) -> list[UsefulnessAnnotation]:
    return _load_records(path, UsefulnessAnnotation.from_dict)


def save_annotations(path: str | Path, rows: Sequence[UsefulnessAnnotation]) -> None:
    write_jsonl(path, (r.to_dict() for r in rows))


def load_interactions(path: str | Path) -> list[InteractionRecord]:
    return _load_records(path, InteractionRecord.from_dict)


# ---------------------------------------------------------------------------
# Dataset splitting


@dataclass
class SplitPartition:
    """A disjoint, exhaustive train/valid/test partition."""

    train: list[QGExample]
    valid: list[QGExample]
    test: list[QGExample]

    def __iter__(self):
        return iter((self.train, self.valid, self.test))


def split_sizes(n: int, ratio: tuple[int, int, int]) -> tuple[int, int, int]:
    """Partition sizes for ``n`` items under a train:valid:test ratio.

    Valid and test get ``floor(n * share)`` but never less than one item;
    the rounding residue goes to train. Requires ``n >= 3`` so every part
    is non-empty.
    """
    if n < 3:
        raise ValidationError("need at least 3 examples to split")
    total = sum(ratio)
    n_valid = max(1, n * ratio[1] // total)
    n_test = max(1, n * ratio[2] // total)
    n_train = n - n_valid - n_test
    if n_train < 1:
        raise ValidationError(f"ratio {ratio} leaves no training items for n={n}")
    return n_train, n_valid, n_test


def shuffled_split(
    items: Sequence, seed: int, ratio: tuple[int, int, int]
) -> tuple[list, list, list]:
    """Deterministically shuffle ``items`` and cut into three parts."""
    n_train, n_valid, n_test = split_sizes(len(items), ratio)
    order = list(range(len(items)))
    random.Random(seed).shuffle(order)
    picked = [items[i] for i in order]
    return (
        picked[:n_train],
        picked[n_train : n_train + n_valid],
        picked[n_train + n_valid :],
    )


def split_qg_dataset(
    examples: Sequence[QGExample],
    seed: int,
    ratio: tuple[int, int, int] = (220, 40, 40),
) -> SplitPartition:
    """Split question-writing examples into labeled train/valid/test parts.

    Deterministic for a fixed seed; no example is lost or duplicated.
    """
    if not examples:
        raise ValidationError("cannot split an empty example list")
    train, valid, test = shuffled_split(list(examples), seed, ratio)
    return SplitPartition(
        train=[replace(e, split="train") for e in train],
        valid=[replace(e, split="valid") for e in valid],
        test=[replace(e, split="test") for e in test],
    )


# ---------------------------------------------------------------------------
# Interaction store


class StorageError(Exception):
    """Raised when the interaction store cannot append a record."""


class InteractionStore:
    """Append-only JSONL store of interaction records.

    Appends are atomic per record (single line, written under a lock) and
    attempt indices must strictly increase per (session, exercise). Readers
    always see a prefix-consistent view of the file.
    """

    def __init__(self, path: str | Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._last_attempt: dict[tuple[str, str], int] = {}
        if self.path.exists():
            for rec in load_interactions(self.path):
                key = (rec.session_id, rec.exercise_id)
                self._last_attempt[key] = max(
                    self._last_attempt.get(key, 0), rec.attempt_index
                )

    def append(self, rec: InteractionRecord) -> None:
        rec.validate()
        key = (rec.session_id, rec.exercise_id)
        with self._lock:
            last = self._last_attempt.get(key, 0)
            if rec.attempt_index <= last:
                raise ValidationError(
                    f"attempt_index {rec.attempt_index} does not increase "
                    f"(last was {last}) for session {rec.session_id!r}"
                )
            line = json.dumps(rec.to_dict(), ensure_ascii=False) + "\n"
            try:
                with open(self.path, "a", encoding="utf-8") as fh:
                    fh.write(line)
                    fh.flush()
            except OSError as exc:
                raise StorageError(f"cannot append to {self.path}: {exc}") from exc
            self._last_attempt[key] = rec.attempt_index

    def read_all(self) -> list[InteractionRecord]:
        if not self.path.exists():
            return []
        return load_interactions(self.path)

    def __len__(self) -> int:
        return len(self.read_all())
