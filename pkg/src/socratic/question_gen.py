"""Question generation over a pluggable seq2seq backend.

A backend turns a source text into a ranked beam list of candidate
questions. The pipeline points it at the cause segment of a reference
solution (the justification), so the generated question can probe the
reasoning without giving the answer away; references with no cause fall
back to the full text.

Real models sit behind the ``GeneratorBackend`` contract. Three stub
implementations ship for tests and offline demos: canned lookups, a
template writer, and a trainable memorizer.
"""

from __future__ import annotations

import hashlib
import json
import threading
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Protocol, Sequence

from . import corpus as corpus_mod
from .cause_effect import decompose
from .corpus import Exercise, QGExample, QuestionCandidate, ReferenceSolution

BeamTriple = tuple[str, float, float]


class GenerationError(Exception):
    """A backend produced no usable candidates."""


class CapabilityError(Exception):
    """The backend does not support the requested operation."""


@dataclass(frozen=True)
class TrainConfig:
    """Fine-tuning hyperparameters passed through to trainable backends."""

    epochs: int = 5
    learning_rate: float = 1e-5
    batch_size: int = 8
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    max_input_tokens: int = 512
    max_output_tokens: int = 150
    beams: int = 3

    def __post_init__(self) -> None:
        for name in (
            "epochs",
            "learning_rate",
            "batch_size",
            "adam_beta1",
            "adam_beta2",
            "max_input_tokens",
            "max_output_tokens",
            "beams",
        ):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


class GeneratorBackend(Protocol):
    """Contract for seq2seq generators.

    ``generate`` returns at most ``beams`` candidates ordered by
    ``model_score`` descending, each with a non-negative ``confidence_loss``;
    results are deterministic for a fixed backend state. ``fine_tune``
    returns the trained handle and records per-epoch validation losses on
    it; backends may omit it, in which case training raises CapabilityError.
    """

    def generate(self, source: str, beams: int, max_out: int) -> list[BeamTriple]: ...

    def fine_tune(
        self, train: Sequence, valid: Sequence, config: TrainConfig
    ) -> "GeneratorBackend": ...


def _pair(item: Any) -> tuple[str, str]:
    """Accept QGExample-shaped objects or plain (source, target) tuples."""
    if hasattr(item, "source") and hasattr(item, "target"):
        return str(item.source), str(item.target)
    source, target = item
    return str(source), str(target)


class CannedGeneratorBackend:
    """Stub returning pre-registered beam lists keyed by exact source text.

    Sources without an entry yield the default beams, or nothing when no
    default is set. Meant for tests that need full control of candidates.
    """

    def __init__(
        self,
        table: dict[str, list[BeamTriple]] | None = None,
        default: list[BeamTriple] | None = None,
    ):
        self.table = dict(table or {})
        self.default = list(default or [])

    def generate(self, source: str, beams: int, max_out: int) -> list[BeamTriple]:
        found = self.table.get(source, self.default)
        return list(found[:beams])


class TemplateGeneratorBackend:
    """Stub that writes questions from fixed templates over the source head.

    The first three beams cycle through the question families (open-ended,
    either/or, yes/no) so downstream type scoring sees variety; extra beams
    are numbered open-ended variants. No training support.
    """

    def __init__(self, head_words: int = 6):
        if head_words < 1:
            raise ValueError("head_words must be at least 1")
        self.head_words = head_words

    def _head(self, source: str) -> str:
        words = source.split()
        head = " ".join(words[: self.head_words])
        return head.rstrip(".,;:!?")

    def generate(self, source: str, beams: int, max_out: int) -> list[BeamTriple]:
        head = self._head(source)
        templates = [
            f"What makes {head} true?",
            f"Is {head} right or wrong?",
            f"Is it true that {head}?",
        ]
        out: list[BeamTriple] = []
        for rank in range(beams):
            if rank < len(templates):
                text = templates[rank]
            else:
                text = f"What else supports {head} (angle {rank - 2})?"
            out.append((text, -0.5 * (rank + 1), 0.5 * (rank + 1)))
        return out


class MemorizingGeneratorBackend:
    """Trainable stub that memorizes the training pairs verbatim.

    After ``fine_tune`` the top beam for a known source is its memorized
    target; filler beams carry deterministic placeholder texts scored below
    it. Unknown sources get a stable placeholder derived from the source
    hash, so the backend stays deterministic on unseen inputs.
    """

    def __init__(self):
        self.memory: dict[str, str] = {}
        self.validation_losses: list[float] = []
        self._lock = threading.RLock()

    def fine_tune(
        self, train: Sequence, valid: Sequence, config: TrainConfig
    ) -> "MemorizingGeneratorBackend":
        with self._lock:
            for item in train:
                source, target = _pair(item)
                self.memory[source] = target
            misses = 0
            valid_pairs = [_pair(item) for item in valid]
            for source, target in valid_pairs:
                if self.memory.get(source) != target:
                    misses += 1
            loss = misses / len(valid_pairs) if valid_pairs else 0.0
            self.validation_losses = [loss] * config.epochs
        return self

    def _placeholder(self, source: str, rank: int) -> str:
        digest = hashlib.blake2b(source.encode("utf-8"), digest_size=4).hexdigest()
        return f"placeholder {digest} variant {rank}"

    def to_json_file(self, path: str | Path) -> None:
        payload = {"memory": self.memory, "validation_losses": self.validation_losses}
        Path(path).write_text(
            json.dumps(payload, sort_keys=True, ensure_ascii=False) + "\n",
            encoding="utf-8",
        )

    @classmethod
    def from_json_file(cls, path: str | Path) -> "MemorizingGeneratorBackend":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        backend = cls()
        backend.memory = {str(k): str(v) for k, v in payload["memory"].items()}
        backend.validation_losses = [float(v) for v in payload.get("validation_losses", [])]
        return backend

    def generate(self, source: str, beams: int, max_out: int) -> list[BeamTriple]:
        with self._lock:
            known = self.memory.get(source)
        out: list[BeamTriple] = []
        for rank in range(beams):
            if rank == 0 and known is not None:
                out.append((known, -0.1, 0.1))
            else:
                out.append((self._placeholder(source, rank), -1.0 * (rank + 1), rank + 1.0))
        return out


class HTTPGeneratorBackend:
    """Adapter for an out-of-process model server.

    Speaks the documented wire protocol: POST {source, beams, max_out} to
    the endpoint, expect {candidates: [{text, score, loss}]}. Training is
    not exposed over the wire.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0):
        self.endpoint = endpoint
        self.timeout = timeout

    def generate(self, source: str, beams: int, max_out: int) -> list[BeamTriple]:
        import httpx

        response = httpx.post(
            self.endpoint,
            json={"source": source, "beams": beams, "max_out": max_out},
            timeout=self.timeout,
        )
        response.raise_for_status()
        payload = response.json()
        return [
            (str(c["text"]), float(c["score"]), float(c["loss"]))
            for c in payload["candidates"]
        ]


# ---------------------------------------------------------------------------
# Pipeline operations


def question_source(ref: ReferenceSolution) -> str:
    """The text candidates are generated from: the cause, else the full text."""
    decomposition = ref.decomposition or decompose(ref.text)
    return decomposition.cause if decomposition.cause else ref.text


def normalize_question(text: str) -> str:
    """Trim and make the question end with a single question mark."""
    text = text.strip()
    while text.endswith("??"):
        text = text[:-1]
    if not text.endswith("?"):
        text = text + "?"
    return text


def generate_candidates(
    ref: ReferenceSolution,
    backend: GeneratorBackend,
    k: int = 3,
    max_out: int = 150,
) -> list[QuestionCandidate]:
    """Produce up to ``k`` question candidates for one reference solution."""
    if k < 1:
        raise ValueError("k must be at least 1")
    source = question_source(ref)
    beams = backend.generate(source, beams=k, max_out=max_out)
    if not beams:
        raise GenerationError(f"backend produced no candidates for {ref.id!r}")
    candidates: list[QuestionCandidate] = []
    previous_score = None
    for text, model_score, confidence_loss in beams[:k]:
        if confidence_loss < 0:
            raise GenerationError(f"negative confidence_loss from backend for {ref.id!r}")
        if previous_score is not None and model_score > previous_score:
            raise GenerationError(f"backend beams out of order for {ref.id!r}")
        previous_score = model_score
        candidates.append(
            QuestionCandidate(
                question=normalize_question(text),
                model_score=float(model_score),
                confidence_loss=float(confidence_loss),
            )
        )
    return candidates


def fine_tune_qg(
    partition: corpus_mod.SplitPartition,
    backend: GeneratorBackend,
    config: TrainConfig | None = None,
) -> GeneratorBackend:
    """Fine-tune a trainable backend on a train/valid split."""
    config = config or TrainConfig()
    if not hasattr(backend, "fine_tune"):
        raise CapabilityError(f"{type(backend).__name__} does not support training")
    return backend.fine_tune(partition.train, partition.valid, config)


@dataclass
class BankReport:
    """Outcome of a question-bank build: work done plus recorded skips."""

    banked_references: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)


def build_question_bank(
    exercises: Sequence[Exercise],
    backend: GeneratorBackend,
    reranker_model,
    scorers,
    k: int = 3,
) -> BankReport:
    """Precompute scored question candidates for every reference in place.

    Each reference gets its decomposition cached and up to ``k`` candidates
    with features and predicted usefulness, so serving needs no generator.
    References that fail generation are skipped and listed in the report.
    """
    from .reranker import extract_features, predict_usefulness

    report = BankReport()
    for exercise in exercises:
        for ref in exercise.references:
            try:
                if ref.decomposition is None:
                    ref.decomposition = decompose(ref.text)
                candidates = generate_candidates(ref, backend, k=k)
                for cand in candidates:
                    cand.features = extract_features(cand.question, cand, scorers)
                    cand.predicted_usefulness = predict_usefulness(
                        reranker_model, cand.features
                    )
                ref.question_bank = candidates
                report.banked_references += 1
            except Exception as exc:
                report.skipped.append((ref.id, str(exc)))
    return report


# ---------------------------------------------------------------------------
# Bank file format: one flat record per (reference_id, rank)


def save_question_bank(path: str | Path, exercises: Sequence[Exercise]) -> None:
    records = []
    for exercise in exercises:
        for ref in exercise.references:
            for rank, cand in enumerate(ref.question_bank):
                rec = {"reference_id": ref.id, "rank": rank}
                rec.update(cand.to_dict())
                records.append(rec)
    corpus_mod.write_jsonl(path, records)


def load_question_bank(path: str | Path, exercises: Sequence[Exercise]) -> int:
    """Attach stored candidates to their references; returns rows applied."""
    by_ref: dict[str, ReferenceSolution] = {
        ref.id: ref for ex in exercises for ref in ex.references
    }
    rows: dict[str, list[tuple[int, QuestionCandidate]]] = {}
    applied = 0
    for lineno, obj in corpus_mod.iter_jsonl(path):
        ref_id = str(obj["reference_id"])
        if ref_id not in by_ref:
            continue
        rows.setdefault(ref_id, []).append(
            (int(obj["rank"]), QuestionCandidate.from_dict(obj))
        )
        applied += 1
    for ref_id, ranked in rows.items():
        ranked.sort(key=lambda pair: pair[0])
        by_ref[ref_id].question_bank = [cand for _, cand in ranked]
    return applied
