"""Hint-assisted question answering built on the feedback generator.

The chain uses three generator handles. A plain QA model drafts an answer;
its draft, compared against the gold answer by the feedback engine, yields
a synthetic hint, and a hint model learns to write such hints from the
question plus draft alone. A final hint-aware QA model then answers from
the question plus the predicted hint. At inference its beam candidates are
scored by how strongly each candidate entails the hint, and the best
entailed candidate wins.

Segments inside one source string are joined by a fixed separator token so
any seq2seq backend can split them; it never appears in the corpus texts.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Protocol, Sequence

from .corpus import Exercise, ReferenceSolution, ValidationError, shuffled_split, write_jsonl, iter_jsonl
from .feedback import FeedbackEngine, generate_feedback
from .question_gen import GeneratorBackend, TrainConfig, CapabilityError

SEPARATOR = "<sep>"
DEFAULT_RATIO = (400, 50, 100)


@dataclass(frozen=True)
class QAPair:
    """One question with its gold answer."""

    id: str
    question: str
    answer: str

    def __post_init__(self) -> None:
        if not self.question.strip() or not self.answer.strip():
            raise ValidationError(f"qa pair {self.id!r}: question and answer required")
        for text in (self.question, self.answer):
            if SEPARATOR in text:
                raise ValidationError(
                    f"qa pair {self.id!r}: texts must not contain {SEPARATOR!r}"
                )

    def to_dict(self) -> dict:
        return {"id": self.id, "question": self.question, "answer": self.answer}

    @classmethod
    def from_dict(cls, obj: dict) -> "QAPair":
        return cls(
            id=str(obj["id"]),
            question=str(obj["question"]).strip(),
            answer=str(obj["answer"]).strip(),
        )


@dataclass(frozen=True)
class HintTriple:
    """A question, the draft answer a QA model gave, and the hint it earned."""

    id: str
    question: str
    machine_answer: str
    hint: str

    def __post_init__(self) -> None:
        if not self.hint.strip():
            raise ValidationError(f"hint triple {self.id!r}: hint must be non-empty")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "question": self.question,
            "machine_answer": self.machine_answer,
            "hint": self.hint,
        }


class NLIBackend(Protocol):
    """Contract for entailment scoring: P(premise entails hypothesis)."""

    def entailment_prob(self, premise: str, hypothesis: str) -> float: ...


class OverlapNLIBackend:
    """Stub NLI: hypothesis-token coverage by the premise.

    The score is |tokens(premise) ∩ tokens(hypothesis)| / |tokens(hypothesis)|,
    a crude but deterministic proxy for entailment.
    """

    def entailment_prob(self, premise: str, hypothesis: str) -> float:
        from .text import tokenize

        hyp = set(tokenize(hypothesis))
        if not hyp:
            return 0.0
        prem = set(tokenize(premise))
        return len(hyp & prem) / len(hyp)


@dataclass
class ChainReport:
    """Skips recorded while building a synthetic dataset."""

    built: int = 0
    skipped: list[tuple[str, str]] = field(default_factory=list)


def split_qa_pairs(
    pairs: Sequence[QAPair], seed: int, ratio: tuple[int, int, int] = DEFAULT_RATIO
) -> tuple[list[QAPair], list[QAPair], list[QAPair]]:
    """Deterministic train/valid/test split of QA pairs."""
    return shuffled_split(list(pairs), seed, ratio)


def top_beam(backend: GeneratorBackend, source: str, max_out: int = 150) -> str:
    beams = backend.generate(source, beams=1, max_out=max_out)
    if not beams:
        raise CapabilityError("backend produced no beams")
    return beams[0][0]


def _hint_for(pair: QAPair, machine_answer: str, engine: FeedbackEngine) -> str:
    """Feedback text for the draft answer, with the gold answer as the only
    reference. The single-reference exercise is synthesized on the spot."""
    exercise = Exercise(
        id=f"qa:{pair.id}",
        problem=pair.question,
        references=[ReferenceSolution(id=f"qa:{pair.id}:r0", text=pair.answer)],
    )
    return generate_feedback(exercise, machine_answer, engine).text


def build_hint_dataset(
    qa: Sequence[QAPair],
    qa_model: GeneratorBackend,
    engine: FeedbackEngine,
) -> tuple[list[HintTriple], ChainReport]:
    """Synthesize hint-writing training data from a trained QA model.

    Each pair contributes (question, draft answer, hint); pairs whose hint
    generation fails are skipped and recorded, never fatal.
    """
    triples: list[HintTriple] = []
    report = ChainReport()
    for pair in qa:
        try:
            draft = top_beam(qa_model, pair.question)
            hint = _hint_for(pair, draft, engine)
            triples.append(
                HintTriple(
                    id=pair.id, question=pair.question, machine_answer=draft, hint=hint
                )
            )
            report.built += 1
        except Exception as exc:
            report.skipped.append((pair.id, str(exc)))
    return triples, report


def hint_model_pairs(triples: Sequence[HintTriple]) -> list[tuple[str, str]]:
    """(source, target) rows for training the hint writer."""
    return [
        (f"{t.question} {SEPARATOR} {t.machine_answer}", t.hint) for t in triples
    ]


def build_hqa_dataset(
    qa: Sequence[QAPair],
    qa_model: GeneratorBackend,
    hint_model: GeneratorBackend,
) -> tuple[list[tuple[str, str]], ChainReport]:
    """Build (question + predicted hint -> gold answer) training rows.

    The hint comes from the trained hint model applied to the QA model's
    draft, so the rows match what inference will see.
    """
    rows: list[tuple[str, str]] = []
    report = ChainReport()
    for pair in qa:
        try:
            draft = top_beam(qa_model, pair.question)
            hint = top_beam(hint_model, f"{pair.question} {SEPARATOR} {draft}")
            rows.append((f"{pair.question} {SEPARATOR} {hint}", pair.answer))
            report.built += 1
        except Exception as exc:
            report.skipped.append((pair.id, str(exc)))
    return rows, report


def entailment_select(answers: Sequence[str], hint: str, nli: NLIBackend) -> str:
    """The candidate that most strongly entails the hint; ties keep order."""
    if not answers:
        raise ValueError("entailment_select requires at least one answer")
    best = answers[0]
    best_prob = -1.0
    for answer in answers:
        prob = nli.entailment_prob(answer, hint)
        if prob > best_prob:
            best, best_prob = answer, prob
    return best


@dataclass
class HintQAOutcome:
    """Every intermediate artifact of one chain inference."""

    question: str
    machine_answer: str
    hint: str
    candidates: list[str]
    answer: str


def run_hint_qa_inference(
    question: str,
    qa_model: GeneratorBackend,
    hint_model: GeneratorBackend,
    hqa_model: GeneratorBackend,
    nli: NLIBackend,
    k: int = 3,
) -> HintQAOutcome:
    """Answer a question through the full draft -> hint -> rerank chain."""
    if k < 1:
        raise ValueError("k must be at least 1")
    try:
        draft = top_beam(qa_model, question)
    except Exception as exc:
        raise RuntimeError(f"qa stage failed: {exc}") from exc
    try:
        hint = top_beam(hint_model, f"{question} {SEPARATOR} {draft}")
    except Exception as exc:
        raise RuntimeError(f"hint stage failed: {exc}") from exc
    try:
        beams = hqa_model.generate(f"{question} {SEPARATOR} {hint}", beams=k, max_out=150)
    except Exception as exc:
        raise RuntimeError(f"hint-aware qa stage failed: {exc}") from exc
    if not beams:
        raise RuntimeError("hint-aware qa stage produced no candidates")
    candidates = [text for text, _, _ in beams]
    answer = entailment_select(candidates, hint, nli)
    return HintQAOutcome(
        question=question,
        machine_answer=draft,
        hint=hint,
        candidates=candidates,
        answer=answer,
    )


def train_chain(
    train: Sequence[QAPair],
    valid: Sequence[QAPair],
    engine: FeedbackEngine,
    qa_model: GeneratorBackend,
    hint_model: GeneratorBackend,
    hqa_model: GeneratorBackend,
    config: TrainConfig | None = None,
) -> tuple[GeneratorBackend, GeneratorBackend, GeneratorBackend, ChainReport]:
    """Train the three-model chain on the train split only.

    Validation pairs steer nothing in the stub backends but are passed
    through so real adapters can early-stop; test data must never reach
    this function.
    """
    config = config or TrainConfig()
    qa_model = qa_model.fine_tune(
        [(p.question, p.answer) for p in train],
        [(p.question, p.answer) for p in valid],
        config,
    )
    triples, hint_report = build_hint_dataset(train, qa_model, engine)
    hint_model = hint_model.fine_tune(hint_model_pairs(triples), [], config)
    rows, hqa_report = build_hqa_dataset(train, qa_model, hint_model)
    hqa_model = hqa_model.fine_tune(rows, [], config)
    report = ChainReport(
        built=hqa_report.built, skipped=hint_report.skipped + hqa_report.skipped
    )
    return qa_model, hint_model, hqa_model, report


# ---------------------------------------------------------------------------
# File formats


def save_qa_pairs(path, pairs: Sequence[QAPair]) -> None:
    write_jsonl(path, (p.to_dict() for p in pairs))


def load_qa_pairs(path) -> list[QAPair]:
    out = []
    seen: set[str] = set()
    for lineno, obj in iter_jsonl(path):
        pair = QAPair.from_dict(obj)
        if pair.id in seen:
            raise ValidationError(f"{path}:{lineno}: duplicate id {pair.id!r}")
        seen.add(pair.id)
        out.append(pair)
    return out


def save_hint_triples(path, triples: Sequence[HintTriple]) -> None:
    write_jsonl(path, (t.to_dict() for t in triples))


def save_hqa_rows(path, rows: Sequence[tuple[str, str]]) -> None:
    write_jsonl(path, ({"source": s, "target": t} for s, t in rows))
