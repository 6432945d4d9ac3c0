"""Personalized feedback composition and the follow-up dialogue protocol.

For a wrong answer the engine finds the closest reference solution, splits
both texts into cause and effect, classifies the deficiency, and fills the
matching template. Three categories attach a probing question chosen from
the reference's pre-scored question bank; one becomes a two-option
multiple-choice repair; the no-detected-error fallback stays minimal.

The dialogue side is a small state machine per (session, exercise): a
question-bearing hint expects a throwaway sub-answer first, then a retry of
the original exercise; the multiple-choice repair expects one of its two
options; everything else is a straight retry. Wrong retries draw fresh
feedback until the attempt cap ends the session.

All student-visible strings live in a versioned template file shipped with
the package, so golden tests can pin them byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum
from importlib import resources
from typing import Callable

from .cause_effect import Decomposition, decompose
from .corpus import Exercise, InteractionRecord, ReferenceSolution
from .error_classifier import ErrorCategory, classify
from .question_gen import GeneratorBackend, generate_candidates
from .reranker import AuxiliaryScorers, RerankerModel, extract_features, rerank
from .similarity import DEFAULT_TAU, EmbeddingBackend, nearest_reference, token_similarity


class ConfigurationError(Exception):
    """The engine lacks a question source it needs for this feedback."""


class StateError(Exception):
    """An input arrived for a session phase that cannot accept it."""


_REQUIRED_TEMPLATE_KEYS = (
    "IncorrectCauseIncorrectEffect",
    "MissingCauseCorrectEffect",
    "IncorrectCauseCorrectEffect",
    "CorrectCauseIncorrectEffect",
    "NoDetectedError",
)
_REQUIRED_REPLY_KEYS = ("subanswer_ack", "correct", "give_up", "mcq_reprompt")


def load_template_file(path: str | None = None) -> dict:
    """Read and validate a template file; None loads the packaged default."""
    if path is None:
        payload = (
            resources.files("socratic.templates")
            .joinpath("feedback_templates.json")
            .read_text(encoding="utf-8")
        )
    else:
        with open(path, encoding="utf-8") as fh:
            payload = fh.read()
    data = json.loads(payload)
    if data.get("version") != 1:
        raise ConfigurationError(f"unsupported template version {data.get('version')!r}")
    for key in _REQUIRED_TEMPLATE_KEYS:
        if key not in data.get("templates", {}):
            raise ConfigurationError(f"template file lacks template {key!r}")
    for key in _REQUIRED_REPLY_KEYS:
        if key not in data.get("replies", {}):
            raise ConfigurationError(f"template file lacks reply {key!r}")
    if len(data.get("mcq_options", [])) != 2:
        raise ConfigurationError("template file must define exactly 2 mcq_options")
    return data


_TEMPLATES = load_template_file()
MCQ_OPTIONS: tuple[str, str] = tuple(_TEMPLATES["mcq_options"])
REPLIES: dict[str, str] = dict(_TEMPLATES["replies"])


def configure_templates(path: str | None = None) -> None:
    """Swap the active template set, e.g. from a service config override."""
    global _TEMPLATES, MCQ_OPTIONS, REPLIES
    _TEMPLATES = load_template_file(path)
    MCQ_OPTIONS = tuple(_TEMPLATES["mcq_options"])
    REPLIES = dict(_TEMPLATES["replies"])


class FeedbackKind(str, Enum):
    STATEMENT_PLUS_QUESTION = "statement_plus_question"
    MCQ = "mcq"
    MINIMAL = "minimal"


class FollowUp(str, Enum):
    EXPECT_SUBANSWER_THEN_RETRY = "expect_subanswer_then_retry"
    EXPECT_MCQ_CHOICE = "expect_mcq_choice"
    EXPECT_RETRY = "expect_retry"


@dataclass(frozen=True)
class FeedbackMessage:
    """One rendered feedback turn."""

    category: ErrorCategory
    text: str
    kind: FeedbackKind
    followup: FollowUp
    mcq_options: tuple[str, str] | None = None

    def __post_init__(self) -> None:
        if (self.kind is FeedbackKind.MCQ) != (self.mcq_options is not None):
            raise ValueError("mcq_options must be present exactly for MCQ feedback")


@dataclass
class FeedbackEngine:
    """Everything feedback composition needs, with stubs welcome throughout.

    A populated question bank on the chosen reference makes the generator
    unnecessary; without a bank, ``generator`` (plus optionally
    ``reranker_model`` and ``scorers`` for re-ranking) produces candidates
    on the fly.
    """

    backend: EmbeddingBackend
    tau: float = DEFAULT_TAU
    tau_checker: float = DEFAULT_TAU
    generator: GeneratorBackend | None = None
    reranker_model: RerankerModel | None = None
    scorers: AuxiliaryScorers | None = None
    k: int = 3
    max_attempts: int = 3


def solution_check(
    student_answer: str,
    exercise: Exercise,
    backend: EmbeddingBackend,
    tau_checker: float = DEFAULT_TAU,
) -> bool:
    """True when the answer is close enough to any reference solution."""
    if not exercise.references:
        raise ValueError("exercise has no references")
    if not student_answer.strip():
        return False
    for ref in exercise.references:
        try:
            score = token_similarity(student_answer, ref.text, backend)
        except ValueError:
            continue  # answers with no measurable tokens match nothing
        if score.f1 >= tau_checker:
            return True
    return False


def _select_question(ref: ReferenceSolution, engine: FeedbackEngine) -> str:
    if ref.question_bank:
        bank = ref.question_bank
        if engine.reranker_model is not None and all(
            c.features is not None for c in bank
        ):
            return rerank(bank, engine.reranker_model).question
        if all(c.predicted_usefulness is not None for c in bank):
            # max keeps the first of equals, matching the rerank tie rule
            return max(bank, key=lambda c: c.predicted_usefulness).question
        return bank[0].question
    if engine.generator is None:
        raise ConfigurationError(
            f"reference {ref.id!r} has no question bank and no generator is configured"
        )
    candidates = generate_candidates(ref, engine.generator, k=engine.k)
    if engine.reranker_model is not None and engine.scorers is not None:
        for cand in candidates:
            cand.features = extract_features(cand.question, cand, engine.scorers)
        return rerank(candidates, engine.reranker_model).question
    return candidates[0].question


def generate_feedback(
    exercise: Exercise, student_answer: str, engine: FeedbackEngine
) -> FeedbackMessage:
    """Compose the personalized feedback for one wrong answer."""
    if not student_answer.strip():
        raise ValueError("student answer must be non-empty")
    if not exercise.references:
        raise ValueError("exercise has no references")
    ref = nearest_reference(student_answer, exercise.references, engine.backend)
    student_dec = decompose(student_answer)
    ref_dec = ref.decomposition or decompose(ref.text)
    category = classify(student_dec, ref_dec, engine.backend, engine.tau)
    return render_feedback(category, student_dec, ref_dec, ref, engine)


def render_feedback(
    category: ErrorCategory,
    student_dec: Decomposition,
    ref_dec: Decomposition,
    ref: ReferenceSolution,
    engine: FeedbackEngine,
) -> FeedbackMessage:
    """Fill the template for an already-classified error."""
    templates = _TEMPLATES["templates"]
    if category is ErrorCategory.NO_DETECTED_ERROR:
        return FeedbackMessage(
            category=category,
            text=templates[category.value],
            kind=FeedbackKind.MINIMAL,
            followup=FollowUp.EXPECT_RETRY,
        )
    if category is ErrorCategory.CORRECT_CAUSE_INCORRECT_EFFECT:
        text = templates[category.value].format(
            effect=ref_dec.effect, cause=student_dec.cause
        )
        return FeedbackMessage(
            category=category,
            text=text,
            kind=FeedbackKind.MCQ,
            followup=FollowUp.EXPECT_MCQ_CHOICE,
            mcq_options=MCQ_OPTIONS,
        )
    question = _select_question(ref, engine)
    text = templates[category.value].format(
        effect=student_dec.effect, question=question
    )
    return FeedbackMessage(
        category=category,
        text=text,
        kind=FeedbackKind.STATEMENT_PLUS_QUESTION,
        followup=FollowUp.EXPECT_SUBANSWER_THEN_RETRY,
    )


# ---------------------------------------------------------------------------
# Dialogue state machine


class Phase(str, Enum):
    AWAITING_ANSWER = "awaiting_answer"
    AWAITING_SUBANSWER = "awaiting_subanswer"
    AWAITING_RETRY = "awaiting_retry"
    AWAITING_MCQ = "awaiting_mcq"
    DONE = "done"


LEGAL_TRANSITIONS: dict[Phase, frozenset[Phase]] = {
    Phase.AWAITING_ANSWER: frozenset(
        {Phase.AWAITING_SUBANSWER, Phase.AWAITING_MCQ, Phase.AWAITING_RETRY, Phase.DONE}
    ),
    Phase.AWAITING_SUBANSWER: frozenset({Phase.AWAITING_RETRY}),
    Phase.AWAITING_RETRY: frozenset(
        {Phase.AWAITING_SUBANSWER, Phase.AWAITING_MCQ, Phase.AWAITING_RETRY, Phase.DONE}
    ),
    Phase.AWAITING_MCQ: frozenset({Phase.DONE}),
    Phase.DONE: frozenset(),
}

_FOLLOWUP_PHASE = {
    FollowUp.EXPECT_SUBANSWER_THEN_RETRY: Phase.AWAITING_SUBANSWER,
    FollowUp.EXPECT_MCQ_CHOICE: Phase.AWAITING_MCQ,
    FollowUp.EXPECT_RETRY: Phase.AWAITING_RETRY,
}


@dataclass(frozen=True)
class DialogueState:
    """Progress of one student through one exercise."""

    session_id: str
    exercise_id: str
    phase: Phase = Phase.AWAITING_ANSWER
    attempt_count: int = 0
    last_feedback: FeedbackMessage | None = None
    feedback_model: str = "question_based"
    verdict: bool | None = None
    sub_answers: tuple[str, ...] = ()


@dataclass(frozen=True)
class TurnResult:
    """One processed student input: the new state, the reply, and the log row."""

    state: DialogueState
    reply: str
    feedback: FeedbackMessage | None = None
    record: InteractionRecord | None = None


Checker = Callable[[str], bool]


def _move(state: DialogueState, phase: Phase, **changes) -> DialogueState:
    if phase not in LEGAL_TRANSITIONS[state.phase]:
        raise StateError(f"illegal transition {state.phase.value} -> {phase.value}")
    return replace(state, phase=phase, **changes)


def take_turn(
    state: DialogueState,
    student_input: str,
    exercise: Exercise,
    engine: FeedbackEngine,
    checker: Checker | None = None,
) -> TurnResult:
    """Process one student input against the dialogue protocol.

    ``checker`` defaults to the similarity-based solution check; it is only
    ever consulted for attempts at the original exercise, never for
    sub-answers or option picks.
    """
    if exercise.id != state.exercise_id:
        raise ValueError("exercise does not belong to this dialogue")
    if state.phase is Phase.DONE:
        raise StateError("session is already finished")
    if not student_input.strip():
        raise ValueError("student input must be non-empty")

    if state.phase is Phase.AWAITING_SUBANSWER:
        new_state = _move(
            state,
            Phase.AWAITING_RETRY,
            sub_answers=state.sub_answers + (student_input,),
        )
        return TurnResult(state=new_state, reply=REPLIES["subanswer_ack"])

    if state.phase is Phase.AWAITING_MCQ:
        choice = student_input.strip()
        if choice not in MCQ_OPTIONS:
            return TurnResult(state=state, reply=REPLIES["mcq_reprompt"])
        agreed = choice == MCQ_OPTIONS[0]
        new_state = _move(state, Phase.DONE, verdict=agreed,
                          attempt_count=state.attempt_count + 1)
        record = InteractionRecord(
            session_id=state.session_id,
            exercise_id=state.exercise_id,
            student_answer=choice,
            checker_verdict=agreed,
            attempt_index=new_state.attempt_count,
            feedback_model=state.feedback_model,
        )
        reply = REPLIES["correct"] if agreed else REPLIES["give_up"]
        return TurnResult(state=new_state, reply=reply, record=record)

    # awaiting_answer / awaiting_retry: a real attempt at the exercise
    if checker is None:
        correct = solution_check(student_input, exercise, engine.backend, engine.tau_checker)
    else:
        correct = checker(student_input)
    attempt_index = state.attempt_count + 1

    if correct:
        new_state = _move(state, Phase.DONE, verdict=True, attempt_count=attempt_index)
        record = InteractionRecord(
            session_id=state.session_id,
            exercise_id=state.exercise_id,
            student_answer=student_input,
            checker_verdict=True,
            attempt_index=attempt_index,
            feedback_model=state.feedback_model,
        )
        return TurnResult(state=new_state, reply=REPLIES["correct"], record=record)

    if attempt_index >= engine.max_attempts:
        new_state = _move(state, Phase.DONE, verdict=False, attempt_count=attempt_index)
        record = InteractionRecord(
            session_id=state.session_id,
            exercise_id=state.exercise_id,
            student_answer=student_input,
            checker_verdict=False,
            attempt_index=attempt_index,
            feedback_model=state.feedback_model,
            feedback_shown=REPLIES["give_up"],
        )
        return TurnResult(state=new_state, reply=REPLIES["give_up"], record=record)

    feedback = generate_feedback(exercise, student_input, engine)
    new_state = _move(
        state,
        _FOLLOWUP_PHASE[feedback.followup],
        attempt_count=attempt_index,
        last_feedback=feedback,
    )
    record = InteractionRecord(
        session_id=state.session_id,
        exercise_id=state.exercise_id,
        student_answer=student_input,
        checker_verdict=False,
        attempt_index=attempt_index,
        feedback_model=state.feedback_model,
        feedback_shown=feedback.text,
    )
    return TurnResult(state=new_state, reply=feedback.text, feedback=feedback, record=record)


def advance_dialogue(
    state: DialogueState,
    student_input: str,
    exercise: Exercise,
    engine: FeedbackEngine,
    checker: Checker | None = None,
) -> tuple[DialogueState, str]:
    """State-and-reply view of ``take_turn`` for callers without a log."""
    result = take_turn(state, student_input, exercise, engine, checker)
    return result.state, result.reply
