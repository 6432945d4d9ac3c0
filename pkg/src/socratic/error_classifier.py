"""Sort a wrong answer into one of four cause/effect deficiency categories.

The student and reference decompositions are compared part by part with the
similarity matcher. Four categories cover the genuinely wrong combinations;
a fifth, NoDetectedError, absorbs the case where both parts match the
reference even though the upstream checker flagged the answer, so the
dialogue can degrade gracefully instead of inventing an error.
"""

from __future__ import annotations

from enum import Enum

from .cause_effect import Decomposition, has_cause
from .similarity import DEFAULT_TAU, EmbeddingBackend, is_match


class ErrorCategory(Enum):
    """Deficiency categories for a checker-rejected answer."""

    INCORRECT_CAUSE_INCORRECT_EFFECT = "IncorrectCauseIncorrectEffect"
    CORRECT_CAUSE_INCORRECT_EFFECT = "CorrectCauseIncorrectEffect"
    INCORRECT_CAUSE_CORRECT_EFFECT = "IncorrectCauseCorrectEffect"
    MISSING_CAUSE_CORRECT_EFFECT = "MissingCauseCorrectEffect"
    NO_DETECTED_ERROR = "NoDetectedError"


def classify(
    student: Decomposition,
    reference: Decomposition,
    backend: EmbeddingBackend,
    tau: float = DEFAULT_TAU,
) -> ErrorCategory:
    """Map a (student, reference) decomposition pair to its error category.

    A missing student cause is only special-cased when the effect is
    correct; with a wrong effect it simply counts as a non-matching cause.
    """
    cause_ok = is_match(student.cause, reference.cause, backend, tau)
    effect_ok = is_match(student.effect, reference.effect, backend, tau)
    if not effect_ok:
        if cause_ok:
            return ErrorCategory.CORRECT_CAUSE_INCORRECT_EFFECT
        return ErrorCategory.INCORRECT_CAUSE_INCORRECT_EFFECT
    if cause_ok:
        return ErrorCategory.NO_DETECTED_ERROR
    if not has_cause(student):
        return ErrorCategory.MISSING_CAUSE_CORRECT_EFFECT
    return ErrorCategory.INCORRECT_CAUSE_CORRECT_EFFECT
