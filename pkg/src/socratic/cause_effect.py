"""Split a solution sentence into its answer (effect) and justification (cause).

A short rule cascade over explicit connective words stands in for a learned
extractor. The rules, in precedence order:

(a) "because" / "since" / "as"  -> left segment is the effect, right the cause
(b) leading "if X then Y" or "if X, Y" -> the if-clause is the cause
(c) a comma whose left segment is at most 4 words -> left effect, right cause
(d) "so" / "therefore" / "hence" / "thus" -> left cause, right effect
(e) no connective -> the whole text is the effect and the cause is empty

Within a rule the leftmost workable occurrence wins; across rules the order
above is total, so exactly one rule fires for any input. Matching is
case-insensitive and respects word boundaries. The connective token itself
belongs to neither segment (the leading "if" of rule (b) stays in the cause).

Known tradeoffs, accepted for auditability over coverage: comparative "as"
is suppressed only by a cheap length guard, temporal "since" is not
distinguished, and an intensifier "so" can split a clause. Texts these rules
misread fall back to rule (e) or produce a conservative split, never an error.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from enum import Enum


class Connective(str, Enum):
    """Which family of connective produced a decomposition."""

    BECAUSE_LIKE = "because_like"
    IF_THEN = "if_then"
    COMMA = "comma"
    SO_LIKE = "so_like"
    NONE = "none"


@dataclass(frozen=True)
class Decomposition:
    """A (cause, effect) split of one text.

    ``effect`` is always non-empty. ``cause`` is empty exactly when no
    connective fired. Spans are character ranges into the source text, so
    ``source[slice(*effect_span)] == effect``; ``cause_span`` is None for an
    empty cause.
    """

    cause: str
    effect: str
    connective: Connective
    effect_span: tuple[int, int]
    cause_span: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        if not self.effect:
            raise ValueError("effect must be non-empty")
        if self.connective is Connective.NONE and self.cause:
            raise ValueError("cause must be empty when no connective fired")
        if bool(self.cause) != (self.cause_span is not None):
            raise ValueError("cause and cause_span must be set together")


def has_cause(d: Decomposition) -> bool:
    """True when the decomposition carries a non-empty cause."""
    return bool(d.cause)


_BECAUSE_RE = re.compile(r"\b(because|since|as)\b", re.IGNORECASE)
_SO_RE = re.compile(r"\b(so|therefore|hence|thus)\b", re.IGNORECASE)
_IF_RE = re.compile(r"\bif\b", re.IGNORECASE)
_THEN_RE = re.compile(r"\bthen\b", re.IGNORECASE)

# stripped only where a segment touches the connective; sentence-final
# punctuation on the outer ends is preserved
_CUT_PUNCTUATION = ",;:-–—"


def _trim(text: str, start: int, end: int, cut: str) -> tuple[int, int] | None:
    """Shrink [start, end) to the usable segment, or None if nothing remains.

    Whitespace goes from both ends; clause punctuation only from the ``cut``
    side, the one that faced the removed connective.
    """
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    if cut == "left":
        while start < end and (text[start] in _CUT_PUNCTUATION or text[start].isspace()):
            start += 1
    else:
        while end > start and (text[end - 1] in _CUT_PUNCTUATION or text[end - 1].isspace()):
            end -= 1
    if start >= end or not any(ch.isalnum() for ch in text[start:end]):
        return None
    return start, end


def _word_count(text: str, span: tuple[int, int]) -> int:
    return len(text[span[0] : span[1]].split())


def _build(
    text: str,
    connective: Connective,
    cause_span: tuple[int, int],
    effect_span: tuple[int, int],
) -> Decomposition:
    return Decomposition(
        cause=text[cause_span[0] : cause_span[1]],
        effect=text[effect_span[0] : effect_span[1]],
        connective=connective,
        effect_span=effect_span,
        cause_span=cause_span,
    )


def decompose(text: str) -> Decomposition:
    """Split ``text`` into cause and effect by the rule cascade.

    Pure function of its input. Raises ValueError for empty or
    whitespace-only text; any other text yields a decomposition, in the
    worst case the all-effect fallback.
    """
    if not text.strip():
        raise ValueError("cannot decompose empty text")

    # (a) because-like: effect precedes the connective
    for m in _BECAUSE_RE.finditer(text):
        effect = _trim(text, 0, m.start(), cut="right")
        cause = _trim(text, m.end(), len(text), cut="left")
        if effect is None or cause is None:
            continue
        # comparative "as" guard: demand a clause-sized right segment
        if m.group(1).lower() == "as" and _word_count(text, cause) < 3:
            continue
        return _build(text, Connective.BECAUSE_LIKE, cause, effect)

    # (b) leading if-clause
    m_if = _IF_RE.search(text)
    if m_if is not None and not text[: m_if.start()].strip():
        m_then = _THEN_RE.search(text, m_if.end())
        if m_then is not None:
            cause = _trim(text, m_if.start(), m_then.start(), cut="right")
            effect = _trim(text, m_then.end(), len(text), cut="left")
            if cause is not None and effect is not None:
                return _build(text, Connective.IF_THEN, cause, effect)
        comma = text.find(",", m_if.end())
        if comma != -1:
            cause = _trim(text, m_if.start(), comma, cut="right")
            effect = _trim(text, comma + 1, len(text), cut="left")
            if cause is not None and effect is not None:
                return _build(text, Connective.IF_THEN, cause, effect)

    # (c) bare comma after a short answer
    for i, ch in enumerate(text):
        if ch != ",":
            continue
        effect = _trim(text, 0, i, cut="right")
        cause = _trim(text, i + 1, len(text), cut="left")
        if effect is None or cause is None:
            continue
        if _word_count(text, effect) > 4:
            continue
        return _build(text, Connective.COMMA, cause, effect)

    # (d) so-like: cause precedes the connective
    for m in _SO_RE.finditer(text):
        cause = _trim(text, 0, m.start(), cut="right")
        effect = _trim(text, m.end(), len(text), cut="left")
        if cause is None or effect is None:
            continue
        return _build(text, Connective.SO_LIKE, cause, effect)

    # (e) fallback: everything is effect
    start, end = 0, len(text)
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    return Decomposition(
        cause="",
        effect=text[start:end],
        connective=Connective.NONE,
        effect_span=(start, end),
        cause_span=None,
    )
