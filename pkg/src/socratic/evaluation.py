"""Metrics for generated questions, usefulness regression and learning gains.

Text metrics are computed over a pinned tokenizer (lowercase, split on
non-alphanumeric runs) so scores are reproducible across machines. BLEU is
corpus-level with add-epsilon smoothing of zero precisions; ROUGE-L is the
mean per-pair LCS F-measure. Both are reported on a 0-100 scale.

Learning gains read the interaction log: a gain event is an incorrect
attempt that drew feedback, and it counts as a win when the very next
attempt on the same exercise passes the checker.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .corpus import InteractionRecord
from .reranker import FeatureVector, RerankerModel, predict_usefulness
from .text import tokenize

BLEU_EPSILON = 1e-9
SCOPES = ("first_attempt", "all_attempts")


def _require_parallel(candidates: Sequence[str], references: Sequence[str]) -> None:
    if len(candidates) != len(references):
        raise ValueError(
            f"length mismatch: {len(candidates)} candidates, "
            f"{len(references)} references"
        )
    if not candidates:
        raise ValueError("need at least one pair")


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidates: Sequence[str], references: Sequence[str], max_n: int = 4) -> float:
    """Corpus-level BLEU on a 0-100 scale.

    Modified n-gram precisions are pooled over all pairs, zero precisions
    are replaced by a tiny epsilon, and the brevity penalty uses the pooled
    lengths. Identical corpora score exactly 100.
    """
    if not 1 <= max_n <= 4:
        raise ValueError("max_n must be within 1..4")
    _require_parallel(candidates, references)
    cand_tokens = [tokenize(c) for c in candidates]
    ref_tokens = [tokenize(r) for r in references]
    c_len = sum(len(t) for t in cand_tokens)
    r_len = sum(len(t) for t in ref_tokens)
    if c_len == 0:
        return 0.0

    log_precision_sum = 0.0
    for n in range(1, max_n + 1):
        matched = 0
        total = 0
        for cand, ref in zip(cand_tokens, ref_tokens):
            cand_counts = _ngrams(cand, n)
            ref_counts = _ngrams(ref, n)
            matched += sum(
                min(count, ref_counts[gram]) for gram, count in cand_counts.items()
            )
            total += max(0, len(cand) - n + 1)
        precision = matched / total if total > 0 else 0.0
        if precision == 0.0:
            precision = BLEU_EPSILON
        log_precision_sum += math.log(precision)

    brevity = 1.0 if c_len > r_len else math.exp(1.0 - r_len / c_len)
    return 100.0 * brevity * math.exp(log_precision_sum / max_n)


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    if not a or not b:
        return 0
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0]
        for j, token_b in enumerate(b, start=1):
            if token_a == token_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def rouge_l(candidates: Sequence[str], references: Sequence[str]) -> float:
    """Mean per-pair LCS F-measure (beta = 1) on a 0-100 scale."""
    _require_parallel(candidates, references)
    total = 0.0
    for cand_text, ref_text in zip(candidates, references):
        cand = tokenize(cand_text)
        ref = tokenize(ref_text)
        lcs = _lcs_length(cand, ref)
        if lcs == 0:
            continue
        precision = lcs / len(cand)
        recall = lcs / len(ref)
        total += 2.0 * precision * recall / (precision + recall)
    return 100.0 * total / len(candidates)


@dataclass
class GenEvalReport:
    """BLEU-1..4 and ROUGE-L over one candidate/reference corpus."""

    bleu1: float
    bleu2: float
    bleu3: float
    bleu4: float
    rouge_l: float
    n_examples: int

    def to_dict(self) -> dict:
        return {
            "bleu1": self.bleu1,
            "bleu2": self.bleu2,
            "bleu3": self.bleu3,
            "bleu4": self.bleu4,
            "rouge_l": self.rouge_l,
            "n_examples": self.n_examples,
        }


def evaluate_generation(
    candidates: Sequence[str], references: Sequence[str]
) -> GenEvalReport:
    _require_parallel(candidates, references)
    return GenEvalReport(
        bleu1=bleu(candidates, references, 1),
        bleu2=bleu(candidates, references, 2),
        bleu3=bleu(candidates, references, 3),
        bleu4=bleu(candidates, references, 4),
        rouge_l=rouge_l(candidates, references),
        n_examples=len(candidates),
    )


# ---------------------------------------------------------------------------
# Regression metrics


@dataclass
class RegressionReport:
    """MSE, MAE and Pearson correlation; pearson is None when undefined."""

    mse: float
    mae: float
    pearson: float | None

    def to_dict(self) -> dict:
        return {"mse": self.mse, "mae": self.mae, "pearson": self.pearson}


def regression_metrics(
    predicted: Sequence[float], gold: Sequence[float]
) -> RegressionReport:
    """Standard regression metrics.

    Pearson correlation is reported absent (None) when either side is
    constant, the natural outcome for a mean-predicting baseline.
    """
    if len(predicted) != len(gold):
        raise ValueError("length mismatch between predicted and gold")
    if len(predicted) < 2:
        raise ValueError("need at least 2 value pairs")
    p = np.asarray(predicted, dtype=float)
    g = np.asarray(gold, dtype=float)
    mse = float(np.mean((p - g) ** 2))
    mae = float(np.mean(np.abs(p - g)))
    pearson: float | None
    if np.ptp(p) == 0 or np.ptp(g) == 0:
        pearson = None
    else:
        pearson = float(np.corrcoef(p, g)[0, 1])
    return RegressionReport(mse=mse, mae=mae, pearson=pearson)


# ---------------------------------------------------------------------------
# Re-ranking usefulness metric


def usefulness_metric(
    model: RerankerModel,
    groups: Sequence[Sequence[tuple[FeatureVector, float | None]]],
) -> float:
    """Average gold rating of the model's top pick per candidate group.

    For each group the model predicts usefulness per candidate and the gold
    rating of the argmax lands in the average; prediction ties keep the
    earliest candidate.
    """
    if not groups:
        raise ValueError("need at least one group")
    picked: list[float] = []
    for index, group in enumerate(groups):
        if not group:
            raise ValueError(f"group {index} is empty")
        best_rating: float | None = None
        best_score = -math.inf
        for features, rating in group:
            if rating is None:
                raise ValueError(f"group {index} has a candidate without a rating")
            score = predict_usefulness(model, features)
            if score > best_score:
                best_score = score
                best_rating = float(rating)
        assert best_rating is not None
        picked.append(best_rating)
    return float(np.mean(picked))


# ---------------------------------------------------------------------------
# Learning gains


@dataclass
class LearningGainReport:
    """Gain for one feedback model under one attempt scope.

    ``gain_percent`` is the share of feedback events whose next attempt on
    the same exercise passed the checker; the confidence interval is the
    normal-approximation 95% half-width.
    """

    model: str
    scope: str
    gain_percent: float
    ci95_half_width: float
    n: int

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "scope": self.scope,
            "gain_percent": self.gain_percent,
            "ci95_half_width": self.ci95_half_width,
            "n": self.n,
        }


def learning_gain(
    records: Sequence[InteractionRecord], model_label: str, scope: str
) -> LearningGainReport:
    """Learning gain for one feedback model.

    A feedback event is an incorrect attempt that drew feedback under
    ``model_label``; scope ``first_attempt`` keeps only events triggered by
    the student's first attempt on the exercise. Raises when no event
    matches, since a gain over nothing is meaningless.
    """
    if scope not in SCOPES:
        raise ValueError(f"scope must be one of {SCOPES}")
    grouped: dict[tuple[str, str], list[InteractionRecord]] = {}
    for rec in records:
        grouped.setdefault((rec.session_id, rec.exercise_id), []).append(rec)

    events = 0
    wins = 0
    for _, attempts in sorted(grouped.items()):
        attempts.sort(key=lambda r: r.attempt_index)
        for position, rec in enumerate(attempts):
            if rec.feedback_model != model_label:
                continue
            if rec.checker_verdict or not rec.feedback_shown:
                continue
            if scope == "first_attempt" and rec.attempt_index != 1:
                continue
            events += 1
            if position + 1 < len(attempts) and attempts[position + 1].checker_verdict:
                wins += 1
    if events == 0:
        raise ValueError(f"no feedback events for model {model_label!r} in scope {scope}")
    p = wins / events
    return LearningGainReport(
        model=model_label,
        scope=scope,
        gain_percent=100.0 * p,
        ci95_half_width=100.0 * 1.96 * math.sqrt(p * (1.0 - p) / events),
        n=events,
    )


def learning_gain_table(
    records: Sequence[InteractionRecord], labels: Sequence[str]
) -> list[LearningGainReport]:
    """Gain reports for every (label, scope) combination with any events."""
    out: list[LearningGainReport] = []
    for label in labels:
        for scope in SCOPES:
            try:
                out.append(learning_gain(records, label, scope))
            except ValueError:
                continue
    return out
