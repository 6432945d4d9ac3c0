"""Personalized question-based feedback for cause-and-effect exercises.

The package covers the full loop: decompose a solution into cause and
effect, classify where a student's answer goes wrong, ask a generated
question that targets that part, and keep a short dialogue going until the
student recovers or runs out of attempts. Offline, the same pieces train
and evaluate the question generator, the usefulness re-ranker, and the
hint-assisted QA chain.

Every neural component sits behind a small backend contract with a
deterministic stub implementation, so the whole pipeline runs (and is
tested) without model weights.
"""

from .cause_effect import Connective, Decomposition, decompose
from .corpus import (
    CorpusError,
    Exercise,
    InteractionRecord,
    InteractionStore,
    ParseError,
    QGExample,
    QuestionCandidate,
    ReferenceSolution,
    SplitPartition,
    StorageError,
    UsefulnessAnnotation,
    ValidationError,
    load_annotations,
    load_exercises,
    load_interactions,
    load_qg_examples,
    shuffled_split,
    split_qg_dataset,
    split_sizes,
)
from .error_classifier import ErrorCategory, classify
from .evaluation import (
    GenEvalReport,
    LearningGainReport,
    RegressionReport,
    bleu,
    evaluate_generation,
    learning_gain,
    learning_gain_table,
    regression_metrics,
    rouge_l,
    usefulness_metric,
)
from .feedback import (
    DialogueState,
    FeedbackEngine,
    FeedbackKind,
    FeedbackMessage,
    Phase,
    StateError,
    TurnResult,
    advance_dialogue,
    generate_feedback,
    solution_check,
    take_turn,
)
from .hint_qa import (
    HintQAOutcome,
    HintTriple,
    OverlapNLIBackend,
    QAPair,
    entailment_select,
    run_hint_qa_inference,
    train_chain,
)
from .question_gen import (
    CapabilityError,
    GenerationError,
    GeneratorBackend,
    HTTPGeneratorBackend,
    MemorizingGeneratorBackend,
    TemplateGeneratorBackend,
    TrainConfig,
    build_question_bank,
    fine_tune_qg,
    generate_candidates,
    load_question_bank,
    save_question_bank,
)
from .reranker import (
    FeatureVector,
    HeuristicScorers,
    MeanBaselineRegressor,
    RerankerModel,
    UsefulnessRegressor,
    extract_features,
    fit_mean_baseline,
    fit_ols,
    predict_usefulness,
    rerank,
)
from .similarity import (
    DEFAULT_TAU,
    HashEmbeddingBackend,
    OrthogonalEmbeddingBackend,
    SimilarityScore,
    is_match,
    nearest_reference,
    token_similarity,
)

__version__ = "0.1.0"

__all__ = [
    "CapabilityError",
    "Connective",
    "CorpusError",
    "DEFAULT_TAU",
    "Decomposition",
    "DialogueState",
    "ErrorCategory",
    "Exercise",
    "FeatureVector",
    "FeedbackEngine",
    "FeedbackKind",
    "FeedbackMessage",
    "GenEvalReport",
    "GenerationError",
    "GeneratorBackend",
    "HTTPGeneratorBackend",
    "HashEmbeddingBackend",
    "HeuristicScorers",
    "HintQAOutcome",
    "HintTriple",
    "InteractionRecord",
    "InteractionStore",
    "LearningGainReport",
    "MeanBaselineRegressor",
    "MemorizingGeneratorBackend",
    "OrthogonalEmbeddingBackend",
    "OverlapNLIBackend",
    "ParseError",
    "Phase",
    "QAPair",
    "QGExample",
    "QuestionCandidate",
    "ReferenceSolution",
    "RegressionReport",
    "RerankerModel",
    "SimilarityScore",
    "SplitPartition",
    "StateError",
    "StorageError",
    "TemplateGeneratorBackend",
    "TrainConfig",
    "TurnResult",
    "UsefulnessAnnotation",
    "UsefulnessRegressor",
    "ValidationError",
    "advance_dialogue",
    "bleu",
    "build_question_bank",
    "classify",
    "decompose",
    "entailment_select",
    "evaluate_generation",
    "extract_features",
    "fine_tune_qg",
    "fit_mean_baseline",
    "fit_ols",
    "generate_candidates",
    "generate_feedback",
    "is_match",
    "learning_gain",
    "learning_gain_table",
    "load_annotations",
    "load_exercises",
    "load_interactions",
    "load_qg_examples",
    "load_question_bank",
    "nearest_reference",
    "predict_usefulness",
    "regression_metrics",
    "rerank",
    "rouge_l",
    "run_hint_qa_inference",
    "save_question_bank",
    "shuffled_split",
    "solution_check",
    "split_qg_dataset",
    "split_sizes",
    "take_turn",
    "token_similarity",
    "train_chain",
    "usefulness_metric",
]
