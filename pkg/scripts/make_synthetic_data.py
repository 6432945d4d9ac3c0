"""Regenerate every file under data/.

All of it is synthetic: the exercises, reference solutions, questions,
ratings, QA pairs and interaction logs are authored or sampled here, not
collected from students. Run from the repository root:

    python3 scripts/make_synthetic_data.py

Output is deterministic (fixed seeds, fixed timestamps), so reruns leave
the files byte-identical.
"""

from __future__ import annotations

import json
import random
from datetime import datetime, timedelta, timezone
from pathlib import Path

DATA = Path(__file__).resolve().parent.parent / "data"

# ---------------------------------------------------------------------------
# Exercises. Reference wordings deliberately cover every decomposition rule:
# because/since/as, if-then, the short-effect comma, so/therefore/hence, and
# plain statements with no connective at all.

EXERCISES = [
    {
        "id": "ex-treatments",
        "problem": (
            "We want to choose between 2 treatments A and B. For both, we got "
            "same mean recovery rate but higher variance for treatment A. "
            "Which treatment would you discard, and why?"
        ),
        "references": [
            {
                "id": "ex-treatments-r0",
                "text": "Treatment A, because the recovery results for treatment B are more homogeneous.",
            },
            {
                "id": "ex-treatments-r1",
                "text": "Treatment A, because it is less homogeneous than treatment B",
            },
        ],
    },
    {
        "id": "ex-vehicle-count",
        "problem": (
            "A sensor counts the number of vehicles passing a checkpoint every "
            "hour. Is the recorded count a discrete or a continuous variable, and why?"
        ),
        "references": [
            {
                "id": "ex-vehicle-count-r0",
                "text": "It's a discrete variable, because it's counting the number of vehicles",
            }
        ],
    },
    {
        "id": "ex-house-price",
        "problem": (
            "A model predicts house prices from size and location. Is this a "
            "classification or a regression problem, and why?"
        ),
        "references": [
            {
                "id": "ex-house-price-r0",
                "text": "Regression, as the output variable that is being predicted, the price, is continuous.",
            }
        ],
    },
    {
        "id": "ex-zero-weight",
        "problem": (
            "A linear model assigns weight 0 to one of its features. Does that "
            "feature influence the model's predictions?"
        ),
        "references": [
            {
                "id": "ex-zero-weight-r0",
                "text": "No, since the feature has 0 weight in the model function.",
            }
        ],
    },
    {
        "id": "ex-fraud-threshold",
        "problem": (
            "A fraud detector outputs a score for each transaction x and flags "
            "the ones above a threshold. When is a transaction flagged as fraudulent?"
        ),
        "references": [
            {
                "id": "ex-fraud-threshold-r0",
                "text": "If the output is over the threshold, x is fraudulent",
            }
        ],
    },
    {
        "id": "ex-overfitting",
        "problem": (
            "A model reaches 99% accuracy on its training data but only 60% on "
            "fresh data. What happened, and why?"
        ),
        "references": [
            {
                "id": "ex-overfitting-r0",
                "text": "The model overfits, because it memorized the training examples instead of the general pattern.",
            },
            {
                "id": "ex-overfitting-r1",
                "text": "The model overfits, since the gap between training and test accuracy is large.",
            },
        ],
    },
    {
        "id": "ex-l2-penalty",
        "problem": "Why does adding an L2 penalty to the loss reduce overfitting?",
        "references": [
            {
                "id": "ex-l2-penalty-r0",
                "text": "The penalty shrinks the weights, so the model becomes less sensitive to individual training points.",
            }
        ],
    },
    {
        "id": "ex-test-set",
        "problem": "Why must the test set stay untouched during model development?",
        "references": [
            {
                "id": "ex-test-set-r0",
                "text": "If you tune on the test set, the final score is no longer an honest estimate.",
            }
        ],
    },
    {
        "id": "ex-median-mean",
        "problem": (
            "House prices in a district include a few extreme mansions. Which "
            "is the better summary of a typical price, the mean or the median, and why?"
        ),
        "references": [
            {
                "id": "ex-median-mean-r0",
                "text": "The median, because it is robust to the extreme values.",
            },
            {
                "id": "ex-median-mean-r1",
                "text": "The median, as the mean is pulled up by the few extreme mansions.",
            },
        ],
    },
    {
        "id": "ex-learning-rate",
        "problem": (
            "Training loss oscillates and never settles. What would you change "
            "first, and why?"
        ),
        "references": [
            {
                "id": "ex-learning-rate-r0",
                "text": "Lower the learning rate, because the steps are too large to settle into a minimum.",
            }
        ],
    },
    {
        "id": "ex-accuracy-imbalance",
        "problem": (
            "A classifier predicts the majority class for every input and still "
            "reports 95% accuracy. Is accuracy a good metric here?"
        ),
        "references": [
            {"id": "ex-accuracy-imbalance-r0", "text": "No, the classes are imbalanced."}
        ],
    },
    {
        "id": "ex-correlation",
        "problem": (
            "Ice cream sales and drowning incidents rise together in summer. "
            "Does ice cream cause drowning?"
        ),
        "references": [
            {"id": "ex-correlation-r0", "text": "No, a hidden variable drives both."},
            {
                "id": "ex-correlation-r1",
                "text": "No, because both are driven by warm weather.",
            },
        ],
    },
    {
        "id": "ex-validation-set",
        "problem": "What is the validation set used for during model development?",
        "references": [
            {
                "id": "ex-validation-set-r0",
                "text": "It is used to choose hyperparameters without touching the test set.",
            }
        ],
    },
    {
        "id": "ex-knn-k",
        "problem": (
            "In k-nearest neighbors, what happens to the decision boundary as "
            "k grows very large?"
        ),
        "references": [
            {
                "id": "ex-knn-k-r0",
                "text": "The boundary becomes smoother, because each prediction averages over more neighbors.",
            }
        ],
    },
    {
        "id": "ex-gradient-sign",
        "problem": (
            "Why does gradient descent move against the gradient rather than "
            "along it?"
        ),
        "references": [
            {
                "id": "ex-gradient-sign-r0",
                "text": "The loss decreases fastest in the negative gradient direction, so the update subtracts the gradient.",
            }
        ],
    },
    {
        "id": "ex-deep-tree",
        "problem": (
            "A very deep decision tree has low training error and high test "
            "error. Describe its bias and variance."
        ),
        "references": [
            {
                "id": "ex-deep-tree-r0",
                "text": "It has low bias and high variance, because it fits the training data almost perfectly but changes a lot across samples.",
            }
        ],
    },
    {
        "id": "ex-standardize",
        "problem": (
            "Why do we standardize features before fitting a distance-based "
            "model such as k-nearest neighbors?"
        ),
        "references": [
            {
                "id": "ex-standardize-r0",
                "text": "If one feature has a much larger scale, it dominates the distance.",
            }
        ],
    },
    {
        "id": "ex-dropout",
        "problem": "During training, dropout randomly disables units. Why does this help?",
        "references": [
            {
                "id": "ex-dropout-r0",
                "text": "The network cannot rely on any single unit, therefore it learns redundant representations.",
            }
        ],
    },
    {
        "id": "ex-stratified",
        "problem": "When splitting an imbalanced dataset, why use stratified sampling?",
        "references": [
            {
                "id": "ex-stratified-r0",
                "text": "Each split keeps the original class proportions, hence the evaluation stays representative.",
            }
        ],
    },
    {
        "id": "ex-early-stopping",
        "problem": (
            "Validation loss starts rising while training loss keeps falling. "
            "What should you do?"
        ),
        "references": [
            {
                "id": "ex-early-stopping-r0",
                "text": "Stop training, because the model has begun to overfit.",
            },
            {
                "id": "ex-early-stopping-r1",
                "text": "Stop training, since further epochs only memorize noise.",
            },
        ],
    },
]

# Curated bank questions per reference. The first entry is the one the
# dialogue shows; the treatment exercise reproduces the tutoring transcript
# the service tests replay.
BANK_QUESTIONS = {
    "ex-treatments-r0": [
        "Do we prefer more homogeneous results or less?",
        "What does a higher variance say about the recovery results?",
    ],
    "ex-treatments-r1": [
        "Do we prefer more homogeneous results or less?",
        "Which treatment gives more consistent results?",
    ],
    "ex-vehicle-count-r0": [
        "What kind of values can a count take?",
        "Can the sensor ever record half a vehicle?",
    ],
    "ex-house-price-r0": [
        "Is the predicted price a category or a quantity?",
        "What kind of variable is a price?",
    ],
    "ex-zero-weight-r0": [
        "What does a weight of 0 do to a feature's contribution?",
        "How does the model function use each weight?",
    ],
    "ex-fraud-threshold-r0": [
        "What happens when the score crosses the threshold?",
        "Is the flag raised below or above the threshold?",
    ],
    "ex-overfitting-r0": [
        "What did the model learn from the training examples?",
        "Does memorizing examples help on fresh data?",
    ],
    "ex-overfitting-r1": [
        "How far apart are the training and test accuracies?",
        "What does a large train-test gap indicate?",
    ],
    "ex-l2-penalty-r0": [
        "What happens to the weights under the penalty?",
        "Do smaller weights make the model more or less sensitive?",
    ],
    "ex-test-set-r0": [
        "What happens to the score if you tune on the test set?",
        "Is a tuned test score still an honest estimate?",
    ],
    "ex-median-mean-r0": [
        "Which summary is robust to extreme values?",
        "What do the extreme mansions do to the mean?",
    ],
    "ex-median-mean-r1": [
        "What do the extreme mansions do to the mean?",
        "Which summary moves more when a mansion is added?",
    ],
    "ex-learning-rate-r0": [
        "What do steps that are too large do near a minimum?",
        "Should the steps be larger or smaller?",
    ],
    "ex-accuracy-imbalance-r0": [
        "How many examples does each class have?",
        "What score would always predicting the majority class get?",
    ],
    "ex-correlation-r0": [
        "What else changes in summer besides ice cream sales?",
        "Could a third variable drive both quantities?",
    ],
    "ex-correlation-r1": [
        "What drives both quantities up in summer?",
        "Is warm weather related to both measurements?",
    ],
    "ex-validation-set-r0": [
        "Which choices does the validation set guide?",
        "Why not tune hyperparameters on the test set?",
    ],
    "ex-knn-k-r0": [
        "How many neighbors shape each prediction when k is large?",
        "What does averaging over more neighbors do to the boundary?",
    ],
    "ex-gradient-sign-r0": [
        "In which direction does the loss decrease fastest?",
        "What does the update do with the gradient?",
    ],
    "ex-deep-tree-r0": [
        "How closely does the tree fit its training data?",
        "Does the tree change a lot when the sample changes?",
    ],
    "ex-standardize-r0": [
        "What happens to the distance when one feature has a larger scale?",
        "Do all features contribute equally before rescaling?",
    ],
    "ex-dropout-r0": [
        "Can the network rely on any single unit?",
        "What does the network learn when units keep disappearing?",
    ],
    "ex-stratified-r0": [
        "What do the class proportions look like in each split?",
        "Why should the splits mirror the original proportions?",
    ],
    "ex-early-stopping-r0": [
        "What has the model begun to do when validation loss rises?",
        "Which loss tells you about unseen data?",
    ],
    "ex-early-stopping-r1": [
        "What do further epochs add once validation loss rises?",
        "Is memorizing noise useful for new data?",
    ],
}

# Concept pool for question-writing examples and rating groups.
CONCEPTS = [
    ("the learning rate", "controls the size of each gradient step"),
    ("the test set", "estimates performance on unseen data"),
    ("the validation set", "guides hyperparameter choices"),
    ("a decision tree", "splits the data with threshold rules"),
    ("the loss function", "measures how wrong the predictions are"),
    ("gradient descent", "updates weights against the gradient"),
    ("regularization", "penalizes large weights"),
    ("dropout", "disables random units during training"),
    ("early stopping", "halts training when validation loss rises"),
    ("standardization", "rescales features to comparable ranges"),
    ("the median", "resists extreme values"),
    ("the mean", "follows outliers"),
    ("the variance", "measures spread around the mean"),
    ("overfitting", "memorizes training examples"),
    ("underfitting", "misses the underlying pattern"),
    ("a residual", "is the gap between prediction and truth"),
    ("the intercept", "shifts the prediction when all features are zero"),
    ("a feature weight", "scales that feature's contribution"),
    ("the decision boundary", "separates the predicted classes"),
    ("cross-validation", "reuses the data across several splits"),
    ("the confusion matrix", "counts each kind of classification outcome"),
    ("precision", "is the share of flagged cases that are real"),
    ("recall", "is the share of real cases that get flagged"),
    ("a class imbalance", "makes accuracy misleading"),
    ("the batch size", "sets how many examples share one update"),
]

SOURCE_FORMS = [
    "{np} {prop}",
    "{np} {prop} in most models",
    "in practice, {np} {prop}",
    "remember that {np} {prop}",
]

OPEN_QUESTIONS = [
    "What does {np} control?",
    "Why is {np} needed?",
    "What happens without {np}?",
    "How does {np} change the fit?",
]
BINARY_QUESTIONS = [
    "Is it true that {np} {prop}?",
    "Would you say that {np} {prop}?",
]
ALT_QUESTIONS = [
    "Should {np} be larger or smaller here?",
    "Does {np} mainly help or hurt generalization?",
]

GLOSSARY = [
    ("the data used to fit the model", "the training set"),
    ("the data held out for the final score", "the test set"),
    ("the gap between a prediction and the truth", "a residual"),
    ("the share of flagged cases that are real", "precision"),
    ("the share of real cases that get flagged", "recall"),
    ("a model that memorizes its training data", "an overfit model"),
    ("a model too simple for the pattern", "an underfit model"),
    ("the average of squared deviations from the mean", "the variance"),
    ("the middle value of a sorted sample", "the median"),
    ("the penalty added to the loss for large weights", "regularization"),
    ("the step-size knob of gradient descent", "the learning rate"),
    ("the table of per-class prediction outcomes", "the confusion matrix"),
    ("the curve of loss against training time", "the learning curve"),
    ("the split that guides hyperparameter choices", "the validation set"),
    ("a variable that takes only whole-number values", "a discrete variable"),
    ("a variable that takes any value in a range", "a continuous variable"),
    ("the line separating predicted classes", "the decision boundary"),
    ("training halted when validation loss rises", "early stopping"),
    ("rescaling features to comparable ranges", "standardization"),
    ("reusing data across several train-test splits", "cross-validation"),
    ("randomly disabling units during training", "dropout"),
    ("predicting a category for each input", "classification"),
    ("predicting a quantity for each input", "regression"),
    ("a dataset where one class dominates", "an imbalanced dataset"),
    ("sampling that keeps class proportions", "stratified sampling"),
    ("the number of examples sharing one update", "the batch size"),
    ("one full pass over the training data", "an epoch"),
    ("the weights' starting values before training", "the initialization"),
    ("the function measuring prediction error", "the loss function"),
    ("the per-feature multiplier in a linear model", "a weight"),
]

GLOSSARY_FORMS = [
    "What do we call {desc}?",
    "Which term names {desc}?",
    "What is the name for {desc}?",
    "What term describes {desc}?",
    "Which concept is {desc}?",
]

ARITH_OPS = [("plus", lambda a, b: a + b), ("minus", lambda a, b: a - b), ("times", lambda a, b: a * b)]


def write_jsonl(path: Path, rows) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")


def make_exercises() -> None:
    write_jsonl(DATA / "exercises.jsonl", EXERCISES)


def make_question_bank() -> None:
    rng = random.Random(7)
    rows = []
    for exercise in EXERCISES:
        for ref in exercise["references"]:
            for rank, question in enumerate(BANK_QUESTIONS[ref["id"]]):
                rows.append(
                    {
                        "reference_id": ref["id"],
                        "rank": rank,
                        "question": question,
                        "model_score": round(-0.3 * (rank + 1) - rng.uniform(0.0, 0.2), 4),
                        "confidence_loss": round(0.2 * (rank + 1) + rng.uniform(0.0, 0.1), 4),
                        "predicted_usefulness": round(4.3 - 0.9 * rank - rng.uniform(0.0, 0.3), 4),
                    }
                )
    write_jsonl(DATA / "question_bank.jsonl", rows)


def make_qg_dataset() -> None:
    rng = random.Random(11)
    rows = []
    n = 0
    for np_, prop in CONCEPTS:
        for form in SOURCE_FORMS:
            source = form.format(np=np_, prop=prop)
            for _ in range(3):
                n += 1
                kind = rng.choices(
                    ["open_ended", "binary", "binary_alternatives"], weights=[5, 3, 2]
                )[0]
                if kind == "open_ended":
                    target = rng.choice(OPEN_QUESTIONS).format(np=np_)
                elif kind == "binary":
                    target = rng.choice(BINARY_QUESTIONS).format(np=np_, prop=prop)
                else:
                    target = rng.choice(ALT_QUESTIONS).format(np=np_)
                rows.append(
                    {
                        "id": f"qg-{n:03d}",
                        "source": source,
                        "target": target,
                        "question_type": kind,
                    }
                )
    assert len(rows) == 300, len(rows)
    write_jsonl(DATA / "qg_dataset.jsonl", rows)


def make_annotations() -> None:
    rng = random.Random(23)
    combos = [(np_, prop, form) for np_, prop in CONCEPTS for form in SOURCE_FORMS]
    rng.shuffle(combos)
    rows = []
    for g, (np_, prop, form) in enumerate(combos[:60], start=1):
        reference = form.format(np=np_, prop=prop)
        group = f"ann-g{g:02d}"
        candidates = [
            (rng.choice(OPEN_QUESTIONS).format(np=np_), (4, 5), (0.1, 0.6)),
            (rng.choice(ALT_QUESTIONS).format(np=np_), (3, 4), (0.3, 0.9)),
            (
                rng.choice(BINARY_QUESTIONS).format(np=np_, prop=prop),
                (2, 4),
                (0.4, 1.2),
            ),
            (f"think about {np_} for a while", (1, 2), (0.8, 2.0)),
        ]
        # best-first order would let a constant predictor tie the ranking
        rng.shuffle(candidates)
        for question, rating_range, loss_range in candidates:
            row = {
                "example_id": group,
                "reference_text": reference,
                "question": question,
                "rating": rng.randint(*rating_range),
                "annotator_id": f"rater-{rng.randint(1, 5)}",
            }
            loss = round(rng.uniform(*loss_range), 3)
            if loss:
                row["confidence_loss"] = loss
            rows.append(row)
    write_jsonl(DATA / "annotations.jsonl", rows)


def make_qa_pairs() -> None:
    rng = random.Random(31)
    rows = []
    seen = set()
    while len(rows) < 400:
        a, b = rng.randint(2, 97), rng.randint(2, 97)
        name, fn = ARITH_OPS[rng.randrange(3)]
        question = f"What is {a} {name} {b}?"
        if question in seen:
            continue
        seen.add(question)
        rows.append({"question": question, "answer": str(fn(a, b))})
    for desc, term in GLOSSARY:
        for form in GLOSSARY_FORMS:
            rows.append({"question": form.format(desc=desc), "answer": term})
    assert len(rows) == 550, len(rows)
    rng.shuffle(rows)
    for i, row in enumerate(rows, start=1):
        row["id"] = f"qa-{i:04d}"
    write_jsonl(
        DATA / "qa_pairs.jsonl",
        [{"id": r["id"], "question": r["question"], "answer": r["answer"]} for r in rows],
    )


GIVE_UP = "Let's move to another problem."
RETRY_FEEDBACK = {
    "minimal": "That's not quite right. Please try again.",
    "non_question": "Look at the key quantity in the problem and check your reasoning once more.",
    "question_based": "\"{answer}\" is incorrect. {question}",
}
FIRST_TRY = {"minimal": 0.30, "non_question": 0.32, "question_based": 0.34}
AFTER_FEEDBACK = {"minimal": 0.25, "non_question": 0.40, "question_based": 0.55}


def make_interactions() -> None:
    rng = random.Random(41)
    clock = datetime(2026, 3, 2, 9, 0, 0, tzinfo=timezone.utc)
    rows = []
    models = ["minimal", "non_question", "question_based"]
    for s in range(1, 46):
        model = models[(s - 1) % 3]
        session = f"demo-{s:03d}"
        exercise = EXERCISES[rng.randrange(len(EXERCISES))]
        ref = exercise["references"][0]
        wrong_answers = [
            "I am not sure",
            "Maybe the opposite is true",
            ref["text"].split(",")[0],
        ]
        rng.shuffle(wrong_answers)
        for attempt in range(1, 4):
            clock += timedelta(seconds=rng.randint(20, 90))
            p = FIRST_TRY[model] if attempt == 1 else AFTER_FEEDBACK[model]
            correct = rng.random() < p
            if correct:
                feedback = None
            elif attempt == 3:
                feedback = GIVE_UP
            elif model == "question_based":
                feedback = RETRY_FEEDBACK[model].format(
                    answer=wrong_answers[attempt - 1],
                    question=BANK_QUESTIONS[ref["id"]][0],
                )
            else:
                feedback = RETRY_FEEDBACK[model]
            rows.append(
                {
                    "session_id": session,
                    "exercise_id": exercise["id"],
                    "student_answer": ref["text"] if correct else wrong_answers[attempt - 1],
                    "feedback_shown": feedback,
                    "checker_verdict": correct,
                    "attempt_index": attempt,
                    "feedback_model": model,
                    "timestamp": clock.isoformat(),
                }
            )
            if correct or attempt == 3:
                break
    write_jsonl(DATA / "interactions.jsonl", rows)


def make_service_config() -> None:
    config = {
        "exercises_path": "data/exercises.jsonl",
        "question_bank_path": "data/question_bank.jsonl",
        "interactions_path": "runs/service_interactions.jsonl",
        "embedding_backend": "stub",
        "embedding_dim": 256,
        "embedding_seed": 0,
        "tau": 0.8,
        "tau_checker": 0.8,
        "k": 3,
        "max_attempts": 3,
        "feedback_model_label": "question_based",
        "host": "127.0.0.1",
        "port": 8000,
    }
    (DATA / "service_config.json").write_text(
        json.dumps(config, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )


def main() -> None:
    DATA.mkdir(parents=True, exist_ok=True)
    make_exercises()
    make_question_bank()
    make_qg_dataset()
    make_annotations()
    make_qa_pairs()
    make_interactions()
    make_service_config()
    for name in sorted(p.name for p in DATA.iterdir()):
        print(name)


if __name__ == "__main__":
    main()
