import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from socratic import (
    FeatureVector,
    HeuristicScorers,
    MeanBaselineRegressor,
    QuestionCandidate,
    RerankerModel,
    UsefulnessRegressor,
    extract_features,
    fit_mean_baseline,
    fit_ols,
    predict_usefulness,
    rerank,
)
from socratic.reranker import (
    CharNgramLM,
    FixedScorers,
    SCALAR_FEATURES,
    load_model,
    question_type_score,
    save_model,
)


def fv(embedding, wf=1.0, fluency=-10.0, confidence=-0.1, qts=1.0):
    return FeatureVector(
        sentence_embedding=tuple(float(v) for v in embedding),
        well_formedness=wf,
        fluency=fluency,
        model_confidence=confidence,
        question_type_score=qts,
    )


def rows_from(x, y):
    return [(fv(row), float(target)) for row, target in zip(x, y)]


# ---------------------------------------------------------------------------
# question form scoring


@pytest.mark.parametrize(
    "question,score",
    [
        ("What makes this true?", 1.0),
        ("why is that?", 1.0),
        ("How does it work?", 1.0),
        ("\"Which\" option fits?", 1.0),
        ("Is it discrete or continuous?", 0.8),
        ("Do we prefer more homogeneous results or less?", 0.8),
        ("Is this right?", 0.5),
        ("Does it matter?", 0.5),
    ],
)
def test_question_type_score(question, score):
    assert question_type_score(question) == score


def test_question_type_score_rejects_empty():
    with pytest.raises(ValueError):
        question_type_score("   ")


# ---------------------------------------------------------------------------
# feature extraction


def test_feature_layout_dimensions():
    scorers = FixedScorers()
    features = extract_features("Why?", QuestionCandidate("Why?", -0.5, 0.25), scorers)
    flat = features.to_list()
    assert len(flat) == 768 + SCALAR_FEATURES
    assert flat[-4] == 0.5  # well-formedness from the fixed scorer
    assert flat[-3] == -10.0  # fluency = negative perplexity
    assert flat[-2] == -0.25  # confidence = negative loss
    assert flat[-1] == 1.0  # wh-question


def test_feature_vector_roundtrip():
    features = fv(np.arange(4) / 10.0, wf=0.75, fluency=-3.0, confidence=-0.5, qts=0.8)
    again = FeatureVector.from_list(features.to_list())
    assert again == features


def test_feature_vector_validation():
    with pytest.raises(ValueError):
        fv([0.1], wf=1.5)
    with pytest.raises(ValueError):
        fv([0.1], fluency=2.0)
    with pytest.raises(ValueError):
        fv([0.1], qts=0.9)
    with pytest.raises(ValueError):
        fv([float("nan")])


def test_heuristic_scorers_well_formedness():
    scorers = HeuristicScorers()
    assert scorers.well_formed_prob("What makes it true?") == 1.0
    assert scorers.well_formed_prob("What makes it true") == 0.75
    assert scorers.well_formed_prob("it broke?") == 0.75
    assert scorers.well_formed_prob("it broke") == 0.5


def test_char_lm_prefers_training_distribution():
    lm = CharNgramLM().fit(["what makes the model fit?", "what does the weight do?"])
    seen = lm.perplexity("what does the model do?")
    unseen = lm.perplexity("zzxqj vvkpt qqq")
    assert seen < unseen


# ---------------------------------------------------------------------------
# least squares


def test_ols_recovers_planted_weights():
    rng = np.random.default_rng(5)
    x = rng.standard_normal((40, 6))
    w = rng.standard_normal(6)
    y = x @ w + 2.5
    model = fit_ols(rows_from(x, y))
    holdout = rng.standard_normal((10, 6))
    predictions = [predict_usefulness(model, fv(row)) for row in holdout]
    assert np.allclose(predictions, holdout @ w + 2.5, atol=1e-8)


def test_ols_residual_gradient_vanishes():
    rng = np.random.default_rng(6)
    x = rng.standard_normal((80, 10))
    y = rng.standard_normal(80)
    rows = rows_from(x, y)
    model = fit_ols(rows)
    flat = np.array([f.to_list() for f, _ in rows])
    design = np.hstack([np.ones((80, 1)), flat])
    gradient = design.T @ (design @ np.array(model.weights) - y)
    assert np.linalg.norm(gradient) <= 1e-6


def test_ridge_shrinks_but_keeps_intercept_free():
    rng = np.random.default_rng(7)
    x = rng.standard_normal((60, 4))
    y = x @ np.array([3.0, -2.0, 1.0, 0.5]) + 4.0
    plain = fit_ols(rows_from(x, y))
    ridged = fit_ols(rows_from(x, y), ridge=50.0)
    assert np.linalg.norm(ridged.weights[1:]) < np.linalg.norm(plain.weights[1:])
    # the unpenalized intercept keeps predictions centered
    assert abs(np.mean([predict_usefulness(ridged, fv(r)) for r in x]) - y.mean()) < 0.2


def test_mean_baseline_predicts_training_mean():
    rng = np.random.default_rng(8)
    x = rng.standard_normal((30, 3))
    y = rng.uniform(1, 5, 30)
    model = fit_mean_baseline(rows_from(x, y))
    assert model.training_mean == pytest.approx(y.mean())
    fresh = rng.standard_normal(3)
    assert predict_usefulness(model, fv(fresh)) == pytest.approx(y.mean())


def test_fit_requires_two_rows():
    with pytest.raises(ValueError):
        fit_ols(rows_from(np.ones((1, 2)), [1.0]))


def test_predict_checks_dimension():
    model = fit_mean_baseline(rows_from(np.ones((3, 2)), [1.0, 2.0, 3.0]))
    with pytest.raises(ValueError):
        predict_usefulness(model, [1.0, 2.0, 3.0])


def test_rerank_picks_highest_and_writes_back():
    rng = np.random.default_rng(9)
    x = rng.standard_normal((20, 5))
    y = x[:, 0] * 2.0 + 1.0
    model = fit_ols(rows_from(x, y))
    candidates = []
    for i, row in enumerate(rng.standard_normal((4, 5))):
        cand = QuestionCandidate(f"q{i}?", -0.1 * i, 0.1 * i, features=fv(row))
        candidates.append(cand)
    best = rerank(candidates, model)
    assert all(c.predicted_usefulness is not None for c in candidates)
    assert best.predicted_usefulness == max(c.predicted_usefulness for c in candidates)


def test_rerank_tie_keeps_earliest():
    # fv() pads 2 embedding dims with the 4 scalar features
    model = RerankerModel(feature_dimension=6, weights=[1.0] + [0.0] * 6, training_mean=1.0)
    cands = [
        QuestionCandidate("first?", -0.1, 0.1, features=fv([0.0, 0.0])),
        QuestionCandidate("second?", -0.2, 0.2, features=fv([0.0, 0.0])),
    ]
    assert rerank(cands, model).question == "first?"


def test_rerank_requires_features():
    model = RerankerModel(feature_dimension=6, weights=[1.0] + [0.0] * 6, training_mean=1.0)
    with pytest.raises(ValueError):
        rerank([QuestionCandidate("q?", -0.1, 0.1)], model)


def test_model_file_roundtrip(tmp_path):
    model = fit_mean_baseline(rows_from(np.eye(3), [1.0, 2.0, 3.0]))
    path = tmp_path / "model.json"
    save_model(path, model)
    loaded = load_model(path)
    assert list(loaded.weights) == [float(w) for w in model.weights]
    assert loaded.feature_dimension == model.feature_dimension
    assert loaded.training_mean == model.training_mean


# ---------------------------------------------------------------------------
# estimator-style wrappers


def test_sklearn_wrappers_match_plain_fits():
    rng = np.random.default_rng(10)
    x = rng.standard_normal((50, 4))
    y = x @ np.array([1.0, 2.0, -1.0, 0.0]) + 3.0
    est = UsefulnessRegressor().fit(x, y)
    assert np.allclose(est.predict(x), y, atol=1e-8)
    design = np.hstack([np.ones((50, 1)), x])
    direct, *_ = np.linalg.lstsq(design, y, rcond=None)
    assert np.allclose(est.to_model().weights, direct)

    baseline = MeanBaselineRegressor().fit(x, y)
    assert np.allclose(baseline.predict(x), y.mean())


def test_sklearn_wrapper_is_clonable():
    from sklearn.base import clone

    est = UsefulnessRegressor(ridge=2.0)
    assert clone(est).ridge == 2.0


@settings(max_examples=50, deadline=None)
@given(st.integers(min_value=2, max_value=30), st.integers(min_value=1, max_value=8))
def test_ols_never_beats_itself_on_training_mse(n, p):
    rng = np.random.default_rng(n * 31 + p)
    x = rng.standard_normal((n, p))
    y = rng.standard_normal(n)
    ols = fit_ols(rows_from(x, y))
    mean = fit_mean_baseline(rows_from(x, y))
    mse = lambda m: np.mean(
        [(predict_usefulness(m, fv(r)) - t) ** 2 for r, t in zip(x, y)]
    )
    assert mse(ols) <= mse(mean) + 1e-9
