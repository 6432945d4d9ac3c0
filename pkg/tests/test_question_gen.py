import pytest

from socratic import (
    CapabilityError,
    Exercise,
    MemorizingGeneratorBackend,
    QGExample,
    ReferenceSolution,
    SplitPartition,
    TemplateGeneratorBackend,
    TrainConfig,
    build_question_bank,
    fine_tune_qg,
    generate_candidates,
    load_question_bank,
    save_question_bank,
)
from socratic.question_gen import (
    CannedGeneratorBackend,
    GenerationError,
    normalize_question,
    question_source,
)
from socratic.reranker import FixedScorers, fit_mean_baseline, extract_features
from socratic.corpus import QuestionCandidate


def ref(text: str, rid: str = "r0") -> ReferenceSolution:
    return ReferenceSolution(id=rid, text=text)


def test_question_source_prefers_cause():
    r = ref("No, the feature has 0 weight in the model function.")
    assert question_source(r) == "the feature has 0 weight in the model function."


def test_question_source_falls_back_to_text():
    r = ref("Choosing hyperparameters")
    assert question_source(r) == "Choosing hyperparameters"


@pytest.mark.parametrize(
    "raw,expected",
    [
        ("Why is that", "Why is that?"),
        ("Why is that?", "Why is that?"),
        ("Why is that???", "Why is that?"),
        ("  Why is that  ", "Why is that?"),
    ],
)
def test_normalize_question(raw, expected):
    assert normalize_question(raw) == expected


def test_generate_candidates_orders_and_normalizes():
    backend = TemplateGeneratorBackend()
    cands = generate_candidates(ref("The model overfits, because it memorized examples"), backend, k=4)
    assert len(cands) == 4
    assert all(c.question.endswith("?") for c in cands)
    scores = [c.model_score for c in cands]
    assert scores == sorted(scores, reverse=True)
    assert all(c.confidence_loss >= 0 for c in cands)


def test_generate_candidates_rejects_bad_k():
    with pytest.raises(ValueError):
        generate_candidates(ref("alpha"), TemplateGeneratorBackend(), k=0)


def test_generate_candidates_validates_backend_output():
    class Unsorted:
        def generate(self, source, beams, max_out):
            return [("a?", -2.0, 0.1), ("b?", -1.0, 0.2)]

    with pytest.raises(GenerationError):
        generate_candidates(ref("alpha beta"), Unsorted(), k=2)


def test_canned_backend_table_lookup():
    backend = CannedGeneratorBackend(
        {"alpha": [("Why alpha?", -0.1, 0.1)]}, default=[("Generic?", -1.0, 1.0)]
    )
    assert backend.generate("alpha", 1, 150)[0][0] == "Why alpha?"
    assert backend.generate("beta", 1, 150)[0][0] == "Generic?"


def test_memorizing_backend_trains_and_recalls():
    backend = MemorizingGeneratorBackend()
    config = TrainConfig(epochs=2)
    backend.fine_tune([("src a", "Why a?")], [("src a", "Why a?")], config)
    assert backend.validation_losses == [0.0, 0.0]
    beams = backend.generate("src a", beams=3, max_out=150)
    assert beams[0][0] == "Why a?"
    assert beams[0][1] == max(b[1] for b in beams)
    # unseen source gets deterministic placeholders
    again = backend.generate("novel", beams=2, max_out=150)
    assert again == backend.generate("novel", beams=2, max_out=150)


def test_memorizing_backend_roundtrip(tmp_path):
    backend = MemorizingGeneratorBackend()
    backend.fine_tune([("s", "T?")], [], TrainConfig(epochs=1))
    path = tmp_path / "model.json"
    backend.to_json_file(path)
    loaded = MemorizingGeneratorBackend.from_json_file(path)
    assert loaded.memory == {"s": "T?"}
    assert loaded.generate("s", 1, 150) == backend.generate("s", 1, 150)


def test_fine_tune_qg_requires_trainable_backend():
    partition = SplitPartition(
        train=[QGExample(id="1", source="s", target="T?", question_type="open_ended")],
        valid=[],
        test=[],
    )
    with pytest.raises(CapabilityError):
        fine_tune_qg(partition, TemplateGeneratorBackend())


def test_train_config_rejects_nonpositive():
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)
    with pytest.raises(ValueError):
        TrainConfig(learning_rate=-1.0)


def test_build_bank_fills_references_and_reports_skips():
    good = Exercise(id="e1", problem="p?", references=[ref("alpha beta gamma", "e1r0")])
    exercises = [good]
    rows = [(extract_features("Why?", QuestionCandidate("Why?", -0.1, 0.1), FixedScorers()), 3.0),
            (extract_features("What?", QuestionCandidate("What?", -0.2, 0.2), FixedScorers()), 4.0)]
    model = fit_mean_baseline(rows)
    report = build_question_bank(exercises, TemplateGeneratorBackend(), model, FixedScorers(), k=3)
    assert report.banked_references == 1
    assert report.skipped == []
    bank = good.references[0].question_bank
    assert len(bank) == 3
    assert all(c.predicted_usefulness is not None for c in bank)
    assert good.references[0].decomposition is not None


def test_build_bank_skips_failing_reference():
    class Exploding:
        def generate(self, source, beams, max_out):
            raise RuntimeError("no gpu")

    exercises = [Exercise(id="e1", problem="p?", references=[ref("alpha", "e1r0")])]
    rows = [(extract_features("Why?", QuestionCandidate("Why?", -0.1, 0.1), FixedScorers()), 3.0),
            (extract_features("What?", QuestionCandidate("What?", -0.2, 0.2), FixedScorers()), 4.0)]
    report = build_question_bank(exercises, Exploding(), fit_mean_baseline(rows), FixedScorers())
    assert report.banked_references == 0
    assert len(report.skipped) == 1
    assert report.skipped[0][0] == "e1r0"


def test_bank_file_roundtrip(tmp_path):
    exercises = [Exercise(id="e1", problem="p?", references=[ref("alpha beta", "e1r0")])]
    rows = [(extract_features("Why?", QuestionCandidate("Why?", -0.1, 0.1), FixedScorers()), 3.0),
            (extract_features("What?", QuestionCandidate("What?", -0.2, 0.2), FixedScorers()), 4.0)]
    build_question_bank(exercises, TemplateGeneratorBackend(), fit_mean_baseline(rows), FixedScorers(), k=2)
    path = tmp_path / "bank.jsonl"
    save_question_bank(path, exercises)

    fresh = [Exercise(id="e1", problem="p?", references=[ref("alpha beta", "e1r0")])]
    applied = load_question_bank(path, fresh)
    assert applied == 2
    original = exercises[0].references[0].question_bank
    loaded = fresh[0].references[0].question_bank
    assert [c.question for c in loaded] == [c.question for c in original]
    assert [c.predicted_usefulness for c in loaded] == [
        c.predicted_usefulness for c in original
    ]
    assert loaded[0].features.to_list() == original[0].features.to_list()
