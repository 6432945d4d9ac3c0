"""Command-line interface: exit codes, artifacts, and manifests."""

import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from socratic.cli import main
from socratic.corpus import (
    Exercise,
    InteractionRecord,
    QGExample,
    QuestionCandidate,
    ReferenceSolution,
    UsefulnessAnnotation,
    save_annotations,
    save_exercises,
    save_qg_examples,
    write_jsonl,
)
from socratic.hint_qa import QAPair, save_qa_pairs

REF_TEXT = "the lasso, because the l1 penalty has corners"


@pytest.fixture()
def runner():
    return CliRunner()


def make_qg_file(path, n=12):
    save_qg_examples(
        path,
        [
            QGExample(
                id=f"qg-{i}", source=f"the quantity {i} is discrete",
                target=f"is quantity {i} discrete or continuous?",
                question_type="open_ended",
            )
            for i in range(n)
        ],
    )


def read_manifest(path):
    text = Path(path).read_text(encoding="utf-8")
    assert "timestamp" not in text and "date" not in text
    payload = json.loads(text)
    # manifests are canonical: keys sorted, so reserialization is stable
    assert text == json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    return payload


# ---------------------------------------------------------------------------
# split


def test_split_writes_partition_and_manifest(runner, tmp_path):
    data = tmp_path / "qg.jsonl"
    make_qg_file(data)
    out = tmp_path / "splits"
    result = runner.invoke(
        main, ["split", "--input", str(data), "--out-dir", str(out), "--ratio", "4:1:1"]
    )
    assert result.exit_code == 0, result.output
    assert "12 examples -> 8/2/2" in result.output
    manifest = read_manifest(out / "manifest.json")
    assert manifest["command"] == "split"
    assert manifest["counts"] == {"train": 8, "valid": 2, "test": 2}
    assert manifest["config"]["ratio"] == [4, 1, 1]
    train_lines = (out / "train.jsonl").read_text().splitlines()
    assert len(train_lines) == 8
    assert all((out / name).exists() for name in ("train.jsonl", "valid.jsonl", "test.jsonl"))


def test_split_is_deterministic(runner, tmp_path):
    data = tmp_path / "qg.jsonl"
    make_qg_file(data)
    outputs = []
    for name in ("a", "b"):
        out = tmp_path / name
        result = runner.invoke(
            main,
            ["split", "--input", str(data), "--out-dir", str(out), "--ratio", "4:1:1"],
        )
        assert result.exit_code == 0
        outputs.append(
            {f.name: f.read_bytes() for f in sorted(out.iterdir())}
        )
    assert outputs[0] == outputs[1]


def test_split_usage_errors_exit_2(runner, tmp_path):
    data = tmp_path / "qg.jsonl"
    make_qg_file(data)
    no_input = runner.invoke(main, ["split", "--out-dir", str(tmp_path / "x")])
    assert no_input.exit_code == 2

    missing = runner.invoke(
        main,
        ["split", "--input", str(tmp_path / "ghost.jsonl"), "--out-dir", str(tmp_path / "x")],
    )
    assert missing.exit_code == 2

    for bad_ratio in ("4:1", "a:b:c", "4:0:1"):
        result = runner.invoke(
            main,
            ["split", "--input", str(data), "--out-dir", str(tmp_path / "x"),
             "--ratio", bad_ratio],
        )
        assert result.exit_code == 2, bad_ratio
        assert "ratio" in result.output


def test_split_runtime_errors_exit_1_with_stage(runner, tmp_path):
    bad = tmp_path / "bad.jsonl"
    bad.write_text("not json\n", encoding="utf-8")
    result = runner.invoke(
        main, ["split", "--input", str(bad), "--out-dir", str(tmp_path / "x")]
    )
    assert result.exit_code == 1
    assert "[split]" in result.output


# ---------------------------------------------------------------------------
# train-qg / eval-gen


def test_train_qg_writes_model_and_manifest(runner, tmp_path):
    train = tmp_path / "train.jsonl"
    valid = tmp_path / "valid.jsonl"
    make_qg_file(train, n=6)
    make_qg_file(valid, n=6)
    out = tmp_path / "qg_model.json"
    result = runner.invoke(
        main,
        ["train-qg", "--train", str(train), "--valid", str(valid),
         "--out", str(out), "--epochs", "3"],
    )
    assert result.exit_code == 0, result.output
    model = json.loads(out.read_text())
    assert len(model["memory"]) == 6
    assert len(model["validation_losses"]) == 3
    manifest = read_manifest(str(out) + ".manifest.json")
    assert manifest["command"] == "train-qg"
    assert manifest["config"]["epochs"] == 3


def test_eval_gen_reports_metrics(runner, tmp_path):
    test_file = tmp_path / "test.jsonl"
    make_qg_file(test_file, n=4)
    out = tmp_path / "gen_report.json"
    result = runner.invoke(
        main, ["eval-gen", "--test", str(test_file), "--out", str(out)]
    )
    assert result.exit_code == 0, result.output
    assert "bleu1" in result.output
    manifest = read_manifest(out)
    assert manifest["command"] == "eval-gen"
    report = manifest["report"]
    assert report["n_examples"] == 4
    assert 0.0 <= report["bleu1"] <= 100.0


def test_eval_gen_memorize_backend_scores_100(runner, tmp_path):
    test_file = tmp_path / "test.jsonl"
    make_qg_file(test_file, n=4)
    model_path = tmp_path / "model.json"
    train_result = runner.invoke(
        main,
        ["train-qg", "--train", str(test_file), "--valid", str(test_file),
         "--out", str(model_path)],
    )
    assert train_result.exit_code == 0
    result = runner.invoke(
        main,
        ["eval-gen", "--test", str(test_file), "--backend", f"memorize:{model_path}"],
    )
    assert result.exit_code == 0, result.output
    assert "bleu1: 100.00" in result.output


def test_eval_gen_unknown_backend_exit_2(runner, tmp_path):
    test_file = tmp_path / "test.jsonl"
    make_qg_file(test_file, n=4)
    result = runner.invoke(
        main, ["eval-gen", "--test", str(test_file), "--backend", "magic"]
    )
    assert result.exit_code == 2
    assert "unknown backend" in result.output


# ---------------------------------------------------------------------------
# train-reranker / build-bank


def make_annotations_file(path, groups=6):
    rows = []
    for g in range(groups):
        for rank, rating in enumerate((5, 3, 2, 1)):
            rows.append(
                UsefulnessAnnotation(
                    example_id=f"ex-{g}",
                    reference_text=f"result {g}, because of reason {g}",
                    question=f"why does reason {g} rank {rank} matter?",
                    rating=rating,
                    annotator_id=f"a{rank % 2}",
                    confidence_loss=0.1 * (rank + 1),
                )
            )
    save_annotations(path, rows)


def test_train_reranker_and_build_bank(runner, tmp_path):
    annotations = tmp_path / "annotations.jsonl"
    make_annotations_file(annotations)
    model_path = tmp_path / "reranker.json"
    trained = runner.invoke(
        main,
        ["train-reranker", "--annotations", str(annotations), "--out", str(model_path)],
    )
    assert trained.exit_code == 0, trained.output
    manifest = read_manifest(str(model_path) + ".manifest.json")
    assert manifest["command"] == "train-reranker"
    assert "mse" in manifest["train_metrics"]

    exercises = tmp_path / "exercises.jsonl"
    save_exercises(
        exercises,
        [
            Exercise(
                id="ex-a", problem="Why does the loss plateau?",
                references=[
                    ReferenceSolution(
                        id="ex-a-r0",
                        text="the loss plateaus, because the gradient vanishes",
                    )
                ],
            )
        ],
    )
    bank = tmp_path / "bank.jsonl"
    banked = runner.invoke(
        main,
        ["build-bank", "--exercises", str(exercises), "--out", str(bank),
         "--reranker", str(model_path)],
    )
    assert banked.exit_code == 0, banked.output
    manifest = read_manifest(str(bank) + ".manifest.json")
    assert manifest["banked_references"] == 1
    assert manifest["skipped"] == []
    rows = [json.loads(line) for line in bank.read_text().splitlines()]
    assert {row["reference_id"] for row in rows} == {"ex-a-r0"}
    assert all("predicted_usefulness" in row for row in rows)


def test_eval_reranker_prints_table(runner, tmp_path):
    annotations = tmp_path / "annotations.jsonl"
    make_annotations_file(annotations, groups=8)
    result = runner.invoke(
        main, ["eval-reranker", "--annotations", str(annotations)]
    )
    assert result.exit_code == 0, result.output
    assert "mse" in result.output
    assert "usefulness" in result.output
    assert "mean" in result.output and "ols" in result.output


# ---------------------------------------------------------------------------
# eval-gains


def test_eval_gains_table_and_filter(runner, tmp_path):
    log = tmp_path / "interactions.jsonl"
    records = []
    for model, win in (("minimal", False), ("question_based", True)):
        records.append(
            InteractionRecord(
                session_id=f"s-{model}", exercise_id="e", student_answer="a",
                checker_verdict=False, attempt_index=1,
                feedback_model=model, feedback_shown="f",
            ).to_dict()
        )
        records.append(
            InteractionRecord(
                session_id=f"s-{model}", exercise_id="e", student_answer="a",
                checker_verdict=win, attempt_index=2,
                feedback_model=model, feedback_shown=None if win else "f2",
            ).to_dict()
        )
    write_jsonl(log, records)

    result = runner.invoke(main, ["eval-gains", "--interactions", str(log)])
    assert result.exit_code == 0, result.output
    assert "question_based" in result.output and "minimal" in result.output

    filtered = runner.invoke(
        main, ["eval-gains", "--interactions", str(log), "--model", "question_based"]
    )
    assert filtered.exit_code == 0
    assert "question_based" in filtered.output
    assert "minimal" not in filtered.output
    assert "100.0" in filtered.output


# ---------------------------------------------------------------------------
# hintqa


def test_hintqa_builds_chain_artifacts(runner, tmp_path):
    qa = tmp_path / "qa.jsonl"
    save_qa_pairs(
        qa,
        [
            QAPair(id=f"qa-{i}", question=f"what is четыре plus {i}?",
                   answer=f"the sum is {4 + i}")
            for i in range(10)
        ],
    )
    out = tmp_path / "chain"
    result = runner.invoke(
        main,
        ["hintqa", "--qa", str(qa), "--out-dir", str(out), "--ratio", "6:2:2"],
    )
    assert result.exit_code == 0, result.output
    for name in (
        "qa_train.jsonl", "qa_valid.jsonl", "qa_test.jsonl",
        "hint_triples.jsonl", "hqa_dataset.jsonl", "predictions.jsonl",
    ):
        assert (out / name).exists(), name
    manifest = read_manifest(out / "manifest.json")
    assert manifest["counts"] == {"train": 6, "valid": 2, "test": 2}
    assert not set(manifest["train_ids"]) & set(manifest["test_ids"])
    predictions = [
        json.loads(line) for line in (out / "predictions.jsonl").read_text().splitlines()
    ]
    assert len(predictions) == 2
    assert all(
        set(p) == {"id", "question", "gold", "machine_answer", "hint", "answer"}
        for p in predictions
    )


# ---------------------------------------------------------------------------
# serve / chat


def test_serve_reports_setup_failures(runner, tmp_path):
    config = tmp_path / "config.json"
    config.write_text(
        json.dumps({"exercises_path": str(tmp_path / "ghost.jsonl")}),
        encoding="utf-8",
    )
    result = runner.invoke(main, ["serve", "--config", str(config)])
    assert result.exit_code == 1
    assert "[serve]" in result.output


def test_serve_rejects_bad_port_override(runner, tmp_path):
    exercises = tmp_path / "ex.jsonl"
    save_exercises(
        exercises,
        [Exercise(id="e", problem="p?",
                  references=[ReferenceSolution(id="r", text="answer text")])],
    )
    config = tmp_path / "config.json"
    config.write_text(json.dumps({"exercises_path": str(exercises)}), encoding="utf-8")
    result = runner.invoke(
        main, ["serve", "--config", str(config), "--port", "99999"]
    )
    assert result.exit_code == 1
    assert "[serve]" in result.output and "port" in result.output


def test_chat_replays_a_full_dialogue(runner, tmp_path):
    exercises = tmp_path / "exercises.jsonl"
    save_exercises(
        exercises,
        [
            Exercise(
                id="ex-chat",
                problem="Which regularizer can zero out weights, and why?",
                references=[
                    ReferenceSolution(
                        id="ex-chat-r0", text=REF_TEXT,
                        question_bank=[
                            QuestionCandidate(
                                "What does the l1 penalty look like at zero?",
                                -0.1, 0.1,
                            )
                        ],
                    )
                ],
            )
        ],
    )
    log = tmp_path / "chat_log.jsonl"
    result = runner.invoke(
        main,
        ["chat", "--exercises", str(exercises), "--exercise", "ex-chat",
         "--log", str(log)],
        input="the lasso\nit looks pointy\n" + REF_TEXT + "\n",
    )
    assert result.exit_code == 0, result.output
    assert "Which regularizer can zero out weights, and why?" in result.output
    assert '"the lasso" is correct! Try supplying a reason for it.' in result.output
    assert "Ok, now try to answer the original exercise." in result.output
    assert "That's correct!" in result.output
    attempts = [json.loads(line) for line in log.read_text().splitlines()]
    assert [a["checker_verdict"] for a in attempts] == [False, True]


def test_chat_shows_mcq_options(runner, tmp_path):
    exercises = tmp_path / "exercises.jsonl"
    save_exercises(
        exercises,
        [
            Exercise(
                id="ex-chat", problem="p?",
                references=[ReferenceSolution(id="r0", text=REF_TEXT)],
            )
        ],
    )
    result = runner.invoke(
        main,
        ["chat", "--exercises", str(exercises), "--exercise", "ex-chat"],
        input=(
            "we would pick ridge regression instead because the l1 penalty has corners\n"
            "Yes, I agree\n"
        ),
    )
    assert result.exit_code == 0, result.output
    assert "  [Yes, I agree]" in result.output
    assert "  [No, I disagree]" in result.output
    assert "That's correct!" in result.output


def test_chat_unknown_exercise_exit_1(runner, tmp_path):
    exercises = tmp_path / "exercises.jsonl"
    save_exercises(
        exercises,
        [Exercise(id="e", problem="p?",
                  references=[ReferenceSolution(id="r", text="answer text")])],
    )
    result = runner.invoke(
        main,
        ["chat", "--exercises", str(exercises), "--exercise", "ghost"],
        input="",
    )
    assert result.exit_code == 1
    assert "[chat]" in result.output


def test_version_and_help(runner):
    assert runner.invoke(main, ["--version"]).exit_code == 0
    help_result = runner.invoke(main, ["--help"])
    assert help_result.exit_code == 0
    for command in ("split", "train-qg", "build-bank", "train-reranker",
                    "eval-gen", "eval-reranker", "eval-gains", "hintqa",
                    "serve", "chat"):
        assert command in help_result.output
