"""Command-line entry point for the whole pipeline.

Every subcommand is reproducible: stub backends are the default, seeds are
explicit flags, and each run writes a machine-readable manifest of its
resolved configuration and outputs. Manifests and reports carry no
timestamps, so reruns with identical inputs are byte-identical.

Exit codes: 0 success, 2 usage errors, 1 runtime failures (the message
names the failing stage).
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import corpus as corpus_mod
from . import evaluation, hint_qa, question_gen, reranker as reranker_mod
from .config import ConfigError, load_config
from .corpus import (
    load_annotations,
    load_exercises,
    load_interactions,
    load_qg_examples,
    save_qg_examples,
    split_qg_dataset,
)
from .feedback import DialogueState, FeedbackEngine, Phase, take_turn
from .question_gen import (
    HTTPGeneratorBackend,
    MemorizingGeneratorBackend,
    TemplateGeneratorBackend,
    TrainConfig,
    build_question_bank,
    save_question_bank,
    load_question_bank,
)
from .reranker import (
    HeuristicScorers,
    extract_features,
    fit_mean_baseline,
    fit_ols,
    load_model,
    predict_usefulness,
    save_model,
)
from .similarity import HashEmbeddingBackend


def _write_json(path: str | Path, payload: dict) -> None:
    Path(path).write_text(
        json.dumps(payload, indent=2, sort_keys=True, ensure_ascii=False) + "\n",
        encoding="utf-8",
    )


def _manifest(path: str | Path, command: str, config: dict, **extra) -> None:
    _write_json(path, {"command": command, "config": config, **extra})


def _fail(stage: str, exc: Exception) -> "click.ClickException":
    return click.ClickException(f"[{stage}] {exc}")


def _parse_ratio(_ctx, _param, value: str) -> tuple[int, int, int]:
    parts = value.split(":")
    if len(parts) != 3:
        raise click.BadParameter("ratio must look like TRAIN:VALID:TEST, e.g. 220:40:40")
    try:
        ratio = tuple(int(p) for p in parts)
    except ValueError:
        raise click.BadParameter(f"ratio parts must be integers, got {value!r}")
    if any(p <= 0 for p in ratio):
        raise click.BadParameter("ratio parts must be positive")
    return ratio  # type: ignore[return-value]


def _make_generator(spec: str):
    if spec == "template":
        return TemplateGeneratorBackend()
    if spec.startswith("memorize:"):
        path = spec[len("memorize:") :]
        try:
            return MemorizingGeneratorBackend.from_json_file(path)
        except OSError as exc:
            raise click.BadParameter(f"cannot load memorize backend: {exc}")
    if spec.startswith("adapter:"):
        return HTTPGeneratorBackend(spec[len("adapter:") :])
    raise click.BadParameter(
        f"unknown backend {spec!r}; use template, memorize:PATH or adapter:URL"
    )


def _scorers(lm_from: str | None, seed: int) -> HeuristicScorers:
    if lm_from is None:
        return HeuristicScorers(seed=seed)
    examples = load_qg_examples(lm_from)
    return HeuristicScorers(lm_texts=[e.target for e in examples], seed=seed)


@click.group()
@click.version_option(package_name="socratic")
def main() -> None:
    """Personalized question-based feedback pipeline."""


# ---------------------------------------------------------------------------


@main.command("split")
@click.option("--input", "input_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=13, show_default=True, type=int)
@click.option("--ratio", default="220:40:40", show_default=True, callback=_parse_ratio)
def split_cmd(input_path: str, out_dir: str, seed: int, ratio: tuple[int, int, int]) -> None:
    """Split a question dataset into train/valid/test files."""
    try:
        examples = load_qg_examples(input_path)
        partition = split_qg_dataset(examples, seed=seed, ratio=ratio)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_qg_examples(out / "train.jsonl", partition.train)
        save_qg_examples(out / "valid.jsonl", partition.valid)
        save_qg_examples(out / "test.jsonl", partition.test)
        _manifest(
            out / "manifest.json",
            "split",
            {"input": input_path, "seed": seed, "ratio": list(ratio)},
            counts={
                "train": len(partition.train),
                "valid": len(partition.valid),
                "test": len(partition.test),
            },
        )
    except (corpus_mod.CorpusError, OSError) as exc:
        raise _fail("split", exc)
    click.echo(
        f"split {len(examples)} examples -> "
        f"{len(partition.train)}/{len(partition.valid)}/{len(partition.test)} in {out_dir}"
    )


@main.command("train-qg")
@click.option("--train", "train_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--valid", "valid_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--epochs", default=5, show_default=True, type=int)
@click.option("--learning-rate", default=1e-5, show_default=True, type=float)
@click.option("--batch-size", default=8, show_default=True, type=int)
@click.option("--beams", default=3, show_default=True, type=int)
def train_qg_cmd(
    train_path: str, valid_path: str, out_path: str,
    epochs: int, learning_rate: float, batch_size: int, beams: int,
) -> None:
    """Fine-tune the question generator (memorizing stub) on a split."""
    try:
        config = TrainConfig(
            epochs=epochs, learning_rate=learning_rate, batch_size=batch_size, beams=beams
        )
        partition = corpus_mod.SplitPartition(
            train=load_qg_examples(train_path),
            valid=load_qg_examples(valid_path),
            test=[],
        )
        backend = MemorizingGeneratorBackend()
        trained = question_gen.fine_tune_qg(partition, backend, config)
        trained.to_json_file(out_path)
        _manifest(
            out_path + ".manifest.json",
            "train-qg",
            {
                "train": train_path,
                "valid": valid_path,
                "epochs": epochs,
                "learning_rate": learning_rate,
                "batch_size": batch_size,
                "beams": beams,
            },
            validation_losses=trained.validation_losses,
        )
    except (corpus_mod.CorpusError, question_gen.CapabilityError, ValueError, OSError) as exc:
        raise _fail("train-qg", exc)
    click.echo(
        f"trained on {len(partition.train)} pairs; "
        f"validation loss {trained.validation_losses[-1]:.4f}; model at {out_path}"
    )


@main.command("build-bank")
@click.option("--exercises", "exercises_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--backend", default="template", show_default=True)
@click.option("--reranker", "reranker_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--lm-from", default=None, type=click.Path(exists=True, dir_okay=False),
              help="Question file whose targets train the fluency language model.")
@click.option("--k", default=3, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
def build_bank_cmd(
    exercises_path: str, out_path: str, backend: str,
    reranker_path: str, lm_from: str | None, k: int, seed: int,
) -> None:
    """Precompute re-ranked question candidates for every reference."""
    generator = _make_generator(backend)
    try:
        exercises = load_exercises(exercises_path)
        model = load_model(reranker_path)
        scorers = _scorers(lm_from, seed)
        report = build_question_bank(exercises, generator, model, scorers, k=k)
        save_question_bank(out_path, exercises)
        _manifest(
            out_path + ".manifest.json",
            "build-bank",
            {
                "exercises": exercises_path,
                "backend": backend,
                "reranker": reranker_path,
                "lm_from": lm_from,
                "k": k,
                "seed": seed,
            },
            banked_references=report.banked_references,
            skipped=report.skipped,
        )
    except (corpus_mod.CorpusError, OSError, ValueError) as exc:
        raise _fail("build-bank", exc)
    click.echo(
        f"banked {report.banked_references} references "
        f"({len(report.skipped)} skipped) -> {out_path}"
    )


def _annotation_features(annotations, scorers):
    rows = []
    for ann in annotations:
        candidate = corpus_mod.QuestionCandidate(
            question=ann.question, model_score=0.0, confidence_loss=ann.confidence_loss
        )
        rows.append(
            (extract_features(ann.question, candidate, scorers), float(ann.rating))
        )
    return rows


@main.command("train-reranker")
@click.option("--annotations", "annotations_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", required=True, type=click.Path(dir_okay=False))
@click.option("--estimator", type=click.Choice(["ols", "mean"]), default="ols", show_default=True)
@click.option("--ridge", default=0.0, show_default=True, type=float)
@click.option("--lm-from", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=0, show_default=True, type=int)
def train_reranker_cmd(
    annotations_path: str, out_path: str, estimator: str,
    ridge: float, lm_from: str | None, seed: int,
) -> None:
    """Fit the usefulness model on rated questions."""
    try:
        annotations = load_annotations(annotations_path)
        scorers = _scorers(lm_from, seed)
        rows = _annotation_features(annotations, scorers)
        if estimator == "ols":
            model = fit_ols(rows, ridge=ridge)
        else:
            model = fit_mean_baseline(rows)
        save_model(out_path, model)
        predictions = [predict_usefulness(model, f) for f, _ in rows]
        train_metrics = evaluation.regression_metrics(predictions, [r for _, r in rows])
        _manifest(
            out_path + ".manifest.json",
            "train-reranker",
            {
                "annotations": annotations_path,
                "estimator": estimator,
                "ridge": ridge,
                "lm_from": lm_from,
                "seed": seed,
            },
            n_rows=len(rows),
            train_metrics=train_metrics.to_dict(),
        )
    except (corpus_mod.CorpusError, OSError, ValueError) as exc:
        raise _fail("train-reranker", exc)
    click.echo(
        f"fitted {estimator} on {len(rows)} ratings; "
        f"train mse {train_metrics.mse:.4f}; model at {out_path}"
    )


@main.command("eval-gen")
@click.option("--test", "test_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--backend", default="template", show_default=True)
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
def eval_gen_cmd(test_path: str, backend: str, out_path: str | None) -> None:
    """Score generated questions against gold ones with BLEU and ROUGE-L."""
    generator = _make_generator(backend)
    try:
        examples = load_qg_examples(test_path)
        if not examples:
            raise ValueError("test file holds no examples")
        candidates = []
        for example in examples:
            beams = generator.generate(example.source, beams=1, max_out=150)
            candidates.append(question_gen.normalize_question(beams[0][0]) if beams else "")
        references = [e.target for e in examples]
        report = evaluation.evaluate_generation(candidates, references)
        payload = report.to_dict()
        if out_path:
            _manifest(
                out_path,
                "eval-gen",
                {"test": test_path, "backend": backend},
                report=payload,
            )
    except (corpus_mod.CorpusError, OSError, ValueError) as exc:
        raise _fail("eval-gen", exc)
    for key in ("bleu1", "bleu2", "bleu3", "bleu4", "rouge_l"):
        click.echo(f"{key}: {payload[key]:.2f}")
    click.echo(f"n_examples: {payload['n_examples']}")


@main.command("eval-reranker")
@click.option("--annotations", "annotations_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", default=13, show_default=True, type=int)
@click.option("--ratio", default="4:1:1", show_default=True, callback=_parse_ratio)
@click.option("--ridge", default=0.0, show_default=True, type=float)
@click.option("--lm-from", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
def eval_reranker_cmd(
    annotations_path: str, seed: int, ratio: tuple[int, int, int],
    ridge: float, lm_from: str | None, out_path: str | None,
) -> None:
    """Held-out regression metrics and the usefulness metric, with the
    mean baseline for comparison (its correlation is undefined, shown as -)."""
    try:
        annotations = load_annotations(annotations_path)
        grouped: dict[str, list] = {}
        for ann in annotations:
            grouped.setdefault(ann.example_id, []).append(ann)
        keys = sorted(grouped)
        train_keys, _, test_keys = corpus_mod.shuffled_split(keys, seed, ratio)
        scorers = _scorers(lm_from, seed)
        train_rows = _annotation_features(
            [a for k in train_keys for a in grouped[k]], scorers
        )
        test_rows = _annotation_features(
            [a for k in test_keys for a in grouped[k]], scorers
        )
        gold = [rating for _, rating in test_rows]
        groups = [
            [(f, rating) for f, rating in _annotation_features(grouped[k], scorers)]
            for k in test_keys
        ]

        results = {}
        for name, model in (
            ("ols", fit_ols(train_rows, ridge=ridge)),
            ("mean_baseline", fit_mean_baseline(train_rows)),
        ):
            predictions = [predict_usefulness(model, f) for f, _ in test_rows]
            metrics = evaluation.regression_metrics(predictions, gold)
            results[name] = {
                **metrics.to_dict(),
                "usefulness": evaluation.usefulness_metric(model, groups),
            }
        if out_path:
            _manifest(
                out_path,
                "eval-reranker",
                {
                    "annotations": annotations_path,
                    "seed": seed,
                    "ratio": list(ratio),
                    "ridge": ridge,
                    "lm_from": lm_from,
                },
                n_train=len(train_rows),
                n_test=len(test_rows),
                results=results,
            )
    except (corpus_mod.CorpusError, OSError, ValueError) as exc:
        raise _fail("eval-reranker", exc)
    click.echo(f"{'model':<14} {'mse':>8} {'mae':>8} {'pearson':>8} {'usefulness':>11}")
    for name, row in results.items():
        pearson = "-" if row["pearson"] is None else f"{row['pearson']:.3f}"
        click.echo(
            f"{name:<14} {row['mse']:>8.3f} {row['mae']:>8.3f} "
            f"{pearson:>8} {row['usefulness']:>11.3f}"
        )


@main.command("eval-gains")
@click.option("--interactions", "interactions_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--model", "model_label", default=None, help="Restrict to one feedback model label.")
@click.option("--out", "out_path", default=None, type=click.Path(dir_okay=False))
def eval_gains_cmd(interactions_path: str, model_label: str | None, out_path: str | None) -> None:
    """Learning gains per feedback model from an interaction log."""
    try:
        records = load_interactions(interactions_path)
        labels = sorted({r.feedback_model for r in records})
        if model_label is not None:
            if model_label not in labels:
                raise ValueError(f"no records for model {model_label!r}")
            labels = [model_label]
        reports = evaluation.learning_gain_table(records, labels)
        if not reports:
            raise ValueError("no feedback events in the log")
        if out_path:
            _manifest(
                out_path,
                "eval-gains",
                {"interactions": interactions_path, "model": model_label},
                reports=[r.to_dict() for r in reports],
            )
    except (corpus_mod.CorpusError, OSError, ValueError) as exc:
        raise _fail("eval-gains", exc)
    click.echo(f"{'model':<18} {'scope':<15} {'gain':>7} {'ci95':>7} {'n':>5}")
    for report in reports:
        click.echo(
            f"{report.model:<18} {report.scope:<15} "
            f"{report.gain_percent:>6.1f}% {report.ci95_half_width:>6.1f}  {report.n:>5}"
        )


@main.command("hintqa")
@click.option("--qa", "qa_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out-dir", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=13, show_default=True, type=int)
@click.option("--ratio", default="400:50:100", show_default=True, callback=_parse_ratio)
@click.option("--k", default=3, show_default=True, type=int)
@click.option("--tau", default=0.8, show_default=True, type=float)
def hintqa_cmd(
    qa_path: str, out_dir: str, seed: int,
    ratio: tuple[int, int, int], k: int, tau: float,
) -> None:
    """Build the hint-assisted QA chain on a QA corpus and evaluate it."""
    try:
        pairs = hint_qa.load_qa_pairs(qa_path)
        train, valid, test = hint_qa.split_qa_pairs(pairs, seed=seed, ratio=ratio)
        engine = FeedbackEngine(
            backend=HashEmbeddingBackend(seed=seed),
            tau=tau,
            generator=TemplateGeneratorBackend(),
        )
        qa_model, hint_model, hqa_model, chain_report = hint_qa.train_chain(
            train, valid, engine,
            MemorizingGeneratorBackend(),
            MemorizingGeneratorBackend(),
            MemorizingGeneratorBackend(),
        )
        triples, _ = hint_qa.build_hint_dataset(train, qa_model, engine)
        hqa_rows, _ = hint_qa.build_hqa_dataset(train, qa_model, hint_model)

        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        hint_qa.save_qa_pairs(out / "qa_train.jsonl", train)
        hint_qa.save_qa_pairs(out / "qa_valid.jsonl", valid)
        hint_qa.save_qa_pairs(out / "qa_test.jsonl", test)
        hint_qa.save_hint_triples(out / "hint_triples.jsonl", triples)
        hint_qa.save_hqa_rows(out / "hqa_dataset.jsonl", hqa_rows)

        nli = hint_qa.OverlapNLIBackend()
        predictions = []
        for pair in test:
            outcome = hint_qa.run_hint_qa_inference(
                pair.question, qa_model, hint_model, hqa_model, nli, k=k
            )
            predictions.append(
                {
                    "id": pair.id,
                    "question": pair.question,
                    "gold": pair.answer,
                    "machine_answer": outcome.machine_answer,
                    "hint": outcome.hint,
                    "answer": outcome.answer,
                }
            )
        corpus_mod.write_jsonl(out / "predictions.jsonl", predictions)
        report = evaluation.evaluate_generation(
            [p["answer"] for p in predictions], [p["gold"] for p in predictions]
        )
        train_ids = sorted(p.id for p in train) + sorted(p.id for p in valid)
        test_ids = sorted(p.id for p in test)
        _manifest(
            out / "manifest.json",
            "hintqa",
            {"qa": qa_path, "seed": seed, "ratio": list(ratio), "k": k, "tau": tau},
            counts={"train": len(train), "valid": len(valid), "test": len(test)},
            train_ids=train_ids,
            test_ids=test_ids,
            skipped=chain_report.skipped,
            test_report=report.to_dict(),
        )
    except (corpus_mod.CorpusError, hint_qa.CapabilityError, OSError, ValueError) as exc:
        raise _fail("hintqa", exc)
    click.echo(
        f"chain trained on {len(train)} pairs; test bleu1 {report.bleu1:.2f}, "
        f"rouge_l {report.rouge_l:.2f}; artifacts in {out_dir}"
    )


@main.command("serve")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--host", default=None, help="Override the configured host.")
@click.option("--port", default=None, type=int, help="Override the configured port.")
def serve_cmd(config_path: str | None, host: str | None, port: int | None) -> None:
    """Run the dialogue HTTP service (config file + SOCRATIC_* env vars)."""
    try:
        config = load_config(config_path)
        if host is not None or port is not None:
            from dataclasses import replace

            config = replace(
                config,
                host=host if host is not None else config.host,
                port=port if port is not None else config.port,
            ).validate()
        from .service import create_app

        app = create_app(config)
    except (ConfigError, corpus_mod.CorpusError, OSError, ValueError) as exc:
        raise _fail("serve", exc)
    import uvicorn

    click.echo(f"serving on http://{config.host}:{config.port}")
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")


@main.command("chat")
@click.option("--exercises", "exercises_path", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--exercise", "exercise_id", required=True)
@click.option("--bank", "bank_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--generator", "generator_spec", default=None,
              help="Fallback generator (template, memorize:PATH, adapter:URL) for bankless references.")
@click.option("--reranker", "reranker_path", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--tau", default=0.8, show_default=True, type=float)
@click.option("--max-attempts", default=3, show_default=True, type=int)
@click.option("--seed", default=0, show_default=True, type=int)
@click.option("--log", "log_path", default=None, type=click.Path(dir_okay=False),
              help="Append interaction records to this JSONL file.")
def chat_cmd(
    exercises_path: str, exercise_id: str, bank_path: str | None,
    generator_spec: str | None, reranker_path: str | None,
    tau: float, max_attempts: int, seed: int, log_path: str | None,
) -> None:
    """Work one exercise in the terminal; reads student turns from stdin."""
    generator = _make_generator(generator_spec) if generator_spec else None
    try:
        exercises = load_exercises(exercises_path)
        if bank_path:
            load_question_bank(bank_path, exercises)
        by_id = {ex.id: ex for ex in exercises}
        if exercise_id not in by_id:
            raise ValueError(f"unknown exercise {exercise_id!r}")
        exercise = by_id[exercise_id]
        engine = FeedbackEngine(
            backend=HashEmbeddingBackend(seed=seed),
            tau=tau,
            tau_checker=tau,
            generator=generator,
            reranker_model=load_model(reranker_path) if reranker_path else None,
            max_attempts=max_attempts,
        )
        store = corpus_mod.InteractionStore(log_path) if log_path else None
    except (corpus_mod.CorpusError, OSError, ValueError) as exc:
        raise _fail("chat", exc)

    state = DialogueState(session_id=f"chat-{exercise_id}", exercise_id=exercise_id)
    click.echo(exercise.problem)
    try:
        for line in sys.stdin:
            text = line.strip()
            if not text:
                continue
            result = take_turn(state, text, exercise, engine)
            state = result.state
            click.echo(result.reply)
            if state.phase is Phase.AWAITING_MCQ and state.last_feedback:
                for option in state.last_feedback.mcq_options or ():
                    click.echo(f"  [{option}]")
            if store is not None and result.record is not None:
                store.append(result.record)
            if state.phase is Phase.DONE:
                break
    except (corpus_mod.StorageError, ValueError) as exc:
        raise _fail("chat", exc)


if __name__ == "__main__":
    main()
