"""Command-line entry point wiring the toolkit into build / evaluate / judge / review flows."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import engine
from .aggregate import aggregate, grade_distribution, round_display
from .config import DEFAULT_SEED, load_config
from .evaluation import evaluate_predictions
from .judge import (
    HttpChatTransport,
    JudgeClient,
    JudgeTransportConfig,
    ResponseCache,
    RuleJudgeTransport,
)
from .records import (
    ImagingModality,
    ManifestError,
    TaskKind,
    dump_manifest,
    DatasetManifest,
    parse_manifest,
    parse_predictions,
)
from .reportscore import CriterionWeights, diagnosis_accuracy, mean_score, score_report

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_PARTIAL = 2

# Exit-code contract: 1 for any validation failure (including bad usage),
# 2 strictly for partial results. Click defaults usage errors to 2.
click.UsageError.exit_code = EXIT_VALIDATION


def _read_manifest(path: Path) -> DatasetManifest:
    try:
        return parse_manifest(path.read_text(encoding="utf-8"))
    except ManifestError as exc:
        raise click.ClickException(str(exc)) from exc


def _read_predictions(paths: tuple[Path, ...]) -> list:
    predictions = []
    for path in paths:
        try:
            predictions.extend(parse_predictions(path.read_text(encoding="utf-8")))
        except ManifestError as exc:
            raise click.ClickException(str(exc)) from exc
    return predictions


@click.group()
def main() -> None:
    """Benchmark construction, evaluation, and review tooling for ophthalmic VQA."""


@main.command("build")
@click.option("--labels", type=click.Path(exists=True, path_type=Path), default=None,
              help="JSONL of labeled images (image_ref, modality, condition).")
@click.option("--reports", type=click.Path(exists=True, path_type=Path), default=None,
              help="JSONL of raw report texts (image_refs, modality, extracted_text).")
@click.option("--templates", type=click.Path(exists=True, path_type=Path), default=None,
              help="Template library JSON; built-in library when omitted.")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--sanitize/--no-sanitize", "do_sanitize", default=True,
              help="Redact sensitive text in report inputs before prompting.")
def cmd_build(labels: Path | None, reports: Path | None, templates: Path | None,
              out: Path, seed: int, do_sanitize: bool) -> None:
    """Generate open-QA records from labels and rewrite prompts from reports."""
    if labels is None and reports is None:
        raise click.ClickException("provide --labels and/or --reports")
    library = engine.load_template_library(templates) if templates else engine.default_template_library()
    out.mkdir(parents=True, exist_ok=True)
    records = []
    if labels is not None:
        for index, line in enumerate(labels.read_text(encoding="utf-8").splitlines()):
            if not line.strip():
                continue
            obj = json.loads(line)
            item = engine.LabeledImage(
                image_ref=str(obj["image_ref"]),
                modality=ImagingModality.parse(str(obj["modality"])),
                condition=obj.get("condition"),
            )
            records.append(
                engine.instantiate_open_qa(item, library, seed, record_id=f"openqa-{index:06d}")
            )
    manifest = DatasetManifest(records=tuple(records))
    (out / "manifest.jsonl").write_text(dump_manifest(manifest), encoding="utf-8")

    prompt_count = 0
    if reports is not None:
        rules = engine.default_redaction_rules()
        lines = []
        for line in reports.read_text(encoding="utf-8").splitlines():
            if not line.strip():
                continue
            obj = json.loads(line)
            text = str(obj["extracted_text"])
            if do_sanitize:
                text, _spans = engine.sanitize(text, rules)
            report = engine.RawReport(
                image_refs=tuple(obj.get("image_refs", ())),
                modality=ImagingModality.parse(str(obj["modality"])),
                extracted_text=text,
            )
            lines.append(json.dumps({
                "image_refs": list(report.image_refs),
                "modality": report.modality.value,
                "prompt": engine.build_rewrite_prompt(report),
            }, ensure_ascii=False))
        (out / "rewrite_prompts.jsonl").write_text(
            "\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")
        prompt_count = len(lines)

    click.echo(f"wrote {len(manifest)} records to {out / 'manifest.jsonl'}")
    for (task, modality), count in sorted(
        manifest.counts_by().items(), key=lambda kv: (kv[0][0].value, kv[0][1].value)
    ):
        click.echo(f"  {task.value:>9} {modality.value:<20} {count}")
    if reports is not None:
        click.echo(f"wrote {prompt_count} rewrite prompts to {out / 'rewrite_prompts.jsonl'}")


_TASK_CHOICES = {"closed": TaskKind.CLOSED_QA, "open": TaskKind.OPEN_QA, "report": TaskKind.REPORT_GEN}


@main.command("evaluate")
@click.option("--manifest", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--predictions", type=click.Path(exists=True, path_type=Path),
              multiple=True, required=True)
@click.option("--task", type=click.Choice(sorted(_TASK_CHOICES)), default=None,
              help="Restrict scoring to one task type.")
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--corpus-bleu", "with_corpus_bleu", is_flag=True, default=False,
              help="Also emit corpus-level BLEU pooled over open-QA records.")
def cmd_evaluate(manifest: Path, predictions: tuple[Path, ...], task: str | None,
                 out: Path, jobs: int, with_corpus_bleu: bool) -> None:
    """Score predictions with the deterministic metric suite and emit tables."""
    data = _read_manifest(manifest)
    preds = _read_predictions(predictions)
    tasks = [_TASK_CHOICES[task]] if task else None
    outcome = evaluate_predictions(data, preds, tasks=tasks, jobs=jobs)
    out.mkdir(parents=True, exist_ok=True)
    (out / "results.jsonl").write_text(outcome.to_jsonl(), encoding="utf-8")
    if with_corpus_bleu:
        from .metrics import corpus_bleu, tokenize

        by_id = data.by_id()
        pairs = [
            (tokenize(p.output_text), tokenize(by_id[p.record_id].reference_answer))
            for p in preds
            if p.record_id in by_id and by_id[p.record_id].task is TaskKind.OPEN_QA
        ]
        corpus = {
            "bleu-1": corpus_bleu(pairs, max_order=1),
            "bleu-4": corpus_bleu(pairs, max_order=4),
            "pairs": len(pairs),
        }
        (out / "corpus_bleu.json").write_text(
            json.dumps(corpus, indent=2) + "\n", encoding="utf-8"
        )
    if outcome.results:
        table = aggregate(outcome.results, data)
        (out / "table.csv").write_text(table.to_csv(), encoding="utf-8")
        (out / "table.md").write_text(table.to_markdown(), encoding="utf-8")
        click.echo(table.to_markdown(), nl=False)
    for record_id, message in outcome.errors:
        click.echo(f"error: {record_id}: {message}", err=True)
    if outcome.errors:
        sys.exit(EXIT_PARTIAL)


@main.command("judge")
@click.option("--manifest", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--predictions", type=click.Path(exists=True, path_type=Path),
              multiple=True, required=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
@click.option("--offline-judge", is_flag=True, default=False,
              help="Use the deterministic rule judge instead of a remote endpoint.")
@click.option("--endpoint", type=str, default=None, help="Chat-completion URL.")
@click.option("--model", type=str, default=None)
@click.option("--cache", "cache_dir", type=click.Path(path_type=Path), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--weights", "weights_spec", type=str, default=None,
              help='Criterion weight overrides, e.g. "a=2,i=0".')
@click.option("--jobs", type=int, default=None, help="Max parallel judge requests.")
def cmd_judge(manifest: Path, predictions: tuple[Path, ...], out: Path, offline_judge: bool,
              endpoint: str | None, model: str | None, cache_dir: Path | None,
              config_path: Path | None, weights_spec: str | None, jobs: int | None) -> None:
    """Run the report-generation judge and emit findings, scores, and summaries."""
    config = load_config(config_path)
    if endpoint:
        config.judge_endpoint = endpoint
    if model:
        config.judge_model = model
    if cache_dir:
        config.cache_dir = cache_dir
    if jobs:
        config.judge_max_parallel = jobs
    if weights_spec:
        try:
            overrides = dict(
                pair.split("=", 1) for pair in weights_spec.split(",") if pair.strip()
            )
            config.weights = CriterionWeights.from_mapping(
                {k.strip(): float(v) for k, v in overrides.items()}
            )
        except ValueError as exc:
            raise click.ClickException(f"bad --weights: {exc}") from exc

    data = _read_manifest(manifest)
    preds = _read_predictions(predictions)
    by_id = data.by_id()
    work = []
    for prediction in preds:
        record = by_id.get(prediction.record_id)
        if record is None:
            raise click.ClickException(f"prediction references unknown record id {prediction.record_id!r}")
        if record.task is TaskKind.REPORT_GEN:
            work.append((record, prediction))
    if not work:
        raise click.ClickException("no ReportGen records matched the predictions")

    if offline_judge:
        transport = RuleJudgeTransport()
        model_name = "rule-judge"
    else:
        if not config.judge_endpoint:
            raise click.ClickException("--endpoint (or config/judge.endpoint) required unless --offline-judge")
        transport_config = JudgeTransportConfig(
            endpoint=config.judge_endpoint,
            model=config.judge_model,
            timeout=config.judge_timeout,
            max_parallel=config.judge_max_parallel,
            retry_budget=config.judge_retry_budget,
        )
        transport = HttpChatTransport(transport_config)
        model_name = config.judge_model
    cache = ResponseCache(config.cache_dir) if config.cache_dir else None
    client = JudgeClient(
        transport, model=model_name, cache=cache, weights=config.weights,
        max_parallel=config.judge_max_parallel,
    )

    errors: list[tuple[int, str]] = []
    findings = client.judge_many(
        [(p.output_text, r.reference_answer) for r, p in work],
        on_error=lambda index, exc: errors.append((index, str(exc))),
    )
    out.mkdir(parents=True, exist_ok=True)
    scored = []
    lines = []
    for (record, prediction), found in zip(work, findings):
        if found is None:
            continue
        report_score = score_report(found, config.weights)
        scored.append((record, prediction, found, report_score))
        lines.append(json.dumps({
            "record_id": record.id,
            "model_id": prediction.model_id,
            **{name: getattr(found, name) for name in (
                "a_count", "b_count", "c_count", "d_count", "e_ok", "f_ok",
                "g_ok", "h_ok", "i_serious_error", "j_diagnosis_correct")},
            "score": report_score.score,
            "grade": report_score.grade.value,
        }, ensure_ascii=False))
    (out / "findings.jsonl").write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")

    if scored:
        summary = {
            "diagnosis_accuracy": round_display(diagnosis_accuracy([f for _, _, f, _ in scored])),
            "mean_score": round_display(mean_score([s for _, _, _, s in scored])),
            "count": len(scored),
        }
        distribution = grade_distribution(
            (p.model_id, r.modality.value, s) for r, p, _, s in scored
        )
        (out / "summary.json").write_text(json.dumps(summary, indent=2) + "\n", encoding="utf-8")
        (out / "grade_distribution.json").write_text(distribution.to_json() + "\n", encoding="utf-8")
        click.echo(json.dumps(summary, indent=2))
    for index, message in errors:
        record, prediction = work[index]
        click.echo(f"error: {record.id}/{prediction.model_id}: {message}", err=True)
    if errors:
        sys.exit(EXIT_PARTIAL)


@main.group("review")
def cmd_review() -> None:
    """Review-workflow commands: sample, create-session, serve, tally."""


@cmd_review.command("sample")
@click.option("--manifest", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--reviewers", type=str, required=True, help="Comma-separated reviewer ids.")
@click.option("--rate", type=float, default=0.10, show_default=True)
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--stratify", is_flag=True, default=False, help="Stratify the sample by modality.")
@click.option("--out", type=click.Path(path_type=Path), required=True)
def review_sample(manifest: Path, reviewers: str, rate: float, seed: int,
                  stratify: bool, out: Path) -> None:
    """Sample records for quality review and assign reviewer pairs."""
    data = _read_manifest(manifest)
    reviewer_ids = [r.strip() for r in reviewers.split(",") if r.strip()]
    try:
        batch = engine.sample_for_review(
            data, reviewer_ids, rate=rate, seed=seed, stratify_by_modality=stratify
        )
    except ValueError as exc:
        raise click.ClickException(str(exc)) from exc
    engine.dump_review_batch(batch, out)
    click.echo(f"sampled {len(batch.sampled_ids)} of {len(data)} records -> {out}")
    for reviewer, load in sorted(batch.reviewer_load().items()):
        click.echo(f"  {reviewer}: {load} assignments")


@cmd_review.command("create-session")
@click.option("--manifest", type=click.Path(exists=True, path_type=Path), required=True)
@click.option("--predictions", type=click.Path(exists=True, path_type=Path),
              multiple=True, required=True,
              help="Prediction files; one per model, or mixed with model_id fields.")
@click.option("--session-id", type=str, required=True)
@click.option("--items", "item_count", type=int, default=None,
              help="Cap the number of ReportGen items (default: all with full coverage).")
@click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True)
@click.option("--out", type=click.Path(path_type=Path), required=True)
def review_create_session(manifest: Path, predictions: tuple[Path, ...], session_id: str,
                          item_count: int | None, seed: int, out: Path) -> None:
    """Build a blinded ranking session from ReportGen predictions."""
    from .reviewsvc import create_ranking_session, save_sessions

    data = _read_manifest(manifest)
    preds = _read_predictions(predictions)
    outputs: dict[str, dict[str, str]] = {}
    for prediction in preds:
        outputs.setdefault(prediction.model_id, {})[prediction.record_id] = prediction.output_text
    by_id = data.by_id()
    eligible = [
        r for r in data.records
        if r.task is TaskKind.REPORT_GEN and all(r.id in m for m in outputs.values())
    ]
    if item_count is not None:
        eligible = eligible[:item_count]
    if not eligible:
        raise click.ClickException("no ReportGen items covered by every model")
    items = [{"id": r.id, "image_ref": r.image_ref, "question": r.question} for r in eligible]
    session = create_ranking_session(session_id, items, outputs, seed)
    save_sessions([session], out)
    click.echo(
        f"session {session_id}: {len(eligible)} items x {len(outputs)} candidates -> {out}"
    )
    del by_id


@cmd_review.command("serve")
@click.option("--sessions", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--batch", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--manifest", type=click.Path(exists=True, path_type=Path), default=None,
              help="Manifest supplying question/answer text for batch items.")
@click.option("--log", "log_path", type=click.Path(path_type=Path), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True, path_type=Path),
              required=True, help="Config with [review.tokens] and [review.admin_tokens].")
@click.option("--serve-addr", type=str, default="127.0.0.1:8321", show_default=True)
def review_serve(sessions: Path | None, batch: Path | None, manifest: Path | None,
                 log_path: Path, config_path: Path, serve_addr: str) -> None:
    """Host the blinded review/ranking HTTP service."""
    import uvicorn

    from .reviewsvc import AuthConfig, EventLog, ReviewService, create_app, load_sessions

    config = load_config(config_path)
    if not config.reviewer_tokens:
        raise click.ClickException("config must define [review.tokens]")
    loaded_sessions = load_sessions(sessions) if sessions else {}
    batches = {}
    batch_items = {}
    if batch is not None:
        review_batch = engine.load_review_batch(batch)
        batches[batch.stem] = review_batch
        if manifest is not None:
            data = _read_manifest(manifest)
            for record in data.records:
                if record.id in review_batch.assignments:
                    batch_items[record.id] = {
                        "question": record.question,
                        "reference_answer": record.reference_answer,
                        "image_url": record.image_ref,
                    }
    service = ReviewService(
        sessions=loaded_sessions,
        batches=batches,
        log=EventLog(log_path),
        batch_items=batch_items,
    )
    app = create_app(
        service,
        AuthConfig(config.reviewer_tokens, config.admin_tokens),
        image_dir=config.image_dir,
    )
    host, _, port = serve_addr.partition(":")
    try:
        uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8321), log_level="warning")
    except OSError as exc:
        raise click.ClickException(f"cannot bind {serve_addr}: {exc}") from exc


@cmd_review.command("tally")
@click.option("--sessions", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--batch", type=click.Path(exists=True, path_type=Path), default=None)
@click.option("--log", "log_path", type=click.Path(exists=True, path_type=Path), required=True)
def review_tally(sessions: Path | None, batch: Path | None, log_path: Path) -> None:
    """Print preference counts and batch acceptance states from an event log."""
    from .reviewsvc import EventLog, ReviewService, load_sessions

    loaded_sessions = load_sessions(sessions) if sessions else {}
    batches = {batch.stem: engine.load_review_batch(batch)} if batch else {}
    service = ReviewService(sessions=loaded_sessions, batches=batches, log=EventLog(log_path))
    for session_id in sorted(loaded_sessions):
        tally = service.preference_tally(session_id)
        click.echo(f"session {session_id} rank-1 counts:")
        for model, count in sorted(tally.items(), key=lambda kv: (-kv[1], kv[0])):
            click.echo(f"  {model}: {count}")
    for batch_id in sorted(batches):
        statuses = service.batch_statuses(batch_id)
        summary: dict[str, int] = {}
        for status in statuses.values():
            summary[status] = summary.get(status, 0) + 1
        click.echo(f"batch {batch_id}: " + ", ".join(
            f"{k}={v}" for k, v in sorted(summary.items())))


if __name__ == "__main__":
    main()
