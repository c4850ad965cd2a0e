"""The phv command line: convert, validate, tasks, serve, eval, figures."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import __version__
from .collectsvc import VerificationService, create_app, load_outcome_log
from .corpus import (
    Corpus,
    CorpusError,
    corpus_digest,
    parse_aida_tsv,
    parse_canonical,
    serialize_canonical,
)
from .report import (
    GOLD_MODEL_ID,
    RunConfig,
    pre_rows_to_csv,
    render_pre_table,
    run_posthoc_eval,
    run_pre_eval,
    serialize_report,
    write_figure_csvs,
)
from .taskgen import build_assignments, chunk_document
from .serialization import (
    load_bundle,
    load_tasks_jsonl,
    write_bundle,
    write_tasks_jsonl,
)


def _load_corpus(path: str) -> Corpus:
    return parse_canonical(Path(path).read_bytes())


def cmd_validate(args) -> int:
    try:
        corpus = _load_corpus(args.corpus)
    except (CorpusError, OSError) as exc:
        print(f"INVALID: {exc}", file=sys.stderr)
        return 1
    n_docs = len(corpus.documents)
    n_anns = sum(len(s) for s in corpus.annotation_sets.values())
    print(f"OK: {n_docs} documents, {len(corpus.annotation_sets)} annotation sets, {n_anns} annotations")
    print(f"corpus hash: {corpus_digest(corpus)}")
    for dataset_id in corpus.dataset_ids():
        for model_id in corpus.model_ids(dataset_id):
            aset = corpus.get_set(dataset_id, model_id)
            print(f"  {dataset_id} / {model_id}: {len(aset)} annotations")
    return 0


def cmd_convert(args) -> int:
    if args.source_format != "aida":
        print(f"unknown input format {args.source_format!r}", file=sys.stderr)
        return 1
    try:
        corpus = parse_aida_tsv(
            Path(args.input).read_bytes(), dataset_id=args.dataset, model_id=args.model
        )
    except (CorpusError, OSError) as exc:
        print(f"conversion failed: {exc}", file=sys.stderr)
        return 1
    Path(args.out).write_bytes(serialize_canonical(corpus))
    print(f"wrote {args.out} ({len(corpus.documents)} documents)")
    return 0


def cmd_tasks_generate(args) -> int:
    corpus = _load_corpus(args.corpus)
    models = args.models.split(",") if args.models else None
    tasks = []
    for (dataset_id, model_id), aset in sorted(corpus.annotation_sets.items()):
        if models and model_id not in models:
            continue
        for doc in corpus.documents_for(dataset_id):
            tasks.extend(chunk_document(doc, aset, max_chars=args.max_chars))
    write_tasks_jsonl(args.out, tasks, corpus_hash=corpus_digest(corpus), seed=args.seed)
    print(f"wrote {len(tasks)} tasks to {args.out}")
    return 0


def cmd_tasks_assign(args) -> int:
    tasks, meta = load_tasks_jsonl(args.tasks)
    controls, _ = load_tasks_jsonl(args.controls, with_keys=True)
    assignments = build_assignments(tasks, controls, n_workers=args.workers, seed=args.seed)
    write_bundle(
        args.out,
        tasks=tasks,
        controls=controls,
        assignments=assignments,
        corpus_hash=meta.get("corpus_hash", ""),
        seed=args.seed,
    )
    print(f"wrote {len(assignments)} assignments to {args.out}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    corpus = _load_corpus(args.corpus)
    tasks, controls, assignments, meta = load_bundle(args.assignments)
    if meta.get("corpus_hash") and meta["corpus_hash"] != corpus_digest(corpus):
        print("stale data: assignments were generated from a different corpus", file=sys.stderr)
        return 1
    service = VerificationService(
        corpus,
        tasks={t.task_id: t for t in tasks} | {t.task_id: t for t, _ in controls},
        controls={k.task_id: k for _, k in controls},
        assignments={a.assignment_id: a for a in assignments},
        seed=meta.get("seed", 0),
        log_path=args.log,
        grade_mode=args.grade_mode,
        strict_modify_link=args.strict_modify_link,
    )
    app = create_app(service)
    uvicorn.run(app, host=args.host, port=args.port)
    return 0


def cmd_eval_pre(args) -> int:
    corpus = _load_corpus(args.corpus)
    modes = ("exact", "overlap") if args.mode == "both" else (args.mode,)
    levels = ("micro", "macro") if args.level == "both" else (args.level,)
    models = [args.pred] if args.pred else None
    try:
        rows = run_pre_eval(corpus, gold_model=args.gold, models=models, modes=modes, levels=levels)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    chash = corpus_digest(corpus)
    print(render_pre_table(rows, chash), end="")
    if args.out:
        Path(args.out).write_text(pre_rows_to_csv(rows, chash), encoding="utf-8")
    return 0


def cmd_eval_posthoc(args) -> int:
    config = RunConfig.from_json(args.config) if args.config else None
    corpus_path = args.corpus or (config.corpus_path if config else None)
    if not corpus_path:
        print("error: --corpus (or --config) is required", file=sys.stderr)
        return 1
    corpus = _load_corpus(corpus_path)
    log = load_outcome_log(args.log)
    models = args.models.split(",") if args.models else (config.models if config else None)
    try:
        report = run_posthoc_eval(
            corpus,
            log,
            models=models,
            gold_model=args.gold,
            n_resamples=args.bootstrap,
            level=args.level,
            seed=args.seed,
            resample_unit=args.resample_unit,
        )
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    Path(args.out).write_text(serialize_report(report), encoding="utf-8")
    print(f"wrote {args.out}")
    if args.emit_figure_data:
        written = write_figure_csvs(report, args.emit_figure_data)
        for path in written:
            print(f"wrote {path}")
    return 0


def cmd_export_figures(args) -> int:
    report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    written = write_figure_csvs(report, args.out_dir)
    for path in written:
        print(f"wrote {path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phv", description=__doc__)
    parser.add_argument("--version", action="version", version=f"phv {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a canonical corpus file")
    p.add_argument("corpus")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("convert", help="convert a source format to the canonical format")
    p.add_argument("--from", dest="source_format", required=True, choices=["aida"])
    p.add_argument("--dataset", default="AIDA")
    p.add_argument("--model", default=GOLD_MODEL_ID)
    p.add_argument("input")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_convert)

    p = sub.add_parser("tasks", help="generate tasks / build assignments")
    tasks_sub = p.add_subparsers(dest="tasks_command", required=True)

    g = tasks_sub.add_parser("generate", help="chunk documents into tasks")
    g.add_argument("--corpus", required=True)
    g.add_argument("--max-chars", type=int, default=300)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--models", default=None, help="comma-separated model ids (default: all)")
    g.add_argument("--out", required=True)
    g.set_defaults(fn=cmd_tasks_generate)

    a = tasks_sub.add_parser("assign", help="deal tasks into 20-task assignments")
    a.add_argument("--tasks", required=True)
    a.add_argument("--controls", required=True)
    a.add_argument("--workers", type=int, required=True)
    a.add_argument("--seed", type=int, default=0)
    a.add_argument("--out", required=True)
    a.set_defaults(fn=cmd_tasks_assign)

    p = sub.add_parser("serve", help="run the collection service")
    p.add_argument("--corpus", required=True)
    p.add_argument("--assignments", required=True)
    p.add_argument("--log", required=True)
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--grade-mode", choices=["all", "majority"], default="all")
    p.add_argument("--strict-modify-link", action="store_true")
    p.set_defaults(fn=cmd_serve)

    p = sub.add_parser("eval-pre", help="pre-annotation P/R/F1 against ground truth")
    p.add_argument("--corpus", required=True)
    p.add_argument("--pred", default=None, help="prediction model id (default: all non-gold)")
    p.add_argument("--gold", default=GOLD_MODEL_ID)
    p.add_argument("--mode", choices=["exact", "overlap", "both"], default="both")
    p.add_argument("--level", choices=["micro", "macro", "both"], default="both")
    p.add_argument("--out", default=None, help="also write rows as CSV")
    p.set_defaults(fn=cmd_eval_pre)

    p = sub.add_parser("eval-posthoc", help="posthoc verification metrics from an outcome log")
    p.add_argument("--corpus", default=None)
    p.add_argument("--log", required=True)
    p.add_argument("--models", default=None, help="comma-separated model ids")
    p.add_argument("--gold", default=GOLD_MODEL_ID)
    p.add_argument("--bootstrap", type=int, default=1000)
    p.add_argument("--level", type=float, default=0.95)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--resample-unit", choices=["annotation", "document"], default="annotation"
    )
    p.add_argument("--out", required=True)
    p.add_argument("--emit-figure-data", default=None, metavar="DIR")
    p.add_argument("--config", default=None)
    p.set_defaults(fn=cmd_eval_posthoc)

    p = sub.add_parser("export-figures", help="write per-figure CSVs from a report")
    p.add_argument("--report", required=True)
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_export_figures)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
