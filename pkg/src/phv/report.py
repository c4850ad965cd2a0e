"""Assemble pre-annotation and posthoc evaluation reports.

Outputs are deterministic: same corpus, log, and seeds give byte-identical
files, and every emitted file carries a provenance header binding the
inputs it was computed from.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .collectsvc import OutcomeLog, serialize_outcome_log
from .corpus import Corpus, corpus_digest
from .matching import (
    exact_match_counts,
    macro_prf,
    match_indicators,
    micro_prf,
    overlap_match_counts,
    per_document_counts,
)
from .metrics import (
    agreement_distribution,
    bootstrap_ci,
    coverage_taxonomy,
    derive_seed,
    effective_outcomes,
    intersection_pool,
    outcome_breakdown,
    posthoc_recall,
    union_pool,
    verification_rate,
    verified_set,
)

GOLD_MODEL_ID = "GT"

FIGURE_FILES = (
    "fig3_precision.csv",
    "fig3_recall.csv",
    "fig4_breakdown.csv",
    "fig5_agreement.csv",
    "fig6_coverage.csv",
)


@dataclass
class RunConfig:
    """Declarative description of one evaluation run."""

    corpus_path: str
    models: list[str] = field(default_factory=lambda: [GOLD_MODEL_ID])
    gold_model: str = GOLD_MODEL_ID
    max_chars: int = 300
    task_seed: int = 0
    assignment_seed: int = 0
    bootstrap_seed: int = 0
    bootstrap_resamples: int = 1000
    bootstrap_level: float = 0.95
    out_dir: str = "out"

    @classmethod
    def from_json(cls, path: str | Path) -> "RunConfig":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        config = cls(**data)
        if not Path(config.corpus_path).exists():
            raise FileNotFoundError(f"corpus path does not exist: {config.corpus_path}")
        return config


def log_digest(log: OutcomeLog) -> str:
    return "sha256:" + hashlib.sha256(serialize_outcome_log(log)).hexdigest()


def _provenance_line(**fields) -> str:
    parts = [f"tool=phv-{__version__}"] + [f"{k}={v}" for k, v in fields.items()]
    return "# provenance " + " ".join(parts)


# --- pre-annotation evaluation ---------------------------------------------


def run_pre_eval(
    corpus: Corpus,
    gold_model: str = GOLD_MODEL_ID,
    models: list[str] | None = None,
    modes: tuple[str, ...] = ("exact", "overlap"),
    levels: tuple[str, ...] = ("micro", "macro"),
    bootstrap: tuple[int, float, int] | None = None,
) -> list[dict]:
    """One row per (dataset, model, mode, level) cell against ground truth.

    ``bootstrap`` is (n_resamples, level, seed); intervals are attached to
    micro rows by resampling per-annotation match indicators.
    """
    rows = []
    for dataset_id in corpus.dataset_ids():
        if (dataset_id, gold_model) not in corpus.annotation_sets:
            continue
        gold = corpus.get_set(dataset_id, gold_model)
        dataset_models = models or [
            m for m in corpus.model_ids(dataset_id) if m != gold_model
        ]
        doc_ids = [doc.doc_id for doc in corpus.documents_for(dataset_id)]
        for model_id in dataset_models:
            if model_id == gold_model or (dataset_id, model_id) not in corpus.annotation_sets:
                continue
            pred = corpus.get_set(dataset_id, model_id)
            for mode in modes:
                counter = exact_match_counts if mode == "exact" else overlap_match_counts
                counts = counter(pred, gold)
                for level in levels:
                    if level == "micro":
                        prf = micro_prf(counts)
                    else:
                        prf = macro_prf(per_document_counts(pred, gold, mode, doc_ids=doc_ids))
                    row = {
                        "dataset_id": dataset_id,
                        "model_id": model_id,
                        "mode": mode,
                        "level": level,
                        "precision": prf.precision,
                        "recall": prf.recall,
                        "f1": prf.f1,
                        "precision_ci": None,
                        "recall_ci": None,
                    }
                    if bootstrap is not None and level == "micro":
                        n_res, ci_level, seed = bootstrap
                        pred_hits, gold_hits = match_indicators(pred, gold, mode)
                        if pred_hits:
                            row["precision_ci"] = list(
                                bootstrap_ci(
                                    np.mean,
                                    pred_hits,
                                    n_resamples=n_res,
                                    level=ci_level,
                                    seed=derive_seed(seed, dataset_id, model_id, mode, "pre-p"),
                                )
                            )
                        if gold_hits:
                            row["recall_ci"] = list(
                                bootstrap_ci(
                                    np.mean,
                                    gold_hits,
                                    n_resamples=n_res,
                                    level=ci_level,
                                    seed=derive_seed(seed, dataset_id, model_id, mode, "pre-r"),
                                )
                            )
                    rows.append(row)
    if not rows:
        raise ValueError(f"no ({gold_model}, prediction) pairs found in the corpus")
    return rows


def render_pre_table(rows: list[dict], corpus_hash: str) -> str:
    """Aligned text rendering of the pre-annotation table."""
    headers = ["dataset", "model", "mode", "level", "P", "R", "F1"]
    body = [
        [
            r["dataset_id"],
            r["model_id"],
            r["mode"],
            r["level"],
            f"{r['precision']:.4f}",
            f"{r['recall']:.4f}",
            f"{r['f1']:.4f}",
        ]
        for r in rows
    ]
    widths = [max(len(h), *(len(row[i]) for row in body)) for i, h in enumerate(headers)]
    out = io.StringIO()
    out.write(_provenance_line(corpus=corpus_hash) + "\n")
    out.write("  ".join(h.ljust(w) for h, w in zip(headers, widths)).rstrip() + "\n")
    for row in body:
        out.write("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() + "\n")
    return out.getvalue()


def pre_rows_to_csv(rows: list[dict], corpus_hash: str) -> str:
    out = io.StringIO()
    out.write(_provenance_line(corpus=corpus_hash) + "\n")
    out.write("dataset_id,model_id,mode,level,precision,recall,f1\n")
    for r in rows:
        out.write(
            f"{r['dataset_id']},{r['model_id']},{r['mode']},{r['level']},"
            f"{r['precision']:.10f},{r['recall']:.10f},{r['f1']:.10f}\n"
        )
    return out.getvalue()


# --- posthoc evaluation -----------------------------------------------------


def run_posthoc_eval(
    corpus: Corpus,
    log: OutcomeLog,
    models: list[str] | None = None,
    gold_model: str = GOLD_MODEL_ID,
    n_resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    resample_unit: str = "annotation",
) -> dict:
    """Full posthoc metrics report.

    Refuses a log whose provenance header names a different corpus. Cells
    with no outcomes (or empty denominators) are flagged degenerate rather
    than aborting the sweep. ``resample_unit="document"`` switches the
    bootstrap to cluster resampling by document.
    """
    if resample_unit not in ("annotation", "document"):
        raise ValueError(f"unknown resample unit {resample_unit!r}")
    chash = corpus_digest(corpus)
    if log.header.corpus_hash != chash:
        raise ValueError(
            f"stale data: log references corpus {log.header.corpus_hash}, "
            f"loaded corpus is {chash}"
        )

    report: dict = {
        "provenance": {
            "tool_version": __version__,
            "corpus_hash": chash,
            "log_hash": log_digest(log),
            "seed": seed,
            "bootstrap_resamples": n_resamples,
            "bootstrap_level": level,
            "resample_unit": resample_unit,
        },
        "pre_annotation": [],
        "cells": [],
        "datasets": [],
    }

    try:
        report["pre_annotation"] = run_pre_eval(
            corpus,
            gold_model=gold_model,
            models=models,
            modes=("exact", "overlap"),
            levels=("micro",),
            bootstrap=(n_resamples, level, seed),
        )
    except ValueError:
        report["pre_annotation"] = []  # no gold or no prediction models

    for dataset_id in corpus.dataset_ids():
        dataset_models = [
            m
            for m in (models or corpus.model_ids(dataset_id))
            if (dataset_id, m) in corpus.annotation_sets
        ]
        if not dataset_models:
            continue

        verified = {}
        answered = {}
        for model_id in dataset_models:
            verified[model_id] = verified_set(log, dataset_id, model_id, corpus=corpus)
            answered[model_id] = set(effective_outcomes(log, dataset_id, model_id))
        pool = union_pool(verified.values())

        for model_id in dataset_models:
            n_set = corpus.get_set(dataset_id, model_id)
            v = verified[model_id]
            responded = answered[model_id]
            degenerate = len(n_set) == 0 or not responded
            cell = {
                "dataset_id": dataset_id,
                "model_id": model_id,
                "n_annotations": len(n_set),
                "n_responded": len(responded),
                "n_verified": len(v),
                "verification_rate": verification_rate(v, n_set),
                "posthoc_precision": verification_rate(v, n_set),
                "precision_ci": None,
                "posthoc_recall": posthoc_recall(v, pool),
                "recall_ci": None,
                "breakdown": None,
                "degenerate": degenerate,
            }
            if not degenerate:
                hits = [1 if ann in v.annotations else 0 for ann in n_set]
                groups = (
                    [ann.doc_id for ann in n_set] if resample_unit == "document" else None
                )
                cell["precision_ci"] = list(
                    bootstrap_ci(
                        np.mean,
                        hits,
                        n_resamples=n_resamples,
                        level=level,
                        seed=derive_seed(seed, dataset_id, model_id, "posthoc-p"),
                        groups=groups,
                    )
                )
                if len(pool):
                    pool_anns = sorted(pool.annotations)
                    pool_hits = [1 if ann in v.annotations else 0 for ann in pool_anns]
                    pool_groups = (
                        [ann.doc_id for ann in pool_anns]
                        if resample_unit == "document"
                        else None
                    )
                    cell["recall_ci"] = list(
                        bootstrap_ci(
                            np.mean,
                            pool_hits,
                            n_resamples=n_resamples,
                            level=level,
                            seed=derive_seed(seed, dataset_id, model_id, "posthoc-r"),
                            groups=pool_groups,
                        )
                    )
                v_frac, m_frac, r_frac = outcome_breakdown(log, dataset_id, model_id)
                cell["breakdown"] = {"verify": v_frac, "modify": m_frac, "remove": r_frac}
            report["cells"].append(cell)

        dataset_entry: dict = {
            "dataset_id": dataset_id,
            "union_size": len(pool),
            "intersection_size": None,
            "agreement": None,
            "coverage": None,
        }
        if len(dataset_models) >= 2:
            inter = intersection_pool(
                [corpus.get_set(dataset_id, m) for m in dataset_models]
            )
            dataset_entry["intersection_size"] = len(inter)
            counts = agreement_distribution(inter, verified)
            total = len(inter)
            dataset_entry["agreement"] = {
                "counts": {str(i): c for i, c in sorted(counts.items())},
                "fractions": {
                    str(i): (c / total if total else 0.0) for i, c in sorted(counts.items())
                },
            }
        if (dataset_id, gold_model) in corpus.annotation_sets and len(pool):
            dataset_entry["coverage"] = coverage_taxonomy(
                pool, corpus.get_set(dataset_id, gold_model)
            )
        report["datasets"].append(dataset_entry)

    return report


def serialize_report(report: dict) -> str:
    return json.dumps(report, ensure_ascii=False, sort_keys=True, indent=2) + "\n"


# --- figure data -------------------------------------------------------------


def figure_csvs(report: dict) -> dict[str, str]:
    """Per-figure CSV payloads keyed by file name."""
    prov = report["provenance"]
    header = _provenance_line(
        corpus=prov["corpus_hash"], log=prov["log_hash"], seed=prov["seed"]
    )

    def open_csv(columns: str) -> io.StringIO:
        out = io.StringIO()
        out.write(header + "\n")
        out.write(columns + "\n")
        return out

    def ci(bounds, fallback: float) -> tuple[float, float]:
        if bounds is None:
            return fallback, fallback
        return bounds[0], bounds[1]

    prec = open_csv("dataset_id,model_id,regime,precision,ci_lo,ci_hi")
    rec = open_csv("dataset_id,model_id,regime,recall,ci_lo,ci_hi")
    for row in report["pre_annotation"]:
        if row["mode"] != "exact" or row["level"] != "micro":
            continue
        lo, hi = ci(row["precision_ci"], row["precision"])
        prec.write(
            f"{row['dataset_id']},{row['model_id']},pre,"
            f"{row['precision']:.10f},{lo:.10f},{hi:.10f}\n"
        )
        lo, hi = ci(row["recall_ci"], row["recall"])
        rec.write(
            f"{row['dataset_id']},{row['model_id']},pre,"
            f"{row['recall']:.10f},{lo:.10f},{hi:.10f}\n"
        )
    for cell in report["cells"]:
        lo, hi = ci(cell["precision_ci"], cell["posthoc_precision"])
        prec.write(
            f"{cell['dataset_id']},{cell['model_id']},posthoc,"
            f"{cell['posthoc_precision']:.10f},{lo:.10f},{hi:.10f}\n"
        )
        lo, hi = ci(cell["recall_ci"], cell["posthoc_recall"])
        rec.write(
            f"{cell['dataset_id']},{cell['model_id']},posthoc,"
            f"{cell['posthoc_recall']:.10f},{lo:.10f},{hi:.10f}\n"
        )

    breakdown = open_csv("dataset_id,model_id,verify,modify,remove")
    for cell in report["cells"]:
        b = cell["breakdown"] or {"verify": 0.0, "modify": 0.0, "remove": 0.0}
        breakdown.write(
            f"{cell['dataset_id']},{cell['model_id']},"
            f"{b['verify']:.10f},{b['modify']:.10f},{b['remove']:.10f}\n"
        )

    agreement = open_csv("dataset_id,i,count,fraction")
    for entry in report["datasets"]:
        if entry["agreement"] is None:
            continue
        for i in sorted(entry["agreement"]["counts"], key=int):
            agreement.write(
                f"{entry['dataset_id']},{i},{entry['agreement']['counts'][i]},"
                f"{entry['agreement']['fractions'][i]:.10f}\n"
            )

    coverage = open_csv("dataset_id,A,B,C,D,E")
    for entry in report["datasets"]:
        if entry["coverage"] is None:
            continue
        cov = entry["coverage"]
        coverage.write(
            f"{entry['dataset_id']},"
            + ",".join(f"{cov[k]:.10f}" for k in "ABCDE")
            + "\n"
        )

    return {
        "fig3_precision.csv": prec.getvalue(),
        "fig3_recall.csv": rec.getvalue(),
        "fig4_breakdown.csv": breakdown.getvalue(),
        "fig5_agreement.csv": agreement.getvalue(),
        "fig6_coverage.csv": coverage.getvalue(),
    }


def write_figure_csvs(report: dict, out_dir: str | Path) -> list[Path]:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, payload in figure_csvs(report).items():
        path = out_dir / name
        path.write_text(payload, encoding="utf-8")
        written.append(path)
    return written
