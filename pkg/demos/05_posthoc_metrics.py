"""Posthoc verification metrics end to end.

Three models (ground truth included) get their annotations verified by
scripted annotators; the report computes verification rates (= posthoc
precision), pooled recall, the verify/modify/remove breakdown, agreement
over the model intersection, and the A-E coverage of ground truth, all
with bootstrap confidence intervals.
"""

import json
import tempfile
from pathlib import Path

from phv import Document, VerificationService, chunk_document
from phv.corpus import Annotation, EntityLink, Span, build_corpus
from phv.report import run_posthoc_eval, serialize_report, write_figure_csvs
from phv.taskgen import Assignment, VERIFY, REMOVE


def ann(doc, start, end, link):
    return Annotation(doc, Span(start, end), EntityLink(link))


# Ten documents; GT and two models that agree on some annotations and not
# others. Model B also finds two mentions missing from GT entirely.
text = ("entity rich text " * 6)[:90]
docs = [Document("study", f"m{i}", text) for i in range(10)]
shared = [ann(f"m{i}", 0, 6, f"Shared {i}") for i in range(10)]
gt_only = [ann(f"m{i}", 10, 14, f"Gt only {i}") for i in range(4)]
b_extra = [ann("m0", 20, 26, "Novel one"), ann("m1", 20, 26, "Novel two")]

sets = {
    "GT": shared + gt_only,
    "ModelA": shared,
    "ModelB": shared + b_extra,
}
corpus = build_corpus(
    docs, raw_annotations=[("study", m, a) for m, anns in sets.items() for a in anns]
)

# One scripted worker per model; every annotation answered. The workers
# verify everything except: GT's extra mentions get removed half the time,
# annotations on m9 are rejected by ModelA's worker.
tasks, assignments = {}, {}
for model in sets:
    ids = []
    aset = corpus.get_set("study", model)
    for doc in corpus.documents_for("study"):
        if doc.doc_id in aset.by_doc():
            for t in chunk_document(doc, aset):
                tasks[t.task_id] = t
                ids.append(t.task_id)
    assignments[f"hit-{model}"] = Assignment(f"hit-{model}", f"worker-{model}", tuple(ids), seed=0)

service = VerificationService(corpus, tasks, {}, assignments, seed=0)
for model in sets:
    aid = f"hit-{model}"
    while (payload := service.get_next_task(aid)) is not None:
        task = service.tasks[payload["task_id"]]
        anns = sorted(task.annotations, key=lambda a: (a.span.start, a.span.end, a.link.title))
        for item in payload["annotations"]:
            a = anns[item["idx"]]
            drop = (model == "GT" and a.link.title.startswith("Gt only") and a.doc_id in ("m0", "m1")) or (
                model == "ModelA" and a.doc_id == "m9"
            )
            service.submit_outcome(aid, task.task_id, item["idx"], REMOVE if drop else VERIFY)
    service.finalize_assignment(aid)

report = run_posthoc_eval(corpus, service.export_log(), n_resamples=1000, seed=42)

print("posthoc precision (= verification rate) and recall:")
for cell in report["cells"]:
    lo, hi = cell["precision_ci"]
    print(
        f"  {cell['model_id']:7s} precision {cell['posthoc_precision']:.3f} "
        f"[{lo:.3f}, {hi:.3f}]   recall {cell['posthoc_recall']:.3f}   "
        f"breakdown {cell['breakdown']}"
    )

(entry,) = report["datasets"]
print(f"\nunion pool {entry['union_size']}, intersection {entry['intersection_size']}")
print("agreement (how many models' annotators verified each shared annotation):")
print("  ", entry["agreement"]["counts"])
print("coverage of the verified pool against GT (A best .. E missing):")
print("  ", {k: round(v, 3) for k, v in entry["coverage"].items()})

out = Path(tempfile.mkdtemp(prefix="phv-demo-"))
(out / "report.json").write_text(serialize_report(report))
written = write_figure_csvs(report, out)
print(f"\nwrote {out}/report.json and {len(written)} figure CSVs")
print(json.dumps(report["provenance"], indent=2, sort_keys=True))
