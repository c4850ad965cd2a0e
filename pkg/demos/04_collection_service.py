"""A complete collection session against the in-process service.

The service hands out tasks, records verify/modify/remove outcomes in an
append-only log, and gates each assignment on its control task. The same
object serves HTTP via `phv serve`; here we drive it directly.
"""

from phv import Document, VerificationService, build_assignments, chunk_document
from phv.corpus import Annotation, EntityLink, Span, build_annotation_set, build_corpus
from phv.taskgen import MODIFY, REMOVE, VERIFY, ControlExpectation, ControlKey, Task


def ann(doc, start, end, link):
    return Annotation(doc, Span(start, end), EntityLink(link))


# 38 one-task documents, two workers, one shared control task.
docs, raw = [], []
for i in range(38):
    doc_id = f"doc{i:02d}"
    docs.append(Document("demo", doc_id, f"short text number {i:02d} with one entity span"))
    raw.append(("demo", "GT", ann(doc_id, 0, 5, f"Entity {i}")))
docs.append(Document("demo", "ctrl", "alpha beta gamma"))
corpus = build_corpus(docs, raw_annotations=raw)

gt = corpus.get_set("demo", "GT")
tasks = [t for d in corpus.documents_for("demo") if d.doc_id != "ctrl"
         for t in chunk_document(d, gt)]

control_anns = (ann("ctrl", 0, 5, "Alpha"), ann("ctrl", 6, 10, "Beta"), ann("ctrl", 11, 16, "Gamma"))
control = Task(task_id="ctrl:0", dataset_id="demo", model_id="GT", doc_id="ctrl",
               window=Span(0, 16), annotations=control_anns, is_control=True)
key = ControlKey(task_id="ctrl:0", expected={
    control_anns[0]: ControlExpectation(VERIFY),
    control_anns[1]: ControlExpectation(MODIFY),
    control_anns[2]: ControlExpectation(REMOVE),
})

assignments = build_assignments(tasks, [(control, key)], n_workers=2, seed=1)
service = VerificationService(
    corpus,
    tasks={t.task_id: t for t in tasks} | {control.task_id: control},
    controls={key.task_id: key},
    assignments={a.assignment_id: a for a in assignments},
    seed=1,
)


def work_through(assignment_id, honest=True):
    """Answer every annotation; an honest worker follows the control key."""
    while (payload := service.get_next_task(assignment_id)) is not None:
        task = service.tasks[payload["task_id"]]
        anns = sorted(task.annotations, key=lambda a: (a.span.start, a.span.end, a.link.title))
        for item in payload["annotations"]:
            if task.is_control and honest:
                action = key.expected[anns[item["idx"]]].action
            elif task.is_control:
                action = VERIFY  # a careless worker verifies everything
            else:
                action = VERIFY
            new_link = "Something better" if action == MODIFY else None
            service.submit_outcome(assignment_id, task.task_id, item["idx"], action, new_link)
    return service.finalize_assignment(assignment_id)


a1, a2 = sorted(service.assignments)
print(f"{a1}: {work_through(a1, honest=True).status}")
print(f"{a2}: {work_through(a2, honest=False).status}  (failed the control task)")

exported = service.export_log()
raw_log = service.export_log(raw=True)
print(f"\nexported outcomes (accepted assignments only): {len(exported.outcomes())}")
print(f"raw log outcomes (everything, flagged):        {len(raw_log.outcomes())}")
print("accepted assignments:", sorted(exported.accepted_assignments()))
