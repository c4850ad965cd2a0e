"""From documents to worker assignments.

Long documents are cut into windows of at most 300 characters. A window
never splits a mention: when a mention straddles the cut point the window
stretches to cover it. Workers get 20-task assignments holding exactly one
control task whose expected answers gate acceptance.
"""

from phv import Document, build_assignments, chunk_document, grade_control
from phv.corpus import Annotation, EntityLink, Span, build_annotation_set
from phv.taskgen import MODIFY, REMOVE, VERIFY, ControlExpectation, ControlKey, Task


def ann(doc, start, end, link):
    return Annotation(doc, Span(start, end), EntityLink(link))


# A mention sitting right on the 300-char boundary:
text = ("lorem ipsum " * 60)[:700]
doc = Document("demo", "long1", text)
anns = build_annotation_set("demo", "GT", [ann("long1", 295, 320, "Straddler")])

tasks = chunk_document(doc, anns, max_chars=300)
for t in tasks:
    flag = " <-- stretched to keep the mention whole" if t.window.length > 300 else ""
    print(f"{t.task_id}: window [{t.window.start:4d},{t.window.end:4d}) "
          f"len {t.window.length}{flag}")
assert "".join(text[t.window.start:t.window.end] for t in tasks) == text

# Assignments: 19 regular tasks plus one control, dealt so that all tasks
# of one (document, model) pairing go to a single worker.
regular = []
for i in range(38):
    d = Document("demo", f"doc{i}", "some short text all under the limit")
    aset = build_annotation_set("demo", "GT", [ann(f"doc{i}", 0, 4, f"Entity {i}")])
    regular.extend(chunk_document(d, aset))

control_anns = (ann("ctrl", 0, 4, "Good"), ann("ctrl", 5, 9, "Wrong"), ann("ctrl", 10, 14, "Junk"))
control = Task(
    task_id="control:0", dataset_id="demo", model_id="GT", doc_id="ctrl",
    window=Span(0, 15), annotations=control_anns, is_control=True,
)
key = ControlKey(
    task_id="control:0",
    expected={
        control_anns[0]: ControlExpectation(VERIFY),   # the link is right
        control_anns[1]: ControlExpectation(MODIFY),   # wrong link, right mention
        control_anns[2]: ControlExpectation(REMOVE),   # not an entity at all
    },
)

assignments = build_assignments(regular, [(control, key)], n_workers=2, seed=7)
for a in assignments:
    print(f"\n{a.assignment_id} -> {a.worker_id}: {len(a.task_ids)} tasks, "
          f"control at position {a.task_ids.index('control:0')}")

# Grading: action kinds must match; by default a Modify passes whatever
# replacement link the worker picked.
submitted = {
    control_anns[0]: (VERIFY, None),
    control_anns[1]: (MODIFY, EntityLink("Corrected link")),
    control_anns[2]: (VERIFY, None),  # should have been removed
}
result = grade_control(key, submitted)
print(f"\ncontrol grade: passed={result.passed} reasons={list(result.reasons)}")
