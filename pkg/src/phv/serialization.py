"""File forms of tasks, control keys, and assignments.

Tasks travel as one JSON record per line behind a header; an assignment
bundle is a single JSON document holding everything the collection
service needs (tasks, controls with their keys, assignments).
"""

from __future__ import annotations

import json
from pathlib import Path

from .corpus import Annotation, CorpusError, EntityLink, Span
from .taskgen import Assignment, ControlExpectation, ControlKey, Task


def annotation_to_dict(ann: Annotation) -> dict:
    return {
        "doc_id": ann.doc_id,
        "start": ann.span.start,
        "end": ann.span.end,
        "link": ann.link.title,
    }


def annotation_from_dict(data: dict) -> Annotation:
    return Annotation(
        doc_id=data["doc_id"],
        span=Span(data["start"], data["end"]),
        link=EntityLink(data["link"]),
    )


def task_to_dict(task: Task) -> dict:
    return {
        "kind": "task",
        "task_id": task.task_id,
        "dataset_id": task.dataset_id,
        "model_id": task.model_id,
        "doc_id": task.doc_id,
        "window": {"start": task.window.start, "end": task.window.end},
        "annotations": [annotation_to_dict(a) for a in task.annotations],
        "is_control": task.is_control,
    }


def task_from_dict(data: dict) -> Task:
    return Task(
        task_id=data["task_id"],
        dataset_id=data["dataset_id"],
        model_id=data["model_id"],
        doc_id=data["doc_id"],
        window=Span(data["window"]["start"], data["window"]["end"]),
        annotations=tuple(annotation_from_dict(a) for a in data["annotations"]),
        is_control=data.get("is_control", False),
    )


def control_key_to_dict(key: ControlKey) -> dict:
    return {
        "task_id": key.task_id,
        "expected": [
            {
                **annotation_to_dict(ann),
                "action": exp.action,
                "new_link": exp.new_link.title if exp.new_link else None,
            }
            for ann, exp in sorted(key.expected.items())
        ],
    }


def control_key_from_dict(data: dict) -> ControlKey:
    expected = {}
    for entry in data["expected"]:
        ann = annotation_from_dict(entry)
        expected[ann] = ControlExpectation(
            action=entry["action"],
            new_link=EntityLink(entry["new_link"]) if entry.get("new_link") else None,
        )
    return ControlKey(task_id=data["task_id"], expected=expected)


def assignment_to_dict(assignment: Assignment) -> dict:
    return {
        "assignment_id": assignment.assignment_id,
        "worker_id": assignment.worker_id,
        "task_ids": list(assignment.task_ids),
        "seed": assignment.seed,
    }


def assignment_from_dict(data: dict) -> Assignment:
    return Assignment(
        assignment_id=data["assignment_id"],
        worker_id=data["worker_id"],
        task_ids=tuple(data["task_ids"]),
        seed=data["seed"],
    )


def _dump(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def write_tasks_jsonl(
    path: str | Path,
    tasks: list[Task] | list[tuple[Task, ControlKey]],
    corpus_hash: str = "",
    seed: int = 0,
):
    lines = [
        _dump({"kind": "header", "format": "phv-tasks", "corpus_hash": corpus_hash, "seed": seed})
    ]
    for item in tasks:
        if isinstance(item, tuple):
            task, key = item
            record = task_to_dict(task)
            record["key"] = control_key_to_dict(key)
        else:
            record = task_to_dict(item)
        lines.append(_dump(record))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def load_tasks_jsonl(path: str | Path, with_keys: bool = False):
    """Returns (tasks, meta); with_keys=True yields (task, key) pairs."""
    meta: dict = {}
    items = []
    for lineno, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        record = json.loads(line)
        if record.get("kind") == "header":
            meta = record
            continue
        task = task_from_dict(record)
        if with_keys:
            if "key" not in record:
                raise CorpusError(f"control task {task.task_id} has no control key", line=lineno)
            items.append((task, control_key_from_dict(record["key"])))
        else:
            items.append(task)
    return items, meta


def write_bundle(
    path: str | Path,
    tasks: list[Task],
    controls: list[tuple[Task, ControlKey]],
    assignments: list[Assignment],
    corpus_hash: str = "",
    seed: int = 0,
):
    payload = {
        "kind": "phv-bundle",
        "corpus_hash": corpus_hash,
        "seed": seed,
        "tasks": [task_to_dict(t) for t in tasks],
        "controls": [
            {"task": task_to_dict(t), "key": control_key_to_dict(k)} for t, k in controls
        ],
        "assignments": [assignment_to_dict(a) for a in assignments],
    }
    Path(path).write_text(
        json.dumps(payload, ensure_ascii=False, sort_keys=True, indent=2) + "\n",
        encoding="utf-8",
    )


def load_bundle(path: str | Path):
    """Returns (tasks, controls, assignments, meta)."""
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    if data.get("kind") != "phv-bundle":
        raise CorpusError(f"{path} is not an assignment bundle")
    tasks = [task_from_dict(t) for t in data["tasks"]]
    controls = [
        (task_from_dict(c["task"]), control_key_from_dict(c["key"])) for c in data["controls"]
    ]
    assignments = [assignment_from_dict(a) for a in data["assignments"]]
    meta = {"corpus_hash": data.get("corpus_hash", ""), "seed": data.get("seed", 0)}
    return tasks, controls, assignments, meta
