"""Turn annotated documents into worker-sized verification tasks.

Documents are cut into windows of at most ``max_chars`` characters
(default 300), windows never split a mention, and each worker receives
20-task assignments holding exactly one control task.
"""

from __future__ import annotations

import logging
import random
from dataclasses import dataclass
from typing import Mapping, Sequence

from .corpus import Annotation, AnnotationSet, Document, EntityLink, Span

log = logging.getLogger(__name__)

VERIFY = "verify"
MODIFY = "modify"
REMOVE = "remove"
ACTIONS = (VERIFY, MODIFY, REMOVE)

DEFAULT_MAX_CHARS = 300
TASKS_PER_ASSIGNMENT = 20
CONTROL_ANNOTATIONS = 3

REGULAR_TASKS_PER_ASSIGNMENT = TASKS_PER_ASSIGNMENT - 1


@dataclass(frozen=True)
class Task:
    """One verification unit: a document window plus the annotations inside it."""

    task_id: str
    dataset_id: str
    model_id: str
    doc_id: str
    window: Span
    annotations: tuple[Annotation, ...]
    is_control: bool = False

    def __post_init__(self):
        for ann in self.annotations:
            if not (self.window.start <= ann.span.start and ann.span.end <= self.window.end):
                raise ValueError(
                    f"annotation [{ann.span.start},{ann.span.end}) escapes window "
                    f"[{self.window.start},{self.window.end}) in task {self.task_id}"
                )

    @property
    def group_key(self) -> tuple[str, str, str]:
        return (self.dataset_id, self.doc_id, self.model_id)


@dataclass(frozen=True)
class ControlExpectation:
    action: str
    new_link: EntityLink | None = None

    def __post_init__(self):
        if self.action not in ACTIONS:
            raise ValueError(f"unknown action {self.action!r}")


@dataclass(frozen=True, eq=False)
class ControlKey:
    """Expected actions for the three annotations of one control task."""

    task_id: str
    expected: Mapping[Annotation, ControlExpectation]

    def __post_init__(self):
        if len(self.expected) != CONTROL_ANNOTATIONS:
            raise ValueError(
                f"control key needs exactly {CONTROL_ANNOTATIONS} entries, "
                f"got {len(self.expected)}"
            )


@dataclass(frozen=True)
class Assignment:
    assignment_id: str
    worker_id: str
    task_ids: tuple[str, ...]
    seed: int


@dataclass(frozen=True)
class GradeResult:
    passed: bool
    failed: tuple[Annotation, ...]
    reasons: tuple[str, ...]


def chunk_document(
    doc: Document,
    anns: AnnotationSet,
    max_chars: int = DEFAULT_MAX_CHARS,
) -> list[Task]:
    """Cut one document into tasks for one model's annotations.

    Windows tile the document exactly, break at whitespace where possible,
    and extend past ``max_chars`` only when a mention would otherwise be
    split. A document at or under the limit yields a single task.
    """
    if max_chars < 1:
        raise ValueError("max_chars must be >= 1")
    text = doc.text
    doc_anns = sorted(
        (a for a in anns if a.doc_id == doc.doc_id),
        key=lambda a: (a.span.start, a.span.end),
    )
    windows: list[Span] = []
    pos = 0
    n = len(text)
    while pos < n:
        hard = min(pos + max_chars, n)
        if hard == n:
            end = n
        else:
            end = hard
            while end > pos and not text[end - 1].isspace():
                end -= 1
            if end == pos:  # no whitespace in reach: hard cut inside the word
                end = hard
        # never end inside a mention; sets have disjoint spans, so at most
        # one extension can trigger
        for ann in doc_anns:
            if ann.span.start < end < ann.span.end:
                end = ann.span.end
                break
        windows.append(Span(pos, end))
        pos = end

    tasks = []
    for i, window in enumerate(windows):
        inside = tuple(
            a for a in doc_anns if window.start <= a.span.start and a.span.end <= window.end
        )
        tasks.append(
            Task(
                task_id=f"{anns.dataset_id}:{anns.model_id}:{doc.doc_id}:{i}",
                dataset_id=anns.dataset_id,
                model_id=anns.model_id,
                doc_id=doc.doc_id,
                window=window,
                annotations=inside,
            )
        )
    return tasks


def build_assignments(
    tasks: Sequence[Task],
    controls: Sequence[tuple[Task, ControlKey]],
    n_workers: int,
    seed: int,
) -> list[Assignment]:
    """Deal tasks into 20-task assignments, one control task each.

    All tasks of one (dataset, doc, model) group go to the same worker, so
    a single worker sees every annotation of that pairing; groups are
    shuffled under ``seed`` before being balanced over workers. Each
    worker's tasks are then split into runs of 19 plus one control task at
    a random position. Tasks beyond the last full run of a worker are left
    unassigned (and logged); controls may repeat across assignments.
    """
    regular = [t for t in tasks if not t.is_control]
    if n_workers < 1:
        raise ValueError("need at least one worker")
    if not controls:
        raise ValueError("no control tasks supplied")
    if len(regular) < REGULAR_TASKS_PER_ASSIGNMENT * n_workers:
        raise ValueError(
            f"need at least {REGULAR_TASKS_PER_ASSIGNMENT} tasks per worker: "
            f"{len(regular)} tasks for {n_workers} workers"
        )
    for control_task, key in controls:
        if not control_task.is_control:
            raise ValueError(f"control task {control_task.task_id} is not marked is_control")
        if key.task_id != control_task.task_id:
            raise ValueError(f"control key {key.task_id} does not match task {control_task.task_id}")
        if not set(key.expected) <= set(control_task.annotations):
            raise ValueError(f"control key {key.task_id} references annotations outside its task")

    rng = random.Random(seed)

    groups: dict[tuple[str, str, str], list[Task]] = {}
    for task in regular:
        groups.setdefault(task.group_key, []).append(task)
    group_list = [groups[k] for k in sorted(groups)]
    rng.shuffle(group_list)

    per_worker: list[list[Task]] = [[] for _ in range(n_workers)]
    for group in group_list:
        target = min(range(n_workers), key=lambda w: (len(per_worker[w]), w))
        per_worker[target].extend(group)

    assignments = []
    counter = 0
    unassigned = 0
    for worker_index, worker_tasks in enumerate(per_worker):
        rng.shuffle(worker_tasks)
        n_full = len(worker_tasks) // REGULAR_TASKS_PER_ASSIGNMENT
        unassigned += len(worker_tasks) - n_full * REGULAR_TASKS_PER_ASSIGNMENT
        for k in range(n_full):
            run = worker_tasks[
                k * REGULAR_TASKS_PER_ASSIGNMENT : (k + 1) * REGULAR_TASKS_PER_ASSIGNMENT
            ]
            control_task, _ = controls[rng.randrange(len(controls))]
            position = rng.randrange(TASKS_PER_ASSIGNMENT)
            task_ids = [t.task_id for t in run]
            task_ids.insert(position, control_task.task_id)
            assignments.append(
                Assignment(
                    assignment_id=f"a{counter:04d}",
                    worker_id=f"w{worker_index:03d}",
                    task_ids=tuple(task_ids),
                    seed=seed,
                )
            )
            counter += 1
    if unassigned:
        log.warning(
            "%d tasks left unassigned (worker shares are cut to multiples of %d)",
            unassigned,
            REGULAR_TASKS_PER_ASSIGNMENT,
        )
    return assignments


def grade_control(
    key: ControlKey,
    submitted: Mapping[Annotation, tuple[str, EntityLink | None]],
    mode: str = "all",
    strict_modify_link: bool = False,
) -> GradeResult:
    """Grade a worker's answers on a control task.

    ``submitted`` maps each control annotation to (action, new_link). By
    default every expected action must match and a Modify only has to be a
    Modify; ``strict_modify_link`` additionally compares the replacement
    link, and ``mode="majority"`` accepts 2-of-3.
    """
    if mode not in ("all", "majority"):
        raise ValueError(f"unknown grading mode {mode!r}")
    failed: list[Annotation] = []
    reasons: list[str] = []
    for ann in sorted(key.expected):
        expectation = key.expected[ann]
        got = submitted.get(ann)
        if got is None:
            failed.append(ann)
            reasons.append("incomplete")
            continue
        action, new_link = got
        if action != expectation.action:
            failed.append(ann)
            reasons.append(f"expected {expectation.action}, got {action}")
        elif (
            strict_modify_link
            and expectation.action == MODIFY
            and expectation.new_link is not None
            and new_link != expectation.new_link
        ):
            failed.append(ann)
            reasons.append("replacement link mismatch")
    matched = len(key.expected) - len(failed)
    needed = len(key.expected) if mode == "all" else (len(key.expected) // 2 + 1)
    return GradeResult(passed=matched >= needed, failed=tuple(failed), reasons=tuple(reasons))
