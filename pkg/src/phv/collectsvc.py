"""Verification data collection: service state, append-only log, HTTP API.

The service hands tasks to annotators, records verify/modify/remove
outcomes, and gates each assignment on its control task. All state is a
pure function of the outcome log, so a crashed service restarts by
replaying its log file.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import BinaryIO, Callable, Iterable, Mapping

from pydantic import BaseModel

from . import __version__
from .corpus import Annotation, Corpus, CorpusError, EntityLink, Span, corpus_digest, normalize_link
from .taskgen import ACTIONS, MODIFY, Assignment, ControlKey, Task, grade_control

LOG_FORMAT = "phv-outcome-log"
LOG_VERSION = 1


class ProtocolError(Exception):
    """A request the protocol refuses; carries the HTTP status to report."""

    def __init__(self, message: str, status: int = 400):
        super().__init__(message)
        self.status = status


@dataclass(frozen=True)
class Outcome:
    """One annotator decision about one annotation."""

    outcome_id: str
    assignment_id: str
    task_id: str
    annotation: Annotation
    action: str
    new_link: EntityLink | None
    worker_id: str
    timestamp_ms: int
    dataset_id: str
    model_id: str
    is_control: bool
    replaces: str | None = None

    def to_record(self) -> dict:
        return {
            "kind": "outcome",
            "outcome_id": self.outcome_id,
            "assignment_id": self.assignment_id,
            "task_id": self.task_id,
            "doc_id": self.annotation.doc_id,
            "start": self.annotation.span.start,
            "end": self.annotation.span.end,
            "link": self.annotation.link.title,
            "action": self.action,
            "new_link": self.new_link.title if self.new_link else None,
            "worker_id": self.worker_id,
            "timestamp_ms": self.timestamp_ms,
            "dataset_id": self.dataset_id,
            "model_id": self.model_id,
            "is_control": self.is_control,
            "replaces": self.replaces,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Outcome":
        return cls(
            outcome_id=record["outcome_id"],
            assignment_id=record["assignment_id"],
            task_id=record["task_id"],
            annotation=Annotation(
                doc_id=record["doc_id"],
                span=Span(record["start"], record["end"]),
                link=EntityLink(record["link"]),
            ),
            action=record["action"],
            new_link=EntityLink(record["new_link"]) if record.get("new_link") else None,
            worker_id=record["worker_id"],
            timestamp_ms=record["timestamp_ms"],
            dataset_id=record["dataset_id"],
            model_id=record["model_id"],
            is_control=record["is_control"],
            replaces=record.get("replaces"),
        )


@dataclass(frozen=True)
class Finalization:
    assignment_id: str
    status: str  # accepted | rejected
    failed_controls: tuple[dict, ...]
    timestamp_ms: int

    def to_record(self) -> dict:
        return {
            "kind": "finalize",
            "assignment_id": self.assignment_id,
            "status": self.status,
            "failed_controls": list(self.failed_controls),
            "timestamp_ms": self.timestamp_ms,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Finalization":
        return cls(
            assignment_id=record["assignment_id"],
            status=record["status"],
            failed_controls=tuple(record["failed_controls"]),
            timestamp_ms=record["timestamp_ms"],
        )


@dataclass(frozen=True)
class LogHeader:
    corpus_hash: str
    seed: int
    tool_version: str = __version__

    def to_record(self) -> dict:
        return {
            "kind": "header",
            "format": LOG_FORMAT,
            "version": LOG_VERSION,
            "corpus_hash": self.corpus_hash,
            "seed": self.seed,
            "tool_version": self.tool_version,
        }

    @classmethod
    def from_record(cls, record: dict) -> "LogHeader":
        if record.get("format") != LOG_FORMAT:
            raise CorpusError(f"not an outcome log (format {record.get('format')!r})")
        return cls(
            corpus_hash=record["corpus_hash"],
            seed=record["seed"],
            tool_version=record.get("tool_version", "unknown"),
        )


@dataclass(frozen=True)
class OutcomeLog:
    header: LogHeader
    events: tuple[Outcome | Finalization, ...]

    def outcomes(self) -> list[Outcome]:
        return [e for e in self.events if isinstance(e, Outcome)]

    def finalizations(self) -> list[Finalization]:
        return [e for e in self.events if isinstance(e, Finalization)]

    def accepted_assignments(self) -> set[str]:
        return {f.assignment_id for f in self.finalizations() if f.status == "accepted"}


def _event_line(event: Outcome | Finalization) -> str:
    return json.dumps(event.to_record(), ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def serialize_outcome_log(log: OutcomeLog) -> bytes:
    lines = [
        json.dumps(log.header.to_record(), ensure_ascii=False, sort_keys=True, separators=(",", ":"))
    ]
    lines.extend(_event_line(e) for e in log.events)
    return ("\n".join(lines) + "\n").encode("utf-8")


def parse_outcome_log(data: bytes | str | BinaryIO) -> OutcomeLog:
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    elif isinstance(data, str):
        text = data
    else:
        text = data.read().decode("utf-8")
    header: LogHeader | None = None
    events: list[Outcome | Finalization] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"malformed log record: {exc.msg}", line=lineno) from exc
        kind = record.get("kind")
        if kind == "header":
            if header is not None:
                raise CorpusError("duplicate log header", line=lineno)
            header = LogHeader.from_record(record)
        elif kind == "outcome":
            events.append(Outcome.from_record(record))
        elif kind == "finalize":
            events.append(Finalization.from_record(record))
        else:
            raise CorpusError(f"unknown log record kind {kind!r}", line=lineno)
    if header is None:
        raise CorpusError("outcome log is missing its provenance header")
    return OutcomeLog(header=header, events=tuple(events))


def load_outcome_log(path: str | Path) -> OutcomeLog:
    return parse_outcome_log(Path(path).read_bytes())


def _sorted_events(events: Iterable[Outcome | Finalization]) -> list[Outcome | Finalization]:
    def key(e):
        if isinstance(e, Outcome):
            return (e.timestamp_ms, 0, e.outcome_id)
        return (e.timestamp_ms, 1, e.assignment_id)

    return sorted(events, key=key)


class VerificationService:
    """In-memory protocol state plus an optional append-only log file.

    Appends are serialized behind a lock; reads take a snapshot under the
    same lock, so exports never observe a half-applied submission.
    """

    def __init__(
        self,
        corpus: Corpus,
        tasks: Mapping[str, Task],
        controls: Mapping[str, ControlKey],
        assignments: Mapping[str, Assignment],
        seed: int = 0,
        log_path: str | Path | None = None,
        clock: Callable[[], int] | None = None,
        grade_mode: str = "all",
        strict_modify_link: bool = False,
    ):
        self.corpus = corpus
        self.tasks = dict(tasks)
        self.controls = dict(controls)
        self.assignments = dict(assignments)
        self.header = LogHeader(corpus_hash=corpus_digest(corpus), seed=seed)
        self._clock = clock or (lambda: int(time.time() * 1000))
        self._grade_mode = grade_mode
        self._strict_modify_link = strict_modify_link

        self._lock = threading.Lock()
        self._events: list[Outcome | Finalization] = []
        self._effective: dict[tuple[str, Annotation], Outcome] = {}
        self._final: dict[str, Finalization] = {}
        self._next_outcome = 0

        for assignment in self.assignments.values():
            for task_id in assignment.task_ids:
                if task_id not in self.tasks:
                    raise ValueError(
                        f"assignment {assignment.assignment_id} references unknown task {task_id}"
                    )
        for task in self.tasks.values():
            self.corpus.document(task.dataset_id, task.doc_id)  # raises if missing

        self._log_file = None
        if log_path is not None:
            log_path = Path(log_path)
            if log_path.exists() and log_path.stat().st_size > 0:
                existing = load_outcome_log(log_path)
                if existing.header.corpus_hash != self.header.corpus_hash:
                    raise CorpusError(
                        "outcome log was recorded against a different corpus "
                        f"({existing.header.corpus_hash} != {self.header.corpus_hash})"
                    )
                self.header = existing.header
                for event in existing.events:
                    self._apply(event)
                self._log_file = log_path.open("a", encoding="utf-8")
            else:
                self._log_file = log_path.open("w", encoding="utf-8")
                self._log_file.write(
                    json.dumps(
                        self.header.to_record(), ensure_ascii=False, sort_keys=True,
                        separators=(",", ":"),
                    )
                    + "\n"
                )
                self._log_file.flush()

    # -- state transitions ---------------------------------------------

    def _apply(self, event: Outcome | Finalization):
        self._events.append(event)
        if isinstance(event, Outcome):
            self._effective[(event.assignment_id, event.annotation)] = event
            self._next_outcome = max(
                self._next_outcome, int(event.outcome_id.lstrip("o")) + 1
            )
        else:
            self._final[event.assignment_id] = event

    def _append(self, event: Outcome | Finalization):
        self._apply(event)
        if self._log_file is not None:
            self._log_file.write(_event_line(event) + "\n")
            self._log_file.flush()

    # -- lookups ---------------------------------------------------------

    def _assignment(self, assignment_id: str) -> Assignment:
        assignment = self.assignments.get(assignment_id)
        if assignment is None:
            raise ProtocolError(f"unknown assignment {assignment_id!r}", status=404)
        return assignment

    def _task_annotations(self, task: Task) -> list[Annotation]:
        return sorted(task.annotations, key=lambda a: (a.span.start, a.span.end, a.link.title))

    def _task_answered(self, assignment_id: str, task: Task) -> bool:
        return all(
            (assignment_id, ann) in self._effective for ann in task.annotations
        )

    def task_payload(self, assignment_id: str, task: Task) -> dict:
        """Wire form of a task. Control tasks are indistinguishable here."""
        doc = self.corpus.document(task.dataset_id, task.doc_id)
        window = task.window
        return {
            "task_id": task.task_id,
            "text": doc.text[window.start : window.end],
            "annotations": [
                {
                    "idx": i,
                    "start": ann.span.start - window.start,
                    "end": ann.span.end - window.start,
                    "link": ann.link.title,
                }
                for i, ann in enumerate(self._task_annotations(task))
            ],
        }

    # -- protocol operations ----------------------------------------------

    def get_next_task(self, assignment_id: str) -> dict | None:
        """First task with unanswered annotations, or None when complete."""
        assignment = self._assignment(assignment_id)
        with self._lock:
            for task_id in assignment.task_ids:
                task = self.tasks[task_id]
                if not self._task_answered(assignment_id, task):
                    return self.task_payload(assignment_id, task)
        return None

    def submit_outcome(
        self,
        assignment_id: str,
        task_id: str,
        idx: int,
        action: str,
        new_link: str | None = None,
    ) -> Outcome:
        assignment = self._assignment(assignment_id)
        if task_id not in assignment.task_ids:
            raise ProtocolError(f"task {task_id!r} is not part of assignment {assignment_id!r}")
        task = self.tasks[task_id]
        annotations = self._task_annotations(task)
        if not (0 <= idx < len(annotations)):
            # the protocol never accepts annotations it did not present
            raise ProtocolError(f"no annotation {idx} in task {task_id!r}")
        annotation = annotations[idx]
        if action not in ACTIONS:
            raise ProtocolError(f"unknown action {action!r}")
        link: EntityLink | None = None
        if action == MODIFY:
            if not new_link or not new_link.strip():
                raise ProtocolError("modify requires a replacement link")
            try:
                link = normalize_link(new_link)
            except CorpusError as exc:
                raise ProtocolError(f"malformed replacement link: {exc}") from exc
            if link == annotation.link:
                raise ProtocolError("replacement link equals the original link")
        elif new_link is not None:
            raise ProtocolError(f"{action} does not take a replacement link")

        with self._lock:
            if assignment_id in self._final:
                raise ProtocolError(
                    f"assignment {assignment_id!r} is already finalized", status=409
                )
            prior = self._effective.get((assignment_id, annotation))
            outcome = Outcome(
                outcome_id=f"o{self._next_outcome:06d}",
                assignment_id=assignment_id,
                task_id=task_id,
                annotation=annotation,
                action=action,
                new_link=link,
                worker_id=assignment.worker_id,
                timestamp_ms=self._clock(),
                dataset_id=task.dataset_id,
                model_id=task.model_id,
                is_control=task.is_control,
                replaces=prior.outcome_id if prior else None,
            )
            self._append(outcome)
            return outcome

    def finalize_assignment(self, assignment_id: str) -> Finalization:
        assignment = self._assignment(assignment_id)
        with self._lock:
            existing = self._final.get(assignment_id)
            if existing is not None:
                return existing
            for task_id in assignment.task_ids:
                if not self._task_answered(assignment_id, self.tasks[task_id]):
                    raise ProtocolError(
                        f"assignment {assignment_id!r} still has unanswered tasks", status=409
                    )
            failed: list[dict] = []
            for task_id in assignment.task_ids:
                task = self.tasks[task_id]
                if not task.is_control:
                    continue
                key = self.controls[task_id]
                submitted = {}
                for ann in task.annotations:
                    outcome = self._effective[(assignment_id, ann)]
                    submitted[ann] = (outcome.action, outcome.new_link)
                result = grade_control(
                    key,
                    submitted,
                    mode=self._grade_mode,
                    strict_modify_link=self._strict_modify_link,
                )
                if not result.passed:
                    failed.extend(
                        {
                            "task_id": task_id,
                            "doc_id": ann.doc_id,
                            "start": ann.span.start,
                            "end": ann.span.end,
                            "link": ann.link.title,
                            "reason": reason,
                        }
                        for ann, reason in zip(result.failed, result.reasons)
                    )
            finalization = Finalization(
                assignment_id=assignment_id,
                status="rejected" if failed else "accepted",
                failed_controls=tuple(failed),
                timestamp_ms=self._clock(),
            )
            self._append(finalization)
            return finalization

    # -- export / replay ---------------------------------------------------

    def export_log(self, raw: bool = False) -> OutcomeLog:
        """Deterministically ordered log; accepted assignments only unless raw."""
        with self._lock:
            if raw:
                return OutcomeLog(header=self.header, events=tuple(self._events))
            accepted = {a for a, f in self._final.items() if f.status == "accepted"}
            effective_ids = {o.outcome_id for o in self._effective.values()}
            events: list[Outcome | Finalization] = [
                e
                for e in self._events
                if (
                    isinstance(e, Outcome)
                    and e.assignment_id in accepted
                    and e.outcome_id in effective_ids
                )
                or (isinstance(e, Finalization) and e.assignment_id in accepted)
            ]
            return OutcomeLog(header=self.header, events=tuple(_sorted_events(events)))

    @classmethod
    def replay(
        cls,
        corpus: Corpus,
        tasks: Mapping[str, Task],
        controls: Mapping[str, ControlKey],
        assignments: Mapping[str, Assignment],
        log: OutcomeLog,
        **kwargs,
    ) -> "VerificationService":
        """Rebuild service state from a log; events are trusted as recorded."""
        service = cls(corpus, tasks, controls, assignments, seed=log.header.seed, **kwargs)
        if log.header.corpus_hash != service.header.corpus_hash:
            raise CorpusError(
                "outcome log was recorded against a different corpus "
                f"({log.header.corpus_hash} != {service.header.corpus_hash})"
            )
        with service._lock:
            for event in log.events:
                service._apply(event)
        return service

    def close(self):
        if self._log_file is not None:
            self._log_file.close()
            self._log_file = None


class OutcomeBody(BaseModel):
    task_id: str
    idx: int
    action: str
    new_link: str | None = None


def create_app(service: VerificationService):
    """HTTP surface over a VerificationService."""
    from fastapi import FastAPI, HTTPException
    from fastapi.middleware.cors import CORSMiddleware

    app = FastAPI(title="phv collection service", version=__version__)
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    def guard(fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except ProtocolError as exc:
            raise HTTPException(status_code=exc.status, detail=str(exc)) from exc

    @app.get("/api/health")
    def health():
        return {"status": "ok", "corpus_hash": service.header.corpus_hash}

    @app.get("/api/assignment/{assignment_id}/next")
    def next_task(assignment_id: str):
        payload = guard(service.get_next_task, assignment_id)
        if payload is None:
            return {"complete": True}
        return payload

    @app.post("/api/assignment/{assignment_id}/outcome")
    def submit(assignment_id: str, body: OutcomeBody):
        outcome = guard(
            service.submit_outcome,
            assignment_id,
            body.task_id,
            body.idx,
            body.action,
            body.new_link,
        )
        return {"outcome_id": outcome.outcome_id, "replaces": outcome.replaces}

    @app.post("/api/assignment/{assignment_id}/finalize")
    def finalize(assignment_id: str):
        finalization = guard(service.finalize_assignment, assignment_id)
        return {
            "status": finalization.status,
            "failed_controls": list(finalization.failed_controls),
        }

    return app
