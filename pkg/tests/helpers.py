"""Shared builders and random generators for the test suite."""

from __future__ import annotations

import random
import string

from phv.collectsvc import VerificationService
from phv.corpus import (
    Annotation,
    AnnotationSet,
    Corpus,
    Document,
    EntityLink,
    Span,
    build_annotation_set,
    build_corpus,
)
from phv.taskgen import (
    MODIFY,
    REMOVE,
    VERIFY,
    ControlExpectation,
    ControlKey,
    Task,
    build_assignments,
    chunk_document,
)


def ann(doc_id: str, start: int, end: int, link: str) -> Annotation:
    return Annotation(doc_id=doc_id, span=Span(start, end), link=EntityLink(link))


def make_corpus(
    docs: dict[tuple[str, str], str],
    sets: dict[tuple[str, str], list[tuple[str, int, int, str]]] | None = None,
) -> Corpus:
    documents = [
        Document(dataset_id=ds, doc_id=doc, text=text) for (ds, doc), text in docs.items()
    ]
    raw = []
    for (ds, model), anns in (sets or {}).items():
        for doc_id, start, end, link in anns:
            raw.append((ds, model, ann(doc_id, start, end, link)))
    return build_corpus(documents, raw_annotations=raw)


def random_text(rng: random.Random, length: int) -> str:
    chars = []
    while len(chars) < length:
        word_len = rng.randint(1, 12)
        chars.extend(rng.choice(string.ascii_lowercase) for _ in range(word_len))
        if len(chars) < length:
            chars.append(" ")
    return "".join(chars[:length])


def random_disjoint_spans(rng: random.Random, text_len: int, max_spans: int) -> list[Span]:
    """Non-overlapping spans inside [0, text_len)."""
    n_cuts = rng.randint(0, max_spans)
    points = sorted(rng.sample(range(text_len + 1), min(2 * n_cuts, text_len + 1)))
    spans = []
    for i in range(0, len(points) - 1, 2):
        if points[i] < points[i + 1]:
            spans.append(Span(points[i], points[i + 1]))
    return spans


def random_annotation_set(
    rng: random.Random,
    dataset_id: str,
    model_id: str,
    doc_lengths: dict[str, int],
    max_anns: int,
    links: list[str],
) -> AnnotationSet:
    annotations = []
    budget = rng.randint(0, max_anns)
    doc_ids = sorted(doc_lengths)
    while budget > 0 and doc_ids:
        doc_id = rng.choice(doc_ids)
        spans = random_disjoint_spans(rng, doc_lengths[doc_id], min(budget, 4))
        for span in spans:
            annotations.append(
                Annotation(doc_id=doc_id, span=span, link=EntityLink(rng.choice(links)))
            )
        budget -= max(len(spans), 1)
        doc_ids.remove(doc_id)
    # drop duplicate identities; overlaps within a doc cannot happen because
    # each doc is sampled at most once
    return build_annotation_set(dataset_id, model_id, set(annotations))


def random_corpus_pair(
    rng: random.Random,
    n_docs_max: int = 10,
    n_anns_max: int = 15,
    links: list[str] | None = None,
) -> tuple[Corpus, AnnotationSet, AnnotationSet]:
    """A corpus with a prediction/gold pair on the same random documents."""
    links = links or ["X", "Y", "Z"]
    n_docs = rng.randint(1, n_docs_max)
    docs = {}
    doc_lengths = {}
    for i in range(n_docs):
        length = rng.randint(5, 60)
        doc_id = f"d{i}"
        docs[("ds", doc_id)] = random_text(rng, length)
        doc_lengths[doc_id] = length
    pred = random_annotation_set(rng, "ds", "pred", doc_lengths, n_anns_max, links)
    gold = random_annotation_set(rng, "ds", "gold", doc_lengths, n_anns_max, links)
    corpus = build_corpus(
        [Document(dataset_id=ds, doc_id=d, text=t) for (ds, d), t in docs.items()],
        annotation_sets=[pred, gold],
    )
    return corpus, pred, gold


def build_mini_study():
    """Three models on one dataset with scripted outcomes.

    Hand-computed ground truth for the report tests:
      verified: GT 6/8, E2E 5/7, REL 5/6
      union pool 11, intersection {g1,g3,g5} size 3
      agreement over the intersection: i=3 once, i=2 twice
      coverage vs GT: A=6, B=1, C=1, D=1, E=2 (of 11)
    """
    from phv.taskgen import Assignment

    text = ("word " * 12)[:60]
    docs = {("mini", f"m{i}"): text for i in range(5)}

    g = {
        1: ("m0", 0, 5, "L1"),
        2: ("m0", 10, 15, "L2"),
        3: ("m1", 0, 5, "L3"),
        4: ("m1", 10, 15, "L4"),
        5: ("m2", 0, 5, "L5"),
        6: ("m2", 10, 15, "L6"),
        7: ("m3", 0, 5, "L7"),
        8: ("m3", 10, 15, "L8"),
    }
    e1 = ("m4", 0, 5, "L9")
    e2 = ("m0", 20, 26, "LX")
    r1 = ("m1", 12, 17, "L4")   # overlaps g4, same link -> coverage C
    r2 = ("m3", 10, 15, "LZ")   # same span as g8, other link -> coverage B
    r3 = ("m2", 12, 17, "LQ")   # overlaps g6, other link -> coverage D

    sets = {
        ("mini", "GT"): list(g.values()),
        ("mini", "E2E"): [g[1], g[2], g[3], g[5], g[7], e1, e2],
        ("mini", "REL"): [g[1], g[3], g[5], r1, r2, r3],
    }
    corpus = make_corpus(docs, sets)

    actions = {
        "GT": {
            g[7]: (MODIFY, "Fixed seven"),
            g[8]: (REMOVE, None),
        },
        "E2E": {
            g[5]: (MODIFY, "Fixed five"),
            g[7]: (REMOVE, None),
        },
        "REL": {
            g[3]: (REMOVE, None),
        },
    }

    tasks = {}
    assignments = {}
    for model in ("GT", "E2E", "REL"):
        aset_ = corpus.get_set("mini", model)
        ids = []
        for doc in corpus.documents_for("mini"):
            if doc.doc_id not in aset_.by_doc():
                continue
            for task in chunk_document(doc, aset_, max_chars=300):
                tasks[task.task_id] = task
                ids.append(task.task_id)
        assignments[f"a-{model}"] = Assignment(
            assignment_id=f"a-{model}", worker_id=f"w-{model}", task_ids=tuple(ids), seed=0
        )

    ticker = iter(range(5_000_000, 9_000_000))
    service = VerificationService(
        corpus, tasks, {}, assignments, seed=0, clock=lambda: next(ticker)
    )
    for model in ("GT", "E2E", "REL"):
        aid = f"a-{model}"
        while True:
            payload = service.get_next_task(aid)
            if payload is None:
                break
            task = service.tasks[payload["task_id"]]
            anns = sorted(task.annotations, key=lambda a: (a.span.start, a.span.end, a.link.title))
            for item in payload["annotations"]:
                a = anns[item["idx"]]
                spec = actions[model].get((a.doc_id, a.span.start, a.span.end, a.link.title))
                action, new_link = spec if spec else (VERIFY, None)
                service.submit_outcome(aid, task.task_id, item["idx"], action, new_link)
        service.finalize_assignment(aid)
    return corpus, service


def make_log(
    entries,
    corpus: Corpus | None = None,
    accepted: bool = True,
    assignment_id: str = "a0000",
    worker_id: str = "w000",
):
    """Synthesize an OutcomeLog without running a service.

    ``entries``: (dataset_id, model_id, annotation, action[, new_link]) tuples.
    """
    from phv.collectsvc import Finalization, LogHeader, Outcome, OutcomeLog
    from phv.corpus import corpus_digest

    header = LogHeader(
        corpus_hash=corpus_digest(corpus) if corpus is not None else "sha256:fixture",
        seed=0,
    )
    events = []
    for i, entry in enumerate(entries):
        dataset_id, model_id, annotation, action = entry[:4]
        new_link = entry[4] if len(entry) > 4 else None
        events.append(
            Outcome(
                outcome_id=f"o{i:06d}",
                assignment_id=assignment_id,
                task_id=f"{dataset_id}:{model_id}:{annotation.doc_id}:0",
                annotation=annotation,
                action=action,
                new_link=EntityLink(new_link) if isinstance(new_link, str) else new_link,
                worker_id=worker_id,
                timestamp_ms=1000 + i,
                dataset_id=dataset_id,
                model_id=model_id,
                is_control=False,
            )
        )
    events.append(
        Finalization(
            assignment_id=assignment_id,
            status="accepted" if accepted else "rejected",
            failed_controls=(),
            timestamp_ms=1000 + len(entries),
        )
    )
    return OutcomeLog(header=header, events=tuple(events))


# --- independent matching oracles (never share code with phv.matching) ------


# --- scripted collection session ---------------------------------------------


def build_session_inputs(n_workers: int = 3, seed: int = 2024):
    """A small verification campaign: one dataset, one model, 19 regular
    single-chunk tasks per worker, one shared control task."""
    n_docs = 19 * n_workers
    docs = []
    raw = []
    rng = random.Random(seed)
    for i in range(n_docs):
        doc_id = f"fx{i:03d}"
        text = f"record {i:03d} " + random_text(rng, 40)
        docs.append(Document(dataset_id="fix", doc_id=doc_id, text=text))
        n_anns = 1 + (i % 3)
        pos = 0
        for k in range(n_anns):
            start = pos
            end = start + 4
            raw.append(("fix", "GT", ann(doc_id, start, end, f"Entity {i}-{k}")))
            pos = end + 2
    ctrl_doc = Document(dataset_id="fix", doc_id="ctrl0", text="alpha beta gamma delta")
    docs.append(ctrl_doc)
    corpus = build_corpus(docs, raw_annotations=raw)

    gt = corpus.get_set("fix", "GT")
    tasks = []
    for doc in corpus.documents_for("fix"):
        if doc.doc_id == "ctrl0":
            continue
        tasks.extend(chunk_document(doc, gt, max_chars=300))
    assert len(tasks) == n_docs

    ctrl_anns = (
        ann("ctrl0", 0, 5, "Alpha"),
        ann("ctrl0", 6, 10, "Beta"),
        ann("ctrl0", 11, 16, "Gamma"),
    )
    control_task = Task(
        task_id="fix:CTRL:ctrl0:0",
        dataset_id="fix",
        model_id="GT",
        doc_id="ctrl0",
        window=Span(0, 22),
        annotations=ctrl_anns,
        is_control=True,
    )
    control_key = ControlKey(
        task_id=control_task.task_id,
        expected={
            ctrl_anns[0]: ControlExpectation(VERIFY),
            ctrl_anns[1]: ControlExpectation(MODIFY),
            ctrl_anns[2]: ControlExpectation(REMOVE),
        },
    )
    assignments = build_assignments(tasks, [(control_task, control_key)], n_workers, seed=seed)
    task_map = {t.task_id: t for t in tasks}
    task_map[control_task.task_id] = control_task
    return corpus, task_map, {control_key.task_id: control_key}, assignments


def make_session_service(n_workers: int = 3, seed: int = 2024, **kwargs) -> VerificationService:
    corpus, tasks, controls, assignments = build_session_inputs(n_workers, seed)
    ticker = iter(range(1_000_000, 9_000_000))
    kwargs.setdefault("clock", lambda: next(ticker))
    return VerificationService(
        corpus,
        tasks,
        controls,
        {a.assignment_id: a for a in assignments},
        seed=seed,
        **kwargs,
    )


def drive_assignment(service: VerificationService, assignment_id: str, fail_control: bool = False):
    """Answer every annotation of an assignment and finalize it.

    Regular annotations rotate verify/verify/modify/verify/remove; control
    annotations follow the expected key unless fail_control.
    """
    rotation = [VERIFY, VERIFY, MODIFY, VERIFY, REMOVE]
    count = 0
    while True:
        payload = service.get_next_task(assignment_id)
        if payload is None:
            break
        task = service.tasks[payload["task_id"]]
        for item in payload["annotations"]:
            if task.is_control:
                key = service.controls[task.task_id]
                anns = sorted(task.annotations, key=lambda a: (a.span.start, a.span.end, a.link.title))
                expected = key.expected[anns[item["idx"]]]
                action = VERIFY if fail_control else expected.action
            else:
                action = rotation[count % len(rotation)]
                count += 1
            new_link = f"Replacement {count}" if action == MODIFY else None
            service.submit_outcome(assignment_id, task.task_id, item["idx"], action, new_link)
    return service.finalize_assignment(assignment_id)


def oracle_exact_tp(pred, gold) -> int:
    """Brute-force double loop over identity triples."""
    tp = 0
    for p in pred:
        for g in gold:
            if (
                p.doc_id == g.doc_id
                and p.span.start == g.span.start
                and p.span.end == g.span.end
                and p.link.title == g.link.title
            ):
                tp += 1
                break
    return tp


def oracle_max_overlap_matching(pred, gold) -> int:
    """Maximum bipartite matching over (overlap AND same link) edges,
    via exhaustive augmenting-path search."""
    pred = list(pred)
    gold = list(gold)
    adj: list[list[int]] = []
    for p in pred:
        row = []
        for j, g in enumerate(gold):
            if (
                p.doc_id == g.doc_id
                and p.link.title == g.link.title
                and p.span.start < g.span.end
                and g.span.start < p.span.end
            ):
                row.append(j)
        adj.append(row)

    match_gold: dict[int, int] = {}

    def try_augment(i: int, visited: set[int]) -> bool:
        for j in adj[i]:
            if j in visited:
                continue
            visited.add(j)
            if j not in match_gold or try_augment(match_gold[j], visited):
                match_gold[j] = i
                return True
        return False

    size = 0
    for i in range(len(pred)):
        if try_augment(i, set()):
            size += 1
    return size
