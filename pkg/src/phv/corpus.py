"""Data model and file formats for entity-linking corpora.

A corpus bundles documents with the annotation sets produced on them by
different models. Ground truth is registered under the model id ``"GT"``
and gets no special treatment anywhere downstream.
"""

from __future__ import annotations

import hashlib
import io
import json
import re
from dataclasses import dataclass
from typing import BinaryIO, Iterable, Iterator, Mapping
from urllib.parse import unquote

GT_MODEL_ID = "GT"

CANONICAL_FORMAT = "phv-corpus"
CANONICAL_VERSION = 1

_WS_RUN = re.compile(r"\s+")


class CorpusError(ValueError):
    """Malformed input file or violated corpus invariant."""

    def __init__(self, message: str, line: int | None = None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


@dataclass(frozen=True, order=True)
class Span:
    """Half-open character range [start, end), counted in Unicode scalar values."""

    start: int
    end: int

    def __post_init__(self):
        if not (0 <= self.start < self.end):
            raise ValueError(f"invalid span [{self.start}, {self.end})")

    @property
    def length(self) -> int:
        return self.end - self.start


@dataclass(frozen=True, order=True)
class EntityLink:
    """Normalized knowledge-base page title. Equal iff titles are equal."""

    title: str

    def __post_init__(self):
        if not self.title:
            raise ValueError("empty entity link title")


def normalize_link(raw: str) -> EntityLink:
    """Normalize a raw page title into an EntityLink.

    Percent-escapes are decoded (repeatedly, so the result is a fixed
    point), underscores become spaces, whitespace runs collapse to one
    space, the ends are trimmed and the first character is uppercased.
    Idempotent: feeding a normalized title back in returns it unchanged.
    """
    title = raw
    while True:
        decoded = unquote(title)
        if decoded == title:
            break
        title = decoded
    title = title.replace("_", " ")
    title = _WS_RUN.sub(" ", title).strip()
    if not title:
        raise CorpusError(f"entity link is empty after normalization: {raw!r}")
    title = title[0].upper() + title[1:]
    return EntityLink(title)


@dataclass(frozen=True, order=True)
class Annotation:
    """A mention span plus its entity link on one document.

    Identity for all set operations is the full (doc_id, span, link)
    triple; (doc_id, span) is the mention-only identity.
    """

    doc_id: str
    span: Span
    link: EntityLink

    @property
    def mention_key(self) -> tuple[str, int, int]:
        return (self.doc_id, self.span.start, self.span.end)


@dataclass(frozen=True)
class Document:
    dataset_id: str
    doc_id: str
    text: str

    def __post_init__(self):
        if not self.text:
            raise ValueError(f"document {self.dataset_id}/{self.doc_id} has empty text")

    @property
    def key(self) -> tuple[str, str]:
        return (self.dataset_id, self.doc_id)


def _sort_key(ann: Annotation) -> tuple:
    return (ann.doc_id, ann.span.start, ann.span.end, ann.link.title)


@dataclass(frozen=True)
class AnnotationSet:
    """All annotations of one model (GT included) on one dataset."""

    dataset_id: str
    model_id: str
    annotations: tuple[Annotation, ...]

    def __len__(self) -> int:
        return len(self.annotations)

    def __iter__(self) -> Iterator[Annotation]:
        return iter(self.annotations)

    def identities(self) -> frozenset[Annotation]:
        return frozenset(self.annotations)

    def by_doc(self) -> dict[str, list[Annotation]]:
        out: dict[str, list[Annotation]] = {}
        for ann in self.annotations:
            out.setdefault(ann.doc_id, []).append(ann)
        return out

    @property
    def key(self) -> tuple[str, str]:
        return (self.dataset_id, self.model_id)


def build_annotation_set(
    dataset_id: str,
    model_id: str,
    annotations: Iterable[Annotation],
    documents: Mapping[tuple[str, str], Document] | None = None,
) -> AnnotationSet:
    """Validate and canonically order an annotation set.

    Rejects duplicate identities, overlapping spans on one document, and
    (when ``documents`` is given) unknown doc ids or out-of-bounds spans.
    """
    anns = sorted(annotations, key=_sort_key)
    seen: set[Annotation] = set()
    last_by_doc: dict[str, Annotation] = {}
    for ann in anns:
        if ann in seen:
            raise CorpusError(
                f"duplicate annotation in {dataset_id}/{model_id}: "
                f"{ann.doc_id} [{ann.span.start},{ann.span.end}) {ann.link.title}"
            )
        seen.add(ann)
        prev = last_by_doc.get(ann.doc_id)
        if prev is not None and ann.span.start < prev.span.end:
            raise CorpusError(
                f"overlapping spans in {dataset_id}/{model_id} on doc {ann.doc_id}: "
                f"[{prev.span.start},{prev.span.end}) and [{ann.span.start},{ann.span.end})"
            )
        if prev is None or ann.span.end > prev.span.end:
            last_by_doc[ann.doc_id] = ann
        if documents is not None:
            doc = documents.get((dataset_id, ann.doc_id))
            if doc is None:
                raise CorpusError(
                    f"annotation references unknown document {dataset_id}/{ann.doc_id}"
                )
            if ann.span.end > len(doc.text):
                raise CorpusError(
                    f"span out of bounds on doc {ann.doc_id}: "
                    f"[{ann.span.start},{ann.span.end}) exceeds length {len(doc.text)}"
                )
    return AnnotationSet(dataset_id, model_id, tuple(anns))


@dataclass(frozen=True)
class Corpus:
    """Immutable after load; safe to share read-only across threads."""

    documents: Mapping[tuple[str, str], Document]
    annotation_sets: Mapping[tuple[str, str], AnnotationSet]

    def dataset_ids(self) -> list[str]:
        ids = {d for d, _ in self.documents} | {d for d, _ in self.annotation_sets}
        return sorted(ids)

    def model_ids(self, dataset_id: str | None = None) -> list[str]:
        return sorted(
            {m for d, m in self.annotation_sets if dataset_id is None or d == dataset_id}
        )

    def get_set(self, dataset_id: str, model_id: str) -> AnnotationSet:
        key = (dataset_id, model_id)
        if key not in self.annotation_sets:
            raise KeyError(f"no annotation set for dataset {dataset_id!r} model {model_id!r}")
        return self.annotation_sets[key]

    def document(self, dataset_id: str, doc_id: str) -> Document:
        key = (dataset_id, doc_id)
        if key not in self.documents:
            raise KeyError(f"no document {dataset_id!r}/{doc_id!r}")
        return self.documents[key]

    def documents_for(self, dataset_id: str) -> list[Document]:
        return sorted(
            (doc for doc in self.documents.values() if doc.dataset_id == dataset_id),
            key=lambda d: d.doc_id,
        )


def build_corpus(
    documents: Iterable[Document],
    annotation_sets: Iterable[AnnotationSet] | None = None,
    raw_annotations: Iterable[tuple[str, str, Annotation]] | None = None,
) -> Corpus:
    """Assemble and validate a corpus.

    ``raw_annotations`` are (dataset_id, model_id, annotation) triples that
    get grouped into sets here; parsers use this path so record order in
    the input never matters.
    """
    docs: dict[tuple[str, str], Document] = {}
    for doc in documents:
        if doc.key in docs:
            raise CorpusError(f"duplicate document id {doc.dataset_id}/{doc.doc_id}")
        docs[doc.key] = doc

    grouped: dict[tuple[str, str], list[Annotation]] = {}
    if annotation_sets is not None:
        for aset in annotation_sets:
            grouped.setdefault(aset.key, []).extend(aset.annotations)
    if raw_annotations is not None:
        for dataset_id, model_id, ann in raw_annotations:
            grouped.setdefault((dataset_id, model_id), []).append(ann)

    # empty sets are not representable in the interchange format, so a
    # corpus never registers one
    sets = {
        key: build_annotation_set(key[0], key[1], anns, documents=docs)
        for key, anns in grouped.items()
        if anns
    }
    return Corpus(documents=docs, annotation_sets=sets)


# --- canonical interchange format -----------------------------------------
#
# One JSON record per line, UTF-8. A header record comes first; the two
# payload kinds are:
#   {"kind": "doc", "dataset_id": ..., "doc_id": ..., "text": ...}
#   {"kind": "ann", "dataset_id": ..., "model_id": ..., "doc_id": ...,
#    "start": ..., "end": ..., "link": ...}


def _dump_record(record: dict) -> str:
    return json.dumps(record, ensure_ascii=False, sort_keys=True, separators=(",", ":"))


def _iter_lines(data: bytes | str | BinaryIO) -> Iterator[tuple[int, str]]:
    if isinstance(data, bytes):
        text = data.decode("utf-8")
    elif isinstance(data, str):
        text = data
    else:
        text = data.read().decode("utf-8")
    for lineno, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            yield lineno, line


def parse_canonical(data: bytes | str | BinaryIO) -> Corpus:
    """Parse the canonical line-delimited format into a validated Corpus.

    Load is order-independent: annotations may precede their documents.
    """
    documents: list[Document] = []
    raw_anns: list[tuple[str, str, Annotation, int]] = []
    for lineno, line in _iter_lines(data):
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise CorpusError(f"malformed record: {exc.msg}", line=lineno) from exc
        if not isinstance(record, dict) or "kind" not in record:
            raise CorpusError("record is not an object with a 'kind' field", line=lineno)
        kind = record["kind"]
        try:
            if kind == "header":
                continue
            elif kind == "doc":
                documents.append(
                    Document(
                        dataset_id=record["dataset_id"],
                        doc_id=record["doc_id"],
                        text=record["text"],
                    )
                )
            elif kind == "ann":
                ann = Annotation(
                    doc_id=record["doc_id"],
                    span=Span(int(record["start"]), int(record["end"])),
                    link=normalize_link(record["link"]),
                )
                raw_anns.append((record["dataset_id"], record["model_id"], ann, lineno))
            else:
                raise CorpusError(f"unknown record kind {kind!r}", line=lineno)
        except KeyError as exc:
            raise CorpusError(f"missing field {exc.args[0]!r}", line=lineno) from exc
        except (TypeError, ValueError) as exc:
            if isinstance(exc, CorpusError):
                raise
            raise CorpusError(str(exc), line=lineno) from exc
    return build_corpus(
        documents, raw_annotations=[(d, m, a) for d, m, a, _ in raw_anns]
    )


def serialize_canonical(corpus: Corpus) -> bytes:
    """Serialize a corpus deterministically; inverse of parse_canonical."""
    out = io.StringIO()
    out.write(
        _dump_record({"kind": "header", "format": CANONICAL_FORMAT, "version": CANONICAL_VERSION})
    )
    out.write("\n")
    for doc in sorted(corpus.documents.values(), key=lambda d: d.key):
        out.write(
            _dump_record(
                {
                    "kind": "doc",
                    "dataset_id": doc.dataset_id,
                    "doc_id": doc.doc_id,
                    "text": doc.text,
                }
            )
        )
        out.write("\n")
    records = []
    for aset in corpus.annotation_sets.values():
        for ann in aset.annotations:
            records.append(
                (
                    aset.dataset_id,
                    ann.doc_id,
                    ann.span.start,
                    ann.span.end,
                    aset.model_id,
                    ann.link.title,
                )
            )
    records.sort()
    for dataset_id, doc_id, start, end, model_id, link in records:
        out.write(
            _dump_record(
                {
                    "kind": "ann",
                    "dataset_id": dataset_id,
                    "model_id": model_id,
                    "doc_id": doc_id,
                    "start": start,
                    "end": end,
                    "link": link,
                }
            )
        )
        out.write("\n")
    return out.getvalue().encode("utf-8")


def corpus_digest(corpus: Corpus) -> str:
    """Stable content hash used in provenance headers."""
    return "sha256:" + hashlib.sha256(serialize_canonical(corpus)).hexdigest()


# --- AIDA-CoNLL token format ----------------------------------------------


def parse_aida_tsv(
    data: bytes | str | BinaryIO,
    dataset_id: str = "AIDA",
    model_id: str = GT_MODEL_ID,
) -> Corpus:
    """Parse the AIDA-CoNLL token-per-line TSV into a Corpus.

    One document per ``-DOCSTART-`` block; character offsets come from
    joining tokens with single spaces. A maximal B/I run with a page title
    becomes one annotation; ``--NME--`` mentions carry nothing to verify
    and are dropped. Documents without linked mentions are kept.
    """
    documents: list[Document] = []
    raw_anns: list[tuple[str, str, Annotation]] = []

    doc_id: str | None = None
    tokens: list[str] = []
    # (start_offset, end_offset, link_title) of the mention currently open
    open_mention: tuple[int, int, str | None] | None = None
    anns: list[tuple[int, int, str | None]] = []

    def close_mention():
        nonlocal open_mention
        if open_mention is not None:
            anns.append(open_mention)
            open_mention = None

    def flush_doc(lineno: int):
        nonlocal doc_id, tokens, anns
        if doc_id is None:
            return
        close_mention()
        if not tokens:
            raise CorpusError(f"document {doc_id!r} has no tokens", line=lineno)
        text = " ".join(tokens)
        documents.append(Document(dataset_id=dataset_id, doc_id=doc_id, text=text))
        for start, end, link in anns:
            if link is None:
                continue  # NIL mention: nothing to verify
            raw_anns.append(
                (
                    dataset_id,
                    model_id,
                    Annotation(doc_id=doc_id, span=Span(start, end), link=normalize_link(link)),
                )
            )
        doc_id = None
        tokens = []
        anns = []

    lineno = 0
    for lineno, line in _iter_lines(data):
        if line.startswith("-DOCSTART-"):
            flush_doc(lineno)
            name = line[len("-DOCSTART-") :].strip()
            if name.startswith("(") and name.endswith(")"):
                name = name[1:-1].strip()
            if not name:
                raise CorpusError("-DOCSTART- without a document id", line=lineno)
            doc_id = name
            continue
        if doc_id is None:
            raise CorpusError("token line before any -DOCSTART-", line=lineno)
        parts = line.split("\t")
        token = parts[0]
        offset = 0 if not tokens else len(" ".join(tokens)) + 1
        tokens.append(token)
        end = offset + len(token)

        tag = parts[1] if len(parts) > 1 and parts[1] else "O"
        if tag == "O":
            close_mention()
        elif tag == "B":
            close_mention()
            if len(parts) < 4 or not parts[3]:
                raise CorpusError(
                    f"linked mention {parts[2] if len(parts) > 2 else token!r} "
                    "is missing its link column",
                    line=lineno,
                )
            link = None if parts[3] == "--NME--" else parts[3]
            open_mention = (offset, end, link)
        elif tag == "I":
            if open_mention is None:
                raise CorpusError(f"I-tag without a preceding B-tag at token {token!r}", line=lineno)
            open_mention = (open_mention[0], end, open_mention[2])
        else:
            raise CorpusError(f"unknown tag {tag!r}", line=lineno)
    flush_doc(lineno + 1)
    return build_corpus(documents, raw_annotations=raw_anns)
