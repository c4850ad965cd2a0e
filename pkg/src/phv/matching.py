"""Exact and overlap alignment between annotation sets, micro/macro PRF.

All functions are pure; evaluating (dataset, model) cells in parallel is
safe.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

from .corpus import Annotation, AnnotationSet, Span

MatchMode = Literal["exact", "overlap"]


def spans_overlap(a: Span, b: Span) -> bool:
    """True iff the half-open ranges share at least one character."""
    return max(a.start, b.start) < min(a.end, b.end)


@dataclass(frozen=True)
class MatchCounts:
    tp: int
    fp: int
    fn: int

    @property
    def n_pred(self) -> int:
        return self.tp + self.fp

    @property
    def n_gold(self) -> int:
        return self.tp + self.fn

    def __add__(self, other: "MatchCounts") -> "MatchCounts":
        return MatchCounts(self.tp + other.tp, self.fp + other.fp, self.fn + other.fn)


@dataclass(frozen=True)
class PRF:
    precision: float
    recall: float
    f1: float


def _check_same_dataset(pred: AnnotationSet, gold: AnnotationSet):
    if pred.dataset_id != gold.dataset_id:
        raise ValueError(
            f"dataset mismatch: {pred.dataset_id!r} vs {gold.dataset_id!r}"
        )


def exact_match_pairs(
    pred: AnnotationSet | Iterable[Annotation], gold: AnnotationSet | Iterable[Annotation]
) -> list[tuple[Annotation, Annotation]]:
    """Identity-triple matches; each returned pair is (p, g) with p == g."""
    common = frozenset(pred) & frozenset(gold)
    return [(ann, ann) for ann in sorted(common)]


def exact_match_counts(pred: AnnotationSet, gold: AnnotationSet) -> MatchCounts:
    _check_same_dataset(pred, gold)
    tp = len(frozenset(pred) & frozenset(gold))
    return MatchCounts(tp=tp, fp=len(pred) - tp, fn=len(gold) - tp)


def overlap_match_pairs(
    pred: AnnotationSet | Iterable[Annotation], gold: AnnotationSet | Iterable[Annotation]
) -> list[tuple[Annotation, Annotation]]:
    """One-to-one matching; a pair needs overlapping spans on the same doc
    and equal links.

    Candidate pairs are taken greedily in (doc_id, pred start, gold start)
    order. On sets whose internal spans do not overlap this is a maximum
    matching (checked against an exhaustive oracle in the tests).
    """
    pred_anns = sorted(pred, key=lambda a: (a.doc_id, a.span.start, a.span.end))
    gold_anns = sorted(gold, key=lambda a: (a.doc_id, a.span.start, a.span.end))
    candidates = [
        (p, g)
        for p in pred_anns
        for g in gold_anns
        if p.doc_id == g.doc_id and p.link == g.link and spans_overlap(p.span, g.span)
    ]
    candidates.sort(key=lambda pg: (pg[0].doc_id, pg[0].span.start, pg[1].span.start))
    used_pred: set[Annotation] = set()
    used_gold: set[Annotation] = set()
    pairs = []
    for p, g in candidates:
        if p in used_pred or g in used_gold:
            continue
        used_pred.add(p)
        used_gold.add(g)
        pairs.append((p, g))
    return pairs


def overlap_match_counts(pred: AnnotationSet, gold: AnnotationSet) -> MatchCounts:
    _check_same_dataset(pred, gold)
    tp = len(overlap_match_pairs(pred, gold))
    return MatchCounts(tp=tp, fp=len(pred) - tp, fn=len(gold) - tp)


def micro_prf(counts: MatchCounts) -> PRF:
    """Global-count precision/recall/F1; empty denominators score 0."""
    p = counts.tp / counts.n_pred if counts.n_pred else 0.0
    r = counts.tp / counts.n_gold if counts.n_gold else 0.0
    f1 = 2 * p * r / (p + r) if p + r > 0 else 0.0
    return PRF(p, r, f1)


def macro_prf(per_document_counts: Sequence[MatchCounts]) -> PRF:
    """Unweighted mean of per-document PRF.

    A document that is empty on both sides counts as perfect (1, 1, 1);
    one-sided empties follow the micro conventions.
    """
    if not per_document_counts:
        raise ValueError("macro averaging needs at least one document")
    prfs = []
    for counts in per_document_counts:
        if counts.n_pred == 0 and counts.n_gold == 0:
            prfs.append(PRF(1.0, 1.0, 1.0))
        else:
            prfs.append(micro_prf(counts))
    n = len(prfs)
    return PRF(
        sum(x.precision for x in prfs) / n,
        sum(x.recall for x in prfs) / n,
        sum(x.f1 for x in prfs) / n,
    )


def per_document_counts(
    pred: AnnotationSet,
    gold: AnnotationSet,
    mode: MatchMode,
    doc_ids: Iterable[str] | None = None,
) -> list[MatchCounts]:
    """Split matching by document. ``doc_ids`` fixes the document universe
    (so annotation-free documents still contribute); by default it is the
    union of documents seen in either set."""
    _check_same_dataset(pred, gold)
    pred_by_doc = pred.by_doc()
    gold_by_doc = gold.by_doc()
    if doc_ids is None:
        universe = sorted(set(pred_by_doc) | set(gold_by_doc))
    else:
        universe = sorted(set(doc_ids))
    match = exact_match_pairs if mode == "exact" else overlap_match_pairs
    out = []
    for doc_id in universe:
        p = pred_by_doc.get(doc_id, [])
        g = gold_by_doc.get(doc_id, [])
        tp = len(match(p, g))
        out.append(MatchCounts(tp=tp, fp=len(p) - tp, fn=len(g) - tp))
    return out


def match_indicators(
    pred: AnnotationSet, gold: AnnotationSet, mode: MatchMode
) -> tuple[list[int], list[int]]:
    """Per-annotation hit indicators (pred order, gold order).

    These are the bootstrap resampling units behind the pre-annotation
    precision (pred side) and recall (gold side) intervals.
    """
    _check_same_dataset(pred, gold)
    pairs = (
        exact_match_pairs(pred, gold) if mode == "exact" else overlap_match_pairs(pred, gold)
    )
    matched_pred = {p for p, _ in pairs}
    matched_gold = {g for _, g in pairs}
    return (
        [1 if ann in matched_pred else 0 for ann in pred],
        [1 if ann in matched_gold else 0 for ann in gold],
    )
