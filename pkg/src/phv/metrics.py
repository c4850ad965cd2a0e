"""Posthoc verification metrics.

Verification rate doubles as posthoc precision; the union of verified
annotations across models is the pooled recall denominator; agreement is
counted over the annotations all models produced identically; and the
coverage taxonomy classifies pooled annotations against ground truth.
Everything here is pure computation over immutable inputs.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Callable, Iterable, Mapping, Sequence

import numpy as np

from .collectsvc import Outcome, OutcomeLog
from .corpus import Annotation, AnnotationSet, Corpus
from .matching import spans_overlap
from .taskgen import MODIFY, REMOVE, VERIFY

COVERAGE_OUTCOMES = ("A", "B", "C", "D", "E")


@dataclass(frozen=True)
class VerifiedSet:
    """Annotations of one (dataset, model) whose final action was Verify."""

    dataset_id: str
    model_id: str
    annotations: frozenset[Annotation]

    def __len__(self) -> int:
        return len(self.annotations)


@dataclass(frozen=True)
class UnionPool:
    """Identity-deduplicated union of verified annotations across models."""

    dataset_id: str
    annotations: frozenset[Annotation]

    def __len__(self) -> int:
        return len(self.annotations)


@dataclass(frozen=True)
class IntersectionPool:
    """Annotations produced identically by every model on a dataset."""

    dataset_id: str
    annotations: frozenset[Annotation]

    def __len__(self) -> int:
        return len(self.annotations)


def effective_outcomes(
    log: OutcomeLog, dataset_id: str, model_id: str
) -> dict[Annotation, Outcome]:
    """Final accepted outcome per annotation for one (dataset, model).

    Control-task outcomes and outcomes from unaccepted assignments do not
    count; resubmissions resolve to the latest record.
    """
    accepted = log.accepted_assignments()
    final: dict[Annotation, Outcome] = {}
    outcomes = sorted(log.outcomes(), key=lambda o: (o.timestamp_ms, o.outcome_id))
    for outcome in outcomes:
        if outcome.is_control or outcome.assignment_id not in accepted:
            continue
        if outcome.dataset_id == dataset_id and outcome.model_id == model_id:
            final[outcome.annotation] = outcome
    return final


def verified_set(
    log: OutcomeLog, dataset_id: str, model_id: str, corpus: Corpus | None = None
) -> VerifiedSet:
    """Collect the annotations whose final accepted action is Verify."""
    final = effective_outcomes(log, dataset_id, model_id)
    if corpus is not None:
        known = corpus.get_set(dataset_id, model_id).identities()
        unknown = set(final) - known
        if unknown:
            ann = sorted(unknown)[0]
            raise ValueError(
                f"log references an annotation outside {dataset_id}/{model_id}: "
                f"{ann.doc_id} [{ann.span.start},{ann.span.end}) {ann.link.title}"
            )
    verified = frozenset(ann for ann, out in final.items() if out.action == VERIFY)
    return VerifiedSet(dataset_id=dataset_id, model_id=model_id, annotations=verified)


def verification_rate(verified: VerifiedSet, pre_annotations: AnnotationSet) -> float:
    """|V| / |N|: the fraction of a model's annotations a human verified.

    This is also the posthoc precision of the pairing. Returns 0.0 on an
    empty annotation set (degenerate; flagged by the report layer).
    """
    if (verified.dataset_id, verified.model_id) != pre_annotations.key:
        raise ValueError(
            f"verified set {verified.dataset_id}/{verified.model_id} does not match "
            f"annotation set {pre_annotations.dataset_id}/{pre_annotations.model_id}"
        )
    identities = pre_annotations.identities()
    if not verified.annotations <= identities:
        raise ValueError("verified set is not a subset of the pre-annotations")
    if not identities:
        return 0.0
    return len(verified) / len(identities)


def union_pool(verified_sets: Iterable[VerifiedSet]) -> UnionPool:
    sets = list(verified_sets)
    if not sets:
        raise ValueError("union pool needs at least one verified set")
    dataset_ids = {v.dataset_id for v in sets}
    if len(dataset_ids) != 1:
        raise ValueError(f"verified sets span multiple datasets: {sorted(dataset_ids)}")
    pooled: frozenset[Annotation] = frozenset().union(*(v.annotations for v in sets))
    return UnionPool(dataset_id=sets[0].dataset_id, annotations=pooled)


def posthoc_recall(verified: VerifiedSet, pool: UnionPool) -> float:
    """|V| / |union pool|; 0.0 on an empty pool (degenerate)."""
    if verified.dataset_id != pool.dataset_id:
        raise ValueError(
            f"dataset mismatch: {verified.dataset_id!r} vs {pool.dataset_id!r}"
        )
    if not pool.annotations:
        return 0.0
    return len(verified) / len(pool)


def intersection_pool(annotation_sets: Iterable[AnnotationSet]) -> IntersectionPool:
    sets = list(annotation_sets)
    if len(sets) < 2:
        raise ValueError("intersection pool needs at least two models")
    dataset_ids = {s.dataset_id for s in sets}
    if len(dataset_ids) != 1:
        raise ValueError(f"annotation sets span multiple datasets: {sorted(dataset_ids)}")
    common = frozenset.intersection(*(s.identities() for s in sets))
    return IntersectionPool(dataset_id=sets[0].dataset_id, annotations=common)


def agreement_distribution(
    pool: IntersectionPool,
    verified_by_model: Mapping[str, VerifiedSet],
    answered_by_model: Mapping[str, Iterable[Annotation]] | None = None,
) -> dict[int, int]:
    """Histogram of annotations in the intersection by how many models'
    annotators verified them; counts sum to |pool|."""
    if answered_by_model is not None:
        answered = {m: frozenset(anns) for m, anns in answered_by_model.items()}
        for model_id in verified_by_model:
            missing = pool.annotations - answered.get(model_id, frozenset())
            if missing:
                ann = sorted(missing)[0]
                raise ValueError(
                    f"annotation in the intersection has no outcome under model "
                    f"{model_id!r}: {ann.doc_id} [{ann.span.start},{ann.span.end})"
                )
    counts = {i: 0 for i in range(len(verified_by_model) + 1)}
    for ann in pool.annotations:
        i = sum(1 for v in verified_by_model.values() if ann in v.annotations)
        counts[i] += 1
    return counts


def outcome_breakdown(
    log: OutcomeLog, dataset_id: str, model_id: str
) -> tuple[float, float, float]:
    """(verify, modify, remove) fractions over answered annotations."""
    final = effective_outcomes(log, dataset_id, model_id)
    if not final:
        raise ValueError(f"no outcomes recorded for {dataset_id}/{model_id}")
    n = len(final)
    actions = [out.action for out in final.values()]
    return (
        actions.count(VERIFY) / n,
        actions.count(MODIFY) / n,
        actions.count(REMOVE) / n,
    )


def coverage_taxonomy(pool: UnionPool, gt: AnnotationSet) -> dict[str, float]:
    """Classify every pooled annotation against ground truth.

    A: a GT annotation has the same span and the same link.
    B: a GT annotation has the same span, but none such shares the link.
    C: no same-span GT annotation; an overlapping one shares the link.
    D: no same-span GT annotation; overlapping ones exist, none link-equal.
    E: no GT annotation overlaps the mention at all.

    Each annotation lands in exactly one class; fractions sum to 1.
    """
    if pool.dataset_id != gt.dataset_id:
        raise ValueError(f"dataset mismatch: {pool.dataset_id!r} vs {gt.dataset_id!r}")
    if not pool.annotations:
        raise ValueError("empty union pool")
    gt_by_doc = gt.by_doc()
    counts = {outcome: 0 for outcome in COVERAGE_OUTCOMES}
    for ann in pool.annotations:
        gt_anns = gt_by_doc.get(ann.doc_id, [])
        same_span = [g for g in gt_anns if g.span == ann.span]
        if same_span:
            outcome = "A" if any(g.link == ann.link for g in same_span) else "B"
        else:
            overlapping = [g for g in gt_anns if spans_overlap(g.span, ann.span)]
            if not overlapping:
                outcome = "E"
            else:
                outcome = "C" if any(g.link == ann.link for g in overlapping) else "D"
        counts[outcome] += 1
    n = len(pool)
    return {outcome: counts[outcome] / n for outcome in COVERAGE_OUTCOMES}


def bootstrap_ci(
    statistic: Callable[[np.ndarray], float],
    items: Sequence | np.ndarray,
    n_resamples: int = 1000,
    level: float = 0.95,
    seed: int = 0,
    groups: Sequence | None = None,
) -> tuple[float, float]:
    """Empirical percentile bootstrap interval for ``statistic`` over
    ``items``, resampling with replacement.

    The resampling unit defaults to the individual item (annotation
    record); passing ``groups`` (one label per item, e.g. doc ids) switches
    to cluster resampling for sensitivity analysis. Deterministic for a
    fixed seed; an all-constant statistic collapses to a zero-width
    interval.
    """
    arr = np.asarray(items)
    n = arr.shape[0]
    if n == 0:
        raise ValueError("cannot bootstrap an empty sample")
    if not 0.0 < level < 1.0:
        raise ValueError(f"confidence level must be in (0, 1), got {level}")
    if groups is not None:
        if len(groups) != n:
            raise ValueError("groups must label every item")
        members: dict = {}
        order: list = []
        for i, g in enumerate(groups):
            if g not in members:
                members[g] = []
                order.append(g)
            members[g].append(i)
        clusters = [np.asarray(members[g]) for g in order]
    rng = np.random.default_rng(seed)
    stats = np.empty(n_resamples, dtype=float)
    for b in range(n_resamples):
        if groups is None:
            idx = rng.integers(0, n, size=n)
        else:
            picks = rng.integers(0, len(clusters), size=len(clusters))
            idx = np.concatenate([clusters[p] for p in picks])
        stats[b] = statistic(arr[idx])
    alpha = (1.0 - level) / 2.0
    lo = float(np.percentile(stats, 100.0 * alpha))
    hi = float(np.percentile(stats, 100.0 * (1.0 - alpha)))
    return lo, hi


def derive_seed(master_seed: int, *parts: str) -> int:
    """Stable per-cell RNG seed, independent of evaluation order."""
    digest = hashlib.sha256(
        (":".join([str(master_seed), *parts])).encode("utf-8")
    ).digest()
    return int.from_bytes(digest[:8], "big")
