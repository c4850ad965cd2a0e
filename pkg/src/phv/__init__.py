"""Posthoc verification harness for entity-linking evaluation."""

__version__ = "0.1.0"

from .corpus import (  # noqa: E402,F401
    Annotation,
    AnnotationSet,
    Corpus,
    CorpusError,
    Document,
    EntityLink,
    Span,
    build_annotation_set,
    build_corpus,
    corpus_digest,
    normalize_link,
    parse_aida_tsv,
    parse_canonical,
    serialize_canonical,
)
from .matching import (  # noqa: F401
    MatchCounts,
    PRF,
    exact_match_counts,
    macro_prf,
    micro_prf,
    overlap_match_counts,
    per_document_counts,
    spans_overlap,
)
from .taskgen import (  # noqa: F401
    Assignment,
    ControlExpectation,
    ControlKey,
    Task,
    build_assignments,
    chunk_document,
    grade_control,
)
from .collectsvc import (  # noqa: F401
    Finalization,
    Outcome,
    OutcomeLog,
    VerificationService,
    create_app,
    load_outcome_log,
    parse_outcome_log,
    serialize_outcome_log,
)
from .metrics import (  # noqa: F401
    IntersectionPool,
    UnionPool,
    VerifiedSet,
    agreement_distribution,
    bootstrap_ci,
    coverage_taxonomy,
    intersection_pool,
    outcome_breakdown,
    posthoc_recall,
    union_pool,
    verification_rate,
    verified_set,
)
from .report import (  # noqa: F401
    RunConfig,
    figure_csvs,
    run_posthoc_eval,
    run_pre_eval,
)
