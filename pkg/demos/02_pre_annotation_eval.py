"""Pre-annotation evaluation: exact vs overlap matching, micro vs macro.

The classical regime scores a model by matching its annotations against
ground truth. Exact matching wants identical (span, link) pairs; the
relaxed regime accepts overlapping spans when the link is the same.
"""

from phv import build_annotation_set, exact_match_counts, macro_prf, micro_prf, overlap_match_counts
from phv.corpus import Annotation, EntityLink, Span
from phv.matching import per_document_counts


def ann(doc, start, end, link):
    return Annotation(doc, Span(start, end), EntityLink(link))


# A prediction whose span is a little off but whose link is right:
gold = build_annotation_set("demo", "GT", [ann("d1", 4, 22, "Notre Dame Fighting Irish")])
near_miss = build_annotation_set("demo", "E2E", [ann("d1", 0, 22, "Notre Dame Fighting Irish")])

print("span off by 4 chars, same link:")
print("  exact  :", exact_match_counts(near_miss, gold))
print("  overlap:", overlap_match_counts(near_miss, gold))

# ... and one where the link is wrong too; neither regime credits it:
wrong_link = build_annotation_set("demo", "E2E", [ann("d1", 0, 22, "University of Notre Dame")])
print("span off AND link off:")
print("  exact  :", exact_match_counts(wrong_link, gold))
print("  overlap:", overlap_match_counts(wrong_link, gold))

# Micro averages pool counts over the whole dataset; macro averages
# per-document scores, with both-empty documents counting as perfect.
gold = build_annotation_set(
    "demo",
    "GT",
    [ann("d1", 0, 5, "A"), ann("d1", 8, 12, "B"), ann("d2", 0, 5, "C"), ann("d2", 8, 12, "D")],
)
pred = build_annotation_set(
    "demo",
    "E2E",
    [ann("d1", 0, 5, "A"), ann("d1", 8, 12, "B"), ann("d2", 0, 5, "X")],
)
counts = exact_match_counts(pred, gold)
print("\nmicro:", micro_prf(counts))
print("macro:", macro_prf(per_document_counts(pred, gold, "exact")))
