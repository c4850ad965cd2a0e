"""Corpus basics: the data model, link normalization, and file formats.

Run from the repo root after `pip install -e .`:

    python3 demos/01_corpus_and_formats.py
"""

from phv import (
    Annotation,
    Document,
    EntityLink,
    Span,
    build_corpus,
    corpus_digest,
    normalize_link,
    parse_aida_tsv,
    parse_canonical,
    serialize_canonical,
)

# Every annotation is a mention span plus a normalized knowledge-base title.
# Normalization makes link equality meaningful across sources:
for raw in ("barack_obama", "Caf%C3%A9", "  new   york "):
    print(f"{raw!r:18} -> {normalize_link(raw).title!r}")

# A corpus holds documents plus one annotation set per (dataset, model).
# Ground truth is just a model named "GT".
text = "Germany beat Argentina in Berlin."
doc = Document(dataset_id="demo", doc_id="d1", text=text)
gt = [
    Annotation("d1", Span(0, 7), EntityLink("Germany")),
    Annotation("d1", Span(13, 22), EntityLink("Argentina")),
    Annotation("d1", Span(26, 32), EntityLink("Berlin")),
]
pred = [
    Annotation("d1", Span(0, 7), EntityLink("Germany")),
    Annotation("d1", Span(13, 22), EntityLink("Argentina national football team")),
]
corpus = build_corpus(
    [doc],
    raw_annotations=[("demo", "GT", a) for a in gt] + [("demo", "E2E", a) for a in pred],
)
print("\ndatasets:", corpus.dataset_ids(), "models:", corpus.model_ids("demo"))
print("content hash:", corpus_digest(corpus))

# The canonical interchange format is line-delimited JSON; serialization is
# deterministic and parse(serialize(c)) reproduces c exactly.
blob = serialize_canonical(corpus)
print("\ncanonical form:")
print(blob.decode(), end="")
assert serialize_canonical(parse_canonical(blob)) == blob

# AIDA-CoNLL token files convert directly; offsets come from joining tokens
# with single spaces and NIL mentions are dropped.
aida = (
    "-DOCSTART- (1 testa)\n"
    "Germany\tB\tGermany\tGermany\n"
    "won\n"
    "the\n"
    "match\n"
)
converted = parse_aida_tsv(aida, dataset_id="aida-demo")
d = converted.document("aida-demo", "1 testa")
(a,) = converted.get_set("aida-demo", "GT").annotations
print(f"\nAIDA text: {d.text!r}")
print(f"mention {d.text[a.span.start:a.span.end]!r} at [{a.span.start},{a.span.end}) -> {a.link.title}")
