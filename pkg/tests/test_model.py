import pytest

from span_ensembles import (
    ALL_GROUPS,
    Annotation,
    AnnotationStore,
    ConfigError,
    DocumentRef,
    ValidationError,
    filter_by_group,
)


def make_store():
    docs = [DocumentRef("d1", 100, "c"), DocumentRef("d2", 50, "c")]
    anns = [
        Annotation("d1", "A", 0, 10, group="Anatomy"),
        Annotation("d1", "A", 20, 30, group="Anatomy"),
        Annotation("d2", "A", 5, 15, group="Anatomy"),
        Annotation("d1", "B", 0, 5, group="Disorders"),
        Annotation("d2", "B", 10, 20, group="Disorders"),
    ]
    return AnnotationStore(docs, anns, group_universe=("Anatomy", "Disorders", "Procedures"))


def test_document_rejects_negative_length():
    with pytest.raises(ValidationError):
        DocumentRef("d1", -1)


def test_annotation_rejects_inverted_span():
    with pytest.raises(ValidationError):
        Annotation("d1", "A", 12, 5)


def test_annotation_rejects_bad_cui():
    with pytest.raises(ValidationError):
        Annotation("d1", "A", 0, 5, cui="X123")
    # 7 digits after C is fine
    Annotation("d1", "A", 0, 5, cui="C0004057")


def test_annotation_optional_fields():
    ann = Annotation("d1", "A", 5, 12, native_type="DrugMention", cui="C0004057", score=0.91)
    assert ann.length == 7
    bare = Annotation("d1", "A", 5, 12)
    assert bare.cui is None and bare.score is None


def test_store_rejects_unknown_doc():
    with pytest.raises(ValidationError):
        AnnotationStore([DocumentRef("d1", 10)], [Annotation("nope", "A", 0, 5)])


def test_store_rejects_out_of_bounds_span():
    with pytest.raises(ValidationError):
        AnnotationStore([DocumentRef("d1", 10)], [Annotation("d1", "A", 5, 11)])


def test_store_rejects_duplicate_doc():
    with pytest.raises(ValidationError):
        AnnotationStore([DocumentRef("d1", 10), DocumentRef("d1", 20)], [])


def test_filter_by_group_basic():
    store = make_store()
    filtered = filter_by_group(store, "Disorders")
    assert len(filtered.annotations) == 2
    assert all(a.group == "Disorders" for a in filtered.annotations)
    assert filtered.doc_ids == store.doc_ids


def test_filter_all_is_identity():
    store = make_store()
    assert filter_by_group(store, ALL_GROUPS) is store


def test_filter_empty_group_keeps_documents():
    store = make_store()
    filtered = filter_by_group(store, "Procedures")
    assert filtered.annotations == ()
    assert filtered.doc_ids == store.doc_ids


def test_filter_unknown_group_is_config_error():
    with pytest.raises(ConfigError):
        filter_by_group(make_store(), "Findings")


def test_filter_idempotent():
    store = make_store()
    once = filter_by_group(store, "Anatomy")
    twice = filter_by_group(once, "Anatomy")
    assert [a for a in twice.annotations] == [a for a in once.annotations]


def test_group_counts_partition_annotations():
    store = make_store()
    counts = store.count_by_group()
    grouped = sum(1 for a in store.annotations if a.group is not None)
    assert sum(counts.values()) == grouped


def test_verify_disjoint_spans():
    docs = [DocumentRef("d1", 100)]
    good = AnnotationStore(docs, [Annotation("d1", "A", 0, 5, group="g"), Annotation("d1", "A", 5, 9, group="g")])
    good.verify_disjoint_spans()
    # same interval, different groups: still fine
    cross = AnnotationStore(docs, [Annotation("d1", "A", 0, 5, group="g"), Annotation("d1", "A", 0, 5, group="h")])
    cross.verify_disjoint_spans()
    bad = AnnotationStore(docs, [Annotation("d1", "A", 0, 6, group="g"), Annotation("d1", "A", 4, 9, group="g")])
    with pytest.raises(ValidationError):
        bad.verify_disjoint_spans()
