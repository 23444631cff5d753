"""Redaction classification and NER annotation tests."""

import pytest

from fruskg.enrich import (
    EXCLUDED_NER_LABELS,
    annotate_entities,
    classify_redaction,
    extract_redactions,
)
from fruskg.nlp_provider import GazetteerNer
from fruskg.tei_ingest import DocumentRecord


def doc(transcript, doc_id="v1#d1", spans=()):
    return DocumentRecord(doc_id=doc_id, subtype="historical-document",
                          date=None, date_raw=None, year=None, title="", city_raw=None,
                          transcript=transcript,
                          italic_bracket_spans=[tuple(s) for s in spans])


def test_one_line_example():
    rtype, quantity, qualifier = classify_redaction("1 line not declassified.")
    assert rtype == "text-amount"
    assert quantity == {"value": 1.0, "unit": "line"}
    assert qualifier == "exact"


def test_fraction_and_qualifier_examples():
    rtype, quantity, qualifier = classify_redaction("less than 1 line not declassified.")
    assert (rtype, qualifier) == ("text-amount", "less-than")
    rtype, quantity, _ = classify_redaction("2½ lines not declassified.")
    assert quantity == {"value": 2.5, "unit": "lines"}
    rtype, _, _ = classify_redaction("dollar amount not declassified.")
    assert rtype == "monetary"
    rtype, _, _ = classify_redaction("name not declassified.")
    assert rtype == "name"
    rtype, _, _ = classify_redaction("place name not declassified.")
    assert rtype == "place"


def test_non_redaction_text_is_other():
    assert classify_redaction("Omitted here is a memorandum.")[0] == "other"
    assert classify_redaction("")[0] == "other"


def test_fixture_accuracy(redaction_fixtures):
    """Classification must agree with the hand-labeled set on >= 95%."""
    hits = 0
    misses = []
    for entry in redaction_fixtures:
        rtype, quantity, qualifier = classify_redaction(entry["text"])
        ok = (rtype == entry["rtype"]
              and quantity == entry.get("quantity")
              and qualifier == entry.get("qualifier"))
        if ok:
            hits += 1
        else:
            misses.append((entry["text"], (rtype, quantity, qualifier)))
    accuracy = hits / len(redaction_fixtures)
    assert accuracy >= 0.95, misses[:10]


def test_extract_redactions_spans_and_order():
    text = "Alpha [2 lines not declassified.] beta [name not declassified.] end."
    s1 = (text.index("[") + 1, text.index("]"))
    s2 = (text.rindex("[") + 1, text.rindex("]"))
    reds = extract_redactions("v1#d1", text, [s2, s1])
    assert [r.span for r in reds] == sorted([s1, s2])
    assert reds[0].rtype == "text-amount"
    assert reds[1].rtype == "name"
    for r in reds:
        assert text[r.span[0]:r.span[1]] == r.raw_text


def test_extract_redactions_total_over_garbage():
    reds = extract_redactions("v1#d1", "xyz", [(0, 3)])
    assert len(reds) == 1
    assert reds[0].rtype == "other"


def test_annotate_entities_basic():
    d = doc("Talks between Portugal and NATO continued in Lisbon.")
    spans = annotate_entities(d, GazetteerNer())
    found = {(s.text, s.label) for s in spans}
    assert ("Portugal", "GPE") in found
    assert ("NATO", "ORG") in found
    assert ("Lisbon", "GPE") in found
    for s in spans:
        assert d.transcript[s.span[0]:s.span[1]] == s.text
        assert s.provider_id == "gazetteer-ner"


def test_annotate_entities_filters_excluded_labels():
    gaz = {"Portugal": "GPE", "May 1970": "DATE", "three": "CARDINAL",
           "half": "QUANTITY"}
    d = doc("In May 1970 three ships left Portugal, half empty.")
    spans = annotate_entities(d, GazetteerNer(gaz))
    assert {s.label for s in spans} == {"GPE"}
    assert all(s.label not in EXCLUDED_NER_LABELS for s in spans)


def test_annotate_entities_chunking_preserves_offsets():
    sentence = "Portugal spoke with NATO. "
    d = doc(sentence * 40)
    unchunked = annotate_entities(d, GazetteerNer())
    chunked = annotate_entities(d, GazetteerNer(), chunk_size=64)
    key = lambda s: (s.span, s.text, s.label)
    assert sorted(map(key, chunked)) == sorted(map(key, unchunked))
    for s in chunked:
        assert d.transcript[s.span[0]:s.span[1]] == s.text


def test_annotate_entities_empty_document():
    assert annotate_entities(doc(""), GazetteerNer()) == []


def test_annotate_longest_match_wins():
    d = doc("The United States and the United Nations met.")
    spans = annotate_entities(d, GazetteerNer())
    texts = {s.text for s in spans}
    assert "United States" in texts
    assert "United Nations" in texts


@pytest.mark.parametrize("text,value", [
    ("½ line not declassified.", 0.5),
    ("3¾ pages not declassified.", 3.75),
    ("1 1/2 lines not declassified.", 1.5),
    ("two paragraphs not declassified.", 2.0),
])
def test_quantity_parsing(text, value):
    _, quantity, _ = classify_redaction(text)
    assert quantity["value"] == pytest.approx(value)
