"""Redaction extraction and named-entity annotation.

Redactions appear in transcripts as bracketed italic insertions like
"[1 line not declassified.]". The phrase language is small and
semistructured, so classification is a set of deterministic sequence rules
pinned by a hand-labeled fixture set.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, asdict
from typing import Optional

from .nlp_provider import NerProvider
from .tei_ingest import DocumentRecord

EXCLUDED_NER_LABELS = {"DATE", "TIME", "QUANTITY", "ORDINAL", "CARDINAL", "MONEY", "PERCENT"}

ALLOWED_NER_LABELS = {
    "PERSON", "NORP", "FAC", "ORG", "GPE", "LOC", "PRODUCT", "EVENT",
    "WORK_OF_ART", "LAW", "LANGUAGE",
}


@dataclass
class Redaction:
    doc_id: str
    span: tuple[int, int]
    raw_text: str
    rtype: str  # monetary | name | place | text-amount | other
    quantity: Optional[dict] = None  # {"value": float, "unit": str}
    qualifier: Optional[str] = None  # exact | less-than | about

    def to_json(self) -> dict:
        d = asdict(self)
        d["span"] = list(self.span)
        return d


@dataclass
class NamedEntitySpan:
    doc_id: str
    span: tuple[int, int]
    text: str
    label: str
    provider_id: str

    def to_json(self) -> dict:
        d = asdict(self)
        d["span"] = list(self.span)
        return d


_FRACTIONS = {"½": 0.5, "¼": 0.25, "¾": 0.75, "⅓": 1 / 3, "⅔": 2 / 3, "⅛": 0.125}

_QUALIFIERS = [
    (re.compile(r"^less\s+than\s+", re.IGNORECASE), "less-than"),
    (re.compile(r"^(?:about|approximately|roughly)\s+", re.IGNORECASE), "about"),
]

_NUMBER = re.compile(
    r"^(?:(\d+(?:\.\d+)?)\s*(?:[-\s]?([½¼¾⅓⅔⅛])|[-\s]?(\d+)/(\d+))?|([½¼¾⅓⅔⅛])|(one|two|three|four|five|six|seven|eight|nine|ten))\b[\s]*",
    re.IGNORECASE,
)

_WORD_NUMBERS = {
    "one": 1, "two": 2, "three": 3, "four": 4, "five": 5,
    "six": 6, "seven": 7, "eight": 8, "nine": 9, "ten": 10,
}

_UNITS = {
    "line": "line", "lines": "lines",
    "paragraph": "paragraph", "paragraphs": "paragraph",
    "page": "page", "pages": "page",
    "word": "word", "words": "word",
}

_NOT_DECLASSIFIED = re.compile(r"not\s+declassified\.?\s*$", re.IGNORECASE)


def _parse_quantity(text: str) -> tuple[Optional[float], str]:
    """Leading quantity phrase -> (value, remainder)."""
    m = _NUMBER.match(text)
    if not m:
        return None, text
    whole, glyph, num, den, lone_glyph, word = m.groups()
    if lone_glyph:
        value = _FRACTIONS[lone_glyph]
    elif word:
        value = float(_WORD_NUMBERS[word.lower()])
    else:
        value = float(whole)
        if glyph:
            value += _FRACTIONS[glyph]
        elif num and den and float(den) != 0:
            value += float(num) / float(den)
    return value, text[m.end():]


def classify_redaction(text: str) -> tuple[str, Optional[dict], Optional[str]]:
    """Classify one bracketed-italic string -> (rtype, quantity, qualifier)."""
    body = text.strip()
    if not _NOT_DECLASSIFIED.search(body):
        return "other", None, None
    body = _NOT_DECLASSIFIED.sub("", body).strip()

    qualifier = None
    for pattern, name in _QUALIFIERS:
        m = pattern.match(body)
        if m:
            qualifier = name
            body = body[m.end():]
            break

    value, rest = _parse_quantity(body)
    rest_l = rest.strip().lower()

    if value is not None:
        # "1 line of source text", "2½ lines", "3 paragraphs of text"
        unit_word = rest_l.split()[0] if rest_l else ""
        unit = _UNITS.get(unit_word.strip(".,"))
        if unit is not None:
            if qualifier is None:
                qualifier = "exact"
            return "text-amount", {"value": value, "unit": unit}, qualifier
        if "dollar" in rest_l or "amount" in rest_l:
            return "monetary", {"value": value, "unit": "unspecified"}, qualifier or "exact"
        if "name" in rest_l:
            return "name", {"value": value, "unit": "unspecified"}, qualifier or "exact"
        return "other", {"value": value, "unit": "unspecified"}, qualifier or "exact"

    if "dollar amount" in rest_l or "dollar figure" in rest_l or "amount" == rest_l:
        return "monetary", None, qualifier
    if rest_l.startswith("place") or rest_l.startswith("location") or rest_l.startswith("city"):
        return "place", None, qualifier
    if rest_l.startswith("name") or " name" in rest_l:
        return "name", None, qualifier
    if rest_l in ("text", "source text") or rest_l.startswith("text "):
        return "text-amount", None, qualifier
    return "other", None, qualifier


def extract_redactions(doc_id: str, transcript: str,
                       italic_bracket_spans: list[tuple[int, int]]) -> list[Redaction]:
    """Turn parser-provided bracketed-italic spans into Redactions.

    Total over spans: anything that does not match the grammar becomes
    rtype=other. Output is sorted and non-overlapping by construction.
    """
    out = []
    for start, end in sorted(italic_bracket_spans):
        raw = transcript[start:end]
        rtype, quantity, qualifier = classify_redaction(raw)
        if quantity is not None and quantity["value"] <= 0:
            quantity = None
        out.append(Redaction(doc_id=doc_id, span=(start, end), raw_text=raw,
                             rtype=rtype, quantity=quantity, qualifier=qualifier))
    return out


def annotate_entities(doc: DocumentRecord, provider: NerProvider,
                      chunk_size: int | None = None) -> list[NamedEntitySpan]:
    """Run NER over a document, chunked to the provider's max length.

    Excluded labels (dates, quantities, ...) are filtered no matter what
    the provider returns.
    """
    text = doc.transcript
    if not text:
        return []
    limit = chunk_size or provider.max_length
    spans: list[NamedEntitySpan] = []
    offset = 0
    while offset < len(text):
        # break on whitespace near the limit so entities are not split
        end = min(offset + limit, len(text))
        if end < len(text):
            cut = text.rfind(" ", offset + limit // 2, end)
            if cut > offset:
                end = cut
        chunk = text[offset:end]
        for ent in provider.annotate(chunk):
            label = ent["label"]
            if label in EXCLUDED_NER_LABELS or label not in ALLOWED_NER_LABELS:
                continue
            start = offset + int(ent["start"])
            stop = offset + int(ent["end"])
            spans.append(NamedEntitySpan(
                doc_id=doc.doc_id, span=(start, stop), text=text[start:stop],
                label=label, provider_id=provider.identity,
            ))
        offset = end if end > offset else offset + limit
    spans.sort(key=lambda s: s.span)
    return spans
