"""Parse TEI volume files of the FRUS corpus into structured records.

The corpus encodes each volume as one TEI XML file: person and term
annotations live under ``<front>``, the documents themselves are
``<div type="document">`` children of ``<body>``. Structure varies a little
between volumes, so parsing is tolerant: unknown tags are counted, missing
optional tags never abort a file.
"""

from __future__ import annotations

import re
import xml.etree.ElementTree as ET
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import IO, Iterator, Optional, Union

from .errors import DirectoryNotFound, MalformedXml, MissingVolumeId

XML_ID = "{http://www.w3.org/XML/1998/namespace}id"

# tags we interpret structurally; everything else is swept into the
# transcript text and counted once per tag name in parse_warnings
KNOWN_TAGS = {
    "TEI", "teiHeader", "fileDesc", "titleStmt", "title", "text", "front",
    "body", "back", "div", "head", "p", "persName", "placeName", "gloss",
    "signed", "date", "dateline", "opener", "closer", "hi", "list", "item",
    "term", "person", "listPerson", "note", "quote", "ref", "seg", "salute",
    "said", "table", "row", "cell", "lb", "pb", "milestone", "anchor", "hr",
}


@dataclass
class PersonAnnotation:
    volume_id: str
    local_id: str
    name: str
    description: str = ""


@dataclass
class TermAnnotation:
    volume_id: str
    local_id: str
    label: str
    description: str = ""


@dataclass
class DocumentRecord:
    doc_id: str
    subtype: str  # "historical-document" | "editorial-note"
    date: Optional[str]  # ISO form when parseable
    date_raw: Optional[str]
    year: Optional[int]
    title: str
    city_raw: Optional[str]
    signed_names: list[str] = field(default_factory=list)
    sent_by_ids: list[str] = field(default_factory=list)
    sent_to_ids: list[str] = field(default_factory=list)
    sender_institution: Optional[str] = None
    receiver_institution: Optional[str] = None
    mentioned_person_ids: list[str] = field(default_factory=list)
    term_ids: list[str] = field(default_factory=list)
    source_archive: Optional[str] = None
    transcript: str = ""
    # (start, end) offsets into transcript of italic runs enclosed in
    # square brackets; candidate redactions for text_enrichment
    italic_bracket_spans: list[tuple[int, int]] = field(default_factory=list)


@dataclass
class VolumeRecord:
    volume_id: str
    title: str
    persons: list[PersonAnnotation] = field(default_factory=list)
    terms: list[TermAnnotation] = field(default_factory=list)
    documents: list[DocumentRecord] = field(default_factory=list)
    parse_warnings: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)

    @classmethod
    def from_json(cls, data: dict) -> "VolumeRecord":
        persons = [PersonAnnotation(**p) for p in data.get("persons", [])]
        terms = [TermAnnotation(**t) for t in data.get("terms", [])]
        docs = []
        for d in data.get("documents", []):
            d = dict(d)
            d["italic_bracket_spans"] = [tuple(s) for s in d.get("italic_bracket_spans", [])]
            docs.append(DocumentRecord(**d))
        return cls(
            volume_id=data["volume_id"],
            title=data.get("title", ""),
            persons=persons,
            terms=terms,
            documents=docs,
            parse_warnings=list(data.get("parse_warnings", [])),
        )


@dataclass
class CorpusReport:
    volumes: int = 0
    documents: int = 0
    annotated_volumes: int = 0
    warnings: int = 0
    failed_files: list[str] = field(default_factory=list)


_DATE_FULL = re.compile(r"(\d{4})-(\d{2})-(\d{2})")
_DATE_YM = re.compile(r"^(\d{4})-(\d{2})$")
_DATE_Y = re.compile(r"(\d{4})")


def derive_year(raw: Optional[str]) -> tuple[Optional[int], Optional[str]]:
    """Extract (year, full ISO date) from a raw TEI date string.

    Total: unparseable input yields (None, None), never an error.
    """
    if not raw:
        return None, None
    raw = raw.strip()
    m = _DATE_FULL.search(raw)
    if m:
        y, mo, d = int(m.group(1)), int(m.group(2)), int(m.group(3))
        if 1 <= mo <= 12 and 1 <= d <= 31:
            return y, f"{y:04d}-{mo:02d}-{d:02d}"
    m = _DATE_YM.match(raw)
    if m:
        return int(m.group(1)), None
    m = _DATE_Y.search(raw)
    if m:
        return int(m.group(1)), None
    return None, None


def _local(tag: str) -> str:
    return tag.rsplit("}", 1)[-1]


def _ref_id(value: str) -> str:
    return value.lstrip("#")


class _TextCollector:
    """Accumulates visible text while tracking element offsets."""

    def __init__(self):
        self.parts: list[str] = []
        self.length = 0

    def add(self, text: Optional[str]):
        if not text:
            return
        cleaned = re.sub(r"\s+", " ", text)
        if not cleaned:
            return
        if cleaned == " " and (self.length == 0 or (self.parts and self.parts[-1].endswith(" "))):
            return
        self.parts.append(cleaned)
        self.length += len(cleaned)

    def value(self) -> str:
        return "".join(self.parts)


def _collect_text(elem: ET.Element) -> str:
    return re.sub(r"\s+", " ", "".join(elem.itertext())).strip()


_NAME_WORD = re.compile(r"^[A-Z][A-Za-z'.]*\.?$")


def _split_annotation(text: str) -> tuple[str, str]:
    """Split "Last, First M., description" into (name, description).

    The segment after the first comma is part of the name when it looks
    like given names or initials rather than a role description.
    """
    segments = [s.strip() for s in text.split(",")]
    if len(segments) == 1:
        return segments[0], ""
    first = segments[1]
    words = first.split()
    if words and len(words) <= 3 and all(_NAME_WORD.match(w) for w in words):
        return f"{segments[0]}, {first}", ", ".join(segments[2:]).strip()
    return segments[0], ", ".join(segments[1:]).strip()


_FROM_TO = re.compile(
    r"\bfrom\s+(?:the\s+)?(.+?)\s+to\s+(?:the\s+)?(.+?)\s*$", re.IGNORECASE
)


def _parse_document(div: ET.Element, volume_id: str, warnings: list[str],
                    unknown: dict[str, int]) -> DocumentRecord:
    local_id = div.get(XML_ID) or div.get("id") or ""
    doc_id = f"{volume_id}#{local_id}" if local_id else f"{volume_id}#?"
    subtype = div.get("subtype") or "historical-document"
    if subtype not in ("historical-document", "editorial-note"):
        warnings.append(f"{doc_id}: unknown subtype {subtype!r}, kept as historical-document")
        subtype = "historical-document"

    rec = DocumentRecord(
        doc_id=doc_id, subtype=subtype, date=None, date_raw=None, year=None,
        title="", city_raw=None,
    )

    collector = _TextCollector()
    mentioned: list[str] = []

    def walk(elem: ET.Element, in_head: bool, depth: int):
        tag = _local(elem.tag)
        if tag not in KNOWN_TAGS:
            unknown[tag] = unknown.get(tag, 0) + 1

        if tag == "head" and depth == 1 and not rec.title:
            rec.title = _collect_text(elem)
            in_head = True
        elif tag == "persName":
            ref = elem.get("corresp") or elem.get("ref")
            if ref:
                pid = _ref_id(ref)
                role = (elem.get("type") or "").lower()
                if in_head and role in ("from", "sender"):
                    rec.sent_by_ids.append(pid)
                elif in_head and role in ("to", "recipient"):
                    rec.sent_to_ids.append(pid)
                elif in_head:
                    # untyped persName in the header: position decides
                    tail_so_far = collector.value().lower()
                    if " to " in tail_so_far or tail_so_far.rstrip().endswith("to"):
                        rec.sent_to_ids.append(pid)
                    else:
                        rec.sent_by_ids.append(pid)
                else:
                    mentioned.append(pid)
        elif tag == "gloss":
            ref = elem.get("target") or elem.get("corresp")
            if ref:
                rec.term_ids.append(_ref_id(ref))
        elif tag == "placeName" and rec.city_raw is None:
            rec.city_raw = _collect_text(elem) or None
        elif tag == "date" and rec.date_raw is None:
            raw = elem.get("when") or _collect_text(elem)
            if raw:
                rec.date_raw = raw
                rec.year, rec.date = derive_year(raw)
        elif tag == "signed":
            name = _collect_text(elem)
            if name:
                rec.signed_names.append(name)
        elif tag == "note" and (elem.get("type") or "") == "source" and rec.source_archive is None:
            rec.source_archive = _collect_text(elem) or None

        start = collector.length
        collector.add(elem.text)
        for child in elem:
            walk(child, in_head, depth + 1)
            collector.add(child.tail)
        end = collector.length

        if tag == "hi" and (elem.get("rend") == "italic" or elem.get("type") == "italic"):
            rec.italic_bracket_spans.append((start, end))

    collector.add(div.text)
    for child in div:
        walk(child, False, 1)
        collector.add(child.tail)

    transcript = collector.value()
    rec.transcript = transcript

    # keep only italic runs actually wrapped in square brackets, trimming
    # to the text inside the run
    kept = []
    for start, end in rec.italic_bracket_spans:
        before = transcript[:start].rstrip()
        after = transcript[end:].lstrip()
        if before.endswith("[") and after.startswith("]"):
            while start < end and transcript[start] == " ":
                start += 1
            while end > start and transcript[end - 1] == " ":
                end -= 1
            if start < end:
                kept.append((start, end))
    rec.italic_bracket_spans = sorted(set(kept))

    # sender/receiver institutions from the head line when present
    m = _FROM_TO.search(rec.title)
    if m:
        rec.sender_institution = m.group(1).strip() or None
        rec.receiver_institution = m.group(2).strip() or None

    rec.mentioned_person_ids = mentioned
    return rec


def _parse_annotations(front: ET.Element, volume_id: str,
                       persons: list[PersonAnnotation], terms: list[TermAnnotation]):
    for elem in front.iter():
        tag = _local(elem.tag)
        if tag == "persName":
            pid = elem.get(XML_ID) or elem.get("id")
            if not pid:
                continue
            name, desc = _split_annotation(_collect_text(elem))
            if name:
                persons.append(PersonAnnotation(volume_id, pid, name, desc))
        elif tag == "person":
            pid = elem.get(XML_ID) or elem.get("id")
            if not pid:
                continue
            name_el = next((c for c in elem.iter() if _local(c.tag) == "persName"), None)
            name = _collect_text(name_el) if name_el is not None else _collect_text(elem)
            desc_el = next((c for c in elem.iter() if _local(c.tag) == "note"), None)
            desc = _collect_text(desc_el) if desc_el is not None else ""
            if name.strip():
                persons.append(PersonAnnotation(volume_id, pid, name.strip(), desc.strip()))
        elif tag == "term":
            tid = elem.get(XML_ID) or elem.get("id")
            if not tid:
                continue
            text = _collect_text(elem)
            label, desc = (text.split(",", 1) + [""])[:2] if "," in text else (text, "")
            terms.append(TermAnnotation(volume_id, tid, label.strip(), desc.strip()))


def parse_volume(source: Union[bytes, str, Path, IO[bytes]]) -> VolumeRecord:
    """Parse one TEI volume into a VolumeRecord.

    Raises MalformedXml for non-well-formed input and MissingVolumeId when
    the root element carries no id; all other irregularities are recorded
    in parse_warnings.
    """
    try:
        if isinstance(source, bytes):
            root = ET.fromstring(source)
        elif isinstance(source, (str, Path)):
            root = ET.parse(str(source)).getroot()
        else:
            root = ET.parse(source).getroot()
    except ET.ParseError as exc:
        raise MalformedXml(str(exc)) from exc

    volume_id = root.get(XML_ID) or root.get("id")
    if not volume_id:
        raise MissingVolumeId("TEI root element has no xml:id")

    warnings: list[str] = []
    unknown: dict[str, int] = {}
    persons: list[PersonAnnotation] = []
    terms: list[TermAnnotation] = []
    documents: list[DocumentRecord] = []
    title = ""

    for elem in root.iter():
        if _local(elem.tag) == "title":
            title = _collect_text(elem)
            break

    for elem in root.iter():
        tag = _local(elem.tag)
        if tag == "front":
            _parse_annotations(elem, volume_id, persons, terms)
        elif tag == "body":
            for div in elem.iter():
                if _local(div.tag) == "div" and div.get("type") == "document":
                    documents.append(_parse_document(div, volume_id, warnings, unknown))

    # dedupe annotations by local id, keeping the first occurrence
    seen_p: set[str] = set()
    persons = [p for p in persons if not (p.local_id in seen_p or seen_p.add(p.local_id))]
    seen_t: set[str] = set()
    terms = [t for t in terms if not (t.local_id in seen_t or seen_t.add(t.local_id))]

    known_ids = {p.local_id for p in persons} | {t.local_id for t in terms}
    for doc in documents:
        for pid in doc.mentioned_person_ids + doc.sent_by_ids + doc.sent_to_ids:
            if pid not in known_ids:
                warnings.append(f"{doc.doc_id}: unresolved person reference {pid!r}")
        for tid in doc.term_ids:
            if tid not in known_ids:
                warnings.append(f"{doc.doc_id}: unresolved term reference {tid!r}")

    for tag, count in sorted(unknown.items()):
        warnings.append(f"unrecognized tag <{tag}> skipped ({count} occurrences)")

    return VolumeRecord(volume_id=volume_id, title=title, persons=persons,
                        terms=terms, documents=documents, parse_warnings=warnings)


def scan_corpus(directory: Union[str, Path]) -> tuple[Iterator[VolumeRecord], CorpusReport]:
    """Parse every .xml file in a directory, lexicographic filename order.

    Returns a lazy iterator plus the report, which is filled in as the
    iterator is consumed. Per-file failures are recorded, never raised.
    """
    directory = Path(directory)
    if not directory.is_dir():
        raise DirectoryNotFound(str(directory))
    files = sorted(directory.glob("*.xml"))
    report = CorpusReport()

    def generate() -> Iterator[VolumeRecord]:
        for path in files:
            try:
                volume = parse_volume(path)
            except (MalformedXml, MissingVolumeId) as exc:
                report.failed_files.append(f"{path.name}: {exc}")
                continue
            report.volumes += 1
            report.documents += len(volume.documents)
            if volume.persons:
                report.annotated_volumes += 1
            report.warnings += len(volume.parse_warnings)
            yield volume

    return generate(), report
