"""Assemble the typed property graph from all stage outputs."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Iterable, Optional

from .enrich import NamedEntitySpan, Redaction
from .errors import DanglingReference, DateOutOfRange
from .geo import GeoResolution, normalize_city
from .kgraph import KGraph
from .tei_ingest import VolumeRecord
from .unify import UnifiedPerson
from .wikidata import PersonFacts


@dataclass
class Era:
    president: str
    start: str  # ISO date, inclusive (inauguration day belongs to the incoming president)
    end: str  # exclusive


class EraTable:
    def __init__(self, path: str | Path | None = None):
        if path is None:
            text = resources.files("fruskg.data").joinpath("eras.csv").read_text(encoding="utf-8")
        else:
            text = Path(path).read_text(encoding="utf-8")
        self.eras = [Era(r["president"], r["start"], r["end"])
                     for r in csv.DictReader(text.splitlines())]
        for a, b in zip(self.eras, self.eras[1:]):
            if a.end != b.start:
                raise ValueError(f"era table not contiguous at {a.president} -> {b.president}")

    def era_of(self, date: str) -> Era:
        for era in self.eras:
            if era.start <= date < era.end:
                return era
        raise DateOutOfRange(date)


_DEFAULT_ERAS: EraTable | None = None


def default_era_table() -> EraTable:
    global _DEFAULT_ERAS
    if _DEFAULT_ERAS is None:
        _DEFAULT_ERAS = EraTable()
    return _DEFAULT_ERAS


def presidential_era_of(date: str, table: EraTable | None = None) -> str:
    """Era (president) name containing an ISO date."""
    return (table or default_era_table()).era_of(date).president


def _entity_key(text: str, label: str) -> str:
    return f"{' '.join(text.split()).lower()}|{label}"


def build_graph(volumes: Iterable[VolumeRecord],
                persons: list[UnifiedPerson],
                facts: dict[str, PersonFacts] | None = None,
                redactions: list[Redaction] | None = None,
                entities: list[NamedEntitySpan] | None = None,
                geo: dict[str, GeoResolution] | None = None,
                topics: list[dict] | None = None,
                era_table: EraTable | None = None) -> KGraph:
    """Fold every stage output into one KGraph.

    Raises DanglingReference when an annotated person id is missing from
    the unification mapping (inconsistent stage files). References the
    parser already flagged as unresolved are silently skipped.
    """
    facts = facts or {}
    redactions = redactions or []
    entities = entities or []
    geo = geo or {}
    era_table = era_table or default_era_table()

    kg = KGraph()

    uid_of: dict[tuple[str, str], str] = {}
    for person in persons:
        for member in person.member_ids:
            uid_of[member] = person.uid
        kg.add_node(
            "Person", person.uid,
            names=person.names, memberIds=[list(m) for m in person.member_ids],
            descriptions=[d["description"] for d in person.descriptions],
            qid=person.qid,
        )

    redactions_by_doc: dict[str, list[dict]] = {}
    for red in redactions:
        redactions_by_doc.setdefault(red.doc_id, []).append(red.to_json())

    entities_by_doc: dict[str, list[NamedEntitySpan]] = {}
    for ent in entities:
        entities_by_doc.setdefault(ent.doc_id, []).append(ent)

    for volume in volumes:
        annotated_ids = {(p.volume_id, p.local_id) for p in volume.persons}
        term_ids = {(t.volume_id, t.local_id) for t in volume.terms}
        terms_by_id = {t.local_id: t for t in volume.terms}

        for doc in volume.documents:
            doc_key = kg.add_node(
                "Document", doc.doc_id,
                docId=doc.doc_id, subtype=doc.subtype, date=doc.date,
                year=doc.year, volume=volume.volume_id, title=doc.title,
                senderInstitution=doc.sender_institution,
                receiverInstitution=doc.receiver_institution,
                redactions=redactions_by_doc.get(doc.doc_id) or None,
            )

            def person_edges(local_ids: list[str], rtype: str):
                seen: set[str] = set()
                for pid in local_ids:
                    member = (volume.volume_id, pid)
                    uid = uid_of.get(member)
                    if uid is None:
                        if member in annotated_ids:
                            raise DanglingReference(
                                f"{doc.doc_id}: annotated person {member} not in unification output")
                        continue  # unresolved at parse time, already warned
                    if (rtype, uid) in seen:
                        continue
                    seen.add((rtype, uid))
                    kg.add_relation(doc_key, f"Person:{uid}", rtype)

            person_edges(doc.mentioned_person_ids, "MENTIONED")
            person_edges(doc.sent_by_ids, "SENT_BY")
            person_edges(doc.sent_to_ids, "SENT_TO")

            for tid in dict.fromkeys(doc.term_ids):
                if (volume.volume_id, tid) not in term_ids:
                    continue
                term = terms_by_id[tid]
                term_key = kg.add_node("Term", f"{volume.volume_id}#{tid}",
                                       label_text=term.label, description=term.description)
                kg.add_relation(doc_key, term_key, "ABOUT_TERM")

            era_date = doc.date or (f"{doc.year:04d}-07-01" if doc.year else None)
            if era_date:
                try:
                    era = era_table.era_of(era_date)
                    era_key = kg.add_node("PresidentialEra", era.president,
                                          start=era.start, end=era.end)
                    kg.add_relation(doc_key, era_key, "IN_ERA")
                except DateOutOfRange:
                    pass

            if doc.source_archive:
                source_key = kg.add_node("Source", doc.source_archive)
                kg.add_relation(doc_key, source_key, "STORED_IN")

            if doc.city_raw:
                res = geo.get(normalize_city(doc.city_raw))
                if res is not None and res.country:
                    city_key = kg.add_node("City", res.normalized_city,
                                           name=res.city_raw)
                    kg.add_relation(doc_key, city_key, "SENT_FROM")
                    country_key = kg.add_node("Country", res.country,
                                              continent=res.continent)
                    kg.add_relation(city_key, country_key, "LOCATED_IN")

            for ent in entities_by_doc.get(doc.doc_id, []):
                ent_key = kg.add_node("NamedEntity", _entity_key(ent.text, ent.label),
                                      text=ent.text, entityType=ent.label)
                kg.add_relation(doc_key, ent_key, "HAS_ENTITY")

    # Wikidata fact expansion for linked persons
    for person in persons:
        if not person.qid or person.qid not in facts:
            continue
        pkey = f"Person:{person.uid}"
        pf = facts[person.qid]
        if pf.gender:
            kg.add_relation(pkey, kg.add_node("Gender", pf.gender), "HAS_GENDER")
        if pf.religion:
            kg.add_relation(pkey, kg.add_node("Religion", pf.religion), "HAS_RELIGION")
        for school in pf.schools:
            kg.add_relation(pkey, kg.add_node("School", school), "EDUCATED_AT")
        for occupation in pf.occupations:
            kg.add_relation(pkey, kg.add_node("Occupation", occupation), "HAS_OCCUPATION")
        for pos in pf.positions:
            kg.add_relation(pkey, kg.add_node("Role", pos["label"]), "HAS_ROLE",
                            start=pos.get("start"), end=pos.get("end"))
        for party in pf.parties:
            kg.add_relation(pkey, kg.add_node("Party", party["label"]), "MEMBER_OF_PARTY",
                            start=party.get("start"), end=party.get("end"))
        for country in pf.countries:
            kg.add_relation(pkey, kg.add_node("Country", country), "CITIZEN_OF")

    if topics:
        for row in topics:
            doc_key = f"Document:{row['docId']}"
            if doc_key not in kg.nodes:
                raise DanglingReference(f"topic assignment for unknown document {row['docId']}")
            topic_key = kg.add_node(
                "Topic", f"{row['model_id']}#{row['topic_id']}",
                model=row["model_id"], topicId=row["topic_id"],
                label_text=row.get("topic_label", ""),
            )
            kg.add_relation(doc_key, topic_key, "HAS_TOPIC")

    return kg
