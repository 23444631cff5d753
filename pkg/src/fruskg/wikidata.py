"""Wikidata linking: candidate retrieval, disambiguation, fact expansion.

All endpoint traffic goes through a disk cache keyed by query hash, so a
warm cache replays bit-identically offline and the test suite never talks
to the network.
"""

from __future__ import annotations

import hashlib
import json
import re
import time
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import numpy as np

from .errors import EndpointUnavailable, MalformedResponse, UnknownEntity
from .nlp_provider import Embedder
from .unify import UnifiedPerson

QID_RE = re.compile(r"^Q[0-9]+$")

DEFAULT_ENDPOINT = "https://query.wikidata.org/sparql"

# statement -> Wikidata property mapping (implementer table, shipped as code
# so the cache keys stay stable)
FACT_PROPERTIES = {
    "gender": "P21",
    "religion": "P140",
    "school": "P69",
    "occupation": "P106",
    "position": "P39",
    "citizenship": "P27",
    "party": "P102",
}


@dataclass
class WikidataCandidate:
    qid: str
    label: str
    header_text: str
    aliases: list[str] = field(default_factory=list)

    def __post_init__(self):
        if not QID_RE.match(self.qid):
            raise ValueError(f"bad qid {self.qid!r}")
        if not self.header_text:
            self.header_text = self.label


@dataclass
class PersonFacts:
    qid: str
    gender: Optional[str] = None
    religion: Optional[str] = None
    schools: list[str] = field(default_factory=list)
    occupations: list[str] = field(default_factory=list)
    positions: list[dict] = field(default_factory=list)  # {label, start, end}
    citizenships: list[str] = field(default_factory=list)
    parties: list[dict] = field(default_factory=list)
    countries: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return asdict(self)


@dataclass
class LinkDecision:
    uid: str
    qid: Optional[str]
    similarity: Optional[float]
    n_candidates: int
    method: str  # single-candidate | cosine-argmax | unlinked

    def to_json(self) -> dict:
        return asdict(self)


def build_candidate_query(names: list[str], limit: int = 20) -> str:
    """SPARQL text matching humans whose English label or alias equals any
    of the given names (case-insensitive)."""
    if not names:
        raise ValueError("names must be non-empty")
    lowered = sorted({n.strip().lower() for n in names if n.strip()})
    values = " ".join(json.dumps(n) + "@en" for n in lowered)
    return (
        "SELECT DISTINCT ?item ?itemLabel ?itemDescription WHERE {\n"
        "  VALUES ?target { " + values + " }\n"
        "  ?item wdt:P31 wd:Q5 .\n"
        "  { ?item rdfs:label ?name . } UNION { ?item skos:altLabel ?name . }\n"
        "  FILTER(LANG(?name) = \"en\" && LCASE(STR(?name)) = STR(?target))\n"
        "  SERVICE wikibase:label { bd:serviceParam wikibase:language \"en\". }\n"
        "}\n"
        f"LIMIT {limit}"
    )


def build_facts_query(qid: str) -> str:
    props = "|".join(f"p:{p}" for p in FACT_PROPERTIES.values())
    return (
        "SELECT ?prop ?valueLabel ?start ?end WHERE {\n"
        f"  wd:{qid} ?p ?statement .\n"
        "  ?statement ?ps ?value .\n"
        "  ?prop wikibase:claim ?p ; wikibase:statementProperty ?ps .\n"
        "  VALUES ?prop { "
        + " ".join(f"wd:{p}" for p in FACT_PROPERTIES.values())
        + " }\n"
        "  OPTIONAL { ?statement pq:P580 ?start . }\n"
        "  OPTIONAL { ?statement pq:P582 ?end . }\n"
        "  SERVICE wikibase:label { bd:serviceParam wikibase:language \"en\". }\n"
        "}"
    )


class WikidataClient:
    """SPARQL-over-HTTP client with a per-query JSON disk cache."""

    def __init__(self, cache_dir: str | Path, endpoint: str = DEFAULT_ENDPOINT,
                 offline: bool = False, timeout: float = 60.0,
                 requests_per_second: float = 5.0, max_retries: int = 3):
        self.endpoint = endpoint
        self.cache_dir = Path(cache_dir)
        self.cache_dir.mkdir(parents=True, exist_ok=True)
        self.offline = offline
        self.timeout = timeout
        self.min_interval = 1.0 / requests_per_second if requests_per_second > 0 else 0.0
        self.max_retries = max_retries
        self._last_request = 0.0

    def _cache_path(self, query: str) -> Path:
        digest = hashlib.sha256(query.encode("utf-8")).hexdigest()
        return self.cache_dir / f"{digest}.json"

    def sparql(self, query: str) -> dict:
        """Run a query, replaying from cache when available."""
        path = self._cache_path(query)
        if path.exists():
            return json.loads(path.read_text(encoding="utf-8"))
        if self.offline:
            raise EndpointUnavailable(f"offline and no cache for query hash {path.stem}")
        result = self._fetch(query)
        tmp = path.with_suffix(".tmp")
        tmp.write_text(json.dumps(result, sort_keys=True), encoding="utf-8")
        tmp.rename(path)
        return result

    def _fetch(self, query: str) -> dict:
        import requests

        delay = 1.0
        for attempt in range(self.max_retries):
            wait = self.min_interval - (time.monotonic() - self._last_request)
            if wait > 0:
                time.sleep(wait)
            self._last_request = time.monotonic()
            try:
                resp = requests.get(
                    self.endpoint,
                    params={"query": query, "format": "json"},
                    headers={"User-Agent": "fruskg/0.1 (corpus research pipeline)"},
                    timeout=self.timeout,
                )
                if resp.status_code == 429 or resp.status_code >= 500:
                    raise requests.RequestException(f"status {resp.status_code}")
                resp.raise_for_status()
                try:
                    return resp.json()
                except ValueError as exc:
                    raise MalformedResponse(str(exc)) from exc
            except requests.RequestException:
                if attempt == self.max_retries - 1:
                    break
                time.sleep(delay)
                delay *= 2
        raise EndpointUnavailable(self.endpoint)


def _bindings(result: dict) -> list[dict]:
    try:
        return result["results"]["bindings"]
    except (KeyError, TypeError) as exc:
        raise MalformedResponse("missing results.bindings") from exc


def _qid_of(binding_value: dict) -> str:
    return binding_value["value"].rsplit("/", 1)[-1]


def fetch_candidates(person: UnifiedPerson, client: WikidataClient,
                     limit: int = 20) -> list[WikidataCandidate]:
    query = build_candidate_query(person.names, limit=limit)
    result = client.sparql(query)
    by_qid: dict[str, WikidataCandidate] = {}
    for b in _bindings(result):
        qid = _qid_of(b["item"])
        if qid in by_qid:
            continue
        label = b.get("itemLabel", {}).get("value", qid)
        desc = b.get("itemDescription", {}).get("value", "")
        header = f"{label}. {desc}".strip() if desc else label
        by_qid[qid] = WikidataCandidate(qid=qid, label=label, header_text=header)
    return [by_qid[q] for q in sorted(by_qid)]


def _mean_embedding(embedder: Embedder, texts: list[str]) -> np.ndarray:
    vectors = np.asarray(embedder.embed(texts), dtype=float)
    return vectors.mean(axis=0)


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0 or nb == 0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def disambiguate(person: UnifiedPerson, candidates: list[WikidataCandidate],
                 embedder: Embedder, min_similarity: float | None = None) -> LinkDecision:
    """Pick the candidate whose header text is closest to the person's
    averaged description embedding; ties break to the smallest qid."""
    if not candidates:
        return LinkDecision(uid=person.uid, qid=None, similarity=None,
                            n_candidates=0, method="unlinked")
    if len(candidates) == 1:
        return LinkDecision(uid=person.uid, qid=candidates[0].qid, similarity=None,
                            n_candidates=1, method="single-candidate")

    descriptions = [d["description"] for d in person.descriptions if d["description"]]
    person_vec = _mean_embedding(embedder, descriptions or person.names)

    best: tuple[float, str] | None = None
    for cand in sorted(candidates, key=lambda c: c.qid):
        sim = _cosine(person_vec, np.asarray(embedder.embed([cand.header_text])[0]))
        if best is None or sim > best[0] + 1e-12:
            best = (sim, cand.qid)
    assert best is not None
    sim, qid = best
    if min_similarity is not None and sim < min_similarity:
        return LinkDecision(uid=person.uid, qid=None, similarity=None,
                            n_candidates=len(candidates), method="unlinked")
    return LinkDecision(uid=person.uid, qid=qid, similarity=sim,
                        n_candidates=len(candidates), method="cosine-argmax")


def fetch_person_facts(qid: str, client: WikidataClient) -> PersonFacts:
    if not QID_RE.match(qid or ""):
        raise UnknownEntity(f"malformed qid {qid!r}")
    result = client.sparql(build_facts_query(qid))
    facts = PersonFacts(qid=qid)
    prop_to_field = {v: k for k, v in FACT_PROPERTIES.items()}
    for b in _bindings(result):
        prop = _qid_of(b["prop"])
        kind = prop_to_field.get(prop)
        if kind is None:
            continue
        label = b.get("valueLabel", {}).get("value", "")
        if not label:
            continue
        start = b.get("start", {}).get("value")
        end = b.get("end", {}).get("value")
        start = start[:10] if start else None
        end = end[:10] if end else None
        if start and end and start > end:
            start, end = end, start
        if kind == "gender" and facts.gender is None:
            facts.gender = label
        elif kind == "religion" and facts.religion is None:
            facts.religion = label
        elif kind == "school":
            facts.schools.append(label)
        elif kind == "occupation":
            facts.occupations.append(label)
        elif kind == "position":
            facts.positions.append({"label": label, "start": start, "end": end})
        elif kind == "citizenship":
            facts.citizenships.append(label)
            facts.countries.append(label)
        elif kind == "party":
            facts.parties.append({"label": label, "start": start, "end": end})
    for attr in ("schools", "occupations", "citizenships", "countries"):
        setattr(facts, attr, sorted(set(getattr(facts, attr))))
    facts.positions.sort(key=lambda p: (p["label"], p["start"] or "", p["end"] or ""))
    facts.parties.sort(key=lambda p: (p["label"], p["start"] or "", p["end"] or ""))
    return facts


def merge_by_qid(pairs: list[tuple[UnifiedPerson, LinkDecision]]) -> list[UnifiedPerson]:
    """Merge persons linked to the same Wikidata entry; attach qids."""
    from .unify import _content_uid

    by_qid: dict[str, list[UnifiedPerson]] = {}
    passthrough: list[UnifiedPerson] = []
    for person, decision in pairs:
        if decision.qid:
            by_qid.setdefault(decision.qid, []).append(person)
        else:
            passthrough.append(person)

    merged: list[UnifiedPerson] = []
    for qid in sorted(by_qid):
        group = by_qid[qid]
        if len(group) == 1:
            person = group[0]
            person.qid = qid
            merged.append(person)
            continue
        names: list[str] = []
        seen: set[str] = set()
        member_ids: list[tuple[str, str]] = []
        descriptions: list[dict] = []
        trace: list[dict] = []
        for person in group:
            for name in person.names:
                if name not in seen:
                    seen.add(name)
                    names.append(name)
            member_ids.extend(person.member_ids)
            descriptions.extend(person.descriptions)
            trace.extend(person.merge_trace)
        trace.append({"step": "wiki", "pair": [qid, ";".join(p.uid for p in group)]})
        merged.append(UnifiedPerson(
            uid=_content_uid(member_ids), names=names, member_ids=member_ids,
            descriptions=descriptions, merge_trace=trace, qid=qid,
        ))
    return merged + passthrough


def linkage_rate_curve(persons: list[UnifiedPerson],
                       decisions: dict[str, LinkDecision],
                       mention_counts: dict[str, int],
                       n_buckets: int = 20) -> list[dict]:
    """Linked ratio per mention-rank bucket, top mentions first."""
    ranked = sorted(persons, key=lambda p: (-mention_counts.get(p.uid, 0), p.uid))
    if not ranked:
        return []
    size = max(1, (len(ranked) + n_buckets - 1) // n_buckets)
    rows = []
    for b in range(0, len(ranked), size):
        chunk = ranked[b:b + size]
        linked = sum(
            1 for p in chunk
            if p.qid or (p.uid in decisions and decisions[p.uid].qid)
        )
        rows.append({
            "bucket": b // size,
            "persons": len(chunk),
            "linked_ratio": linked / len(chunk),
        })
    return rows
