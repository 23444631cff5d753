"""Typed property graph: schema, validation, bulk-import CSV export.

Node keys are "Label:natural-id". The relation-type inventory is fixed at
16 (plus HAS_TOPIC, used only when an external topic file is imported).
"""

from __future__ import annotations

import csv
import hashlib
import json
import re
from dataclasses import dataclass, field
from pathlib import Path

from .errors import DanglingReference, DuplicateDocId, IoFailure

NODE_LABELS = {
    "Document", "PresidentialEra", "Source", "City", "Country", "Term",
    "Person", "NamedEntity", "Role", "Occupation", "Gender", "Religion",
    "School", "Party", "Citizenship", "Topic",
}

# relation type -> (source label, destination labels)
RELATION_SCHEMA = {
    "MENTIONED": ("Document", {"Person"}),
    "SENT_BY": ("Document", {"Person"}),
    "SENT_TO": ("Document", {"Person"}),
    "IN_ERA": ("Document", {"PresidentialEra"}),
    "STORED_IN": ("Document", {"Source"}),
    "SENT_FROM": ("Document", {"City"}),
    "ABOUT_TERM": ("Document", {"Term"}),
    "HAS_ENTITY": ("Document", {"NamedEntity"}),
    "LOCATED_IN": ("City", {"Country"}),
    "HAS_ROLE": ("Person", {"Role"}),
    "HAS_OCCUPATION": ("Person", {"Occupation"}),
    "HAS_GENDER": ("Person", {"Gender"}),
    "HAS_RELIGION": ("Person", {"Religion"}),
    "EDUCATED_AT": ("Person", {"School"}),
    "MEMBER_OF_PARTY": ("Person", {"Party"}),
    "CITIZEN_OF": ("Person", {"Country", "Citizenship"}),
    # extension type, present only when topic assignments are imported
    "HAS_TOPIC": ("Document", {"Topic"}),
}

CORE_RELATION_TYPES = [t for t in RELATION_SCHEMA if t != "HAS_TOPIC"]


@dataclass
class Relation:
    src: str
    dst: str
    rtype: str
    attributes: dict = field(default_factory=dict)


@dataclass
class KGraph:
    nodes: dict[str, tuple[str, dict]] = field(default_factory=dict)  # key -> (label, attrs)
    relations: list[Relation] = field(default_factory=list)

    def add_node(self, label: str, natural_id: str, **attrs) -> str:
        key = f"{label}:{natural_id}"
        if key in self.nodes:
            existing_label, existing = self.nodes[key]
            existing.update({k: v for k, v in attrs.items() if v is not None})
        else:
            self.nodes[key] = (label, {k: v for k, v in attrs.items() if v is not None})
        return key

    def add_relation(self, src: str, dst: str, rtype: str, **attrs):
        self.relations.append(Relation(src, dst, rtype, {k: v for k, v in attrs.items() if v is not None}))

    def nodes_with_label(self, label: str) -> list[str]:
        return [k for k, (lbl, _) in self.nodes.items() if lbl == label]

    def relations_of_type(self, rtype: str) -> list[Relation]:
        return [r for r in self.relations if r.rtype == rtype]

    def relation_types(self) -> set[str]:
        return {r.rtype for r in self.relations}


@dataclass
class ValidationReport:
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def validate_schema(kg: KGraph) -> ValidationReport:
    report = ValidationReport()
    for key, (label, _attrs) in kg.nodes.items():
        if label not in NODE_LABELS:
            report.violations.append(f"node {key}: unknown label {label}")
        if not key.startswith(label + ":"):
            report.violations.append(f"node {key}: key does not match label {label}")
    for rel in kg.relations:
        schema = RELATION_SCHEMA.get(rel.rtype)
        if schema is None:
            report.violations.append(f"relation {rel.rtype}: unknown type")
            continue
        src_node = kg.nodes.get(rel.src)
        dst_node = kg.nodes.get(rel.dst)
        if src_node is None:
            report.violations.append(f"{rel.rtype} {rel.src}->{rel.dst}: missing source")
            continue
        if dst_node is None:
            report.violations.append(f"{rel.rtype} {rel.src}->{rel.dst}: missing destination")
            continue
        want_src, want_dst = schema
        if src_node[0] != want_src or dst_node[0] not in want_dst:
            report.violations.append(
                f"{rel.rtype} {rel.src}->{rel.dst}: incompatible endpoint labels "
                f"{src_node[0]}->{dst_node[0]}"
            )
        start = rel.attributes.get("start")
        end = rel.attributes.get("end")
        if start and end and start > end:
            report.violations.append(
                f"{rel.rtype} {rel.src}->{rel.dst}: start {start} after end {end}"
            )
    for key in kg.nodes_with_label("Document"):
        attrs = kg.nodes[key][1]
        for required in ("docId", "subtype", "volume"):
            if required not in attrs:
                report.violations.append(f"node {key}: missing attribute {required}")
    return report


def _encode(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (list, dict)):
        return json.dumps(value, ensure_ascii=False, sort_keys=True)
    return str(value)


_JSON_SCALAR = re.compile(r"^(?:-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?|true|false)$")


def _decode(value: str):
    if value == "":
        return None
    if value[0] in "[{" or _JSON_SCALAR.match(value):
        try:
            return json.loads(value)
        except json.JSONDecodeError:
            pass
    return value


def export_csv(kg: KGraph, out_dir: str | Path) -> dict:
    """Write one nodes CSV per label and one relations CSV per type.

    Rows are sorted so repeated exports are byte-identical; the manifest
    records per-file row counts and sha256 hashes.
    """
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(str(exc)) from exc

    manifest = {"files": {}}

    by_label: dict[str, list[str]] = {}
    for key, (label, _a) in kg.nodes.items():
        by_label.setdefault(label, []).append(key)
    for label in sorted(by_label):
        keys = sorted(by_label[label])
        attr_names = sorted({a for k in keys for a in kg.nodes[k][1]})
        path = out_dir / f"nodes_{label}.csv"
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["id", "label"] + attr_names)
            for key in keys:
                attrs = kg.nodes[key][1]
                writer.writerow([key, label] + [_encode(attrs.get(a)) for a in attr_names])
        manifest["files"][path.name] = {"rows": len(keys), "sha256": _file_hash(path)}

    by_type: dict[str, list[Relation]] = {}
    for rel in kg.relations:
        by_type.setdefault(rel.rtype, []).append(rel)
    for rtype in sorted(by_type):
        rels = sorted(by_type[rtype], key=lambda r: (r.src, r.dst, json.dumps(r.attributes, sort_keys=True)))
        attr_names = sorted({a for r in rels for a in r.attributes})
        path = out_dir / f"rels_{rtype}.csv"
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["start_id", "end_id", "type"] + attr_names)
            for rel in rels:
                writer.writerow([rel.src, rel.dst, rtype]
                                + [_encode(rel.attributes.get(a)) for a in attr_names])
        manifest["files"][path.name] = {"rows": len(rels), "sha256": _file_hash(path)}

    manifest["nodes"] = len(kg.nodes)
    manifest["relations"] = len(kg.relations)
    with open(out_dir / "manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
    return manifest


def import_csv(in_dir: str | Path) -> KGraph:
    """Rebuild a KGraph from a bulk-import directory (round-trip check)."""
    in_dir = Path(in_dir)
    kg = KGraph()
    for path in sorted(in_dir.glob("nodes_*.csv")):
        with open(path, newline="", encoding="utf-8") as f:
            for row in csv.DictReader(f):
                key = row.pop("id")
                label = row.pop("label")
                attrs = {k: _decode(v) for k, v in row.items() if v != ""}
                kg.nodes[key] = (label, attrs)
    for path in sorted(in_dir.glob("rels_*.csv")):
        with open(path, newline="", encoding="utf-8") as f:
            for row in csv.DictReader(f):
                src = row.pop("start_id")
                dst = row.pop("end_id")
                rtype = row.pop("type")
                attrs = {k: _decode(v) for k, v in row.items() if v != ""}
                kg.relations.append(Relation(src, dst, rtype, attrs))
    return kg


def canonical_hash(kg: KGraph) -> str:
    """Hash of a canonical serialization; equal iff graphs are isomorphic
    under identical node keys."""
    payload = {
        "nodes": sorted(
            (key, label, json.dumps(attrs, sort_keys=True, ensure_ascii=False))
            for key, (label, attrs) in kg.nodes.items()
        ),
        "relations": sorted(
            (r.src, r.dst, r.rtype, json.dumps(r.attributes, sort_keys=True, ensure_ascii=False))
            for r in kg.relations
        ),
    }
    blob = json.dumps(payload, sort_keys=True, ensure_ascii=False).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()


def export_textstore(documents: list[tuple[str, str]], out_path: str | Path) -> Path:
    """Single-table (docId, transcript) export: CSV plus a SQL load script."""
    out_path = Path(out_path)
    seen: set[str] = set()
    for doc_id, _ in documents:
        if doc_id in seen:
            raise DuplicateDocId(doc_id)
        seen.add(doc_id)
    with open(out_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(["docId", "transcript"])
        for doc_id, transcript in sorted(documents):
            writer.writerow([doc_id, transcript])
    script = out_path.with_suffix(".sql")
    script.write_text(
        "CREATE TABLE IF NOT EXISTS document_text (\n"
        "  docId TEXT PRIMARY KEY,\n"
        "  transcript TEXT NOT NULL\n"
        ");\n"
        f".mode csv\n.import --skip 1 {out_path.name} document_text\n",
        encoding="utf-8",
    )
    return out_path


def _file_hash(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()
