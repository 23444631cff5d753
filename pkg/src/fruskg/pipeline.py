"""Staged pipeline with content-hash freshness and per-stage manifests.

Stage order: ingest -> unify -> wikify -> enrich -> geo -> assemble ->
analytics. A stage is skipped when its input and config hashes match the
previous run's manifest; outputs are written to a temp directory and
renamed into place, so a killed stage never corrupts earlier results.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import random
import shutil
import time
from dataclasses import dataclass, field
from pathlib import Path

from . import analytics, plots
from .assemble import build_graph, default_era_table
from .config import PipelineConfig
from .enrich import NamedEntitySpan, Redaction, annotate_entities, extract_redactions
from .errors import StageFailed, StageIncomplete
from .geo import GeoDatabase, GeoResolution, apply_overrides, load_overrides, match_city, unresolved_template
from .kgraph import export_csv, export_textstore, validate_schema
from .nlp_provider import GazetteerNer, HashEmbedder, SidecarEmbedder, SidecarNer
from .tei_ingest import VolumeRecord, scan_corpus
from .unify import UnificationConfig, UnifiedPerson, unify
from .wikidata import (LinkDecision, PersonFacts, WikidataClient, disambiguate,
                       fetch_candidates, fetch_person_facts, linkage_rate_curve,
                       merge_by_qid)

STAGES = ["ingest", "unify", "wikify", "enrich", "geo", "assemble", "analytics"]


def write_jsonl(path: Path, records) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, ensure_ascii=False, sort_keys=True) + "\n")
    tmp.rename(path)


def read_jsonl(path: Path) -> list[dict]:
    with open(path, encoding="utf-8") as f:
        return [json.loads(line) for line in f if line.strip()]


def _hash_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _hash_paths(paths: list[Path]) -> str:
    h = hashlib.sha256()
    for path in sorted(paths):
        h.update(path.name.encode())
        h.update(_hash_file(path).encode())
    return h.hexdigest()


@dataclass
class StageResult:
    name: str
    skipped: bool
    wall_time: float
    outputs: dict[str, str]  # file -> hash
    counts: dict = field(default_factory=dict)


class Pipeline:
    def __init__(self, config: PipelineConfig):
        self.config = config
        self.out = Path(config.output_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest_path = self.out / "pipeline_manifest.json"
        self.manifest = {}
        if self.manifest_path.exists():
            self.manifest = json.loads(self.manifest_path.read_text(encoding="utf-8"))

    # ---- providers -------------------------------------------------

    def embedder(self):
        if self.config.use_test_double or not self.config.sidecar_url:
            return HashEmbedder(self.config.embed_dimension)
        return SidecarEmbedder(self.config.sidecar_url)

    def ner_provider(self):
        if self.config.use_test_double or not self.config.sidecar_url:
            return GazetteerNer()
        return SidecarNer(self.config.sidecar_url)

    def wikidata_client(self) -> WikidataClient:
        return WikidataClient(
            cache_dir=self.config.cache_dir,
            endpoint=self.config.wikidata_endpoint,
            offline=self.config.wikidata_offline,
            requests_per_second=self.config.requests_per_second,
        )

    # ---- freshness -------------------------------------------------

    def _config_hash(self, stage: str) -> str:
        payload = json.dumps(self.config.as_dict(), sort_keys=True) + stage
        return hashlib.sha256(payload.encode()).hexdigest()

    def _stage_inputs(self, stage: str) -> list[Path]:
        if stage == "ingest":
            return sorted(Path(self.config.corpus_dir).glob("*.xml"))
        deps = {
            "unify": ["volumes.jsonl"],
            "wikify": ["persons_unified.jsonl"],
            "enrich": ["volumes.jsonl"],
            "geo": ["volumes.jsonl"],
            "assemble": ["volumes.jsonl", "persons_linked.jsonl", "person_facts.jsonl",
                         "redactions.jsonl", "entities.jsonl", "geo_resolutions.jsonl"],
            "analytics": ["kg/manifest.json"],
        }[stage]
        return [self.out / d for d in deps if (self.out / d).exists()]

    def _is_fresh(self, stage: str) -> bool:
        entry = self.manifest.get(stage)
        if not entry:
            return False
        inputs = self._stage_inputs(stage)
        if not inputs and stage != "ingest":
            return False
        if entry.get("input_hash") != _hash_paths(inputs):
            return False
        if entry.get("config_hash") != self._config_hash(stage):
            return False
        return all((self.out / f).exists() for f in entry.get("outputs", {}))

    def _record(self, stage: str, outputs: list[Path], wall: float, counts: dict):
        self.manifest[stage] = {
            "input_hash": _hash_paths(self._stage_inputs(stage)),
            "config_hash": self._config_hash(stage),
            "wall_time": wall,
            "outputs": {str(p.relative_to(self.out)): _hash_file(p) for p in outputs},
            "counts": counts,
        }
        tmp = self.manifest_path.with_suffix(".tmp")
        tmp.write_text(json.dumps(self.manifest, indent=2, sort_keys=True), encoding="utf-8")
        tmp.rename(self.manifest_path)

    # ---- stages ----------------------------------------------------

    def run(self, stages: list[str] | None = None,
            force: list[str] | None = None) -> list[StageResult]:
        selected = stages or STAGES
        force = set(force or [])
        # forcing a stage invalidates everything downstream of it
        if force:
            first_forced = min(STAGES.index(s) for s in force)
            force.update(STAGES[first_forced:])

        lock = self.out / ".lock"
        if lock.exists():
            raise StageFailed("lock", RuntimeError(f"output dir locked by {lock.read_text()}"))
        lock.write_text(str(os.getpid()))
        results = []
        try:
            for stage in STAGES:
                if stage not in selected and stage not in force:
                    continue
                if stage not in force and self._is_fresh(stage):
                    results.append(StageResult(stage, True, 0.0,
                                               self.manifest[stage]["outputs"],
                                               self.manifest[stage].get("counts", {})))
                    continue
                start = time.monotonic()
                try:
                    outputs, counts = getattr(self, f"_stage_{stage}")()
                except Exception as exc:
                    raise StageFailed(stage, exc) from exc
                wall = time.monotonic() - start
                self._record(stage, outputs, wall, counts)
                results.append(StageResult(stage, False, wall,
                                           self.manifest[stage]["outputs"], counts))
        finally:
            lock.unlink(missing_ok=True)
        return results

    def _stage_ingest(self):
        volumes_iter, report = scan_corpus(self.config.corpus_dir)
        path = self.out / "volumes.jsonl"
        write_jsonl(path, (v.to_json() for v in volumes_iter))
        report_path = self.out / "corpus_report.json"
        report_path.write_text(json.dumps({
            "volumes": report.volumes, "documents": report.documents,
            "annotated_volumes": report.annotated_volumes,
            "warnings": report.warnings, "failed_files": report.failed_files,
        }, indent=2), encoding="utf-8")
        return [path, report_path], {"volumes": report.volumes, "documents": report.documents,
                                     "annotated_volumes": report.annotated_volumes}

    def _load_volumes(self) -> list[VolumeRecord]:
        path = self.out / "volumes.jsonl"
        if not path.exists():
            raise StageIncomplete("ingest has not run")
        return [VolumeRecord.from_json(d) for d in read_jsonl(path)]

    def _stage_unify(self):
        volumes = self._load_volumes()
        annotations = [p for v in volumes for p in v.persons]
        config = UnificationConfig(
            dl_max_step3=self.config.dl_max_step3,
            jaro_min_step3=self.config.jaro_min_step3,
            min_common_words_step3=self.config.min_common_words_step3,
            dl_max_step4=self.config.dl_max_step4,
        )
        counts = {"input_names": len(annotations)}
        persons_path = self.out / "persons_unified.jsonl"
        audit_path = self.out / "merge_audit.jsonl"
        if annotations:
            persons, audit = unify(annotations, config)
            write_jsonl(persons_path, (p.to_json() for p in persons))
            write_jsonl(audit_path, audit.decisions)
            counts.update({
                "clusters_after_step2": audit.cluster_counts.get(2),
                "clusters_after_step4": audit.cluster_counts.get(4),
                "final_clusters": len(persons),
            })
        else:
            write_jsonl(persons_path, [])
            write_jsonl(audit_path, [])
            counts["final_clusters"] = 0
        return [persons_path, audit_path], counts

    def _load_persons(self, name="persons_unified.jsonl") -> list[UnifiedPerson]:
        path = self.out / name
        if not path.exists():
            raise StageIncomplete(f"{name} missing")
        return [UnifiedPerson.from_json(d) for d in read_jsonl(path)]

    def _stage_wikify(self):
        persons = self._load_persons()
        client = self.wikidata_client()
        embedder = self.embedder()
        decisions: list[LinkDecision] = []
        facts: dict[str, PersonFacts] = {}
        deferred = 0
        for person in persons:
            try:
                candidates = fetch_candidates(person, client, limit=self.config.candidate_limit)
                decision = disambiguate(person, candidates, embedder)
            except Exception:
                deferred += 1
                decision = LinkDecision(uid=person.uid, qid=None, similarity=None,
                                        n_candidates=0, method="unlinked")
            decisions.append(decision)
            if decision.qid and decision.qid not in facts:
                try:
                    facts[decision.qid] = fetch_person_facts(decision.qid, client)
                except Exception:
                    facts[decision.qid] = PersonFacts(qid=decision.qid)
        merged = merge_by_qid(list(zip(persons, decisions)))

        dec_path = self.out / "link_decisions.jsonl"
        write_jsonl(dec_path, (d.to_json() for d in decisions))
        facts_path = self.out / "person_facts.jsonl"
        write_jsonl(facts_path, (facts[q].to_json() for q in sorted(facts)))
        linked_path = self.out / "persons_linked.jsonl"
        write_jsonl(linked_path, (p.to_json() for p in merged))

        review_path = self.out / "low_confidence_links.csv"
        with open(review_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["uid", "qid", "similarity"])
            for d in decisions:
                if d.method == "cosine-argmax" and d.similarity is not None \
                        and d.similarity < self.config.low_confidence_threshold:
                    writer.writerow([d.uid, d.qid, f"{d.similarity:.4f}"])
        counts = {"persons_in": len(persons), "persons_out": len(merged),
                  "linked": sum(1 for d in decisions if d.qid), "deferred": deferred}
        return [dec_path, facts_path, linked_path, review_path], counts

    def _stage_enrich(self):
        volumes = self._load_volumes()
        provider = self.ner_provider()
        redactions: list[Redaction] = []
        entities: list[NamedEntitySpan] = []
        for volume in volumes:
            for doc in volume.documents:
                redactions.extend(extract_redactions(
                    doc.doc_id, doc.transcript, doc.italic_bracket_spans))
                try:
                    entities.extend(annotate_entities(doc, provider))
                except Exception:
                    continue  # provider unavailable: document deferred
        red_path = self.out / "redactions.jsonl"
        write_jsonl(red_path, (r.to_json() for r in redactions))
        ent_path = self.out / "entities.jsonl"
        write_jsonl(ent_path, (e.to_json() for e in entities))
        return [red_path, ent_path], {"redactions": len(redactions), "entities": len(entities)}

    def _stage_geo(self):
        volumes = self._load_volumes()
        db = GeoDatabase(self.config.city_db_path)
        cities = sorted({doc.city_raw for v in volumes for doc in v.documents if doc.city_raw})
        resolutions = [match_city(c, db) for c in cities]
        if self.config.overrides_path and Path(self.config.overrides_path).exists():
            resolutions = apply_overrides(resolutions, load_overrides(self.config.overrides_path), db)
        res_path = self.out / "geo_resolutions.jsonl"
        write_jsonl(res_path, (r.to_json() for r in resolutions))
        template_path = self.out / "geo_overrides_template.csv"
        template_path.write_text(unresolved_template(resolutions), encoding="utf-8")
        counts = {}
        for res in resolutions:
            counts[res.status] = counts.get(res.status, 0) + 1
        return [res_path, template_path], counts

    def _stage_assemble(self):
        volumes = self._load_volumes()
        persons = self._load_persons("persons_linked.jsonl")
        facts = {d["qid"]: PersonFacts(**d) for d in read_jsonl(self.out / "person_facts.jsonl")}
        redactions = [
            Redaction(doc_id=d["doc_id"], span=tuple(d["span"]), raw_text=d["raw_text"],
                      rtype=d["rtype"], quantity=d.get("quantity"), qualifier=d.get("qualifier"))
            for d in read_jsonl(self.out / "redactions.jsonl")
        ]
        entities = [
            NamedEntitySpan(doc_id=d["doc_id"], span=tuple(d["span"]), text=d["text"],
                            label=d["label"], provider_id=d["provider_id"])
            for d in read_jsonl(self.out / "entities.jsonl")
        ]
        geo = {}
        for d in read_jsonl(self.out / "geo_resolutions.jsonl"):
            geo[d["normalized_city"]] = GeoResolution(**d)

        topics = None
        topics_path = self.out / "topics.csv"
        if topics_path.exists():
            with open(topics_path, newline="", encoding="utf-8") as f:
                topics = list(csv.DictReader(f))

        kg = build_graph(volumes, persons, facts=facts, redactions=redactions,
                         entities=entities, geo=geo, topics=topics)
        report = validate_schema(kg)
        if not report.ok:
            raise StageFailed("assemble", RuntimeError(
                f"{len(report.violations)} schema violations; first: {report.violations[0]}"))

        kg_dir = self.out / "kg"
        if kg_dir.exists():
            shutil.rmtree(kg_dir)
        export_csv(kg, kg_dir)
        text_path = self.out / "textstore.csv"
        export_textstore(
            [(doc.doc_id, doc.transcript) for v in volumes for doc in v.documents],
            text_path,
        )
        outputs = sorted(kg_dir.glob("*")) + [text_path, text_path.with_suffix(".sql")]
        return outputs, {"nodes": len(kg.nodes), "relations": len(kg.relations),
                         "relation_types": len(kg.relation_types())}

    def load_graph(self):
        from .kgraph import import_csv

        kg_dir = self.out / "kg"
        if not (kg_dir / "manifest.json").exists():
            raise StageIncomplete("assemble has not run")
        return import_csv(kg_dir)

    def _stage_analytics(self):
        kg = self.load_graph()
        reports = self.out / "reports"
        reports.mkdir(exist_ok=True)
        outputs = []

        timeline = analytics.timeline_by_continent(kg, bin_width=self.config.bin_width)
        tl_csv = reports / "timeline_by_continent.csv"
        with open(tl_csv, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["bin", "series", "value"])
            for row in timeline:
                writer.writerow([row["bin"], row["continent"], f"{row['share']:.9f}"])
        outputs.append(tl_csv)
        if timeline:
            outputs.append(plots.plot_timeline(timeline, reports / "timeline_by_continent.png",
                                               self.config.bin_width))

        try:
            roles = analytics.role_projection(kg)
            if roles.n:
                table = analytics.pagerank(roles, damping=self.config.damping)
                pr_csv = reports / "pagerank_roles.csv"
                with open(pr_csv, "w", newline="", encoding="utf-8") as f:
                    writer = csv.writer(f)
                    writer.writerow(["role", "score"])
                    for _key, label, score in table.rows:
                        writer.writerow([label, f"{score:.6f}"])
                outputs.append(pr_csv)
                outputs.append(plots.plot_score_table(table.rows, reports / "pagerank_roles.png"))
        except Exception:
            pass

        try:
            graph = analytics.project_cooccurrence(
                kg, min_occurrence=self.config.min_occurrence,
                window=(self.config.window_start, self.config.window_end))
            if graph.n:
                emb = analytics.embed_graph(graph, dimension=self.config.dimension,
                                            seed=self.config.seed,
                                            window=(self.config.window_start, self.config.window_end))
                emb_csv = reports / "embeddings.csv"
                with open(emb_csv, "w", newline="", encoding="utf-8") as f:
                    writer = csv.writer(f)
                    writer.writerow(["entity"] + [f"v{i+1}" for i in range(emb.dimension)])
                    for key in sorted(emb.vectors):
                        writer.writerow([key] + [f"{x:.8f}" for x in emb.vectors[key]])
                outputs.append(emb_csv)
                walks = analytics.generate_walks(graph, seed=self.config.seed,
                                                 walk_length=20, walks_per_node=2)
                walks_path = reports / "walks.txt"
                walks_path.write_text(
                    "\n".join(" ".join(w) for w in walks) + "\n", encoding="utf-8")
                outputs.append(walks_path)
        except Exception:
            pass

        return outputs, {"timeline_rows": len(timeline)}

    # ---- reporting commands ---------------------------------------

    def stats(self) -> dict:
        out = {"volumes": 0, "documents": 0, "annotated_volumes": 0,
               "input_names": 0, "clusters_after_step2": 0,
               "clusters_after_step4": 0, "persons": 0,
               "node_counts": {}, "relation_counts": {}, "linked_ratio": None}
        report_path = self.out / "corpus_report.json"
        if not report_path.exists():
            raise StageIncomplete("ingest has not run")
        report = json.loads(report_path.read_text(encoding="utf-8"))
        out.update({k: report.get(k, 0) for k in ("volumes", "documents", "annotated_volumes")})
        unify_entry = self.manifest.get("unify", {}).get("counts", {})
        out["input_names"] = unify_entry.get("input_names", 0)
        out["clusters_after_step2"] = unify_entry.get("clusters_after_step2")
        out["clusters_after_step4"] = unify_entry.get("clusters_after_step4")
        wik = self.manifest.get("wikify", {}).get("counts", {})
        out["persons"] = wik.get("persons_out", unify_entry.get("final_clusters", 0))
        kg_manifest = self.out / "kg" / "manifest.json"
        if kg_manifest.exists():
            m = json.loads(kg_manifest.read_text(encoding="utf-8"))
            for name, info in m["files"].items():
                if name.startswith("nodes_"):
                    out["node_counts"][name[6:-4]] = info["rows"]
                elif name.startswith("rels_"):
                    out["relation_counts"][name[5:-4]] = info["rows"]
            kg = self.load_graph()
            mention_rels = kg.relations_of_type("MENTIONED")
            if mention_rels:
                linked = sum(
                    1 for r in mention_rels if kg.nodes[r.dst][1].get("qid"))
                out["linked_ratio"] = linked / len(mention_rels)
        return out

    def sample_for_review(self, kind: str, n: int, seed: int) -> list[dict]:
        if kind == "merges":
            path = self.out / "merge_audit.jsonl"
            if not path.exists():
                raise StageIncomplete("unify has not run")
            population = [d for d in read_jsonl(path) if d["step"] in (3, 4)]
        elif kind == "links":
            path = self.out / "link_decisions.jsonl"
            if not path.exists():
                raise StageIncomplete("wikify has not run")
            population = [d for d in read_jsonl(path) if d.get("qid")]
        else:
            raise ValueError(f"unknown sample kind {kind}")
        rng = random.Random(seed)
        if n >= len(population):
            return population
        return rng.sample(population, n)
