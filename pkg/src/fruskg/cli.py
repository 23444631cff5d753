"""Command-line entry point: run the pipeline, report stats, sample for
human review, export plot data and figures."""

from __future__ import annotations

import csv
import sys
from pathlib import Path

import click

from . import analytics, plots
from .config import load_config
from .errors import FrusKgError
from .pipeline import STAGES, Pipeline
from .wikidata import LinkDecision, linkage_rate_curve


def _pipeline(config_path: str) -> Pipeline:
    return Pipeline(load_config(config_path))


@click.group()
def main():
    """FRUS corpus to knowledge graph pipeline."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--stages", default=None, help="comma-separated stage subset")
@click.option("--force", default=None, help="comma-separated stages to force re-run")
def run(config_path, stages, force):
    """Run the pipeline stages in dependency order."""
    pipeline = _pipeline(config_path)
    selected = stages.split(",") if stages else None
    forced = force.split(",") if force else None
    for name in (selected or []) + (forced or []):
        if name not in STAGES:
            raise click.BadParameter(f"unknown stage {name!r}; stages: {', '.join(STAGES)}")
    try:
        results = pipeline.run(selected, forced)
    except FrusKgError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    for res in results:
        state = "skipped (fresh)" if res.skipped else f"ran in {res.wall_time:.1f}s"
        click.echo(f"{res.name:10s} {state}  {res.counts}")


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--csv", "csv_path", default=None, type=click.Path(), help="also write CSV")
def stats(config_path, csv_path):
    """Corpus, unification, and graph statistics."""
    pipeline = _pipeline(config_path)
    try:
        report = pipeline.stats()
    except FrusKgError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"volumes:            {report['volumes']}")
    click.echo(f"documents:          {report['documents']}")
    click.echo(f"annotated volumes:  {report['annotated_volumes']}")
    click.echo(f"input names:        {report['input_names']}")
    click.echo(f"clusters (step 2):  {report['clusters_after_step2']}")
    click.echo(f"clusters (step 4):  {report['clusters_after_step4']}")
    click.echo(f"persons:            {report['persons']}")
    if report["linked_ratio"] is not None:
        click.echo(f"mention linkage:    {report['linked_ratio']:.3f}")
    for label, count in sorted(report["node_counts"].items()):
        click.echo(f"  nodes {label:16s} {count}")
    for rtype, count in sorted(report["relation_counts"].items()):
        click.echo(f"  rels  {rtype:16s} {count}")
    if csv_path:
        with open(csv_path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(["metric", "value"])
            for key in ("volumes", "documents", "annotated_volumes", "input_names",
                        "clusters_after_step2", "clusters_after_step4", "persons",
                        "linked_ratio"):
                writer.writerow([key, report[key]])
            for label, count in sorted(report["node_counts"].items()):
                writer.writerow([f"nodes_{label}", count])
            for rtype, count in sorted(report["relation_counts"].items()):
                writer.writerow([f"rels_{rtype}", count])


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--kind", type=click.Choice(["merges", "links"]), required=True)
@click.option("-n", "count", type=int, required=True)
@click.option("--seed", type=int, default=42)
@click.option("--out", "out_path", default="review_sample.csv", type=click.Path())
def sample(config_path, kind, count, seed, out_path):
    """Seeded random sample of merges or link decisions for human review."""
    pipeline = _pipeline(config_path)
    try:
        rows = pipeline.sample_for_review(kind, count, seed)
    except FrusKgError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    if count > len(rows):
        click.echo(f"warning: population has only {len(rows)} rows", err=True)
    fields = sorted({k for r in rows for k in r}) or ["empty"]
    with open(out_path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=fields + ["verdict"])
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    click.echo(f"wrote {len(rows)} rows to {out_path}")


@main.command("export-plots")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.argument("figure", type=click.Choice(["timeline", "linkage-rate", "role-importance"]))
def export_plots(config_path, figure):
    """Render one report figure (PNG) with its plot-ready CSV."""
    pipeline = _pipeline(config_path)
    reports = Path(pipeline.config.output_dir) / "reports"
    reports.mkdir(exist_ok=True)
    try:
        kg = pipeline.load_graph()
        if figure == "timeline":
            rows = analytics.timeline_by_continent(kg, bin_width=pipeline.config.bin_width)
            csv_path = reports / "timeline_by_continent.csv"
            with open(csv_path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f)
                writer.writerow(["bin", "series", "value"])
                for row in rows:
                    writer.writerow([row["bin"], row["continent"], f"{row['share']:.9f}"])
            png = plots.plot_timeline(rows, reports / "timeline_by_continent.png",
                                      pipeline.config.bin_width)
        elif figure == "role-importance":
            table = analytics.pagerank(analytics.role_projection(kg),
                                       damping=pipeline.config.damping)
            csv_path = reports / "pagerank_roles.csv"
            with open(csv_path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f)
                writer.writerow(["role", "score"])
                for _key, label, score in table.rows:
                    writer.writerow([label, f"{score:.6f}"])
            png = plots.plot_score_table(table.rows, reports / "pagerank_roles.png")
        else:
            from .pipeline import read_jsonl
            from .unify import UnifiedPerson

            persons = [UnifiedPerson.from_json(d)
                       for d in read_jsonl(Path(pipeline.out) / "persons_linked.jsonl")]
            decisions = {
                d["uid"]: LinkDecision(**d)
                for d in read_jsonl(Path(pipeline.out) / "link_decisions.jsonl")
            }
            mention_counts = {}
            for rel in kg.relations_of_type("MENTIONED"):
                uid = rel.dst.split(":", 1)[-1]
                mention_counts[uid] = mention_counts.get(uid, 0) + 1
            rows = linkage_rate_curve(persons, decisions, mention_counts)
            csv_path = reports / "linkage_rate.csv"
            with open(csv_path, "w", newline="", encoding="utf-8") as f:
                writer = csv.writer(f)
                writer.writerow(["bucket", "persons", "linked_ratio"])
                for row in rows:
                    writer.writerow([row["bucket"], row["persons"], f"{row['linked_ratio']:.4f}"])
            png = plots.plot_linkage_curve(rows, reports / "linkage_rate.png")
    except FrusKgError as exc:
        click.echo(f"error: {exc}", err=True)
        sys.exit(1)
    click.echo(f"wrote {csv_path} and {png}")


if __name__ == "__main__":
    main()
