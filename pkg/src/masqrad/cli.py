"""Command-line surface: run a query, serve HTTP, evaluate, ingest benchmarks,
and run the kernel self-test."""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from .actor import DatasetRef
from .backends import MockBackend
from .config import load_config
from .evaluation import (
    ALL_CRITERIA,
    DatasetRow,
    EvaluationScorecard,
    dataset_report,
    inaccuracy_breakdown,
    ingest_judge_labels,
    ingest_nl4dv,
    ingest_nvbench,
    manifest_to_dict,
    render_report_table,
)
from .kernels import selftest
from .orchestrator import RunStore, run_pipeline


@click.group()
def main():
    """Multi-agent query-resolution engine."""


@main.command()
@click.option("--query", required=True)
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--query-id", default=None)
def run(query: str, dataset_path: str, config_path: str, query_id: str | None):
    """Run one query end to end; exits 0 on done, 1 on a failed run."""
    config = load_config(config_path)
    dataset = DatasetRef.from_dict(json.loads(Path(dataset_path).read_text()))
    backend = config.make_backend()
    if isinstance(backend, MockBackend):
        backend = backend.session()
    result = run_pipeline(
        query,
        dataset,
        backend=backend,
        encoder=config.make_encoder(),
        head=config.load_head(),
        store=RunStore(config.run_store_root),
        policy=config.policy,
        limits=config.limits,
        runner=config.runner,
        query_id=query_id,
    )
    click.echo(f"run {result.run_id}: {result.stage}")
    if result.stage != "done":
        click.echo(f"failure: {result.failure_reason}", err=True)
        sys.exit(1)


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=True))
@click.option("--addr", default="127.0.0.1:8080")
def serve(config_path: str, addr: str):
    """Serve the HTTP API."""
    import uvicorn

    from .service import create_app

    host, _, port = addr.partition(":")
    uvicorn.run(create_app(load_config(config_path)), host=host, port=int(port or 8080))


@main.command("eval")
@click.option("--manifest", "manifest_path", required=True, type=click.Path(exists=True))
@click.option("--labels", "labels_path", default=None, type=click.Path(exists=True))
@click.option("--out", "out_path", default=None, type=click.Path())
def eval_cmd(manifest_path: str, labels_path: str | None, out_path: str | None):
    """Evaluate results: per-dataset rows and/or per-query scorecards."""
    raw = json.loads(Path(manifest_path).read_text())
    report: dict = {}
    if "rows" in raw:
        rows = [
            DatasetRow(
                dataset=r["dataset"],
                benchmark=r.get("benchmark", "-"),
                total_queries=int(r["total_queries"]),
                inaccurate=int(r["inaccurate"]),
            )
            for r in raw["rows"]
        ]
        report.update(dataset_report(rows))
        click.echo(render_report_table(report))
    if "scorecards" in raw:
        cards = []
        for entry in raw["scorecards"]:
            card = EvaluationScorecard(query_id=entry["query_id"])
            for criterion, passed in entry.get("criteria", {}).items():
                if criterion not in ALL_CRITERIA:
                    raise click.ClickException(f"unknown criterion {criterion!r}")
                card.criteria[criterion] = bool(passed)
            cards.append(card)
        if labels_path:
            labels, warnings = ingest_judge_labels(labels_path, [c.query_id for c in cards])
            for card in cards:
                card.criteria.update(labels[card.query_id])
            for warning in warnings:
                click.echo(f"warning: {warning}", err=True)
        breakdown = inaccuracy_breakdown(cards)
        report["breakdown"] = {
            "per_criterion": breakdown.per_criterion,
            "failure_sum": breakdown.failure_sum,
            "distinct_inaccurate": breakdown.distinct_inaccurate,
        }
        report["scorecard_accuracy"] = (len(cards) - breakdown.distinct_inaccurate) / len(cards)
        click.echo(
            f"scorecards: {len(cards)} queries, "
            f"{breakdown.distinct_inaccurate} inaccurate, "
            f"accuracy {report['scorecard_accuracy'] * 100:.1f}%"
        )
    if not report:
        raise click.ClickException("input file has neither rows nor scorecards")
    if out_path:
        Path(out_path).write_text(json.dumps(report, indent=2, sort_keys=True))
        click.echo(f"report written to {out_path}")


@main.group()
def bench():
    """Benchmark utilities."""


@bench.command("ingest")
@click.option("--source", type=click.Choice(["nvbench", "nl4dv"]), required=True)
@click.option("--in", "in_path", required=True, type=click.Path(exists=True))
@click.option("--dataset", "dataset_path", required=True, type=click.Path(exists=True))
@click.option("--out", "out_path", required=True, type=click.Path())
def bench_ingest(source: str, in_path: str, dataset_path: str, out_path: str):
    """Normalize a benchmark file into the engine's manifest format."""
    raw = json.loads(Path(in_path).read_text())
    dataset = DatasetRef.from_dict(json.loads(Path(dataset_path).read_text()))
    if source == "nvbench":
        manifest = ingest_nvbench(raw, dataset)
    else:
        manifest = ingest_nl4dv(raw, dataset)
    Path(out_path).write_text(json.dumps(manifest_to_dict(manifest), indent=2))
    click.echo(f"wrote {len(manifest.queries)} queries to {out_path}")


@main.group()
def kernels():
    """Attention kernel utilities."""


@kernels.command("selftest")
def kernels_selftest():
    """Run the kernel property suite; exits nonzero on any failure."""
    results = selftest()
    failed = False
    for name, passed, detail in results:
        click.echo(f"{'PASS' if passed else 'FAIL'} {name}: {detail}")
        failed = failed or not passed
    if failed:
        sys.exit(1)


if __name__ == "__main__":
    main()
