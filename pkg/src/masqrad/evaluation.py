"""Benchmark scoring: representation checks, judge-label ingestion, and the
accuracy/inaccuracy bookkeeping.

Eight criteria per query.  The three representation criteria are computed
from chart specs and result tables; the remaining five come from ingested
human judge labels.  A query is inaccurate iff any criterion fails.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Optional

from .actor import DatasetRef

REPRESENTATION_CRITERIA = ("data_mapping", "mark_correctness", "axes_quality")
HUMAN_CRITERIA = (
    "color_mapping",
    "image_similarity",
    "perceptual_similarity",
    "visualization_literacy",
    "significance",
)
ALL_CRITERIA = REPRESENTATION_CRITERIA + HUMAN_CRITERIA

CHART_KINDS = ("bar", "line", "scatter", "pie", "other")
TABLE_TOLERANCE = 1e-6


class UnresolvedColumn(ValueError):
    pass


class MalformedLabelFile(ValueError):
    pass


class EmptyBenchmark(ValueError):
    pass


@dataclass(frozen=True)
class VisSpec:
    chart_kind: str
    x: str
    y: str
    aggregate: str = "none"  # none | count | sum | mean
    filters: tuple[tuple[str, str, object], ...] = ()

    def resolve(self, dataset: DatasetRef) -> None:
        known = dataset.column_names()
        for ref in (self.x, self.y):
            if ref and ref not in known:
                raise UnresolvedColumn(f"column {ref!r} not in dataset schema")


@dataclass(frozen=True)
class BenchmarkQuery:
    id: str
    nl_query: str
    ground_truth: VisSpec


@dataclass(frozen=True)
class BenchmarkManifest:
    benchmark_name: str
    dataset: DatasetRef
    queries: tuple[BenchmarkQuery, ...]

    def __post_init__(self):
        ids = [q.id for q in self.queries]
        if len(set(ids)) != len(ids):
            raise ValueError("query ids must be unique")

    @classmethod
    def from_file(cls, path: str | Path) -> "BenchmarkManifest":
        raw = json.loads(Path(path).read_text())
        return cls(
            benchmark_name=raw["benchmark_name"],
            dataset=DatasetRef.from_dict(raw["dataset"]),
            queries=tuple(
                BenchmarkQuery(
                    id=q["id"],
                    nl_query=q["nl_query"],
                    ground_truth=_spec_from(q["ground_truth"]),
                )
                for q in raw["queries"]
            ),
        )


def _spec_from(raw: dict) -> VisSpec:
    return VisSpec(
        chart_kind=raw["chart_kind"],
        x=raw["x"],
        y=raw["y"],
        aggregate=raw.get("aggregate", "none"),
        filters=tuple(tuple(f) for f in raw.get("filters", [])),
    )


@dataclass
class EvaluationScorecard:
    query_id: str
    criteria: dict[str, bool] = field(
        default_factory=lambda: {c: True for c in ALL_CRITERIA}
    )

    @property
    def inaccurate(self) -> bool:
        return any(not passed for passed in self.criteria.values())

    def failed_criteria(self) -> list[str]:
        return [c for c, passed in self.criteria.items() if not passed]


def _normalized_rows(rows: Iterable[tuple]) -> list[tuple]:
    out = []
    for row in rows:
        out.append(
            tuple(
                round(c, 9) if isinstance(c, (int, float)) else str(c) for c in row
            )
        )
    return sorted(out, key=repr)


def tables_match(generated: Iterable[tuple], truth: Iterable[tuple]) -> bool:
    """Row-order-insensitive comparison with numeric tolerance."""
    gen, tru = list(generated), list(truth)
    if len(gen) != len(tru):
        return False
    gen_sorted = sorted(gen, key=repr)
    tru_sorted = sorted(tru, key=repr)
    for g_row, t_row in zip(gen_sorted, tru_sorted):
        if len(g_row) != len(t_row):
            return False
        for g, t in zip(g_row, t_row):
            if isinstance(g, (int, float)) and isinstance(t, (int, float)):
                if abs(g - t) > TABLE_TOLERANCE:
                    return False
            elif str(g) != str(t):
                return False
    return True


def marks_equivalent(generated: str, truth: str, truth_aggregate: str) -> bool:
    """Chart kinds match, treating pie and bar as interchangeable for
    share-style (aggregated) queries."""
    if generated == truth:
        return True
    if {generated, truth} == {"pie", "bar"} and truth_aggregate in ("count", "sum"):
        return True
    return False


def score_representation(
    generated: VisSpec,
    generated_table: Iterable[tuple],
    truth: VisSpec,
    truth_table: Iterable[tuple],
    dataset: DatasetRef,
) -> dict[str, bool]:
    generated.resolve(dataset)
    truth.resolve(dataset)
    return {
        "data_mapping": tables_match(generated_table, truth_table),
        "mark_correctness": marks_equivalent(
            generated.chart_kind, truth.chart_kind, truth.aggregate
        ),
        "axes_quality": (
            generated.x == truth.x
            and generated.y == truth.y
            and generated.aggregate == truth.aggregate
        ),
    }


def ingest_judge_labels(
    path: str | Path, query_ids: list[str]
) -> tuple[dict[str, dict[str, bool]], list[str]]:
    """Read `query_id,criterion,pass|fail` rows for the five human criteria.

    Query ids with no rows default to all-pass; the coverage gap is reported
    as warnings, not errors.
    """
    labels: dict[str, dict[str, bool]] = {
        qid: {c: True for c in HUMAN_CRITERIA} for qid in query_ids
    }
    covered: set[str] = set()
    with Path(path).open(newline="", encoding="utf-8") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row or (len(row) == 1 and not row[0].strip()):
                continue
            if len(row) != 3:
                raise MalformedLabelFile(f"line {lineno}: expected 3 fields")
            qid, criterion, value = (cell.strip() for cell in row)
            if criterion not in HUMAN_CRITERIA:
                raise MalformedLabelFile(
                    f"line {lineno}: unknown criterion {criterion!r}"
                )
            if value not in ("pass", "fail"):
                raise MalformedLabelFile(f"line {lineno}: value must be pass or fail")
            covered.add(qid)
            if qid in labels:
                labels[qid][criterion] = value == "pass"
    warnings = [
        f"no judge labels for query {qid}; human criteria default to pass"
        for qid in query_ids
        if qid not in covered
    ]
    return labels, warnings


def accuracy(total_queries: int, inaccurate_queries: int) -> float:
    if total_queries < 1:
        raise EmptyBenchmark("benchmark has no queries")
    if inaccurate_queries > total_queries or inaccurate_queries < 0:
        raise ValueError("inaccurate count outside [0, total]")
    return (total_queries - inaccurate_queries) / total_queries


@dataclass(frozen=True)
class InaccuracyBreakdown:
    per_criterion: dict[str, int]
    failure_sum: int
    distinct_inaccurate: int


def inaccuracy_breakdown(scorecards: list[EvaluationScorecard]) -> InaccuracyBreakdown:
    per_criterion = {c: 0 for c in ALL_CRITERIA}
    distinct = 0
    for card in scorecards:
        failed = card.failed_criteria()
        if failed:
            distinct += 1
        for criterion in failed:
            per_criterion[criterion] += 1
    return InaccuracyBreakdown(
        per_criterion=per_criterion,
        failure_sum=sum(per_criterion.values()),
        distinct_inaccurate=distinct,
    )


# --- aggregate (per-dataset rows) report ----------------------------------


@dataclass(frozen=True)
class DatasetRow:
    dataset: str
    benchmark: str
    total_queries: int
    inaccurate: int


def dataset_report(rows: list[DatasetRow]) -> dict:
    """Per-dataset and overall accuracy from (total, inaccurate) rows."""
    if not rows:
        raise EmptyBenchmark("no dataset rows")
    per_dataset = [
        {
            "dataset": row.dataset,
            "benchmark": row.benchmark,
            "total_queries": row.total_queries,
            "inaccurate": row.inaccurate,
            "accuracy": accuracy(row.total_queries, row.inaccurate),
        }
        for row in rows
    ]
    total = sum(r.total_queries for r in rows)
    inaccurate = sum(r.inaccurate for r in rows)
    return {
        "per_dataset": per_dataset,
        "total_queries": total,
        "inaccurate": inaccurate,
        "overall_accuracy": accuracy(total, inaccurate),
    }


def render_report_table(report: dict) -> str:
    lines = [
        f"{'Dataset':<20} {'Benchmark':<10} {'Total':>6} {'Inacc.':>6} {'Accuracy':>9}",
        "-" * 55,
    ]
    for row in report["per_dataset"]:
        lines.append(
            f"{row['dataset']:<20} {row['benchmark']:<10} "
            f"{row['total_queries']:>6} {row['inaccurate']:>6} "
            f"{row['accuracy'] * 100:>8.1f}%"
        )
    lines.append("-" * 55)
    lines.append(
        f"{'Total':<20} {'-':<10} {report['total_queries']:>6} "
        f"{report['inaccurate']:>6} {report['overall_accuracy'] * 100:>8.1f}%"
    )
    return "\n".join(lines)


# --- benchmark ingestion ---------------------------------------------------


def ingest_nvbench(raw: dict, dataset: DatasetRef, benchmark_name: str = "nvbench") -> BenchmarkManifest:
    """Normalize an nvbench-style mapping {id: {nl_queries, vis_obj}}."""
    queries = []
    for qid, entry in raw.items():
        vis = entry["vis_obj"]
        queries.append(
            BenchmarkQuery(
                id=str(qid),
                nl_query=entry["nl_queries"][0],
                ground_truth=VisSpec(
                    chart_kind=_normalize_kind(vis.get("chart", "other")),
                    x=vis.get("x_name", ""),
                    y=vis.get("y_name", ""),
                    aggregate=vis.get("aggregate", "none"),
                ),
            )
        )
    return BenchmarkManifest(benchmark_name, dataset, tuple(queries))


def ingest_nl4dv(raw: list, dataset: DatasetRef, benchmark_name: str = "nl4dv") -> BenchmarkManifest:
    """Normalize an nl4dv-style list of {id, query, vis: {type, x, y, ...}}."""
    queries = []
    for entry in raw:
        vis = entry["vis"]
        queries.append(
            BenchmarkQuery(
                id=str(entry["id"]),
                nl_query=entry["query"],
                ground_truth=VisSpec(
                    chart_kind=_normalize_kind(vis.get("type", "other")),
                    x=vis.get("x", ""),
                    y=vis.get("y", ""),
                    aggregate=vis.get("aggregate", "none"),
                ),
            )
        )
    return BenchmarkManifest(benchmark_name, dataset, tuple(queries))


def _normalize_kind(kind: str) -> str:
    kind = kind.strip().lower()
    aliases = {
        "bar chart": "bar",
        "barchart": "bar",
        "line chart": "line",
        "linechart": "line",
        "scatterplot": "scatter",
        "scatter plot": "scatter",
        "pie chart": "pie",
        "piechart": "pie",
    }
    kind = aliases.get(kind, kind)
    return kind if kind in CHART_KINDS else "other"


def manifest_to_dict(manifest: BenchmarkManifest) -> dict:
    return {
        "benchmark_name": manifest.benchmark_name,
        "dataset": manifest.dataset.to_dict(),
        "queries": [
            {
                "id": q.id,
                "nl_query": q.nl_query,
                "ground_truth": {
                    "chart_kind": q.ground_truth.chart_kind,
                    "x": q.ground_truth.x,
                    "y": q.ground_truth.y,
                    "aggregate": q.ground_truth.aggregate,
                    "filters": [list(f) for f in q.ground_truth.filters],
                },
            }
            for q in manifest.queries
        ],
    }
