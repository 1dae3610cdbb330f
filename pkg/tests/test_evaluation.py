import math
import random

import pytest

from masqrad.actor import Column, DatasetRef, Table
from masqrad.evaluation import (
    ALL_CRITERIA,
    DatasetRow,
    EmptyBenchmark,
    EvaluationScorecard,
    HUMAN_CRITERIA,
    MalformedLabelFile,
    UnresolvedColumn,
    VisSpec,
    accuracy,
    dataset_report,
    inaccuracy_breakdown,
    ingest_judge_labels,
    ingest_nl4dv,
    ingest_nvbench,
    render_report_table,
    score_representation,
    tables_match,
)

DATASET = DatasetRef(
    "movies.csv",
    (
        Table(
            "movies",
            (
                Column("genre", "categorical"),
                Column("budget", "numeric"),
                Column("year", "temporal"),
            ),
            10,
        ),
    ),
)

# Benchmark result rows: (dataset, benchmark, total queries, inaccurate).
DATASET_ROWS = [
    DatasetRow("Movies", "NL4DV", 39, 4),
    DatasetRow("movie_1 + cinema", "nvBench", 103, 22),
    DatasetRow("architecture", "nvBench", 22, 6),
    DatasetRow("Cars", "NL4DV", 44, 5),
    DatasetRow("car_1", "nvBench", 100, 11),
    DatasetRow("Superstore", "NL4DV", 23, 3),
    DatasetRow("inn_1", "nvBench", 156, 12),
    DatasetRow("Euro", "NL4DV", 13, 1),
]

# Per-dataset criterion failure counts, in ALL_CRITERIA order, with the
# distinct inaccurate-query count for that dataset.
CRITERION_ROWS = [
    ((1, 4, 0, 0, 4, 2, 2, 0), 4),
    ((2, 6, 9, 0, 8, 0, 0, 0), 22),
    ((0, 2, 0, 1, 0, 1, 1, 1), 6),
    ((1, 2, 0, 0, 1, 0, 1, 0), 5),
    ((2, 3, 0, 1, 1, 1, 2, 1), 11),
    ((1, 1, 0, 1, 0, 0, 0, 0), 3),
    ((2, 3, 0, 1, 1, 1, 2, 2), 12),
    ((1, 0, 0, 0, 0, 0, 0, 0), 1),
]


def scorecards_from_criterion_rows():
    """Distribute each dataset's criterion failures over its inaccurate queries.

    Failures are assigned round-robin, so every inaccurate query absorbs at
    least one failure and no query fails the same criterion twice (every
    per-criterion count is <= the dataset's distinct count).
    """
    cards = []
    for d_index, (counts, distinct) in enumerate(CRITERION_ROWS):
        dataset_cards = [
            EvaluationScorecard(f"d{d_index}_q{i}") for i in range(distinct)
        ]
        flat = []
        for criterion, count in zip(ALL_CRITERIA, counts):
            flat.extend([criterion] * count)
        for j, criterion in enumerate(flat):
            dataset_cards[j % distinct].criteria[criterion] = False
        cards.extend(dataset_cards)
    return cards


class TestAccuracy:
    def test_benchmark_totals(self):
        assert accuracy(500, 64) == 0.872

    def test_judge_study_totals(self):
        assert accuracy(200, 61) == 0.695

    def test_perfect(self):
        assert accuracy(123, 0) == 1.0

    def test_empty(self):
        with pytest.raises(EmptyBenchmark):
            accuracy(0, 0)

    def test_overcount(self):
        with pytest.raises(ValueError):
            accuracy(10, 11)


class TestDatasetReport:
    def test_overall_accuracy_exact(self):
        report = dataset_report(DATASET_ROWS)
        assert report["total_queries"] == 500
        assert report["inaccurate"] == 64
        assert report["overall_accuracy"] == 0.872

    def test_per_dataset_accuracy(self):
        report = dataset_report(DATASET_ROWS)
        for row, payload in zip(DATASET_ROWS, report["per_dataset"]):
            expected = (row.total_queries - row.inaccurate) / row.total_queries
            assert math.isclose(payload["accuracy"], expected, abs_tol=1e-12)

    def test_render_mentions_overall(self):
        text = render_report_table(dataset_report(DATASET_ROWS))
        assert "87.2%" in text

    def test_empty(self):
        with pytest.raises(EmptyBenchmark):
            dataset_report([])


class TestBreakdown:
    def test_criterion_rows_reconstruction(self):
        cards = scorecards_from_criterion_rows()
        breakdown = inaccuracy_breakdown(cards)
        assert tuple(breakdown.per_criterion[c] for c in ALL_CRITERIA) == (
            10, 21, 9, 4, 15, 5, 8, 4,
        )
        assert breakdown.failure_sum == 76
        assert breakdown.distinct_inaccurate == 64

    def test_multi_criterion_query(self):
        card = EvaluationScorecard("q1")
        for criterion in ("data_mapping", "mark_correctness", "significance"):
            card.criteria[criterion] = False
        breakdown = inaccuracy_breakdown([card])
        assert breakdown.failure_sum == 3
        assert breakdown.distinct_inaccurate == 1

    def test_all_pass(self):
        breakdown = inaccuracy_breakdown([EvaluationScorecard("q1")])
        assert breakdown.failure_sum == 0 and breakdown.distinct_inaccurate == 0

    def test_sum_bounds_distinct(self):
        cards = scorecards_from_criterion_rows()
        breakdown = inaccuracy_breakdown(cards)
        assert breakdown.failure_sum >= breakdown.distinct_inaccurate

    def test_order_invariance(self):
        cards = scorecards_from_criterion_rows()
        shuffled = cards[:]
        random.Random(3).shuffle(shuffled)
        assert inaccuracy_breakdown(shuffled) == inaccuracy_breakdown(cards)


class TestScoreRepresentation:
    def spec(self, kind="bar", aggregate="count"):
        return VisSpec(chart_kind=kind, x="genre", y="budget", aggregate=aggregate)

    def test_identical_all_pass(self):
        table = [("a", 1.0), ("b", 2.0)]
        results = score_representation(self.spec(), table, self.spec(), table, DATASET)
        assert all(results.values())

    def test_pie_bar_equivalence_on_share_query(self):
        table = [("a", 1.0)]
        results = score_representation(
            self.spec("bar", "count"), table, self.spec("pie", "count"), table, DATASET
        )
        assert results["mark_correctness"]

    def test_pie_line_not_equivalent(self):
        table = [("a", 1.0)]
        results = score_representation(
            self.spec("line"), table, self.spec("pie"), table, DATASET
        )
        assert not results["mark_correctness"]

    def test_pie_bar_not_equivalent_without_aggregation(self):
        table = [("a", 1.0)]
        results = score_representation(
            self.spec("bar", "none"), table, self.spec("pie", "none"), table, DATASET
        )
        assert not results["mark_correctness"]

    def test_missing_row_fails_data_mapping(self):
        results = score_representation(
            self.spec(), [("a", 1.0)], self.spec(), [("a", 1.0), ("b", 2.0)], DATASET
        )
        assert not results["data_mapping"]

    def test_row_order_irrelevant(self):
        assert tables_match([("b", 2.0), ("a", 1.0)], [("a", 1.0), ("b", 2.0)])

    def test_numeric_tolerance(self):
        assert tables_match([(1.0000000001,)], [(1.0,)])
        assert not tables_match([(1.1,)], [(1.0,)])

    def test_axes_quality_requires_aggregate_match(self):
        table = [("a", 1.0)]
        results = score_representation(
            self.spec(aggregate="sum"), table, self.spec(aggregate="count"), table, DATASET
        )
        assert not results["axes_quality"]

    def test_unresolved_column(self):
        bad = VisSpec("bar", "nope", "budget")
        with pytest.raises(UnresolvedColumn):
            score_representation(bad, [], self.spec(), [], DATASET)


class TestJudgeLabels:
    def test_basic_row(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("q7,color_mapping,fail\n")
        labels, warnings = ingest_judge_labels(path, ["q7"])
        assert labels["q7"]["color_mapping"] is False
        assert labels["q7"]["significance"] is True
        assert warnings == []

    def test_empty_file_all_pass_with_warning(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("")
        labels, warnings = ingest_judge_labels(path, ["q1", "q2"])
        assert all(all(v.values()) for v in labels.values())
        assert len(warnings) == 2

    def test_unknown_criterion(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("q1,chart_flavor,fail\n")
        with pytest.raises(MalformedLabelFile):
            ingest_judge_labels(path, ["q1"])

    def test_bad_value(self, tmp_path):
        path = tmp_path / "labels.csv"
        path.write_text("q1,color_mapping,maybe\n")
        with pytest.raises(MalformedLabelFile):
            ingest_judge_labels(path, ["q1"])

    def test_human_criteria_are_the_five(self):
        assert set(HUMAN_CRITERIA) == {
            "color_mapping",
            "image_similarity",
            "perceptual_similarity",
            "visualization_literacy",
            "significance",
        }


class TestIngestion:
    def test_nvbench_shape(self):
        raw = {
            "101": {
                "nl_queries": ["How many movies per genre?"],
                "vis_obj": {"chart": "Bar Chart", "x_name": "genre", "y_name": "budget",
                            "aggregate": "count"},
            }
        }
        manifest = ingest_nvbench(raw, DATASET)
        assert manifest.queries[0].id == "101"
        assert manifest.queries[0].ground_truth.chart_kind == "bar"
        assert manifest.queries[0].ground_truth.aggregate == "count"

    def test_nl4dv_shape(self):
        raw = [
            {
                "id": "m1",
                "query": "budget by year",
                "vis": {"type": "scatterplot", "x": "year", "y": "budget"},
            }
        ]
        manifest = ingest_nl4dv(raw, DATASET)
        assert manifest.queries[0].ground_truth.chart_kind == "scatter"

    def test_duplicate_ids_rejected(self):
        raw = [
            {"id": "m1", "query": "a", "vis": {"type": "bar", "x": "genre", "y": "budget"}},
            {"id": "m1", "query": "b", "vis": {"type": "bar", "x": "genre", "y": "budget"}},
        ]
        with pytest.raises(ValueError, match="unique"):
            ingest_nl4dv(raw, DATASET)
