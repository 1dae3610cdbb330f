"""Shared fixture builders for the test suite."""

from __future__ import annotations

import base64
import json
from pathlib import Path

import numpy as np

from masqrad.actor import Column, DatasetRef, Table
from masqrad.backends import MockBackend, MockEntry, MockScript, ScheduledFault, Stage
from masqrad.interpreter import ClassifierHead

# Valid 1x1 PNG.
PNG_BASE64 = (
    "iVBORw0KGgoAAAANSUhEUgAAAAEAAAABCAYAAAAfFcSJAAAADUlEQVR42mNkYPhfDwAChwGA60e6kgAAAABJRU5ErkJggg=="
)
PNG_BYTES = base64.b64decode(PNG_BASE64)

HAPPY_SCRIPT = f'''import base64, csv, json

with open("chart.png", "wb") as fh:
    fh.write(base64.b64decode("{PNG_BASE64}"))
with open("result.csv", "w", newline="") as fh:
    writer = csv.writer(fh)
    writer.writerow(["release_year", "avg_budget"])
    writer.writerow([2000, 1.5])
    writer.writerow([2001, 2.5])
MANIFEST = {{"artifacts": [
    {{"name": "chart", "kind": "image", "file": "chart.png"}},
    {{"name": "result", "kind": "table", "file": "result.csv"}},
]}}
with open("manifest.json", "w") as fh:
    json.dump(MANIFEST, fh)
'''

ANALYSIS_RESPONSE = """NARRATIVE:
Average budgets rise over the two years present in the results.
FINDINGS:
- [result] Average budget increases from 1.5 to 2.5 between 2000 and 2001.
- [chart] The chart shows an upward trend.
RECOMMENDATIONS:
- Examine whether the trend continues past 2001.
"""

CREATIVE_RESPONSE = "- clue: budget\n- clue: release_year\n"


def make_dataset(tmp_path: Path) -> DatasetRef:
    tmp_path.mkdir(parents=True, exist_ok=True)
    csv_path = tmp_path / "movies.csv"
    csv_path.write_text(
        "title,budget,gross,release_year\n"
        "Alpha,1.0,2.0,2000\n"
        "Beta,2.0,3.0,2001\n"
        "Gamma,3.0,5.0,2001\n"
    )
    return DatasetRef(
        url_or_path=str(csv_path),
        tables=(
            Table(
                name="movies",
                columns=(
                    Column("title", "text"),
                    Column("budget", "numeric"),
                    Column("gross", "numeric"),
                    Column("release_year", "temporal"),
                ),
                row_count=3,
            ),
        ),
    )


def make_head() -> ClassifierHead:
    rng = np.random.default_rng(7)
    labels = ("budget", "gross", "release_year", "title")
    return ClassifierHead(
        weight=rng.standard_normal((4, 6)),
        bias=rng.standard_normal(4),
        labels=labels,
        threshold=0.5,
    )


def write_head(path: Path, head: ClassifierHead | None = None) -> Path:
    head = head or make_head()
    path.write_text(
        json.dumps(
            {
                "labels": list(head.labels),
                "threshold": head.threshold,
                "weight": head.weight.flatten().tolist(),
                "bias": head.bias.tolist(),
            }
        )
    )
    return path


def happy_mock_script(query_key: str = "q1") -> MockScript:
    return MockScript(
        entries=(
            MockEntry(Stage.INTERPRETER_CREATIVE, query_key, CREATIVE_RESPONSE),
            MockEntry(Stage.ACTOR, query_key, f"```python\n{HAPPY_SCRIPT}```"),
            MockEntry(Stage.CRITIC, query_key, "VERDICT: APPROVE"),
            MockEntry(Stage.ANALYSIS, query_key, ANALYSIS_RESPONSE),
        )
    )


def mock_script_json(path: Path, script: MockScript) -> Path:
    path.write_text(
        json.dumps(
            {
                "entries": [
                    {"stage": e.stage.value, "match_key": e.match_key, "response": e.response}
                    for e in script.entries
                ],
                "fault_schedule": [
                    {"stage": f.stage.value, "round_index": f.round_index, "fault_kind": f.fault_kind}
                    for f in script.fault_schedule
                ],
            }
        )
    )
    return path


def reject_schedule(k: int) -> MockScript:
    """Mock script whose critic emits k reject+rewrite rounds, then approvals."""
    base = happy_mock_script()
    faults = tuple(
        ScheduledFault(Stage.CRITIC, i, "reject_verdict") for i in range(1, k + 1)
    )
    return MockScript(base.entries, faults)
