"""Expert analysis stage: turn run outputs into a structured report."""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .actor import load_template
from .backends import Backend, BackendRequest, Stage, default_params
from .sandbox import ResultTable

TABLE_ROW_CAP = 50  # serialized as head 25 / tail 25 with a truncation marker
FINDING_LINE = re.compile(r"^-\s*\[([^\]]+)\]\s*(.+)$")
CELL_REF = re.compile(r"^([^:]+):(\d+),(\d+)$")


class NothingToAnalyze(ValueError):
    pass


class UnparseableReport(ValueError):
    pass


@dataclass(frozen=True)
class Finding:
    statement: str
    evidence_ref: str  # artifact name, table name, or "table:row,col"


@dataclass(frozen=True)
class AnalysisReport:
    narrative: str
    findings: tuple[Finding, ...]
    recommendations: tuple[str, ...]
    generated_at: float
    warnings: tuple[str, ...] = ()


def _serialize_table(table: ResultTable) -> str:
    lines = [f"table {table.name}: {', '.join(table.columns)}"]
    rows = table.rows
    if len(rows) > TABLE_ROW_CAP:
        half = TABLE_ROW_CAP // 2
        shown = list(rows[:half]) + [None] + list(rows[-half:])
        omitted = len(rows) - TABLE_ROW_CAP
    else:
        shown, omitted = list(rows), 0
    for row in shown:
        if row is None:
            lines.append(f"  ... ({omitted} rows omitted) ...")
        else:
            lines.append("  " + ", ".join(_fmt(c) for c in row))
    return "\n".join(lines)


def _fmt(cell: object) -> str:
    if isinstance(cell, float) and cell == int(cell):
        return str(int(cell))
    return str(cell)


def assemble_analysis_prompt(
    query: str,
    tables: list[ResultTable],
    artifact_names: list[str],
    query_id: str = "",
) -> str:
    if not tables and not artifact_names:
        raise NothingToAnalyze("no tables or artifacts to analyze")
    tables_block = "\n".join(_serialize_table(t) for t in tables) or "(none)"
    artifacts_block = "\n".join(f"- {name}" for name in artifact_names) or "(none)"
    return load_template("analysis_prompt.txt").format(
        query_id=query_id,
        query=query,
        tables_block=tables_block,
        artifacts_block=artifacts_block,
    )


def _resolves(ref: str, tables: list[ResultTable], artifact_names: list[str]) -> bool:
    if ref in artifact_names or any(t.name == ref for t in tables):
        return True
    cell = CELL_REF.match(ref)
    if cell:
        table = next((t for t in tables if t.name == cell.group(1)), None)
        if table is not None:
            row, col = int(cell.group(2)), int(cell.group(3))
            return row < len(table.rows) and col < len(table.columns)
    return False


def parse_report(
    response: str,
    tables: list[ResultTable],
    artifact_names: list[str],
    generated_at: float,
) -> AnalysisReport:
    """Parse the headed report wire format.

    Findings whose evidence reference does not resolve within the run are
    dropped, with a warning kept on the report.
    """
    sections: dict[str, list[str]] = {}
    current: str | None = None
    for line in response.splitlines():
        header = line.strip().rstrip(":").upper()
        if line.strip().endswith(":") and header in (
            "NARRATIVE",
            "FINDINGS",
            "RECOMMENDATIONS",
        ):
            current = header
            sections[current] = []
        elif current is not None:
            sections[current].append(line)
    if "NARRATIVE" not in sections:
        raise UnparseableReport("response has no NARRATIVE section")

    narrative = "\n".join(sections["NARRATIVE"]).strip()
    findings: list[Finding] = []
    warnings: list[str] = []
    for line in sections.get("FINDINGS", []):
        match = FINDING_LINE.match(line.strip())
        if not match:
            continue
        ref, statement = match.group(1).strip(), match.group(2).strip()
        if _resolves(ref, tables, artifact_names):
            findings.append(Finding(statement, ref))
        else:
            warnings.append(f"dropped finding with dangling evidence ref {ref!r}")
    recommendations = tuple(
        line.strip()[1:].strip()
        for line in sections.get("RECOMMENDATIONS", [])
        if line.strip().startswith("-")
    )
    return AnalysisReport(
        narrative=narrative,
        findings=tuple(findings),
        recommendations=recommendations,
        generated_at=generated_at,
        warnings=tuple(warnings),
    )


def analyze(
    prompt: str,
    backend: Backend,
    tables: list[ResultTable],
    artifact_names: list[str],
    generated_at: float,
) -> AnalysisReport:
    response = backend.complete(
        BackendRequest(Stage.ANALYSIS, prompt, default_params(Stage.ANALYSIS))
    )
    return parse_report(response, tables, artifact_names, generated_at)
