"""Actor stage: assemble the dataset-constrained prompt and obtain a script.

Prompt assembly is deterministic template substitution; the backend response
is reduced to its first fenced code block.
"""

from __future__ import annotations

import ast
import re
from dataclasses import dataclass, field, replace
from importlib import resources

from .backends import Backend, BackendRequest, Stage, default_params
from .interpreter import ClueSet

CONTAINMENT_CLAUSE = (
    "Use only the data provided in the dataset referenced below; "
    "do not invent, fetch, or assume any data from any other source."
)

OUTPUT_CONTRACT = """Output contract (mandatory):
- Write every output file into the current working directory.
- Save charts as PNG or SVG files and result tables as CSV files with a header row.
- Declare outputs in a literal named MANIFEST, for example:
  MANIFEST = {"artifacts": [{"name": "chart", "kind": "image", "file": "chart.png"}]}
- As the script's final step, write it out:
  import json
  with open("manifest.json", "w") as fh:
      json.dump(MANIFEST, fh)"""

FENCED_BLOCK = re.compile(r"```[a-zA-Z0-9_+-]*\n(.*?)```", re.DOTALL)
MANIFEST_LITERAL = re.compile(r"MANIFEST\s*=\s*(\{)", re.MULTILINE)


class NoCodeBlock(ValueError):
    """Backend response contained no fenced code block."""


class EmptyScript(ValueError):
    pass


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # numeric | categorical | temporal | text


@dataclass(frozen=True)
class Table:
    name: str
    columns: tuple[Column, ...]
    row_count: int = 0

    def __post_init__(self):
        if not self.columns:
            raise ValueError(f"table {self.name!r} has no columns")
        names = [c.name for c in self.columns]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate column names in table {self.name!r}")


@dataclass(frozen=True)
class DatasetRef:
    url_or_path: str
    tables: tuple[Table, ...]

    def __post_init__(self):
        if not self.tables:
            raise ValueError("dataset needs at least one table")

    def column_names(self) -> set[str]:
        return {c.name for t in self.tables for c in t.columns}

    @classmethod
    def from_dict(cls, raw: dict) -> "DatasetRef":
        tables = tuple(
            Table(
                name=t["table"],
                columns=tuple(Column(c["name"], c["kind"]) for c in t["columns"]),
                row_count=int(t.get("row_count", 0)),
            )
            for t in raw["schema"]
        )
        return cls(url_or_path=raw["url_or_path"], tables=tables)

    def to_dict(self) -> dict:
        return {
            "url_or_path": self.url_or_path,
            "schema": [
                {
                    "table": t.name,
                    "columns": [{"name": c.name, "kind": c.kind} for c in t.columns],
                    "row_count": t.row_count,
                }
                for t in self.tables
            ],
        }


@dataclass(frozen=True)
class GeneratedScript:
    source: str
    revision: int = 0
    produced_by: str = "actor"  # actor | critic
    declared_outputs: tuple[str, ...] = field(default_factory=tuple)

    def __post_init__(self):
        if not self.source:
            raise EmptyScript("script source must be non-empty")
        if self.revision < 0:
            raise ValueError("revision must be non-negative")

    def bump(self, source: str) -> "GeneratedScript":
        return replace(
            self,
            source=source,
            revision=self.revision + 1,
            produced_by="critic",
            declared_outputs=tuple(parse_declared_outputs(source)),
        )


def load_template(name: str) -> str:
    return resources.files("masqrad.templates").joinpath(name).read_text()


def schema_block(dataset: DatasetRef) -> str:
    """Rendered column list; always table-qualified so duplicate column names
    across tables stay unambiguous."""
    lines = []
    for table in dataset.tables:
        lines.append(f"table {table.name} ({table.row_count} rows):")
        for col in table.columns:
            lines.append(f"  - {table.name}.{col.name}: {col.kind}")
    return "\n".join(lines)


def clue_block(clues: ClueSet) -> str:
    if not clues.clues:
        return ""
    lines = []
    if clues.structured:
        lines.append("Structured clues (with relevance probability):")
        lines.extend(
            f"  - {c.label} (p={c.probability:.3f})" for c in clues.structured
        )
    if clues.creative:
        lines.append("Creative clues:")
        lines.extend(f"  - {c.label}" for c in clues.creative)
    return "\n" + "\n".join(lines) + "\n"


def assemble_actor_prompt(
    query: str, dataset: DatasetRef, clues: ClueSet, query_id: str = ""
) -> str:
    return load_template("actor_prompt.txt").format(
        query_id=query_id,
        query=query,
        containment_clause=CONTAINMENT_CLAUSE,
        dataset_ref=dataset.url_or_path,
        schema_block=schema_block(dataset),
        clue_block=clue_block(clues),
        output_contract=OUTPUT_CONTRACT,
    )


def extract_code_block(text: str) -> str:
    """First fenced code block in a backend response."""
    match = FENCED_BLOCK.search(text)
    if match is None:
        raise NoCodeBlock("response contains no fenced code block")
    source = match.group(1).strip("\n")
    if not source.strip():
        raise EmptyScript("fenced code block is empty")
    return source


def parse_declared_outputs(source: str) -> list[str]:
    """Artifact names from the script's MANIFEST literal, if parseable."""
    match = MANIFEST_LITERAL.search(source)
    if match is None:
        return []
    start = match.start(1)
    try:
        node = ast.parse(source[match.start() : _literal_end(source, start)])
        manifest = ast.literal_eval(node.body[0].value)  # type: ignore[attr-defined]
    except (SyntaxError, ValueError, IndexError, AttributeError):
        return []
    artifacts = manifest.get("artifacts", []) if isinstance(manifest, dict) else []
    return [a["name"] for a in artifacts if isinstance(a, dict) and "name" in a]


def _literal_end(source: str, start: int) -> int:
    depth = 0
    for i in range(start, len(source)):
        if source[i] == "{":
            depth += 1
        elif source[i] == "}":
            depth -= 1
            if depth == 0:
                return i + 1
    return len(source)


def generate_script(prompt: str, backend: Backend) -> GeneratedScript:
    response = backend.complete(
        BackendRequest(Stage.ACTOR, prompt, default_params(Stage.ACTOR))
    )
    source = extract_code_block(response)
    return GeneratedScript(
        source=source,
        revision=0,
        produced_by="actor",
        declared_outputs=tuple(parse_declared_outputs(source)),
    )
