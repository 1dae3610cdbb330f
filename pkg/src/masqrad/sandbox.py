"""Sandboxed script execution: subprocess isolation, limits, artifact collection.

A generated script runs as an opaque subprocess with its own working
directory.  Success is defined by the artifact contract: exit code 0 plus a
valid manifest.json whose declared files all exist.
"""

from __future__ import annotations

import csv
import hashlib
import json
import os
import resource
import subprocess
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .actor import DatasetRef, GeneratedScript

STREAM_CAP = 1 << 20  # 1 MiB per stream, truncation flagged
MANIFEST_NAME = "manifest.json"
MANIFEST_VIOLATION_CODE = 3
TIMEOUT_CODE = 124
MEMORY_CODE = 137

DATASET_ENV_VAR = "MASQRAD_DATASET_PATH"
_PROXY_VARS = ("http_proxy", "https_proxy", "HTTP_PROXY", "HTTPS_PROXY", "ALL_PROXY")


class TableParseError(ValueError):
    def __init__(self, name: str, line: int, reason: str = ""):
        super().__init__(f"table {name!r} unparseable at line {line}: {reason}")
        self.name = name
        self.line = line


@dataclass(frozen=True)
class ExecLimits:
    wall_time: float = 60.0
    memory: int = 1 << 30
    network: str = "disabled"  # disabled | enabled

    def __post_init__(self):
        if self.wall_time <= 0 or self.memory <= 0:
            raise ValueError("wall_time and memory must be positive")


@dataclass(frozen=True)
class Artifact:
    name: str
    kind: str  # image | table | manifest | other
    byte_size: int
    digest: str
    file: str


@dataclass(frozen=True)
class ExecutionResult:
    exit_status: str  # success | nonzero | timeout | memory_exceeded | launch_failure
    exit_code: Optional[int]
    stdout: str
    stderr: str
    duration: float
    artifacts: tuple[Artifact, ...] = ()
    stdout_truncated: bool = False
    stderr_truncated: bool = False

    @property
    def success(self) -> bool:
        return self.exit_status == "success"

    def error_summary(self) -> str:
        tail = self.stderr.strip().splitlines()[-10:]
        return f"exit_status={self.exit_status} exit_code={self.exit_code}\n" + "\n".join(tail)


@dataclass(frozen=True)
class ResultTable:
    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple[object, ...], ...]  # cells are float or str


def _cap(stream: bytes) -> tuple[str, bool]:
    truncated = len(stream) > STREAM_CAP
    return stream[:STREAM_CAP].decode(errors="replace"), truncated


def _file_digest(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def validate_manifest(workdir: Path) -> tuple[list[Artifact], Optional[str]]:
    """Load and check manifest.json; returns (artifacts, violation reason)."""
    manifest_path = workdir / MANIFEST_NAME
    if not manifest_path.is_file():
        return [], "manifest.json not produced"
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        return [], f"manifest.json is not valid JSON: {exc}"
    entries = manifest.get("artifacts")
    if not isinstance(entries, list):
        return [], 'manifest.json lacks an "artifacts" list'
    artifacts: list[Artifact] = []
    for entry in entries:
        if not isinstance(entry, dict) or not {"name", "kind", "file"} <= entry.keys():
            return [], f"malformed manifest entry: {entry!r}"
        if entry["kind"] not in ("image", "table"):
            return [], f"unknown artifact kind {entry['kind']!r}"
        target = (workdir / entry["file"]).resolve()
        if workdir.resolve() not in target.parents and target != workdir.resolve():
            return [], f"artifact {entry['name']!r} escapes the working directory"
        if not target.is_file():
            return [], f"declared file {entry['file']!r} does not exist"
        artifacts.append(
            Artifact(
                name=entry["name"],
                kind=entry["kind"],
                byte_size=target.stat().st_size,
                digest=_file_digest(target),
                file=entry["file"],
            )
        )
    artifacts.append(
        Artifact(
            name="manifest",
            kind="manifest",
            byte_size=manifest_path.stat().st_size,
            digest=_file_digest(manifest_path),
            file=MANIFEST_NAME,
        )
    )
    return artifacts, None


def _limit_preexec(limits: ExecLimits):
    def apply():
        resource.setrlimit(resource.RLIMIT_AS, (limits.memory, limits.memory))

    return apply


def execute(
    script: GeneratedScript,
    dataset: DatasetRef,
    workdir: str | Path,
    limits: ExecLimits = ExecLimits(),
    runner: Optional[list[str]] = None,
) -> ExecutionResult:
    """Run a script in an empty working directory and collect its artifacts.

    With `runner` set, the command is `runner + [script_path, --dataset, ...]`
    (the external shim contract); otherwise the script runs directly under the
    current interpreter with limits applied by this process.
    """
    workdir = Path(workdir)
    workdir.mkdir(parents=True, exist_ok=True)
    if any(workdir.iterdir()):
        raise ValueError(f"workdir {workdir} is not empty")
    script_path = workdir / "_script.py"
    script_path.write_text(script.source)

    env = {
        k: v
        for k, v in os.environ.items()
        if limits.network == "enabled" or k not in _PROXY_VARS
    }
    env[DATASET_ENV_VAR] = dataset.url_or_path

    if runner:
        cmd = runner + [
            str(script_path),
            "--dataset",
            dataset.url_or_path,
            "--wall",
            str(limits.wall_time),
            "--mem",
            str(limits.memory),
        ]
        preexec = None
        timeout = limits.wall_time * 2  # shim enforces; this is a backstop
    else:
        cmd = [sys.executable, str(script_path)]
        preexec = _limit_preexec(limits)
        timeout = limits.wall_time

    start = time.monotonic()
    try:
        proc = subprocess.run(
            cmd,
            cwd=workdir,
            env=env,
            capture_output=True,
            timeout=timeout,
            preexec_fn=preexec,
        )
    except subprocess.TimeoutExpired as exc:
        duration = time.monotonic() - start
        stdout, out_trunc = _cap(exc.stdout or b"")
        stderr, err_trunc = _cap(exc.stderr or b"")
        return ExecutionResult(
            "timeout", None, stdout, stderr, duration,
            stdout_truncated=out_trunc, stderr_truncated=err_trunc,
        )
    except OSError as exc:
        return ExecutionResult(
            "launch_failure", None, "", str(exc), time.monotonic() - start
        )
    duration = time.monotonic() - start
    stdout, out_trunc = _cap(proc.stdout)
    stderr, err_trunc = _cap(proc.stderr)

    status, code = _classify(proc.returncode)
    artifacts: tuple[Artifact, ...] = ()
    if status == "success":
        collected, violation = validate_manifest(workdir)
        if violation is None:
            artifacts = tuple(collected)
        else:
            status, code = "nonzero", MANIFEST_VIOLATION_CODE
            stderr = (stderr + f"\nmanifest violation: {violation}").strip()
    return ExecutionResult(
        status, code, stdout, stderr, duration, artifacts,
        stdout_truncated=out_trunc, stderr_truncated=err_trunc,
    )


def _classify(returncode: int) -> tuple[str, int]:
    if returncode == 0:
        return "success", 0
    if returncode == TIMEOUT_CODE:
        return "timeout", returncode
    if returncode == MEMORY_CODE or returncode == -9:
        return "memory_exceeded", returncode
    return "nonzero", returncode


def _typed(cell: str) -> object:
    try:
        return float(cell)
    except ValueError:
        return cell


def collect_tables(result: ExecutionResult, workdir: str | Path) -> list[ResultTable]:
    """Parse every manifest table artifact as headered CSV."""
    if not result.success:
        raise ValueError("collect_tables requires a successful execution")
    workdir = Path(workdir)
    tables: list[ResultTable] = []
    for artifact in result.artifacts:
        if artifact.kind != "table":
            continue
        path = workdir / artifact.file
        with path.open(newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise TableParseError(artifact.name, 1, "empty file") from None
            if not header or all(not h.strip() for h in header):
                raise TableParseError(artifact.name, 1, "blank header row")
            rows = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise TableParseError(
                        artifact.name, lineno, f"expected {len(header)} cells, got {len(row)}"
                    )
                rows.append(tuple(_typed(c) for c in row))
        tables.append(ResultTable(artifact.name, tuple(header), tuple(rows)))
    return tables
