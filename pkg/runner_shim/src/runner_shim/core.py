"""Launch one generated script under limits and validate its manifest."""

from __future__ import annotations

import json
import os
import resource
import subprocess
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

EXIT_MANIFEST_VIOLATION = 3
EXIT_TIMEOUT = 124
EXIT_MEMORY = 137

MANIFEST_NAME = "manifest.json"
DATASET_ENV_VAR = "MASQRAD_DATASET_PATH"
PROXY_VARS = ("http_proxy", "https_proxy", "HTTP_PROXY", "HTTPS_PROXY", "ALL_PROXY")

# The script runs through this bootstrap so that (a) socket creation is
# refused inside its process and (b) MemoryError surfaces as the memory exit
# code instead of a generic traceback.
_BOOTSTRAP = """\
import runpy, socket, sys

def _refused(*args, **kwargs):
    raise OSError("network access is disabled in this sandbox")

socket.socket = _refused
socket.create_connection = _refused

script = sys.argv[1]
sys.argv = [script]
try:
    runpy.run_path(script, run_name="__main__")
except MemoryError:
    sys.exit(137)
"""


@dataclass(frozen=True)
class ShimConfig:
    script_path: Path
    dataset_path: Path
    wall_time: float = 60.0
    memory: int = 1 << 30

    def __post_init__(self):
        if not self.script_path.is_file():
            raise FileNotFoundError(f"script not found: {self.script_path}")
        if not self.dataset_path.exists():
            raise FileNotFoundError(f"dataset not found: {self.dataset_path}")
        if self.wall_time <= 0 or self.memory <= 0:
            raise ValueError("wall_time and memory must be positive")


def validate_manifest(workdir: Path) -> Optional[str]:
    """Return a violation description, or None when the contract holds."""
    manifest_path = workdir / MANIFEST_NAME
    if not manifest_path.is_file():
        return "manifest.json not produced"
    try:
        manifest = json.loads(manifest_path.read_text())
    except json.JSONDecodeError as exc:
        return f"manifest.json is not valid JSON: {exc}"
    entries = manifest.get("artifacts")
    if not isinstance(entries, list):
        return 'manifest.json lacks an "artifacts" list'
    root = workdir.resolve()
    for entry in entries:
        if not isinstance(entry, dict) or not {"name", "kind", "file"} <= entry.keys():
            return f"malformed manifest entry: {entry!r}"
        if entry["kind"] not in ("image", "table"):
            return f"unknown artifact kind {entry['kind']!r}"
        target = (workdir / entry["file"]).resolve()
        if root not in target.parents and target != root:
            return f"artifact {entry['name']!r} escapes the working directory"
        if not target.is_file():
            return f"declared file {entry['file']!r} does not exist"
    return None


def _limit_preexec(memory: int):
    def apply():
        resource.setrlimit(resource.RLIMIT_AS, (memory, memory))

    return apply


def shim_main(config: ShimConfig, workdir: Optional[Path] = None) -> int:
    """Run the script and translate its outcome into the exit-code table."""
    workdir = Path(workdir or Path.cwd())
    env = {k: v for k, v in os.environ.items() if k not in PROXY_VARS}
    env[DATASET_ENV_VAR] = str(config.dataset_path)

    try:
        proc = subprocess.run(
            [sys.executable, "-c", _BOOTSTRAP, str(config.script_path)],
            cwd=workdir,
            env=env,
            timeout=config.wall_time,
            preexec_fn=_limit_preexec(config.memory),
        )
    except subprocess.TimeoutExpired:
        return EXIT_TIMEOUT

    if proc.returncode in (-9, 137):
        return EXIT_MEMORY
    if proc.returncode != 0:
        return proc.returncode
    violation = validate_manifest(workdir)
    if violation is not None:
        print(f"manifest violation: {violation}", file=sys.stderr)
        return EXIT_MANIFEST_VIOLATION
    return 0
