"""Text-generation backend abstraction.

Two implementations share one interface: a deterministic mock driven by a
scripted fixture (so every agent stage is testable offline) and a thin HTTP
adapter speaking a provider-neutral chat-completion shape.
"""

from __future__ import annotations

import json
import os
import time
import uuid
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from threading import Lock

import httpx

API_KEY_ENV_VAR = "MASQRAD_BACKEND_API_KEY"

# Canned response bodies the mock emits for scheduled faults.  The scripts are
# deliberately tiny: one fails to parse, one raises at runtime.
_MALFORMED_SCRIPT = "```python\ndef broken(:\n    pass\n```"
_RUNTIME_ERROR_SCRIPT = (
    "```python\nraise RuntimeError('injected fault: script failed at runtime')\n```"
)


class Stage(str, Enum):
    INTERPRETER_CREATIVE = "interpreter_creative"
    ACTOR = "actor"
    CRITIC = "critic"
    ANALYSIS = "analysis"


class BackendError(Exception):
    """Base class for backend failures."""


class BackendUnavailable(BackendError):
    """Network or provider failure."""


class RateLimited(BackendError):
    def __init__(self, retry_after: float = 1.0):
        super().__init__(f"rate limited, retry after {retry_after}s")
        self.retry_after = retry_after


class NoMockEntry(BackendError):
    """The mock script has no entry for this stage/key combination."""


@dataclass(frozen=True)
class SamplingParams:
    temperature: float
    top_p: float
    max_new_tokens: int

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")
        if not 0.0 < self.top_p <= 1.0:
            raise ValueError(f"top_p {self.top_p} outside (0, 1]")
        if self.max_new_tokens < 1:
            raise ValueError("max_new_tokens must be >= 1")


# Per-stage sampling defaults.  The interpreter's creative pass is capped at 64
# new tokens; the remaining stages emit whole scripts or reports and get a
# 2048-token ceiling.
DEFAULT_SCRIPT_TOKEN_CAP = 2048

_STAGE_DEFAULTS = {
    Stage.INTERPRETER_CREATIVE: (0.3, 0.7, 64),
    Stage.ACTOR: (0.5, 0.9, DEFAULT_SCRIPT_TOKEN_CAP),
    Stage.CRITIC: (0.7, 0.8, DEFAULT_SCRIPT_TOKEN_CAP),
    Stage.ANALYSIS: (0.4, 0.6, DEFAULT_SCRIPT_TOKEN_CAP),
}


def default_params(stage: Stage, max_new_tokens: int | None = None) -> SamplingParams:
    """Sampling defaults for a pipeline stage."""
    temperature, top_p, cap = _STAGE_DEFAULTS[Stage(stage)]
    return SamplingParams(temperature, top_p, max_new_tokens or cap)


@dataclass(frozen=True)
class BackendRequest:
    stage: Stage
    prompt: str
    params: SamplingParams
    request_id: str = field(default_factory=lambda: uuid.uuid4().hex)

    def __post_init__(self):
        if not self.prompt:
            raise ValueError("prompt must be non-empty")


class Backend:
    """Interface every agent stage codes against."""

    def complete(self, request: BackendRequest) -> str:
        raise NotImplementedError


@dataclass(frozen=True)
class MockEntry:
    stage: Stage
    match_key: str
    response: str


@dataclass(frozen=True)
class ScheduledFault:
    stage: Stage
    round_index: int  # 1-based call counter within a session, per stage
    fault_kind: str  # malformed_script | runtime_error_script | reject_verdict


FAULT_KINDS = frozenset({"malformed_script", "runtime_error_script", "reject_verdict"})


@dataclass(frozen=True)
class MockScript:
    """Fixture describing what the mock backend says, and when it misbehaves."""

    entries: tuple[MockEntry, ...]
    fault_schedule: tuple[ScheduledFault, ...] = ()

    def __post_init__(self):
        seen: set[tuple[Stage, str]] = set()
        for entry in self.entries:
            key = (entry.stage, entry.match_key)
            if key in seen:
                raise ValueError(f"duplicate mock entry for {key}")
            seen.add(key)
        for fault in self.fault_schedule:
            if fault.fault_kind not in FAULT_KINDS:
                raise ValueError(f"unknown fault_kind {fault.fault_kind!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "MockScript":
        raw = json.loads(Path(path).read_text())
        entries = tuple(
            MockEntry(Stage(e["stage"]), e["match_key"], e["response"])
            for e in raw.get("entries", [])
        )
        faults = tuple(
            ScheduledFault(Stage(f["stage"]), int(f["round_index"]), f["fault_kind"])
            for f in raw.get("fault_schedule", [])
        )
        return cls(entries, faults)


def _fault_response(stage: Stage, fault_kind: str, round_index: int) -> str:
    if fault_kind == "malformed_script":
        body = _MALFORMED_SCRIPT
    elif fault_kind == "runtime_error_script":
        body = _RUNTIME_ERROR_SCRIPT
    else:  # reject_verdict: reject with a distinct rewrite so digests change
        return (
            "VERDICT: REJECT\n"
            f"Rationale: injected fault at round {round_index}.\n"
            "```python\n"
            f"# critic rewrite, round {round_index}\n"
            "import json\n"
            "json.dump({'artifacts': []}, open('manifest.json', 'w'))\n"
            "```"
        )
    if stage is Stage.CRITIC:
        return "VERDICT: REJECT\nRationale: injected faulty rewrite.\n" + body
    return body


class MockSession(Backend):
    """One run's view of a MockScript.

    Responses are a pure function of (stage, match_key, round_index); the
    round counter is owned by the session so concurrent runs never interfere.
    """

    def __init__(self, script: MockScript):
        self._script = script
        self._round: dict[Stage, int] = {}
        self._lock = Lock()

    def complete(self, request: BackendRequest) -> str:
        with self._lock:
            round_index = self._round.get(request.stage, 0) + 1
            self._round[request.stage] = round_index
        for fault in self._script.fault_schedule:
            if fault.stage == request.stage and fault.round_index == round_index:
                return _fault_response(request.stage, fault.fault_kind, round_index)
        # Longest matching key wins so "q12" is never shadowed by "q1".
        candidates = [
            e
            for e in self._script.entries
            if e.stage == request.stage and e.match_key in request.prompt
        ]
        if not candidates:
            raise NoMockEntry(
                f"no mock entry for stage={request.stage.value} matching prompt"
            )
        return max(candidates, key=lambda e: len(e.match_key)).response


class MockBackend:
    """Factory for per-run sessions over a shared, immutable MockScript."""

    def __init__(self, script: MockScript):
        self.script = script

    def session(self) -> MockSession:
        return MockSession(self.script)


class RemoteBackend(Backend):
    """Provider-neutral chat-completion adapter over HTTPS.

    Retries RateLimited responses up to three times with exponential backoff;
    anything else network-shaped surfaces as BackendUnavailable.
    """

    MAX_ATTEMPTS = 3

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        timeout: float = 120.0,
    ):
        self.endpoint = endpoint
        self.model = model
        self.api_key = api_key or os.environ.get(API_KEY_ENV_VAR, "")
        self.timeout = timeout

    def complete(self, request: BackendRequest) -> str:
        payload = {
            "model": self.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.params.temperature,
            "top_p": request.params.top_p,
            "max_tokens": request.params.max_new_tokens,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        backoff = 1.0
        for attempt in range(1, self.MAX_ATTEMPTS + 1):
            try:
                response = httpx.post(
                    self.endpoint, json=payload, headers=headers, timeout=self.timeout
                )
            except httpx.HTTPError as exc:
                raise BackendUnavailable(str(exc)) from exc
            if response.status_code == 429:
                retry_after = float(response.headers.get("retry-after", backoff))
                if attempt == self.MAX_ATTEMPTS:
                    raise RateLimited(retry_after)
                time.sleep(retry_after)
                backoff *= 2
                continue
            if response.status_code >= 500:
                raise BackendUnavailable(f"provider returned {response.status_code}")
            if response.status_code != 200:
                raise BackendError(
                    f"provider returned {response.status_code}: {response.text[:200]}"
                )
            body = response.json()
            return body["choices"][0]["message"]["content"]
        raise BackendUnavailable("retries exhausted")
