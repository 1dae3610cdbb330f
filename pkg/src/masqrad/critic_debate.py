"""Critic stage: static validation, review, and the multi-agent debate loop.

A debate round hands the current script to a fresh critic instance together
with the most recent execution error, if any.  Rewrites become the current
script and are execution-tested immediately.  The loop ends on consecutive
approvals of one script revision that is known to execute, or when the round
budget runs out.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Callable, Optional

from .actor import DatasetRef, GeneratedScript, extract_code_block, NoCodeBlock, EmptyScript
from .backends import Backend, BackendRequest, Stage, default_params
from .actor import load_template

VERDICT_LINE = re.compile(r"^\s*VERDICT\s*:\s*(APPROVE|REJECT)\s*$", re.IGNORECASE)
SUBSCRIPT_LITERAL = re.compile(r"\[\s*['\"]([A-Za-z_][A-Za-z0-9_ ]*)['\"]\s*\]")

# Keys of the manifest literal itself; never column references.
_MANIFEST_KEYS = {"artifacts", "name", "kind", "file"}


class UnparseableVerdict(ValueError):
    """Critic response lacks a VERDICT line."""


class UnfixableInput(RuntimeError):
    """A critic rejected without a rewrite, naming an input defect."""

    def __init__(self, rationale: str, transcript: "DebateTranscript"):
        super().__init__(rationale)
        self.rationale = rationale
        self.transcript = transcript


class DebateExhausted(RuntimeError):
    def __init__(self, transcript: "DebateTranscript"):
        super().__init__(f"no agreement after {len(transcript.rounds)} rounds")
        self.transcript = transcript


def script_digest(script: GeneratedScript) -> str:
    return hashlib.sha256(script.source.encode()).hexdigest()


@dataclass(frozen=True)
class Finding:
    kind: str  # UnknownColumn | MissingManifest | EmptyOutputs
    detail: str


@dataclass(frozen=True)
class Verdict:
    decision: str  # approve | reject
    rationale: str
    script_digest: str
    rewrite: Optional[GeneratedScript] = None

    def __post_init__(self):
        if self.decision == "approve" and self.rewrite is not None:
            raise ValueError("approve carries no rewrite")


@dataclass(frozen=True)
class DebateRound:
    round_index: int
    critic_instance_id: str
    input_script_digest: str
    verdict: Verdict
    execution_error: Optional[str] = None


@dataclass(frozen=True)
class DebateTranscript:
    rounds: tuple[DebateRound, ...]
    outcome: str  # agreed | exhausted
    final_script: GeneratedScript


@dataclass(frozen=True)
class DebatePolicy:
    max_rounds: int = 5
    agreement_window: int = 2

    def __post_init__(self):
        if self.max_rounds < 1 or self.agreement_window < 1:
            raise ValueError("max_rounds and agreement_window must be positive")
        if self.agreement_window > self.max_rounds:
            raise ValueError("agreement_window cannot exceed max_rounds")


@dataclass
class ExecutionOutcome:
    """What the debate loop needs to know about one execution attempt."""

    success: bool
    error: Optional[str] = None


# Executor: runs a script and reports success plus an error summary on failure.
Executor = Callable[[GeneratedScript], ExecutionOutcome]


def static_validate(script: GeneratedScript, dataset: DatasetRef) -> list[Finding]:
    """Cheap pre-execution checks; findings are data, not errors."""
    findings: list[Finding] = []
    known = dataset.column_names()
    skip = _MANIFEST_KEYS | set(script.declared_outputs)
    seen: set[str] = set()
    for match in SUBSCRIPT_LITERAL.finditer(script.source):
        name = match.group(1)
        if name in known or name in skip or name in seen:
            continue
        seen.add(name)
        findings.append(
            Finding("UnknownColumn", f"column {name!r} is not in the dataset schema")
        )
    if "manifest.json" not in script.source or "MANIFEST" not in script.source:
        findings.append(Finding("MissingManifest", "script never emits manifest.json"))
    elif not script.declared_outputs:
        findings.append(Finding("EmptyOutputs", "script declares no output artifacts"))
    return findings


def parse_verdict(response: str, script: GeneratedScript) -> Verdict:
    first_line = next((ln for ln in response.splitlines() if ln.strip()), "")
    match = VERDICT_LINE.match(first_line)
    if match is None:
        raise UnparseableVerdict("response does not start with a VERDICT line")
    decision = match.group(1).lower()
    rationale = "\n".join(
        ln for ln in response.splitlines()[1:] if not ln.startswith("```")
    ).strip()
    rewrite = None
    if decision == "reject":
        try:
            rewrite = script.bump(extract_code_block(response))
        except (NoCodeBlock, EmptyScript):
            rewrite = None
    return Verdict(
        decision=decision,
        rationale=rationale,
        script_digest=script_digest(script),
        rewrite=rewrite,
    )


def critic_review(
    script: GeneratedScript,
    query: str,
    dataset: DatasetRef,
    backend: Backend,
    error_context: Optional[str] = None,
    query_id: str = "",
) -> Verdict:
    block = (
        f"\nLast execution error:\n{error_context}\n" if error_context else ""
    )
    prompt = load_template("critic_prompt.txt").format(
        query_id=query_id,
        query=query,
        dataset_ref=dataset.url_or_path,
        script=script.source,
        error_context_block=block,
    )
    response = backend.complete(
        BackendRequest(Stage.CRITIC, prompt, default_params(Stage.CRITIC))
    )
    return parse_verdict(response, script)


def run_debate(
    initial_script: GeneratedScript,
    query: str,
    dataset: DatasetRef,
    policy: DebatePolicy,
    backend: Backend,
    executor: Executor,
    query_id: str = "",
) -> DebateTranscript:
    """Drive the debate loop to agreement or exhaustion.

    Raises UnfixableInput when a critic rejects without offering a rewrite;
    exhaustion is an outcome on the transcript, not an exception, so callers
    always get the full round history.
    """
    current = initial_script
    exec_status: dict[str, ExecutionOutcome] = {}

    def run_current() -> Optional[str]:
        outcome = executor(current)
        exec_status[script_digest(current)] = outcome
        return None if outcome.success else (outcome.error or "execution failed")

    last_error = run_current()
    rounds: list[DebateRound] = []

    for round_index in range(1, policy.max_rounds + 1):
        verdict = critic_review(
            current,
            query,
            dataset,
            backend,
            error_context=last_error,
            query_id=query_id,
        )
        rounds.append(
            DebateRound(
                round_index=round_index,
                critic_instance_id=f"critic-{round_index}",
                input_script_digest=script_digest(current),
                verdict=verdict,
                execution_error=last_error,
            )
        )
        if verdict.decision == "reject":
            if verdict.rewrite is None:
                raise UnfixableInput(
                    verdict.rationale or "critic rejected without a rewrite",
                    DebateTranscript(tuple(rounds), "exhausted", current),
                )
            current = verdict.rewrite
            last_error = run_current()
        else:
            window = rounds[-policy.agreement_window :]
            digest = script_digest(current)
            agreed = (
                len(window) == policy.agreement_window
                and all(
                    r.verdict.decision == "approve"
                    and r.verdict.script_digest == digest
                    for r in window
                )
                and exec_status[digest].success
            )
            if agreed:
                return DebateTranscript(tuple(rounds), "agreed", current)

    return DebateTranscript(tuple(rounds), "exhausted", current)
